#pragma once

#include <string>
#include <vector>

#include "pivotcap/metrics.hpp"
#include "pivotcap/tensor.hpp"

namespace pivotcap {

// On-disk corpus formats. Text files are UTF-8 with one sentence per
// line and tokens separated by single spaces; feature files are binary
// with a fixed little-endian layout. Every reader validates the format
// and names the offending file in its error.

void write_sentences(const std::string& path,
                     const std::vector<TokenSeq>& sentences);
std::vector<TokenSeq> read_sentences(const std::string& path);

// Two aligned files, one sentence pair per line index. Unequal line
// counts are an error naming both files and counts.
struct ParallelCorpus {
  std::vector<TokenSeq> src, tgt;
};
ParallelCorpus read_parallel(const std::string& src_path,
                             const std::string& tgt_path);

// Feature matrix layout: magic "PVC1", then row count and dim as
// unsigned 32-bit little-endian, then rows x dim doubles row-major. An
// adjacent "<path>.idx" text file maps row -> scene id, one per line. A
// zero-row file is a valid empty set.
struct FeatureFile {
  int dim = 0;
  std::vector<int> scene_ids;  // one per row
  std::vector<double> data;    // rows x dim, row-major

  int rows() const { return static_cast<int>(scene_ids.size()); }
  TensorPtr as_tensor() const;  // [rows x dim]; empty set is an error
};
void write_features(const std::string& path, const FeatureFile& features);
FeatureFile read_features(const std::string& path);

// Evaluation references: one file per reference index, "<prefix>.ref<k>",
// aligned by line across the files. Every item carries the same number
// of references.
void write_references(const std::string& prefix,
                      const std::vector<std::vector<TokenSeq>>& refs_by_item);
std::vector<std::vector<TokenSeq>> read_references(const std::string& prefix,
                                                   int n_refs);

}  // namespace pivotcap
