#pragma once

#include <string>
#include <vector>

namespace pivotcap {

using TokenSeq = std::vector<std::string>;

// Corpus-level BLEU with clipped modified n-gram precision. Match and
// total counts aggregate over the corpus before any ratio is taken. The
// effective reference length r sums, per item, the reference length
// closest to the candidate's (ties to the shorter), and the brevity
// penalty is exp(1 - r/c) when c < r, else 1. bleu[k-1] is BLEU@k, the
// geometric mean of p_1..p_k times the brevity penalty; any zero
// precision makes the affected orders zero.
struct BleuResult {
  std::vector<double> precision;  // p_1..p_max_n
  std::vector<double> bleu;       // BLEU@1..BLEU@max_n
  double brevity_penalty = 1.0;
  long candidate_length = 0;
  long reference_length = 0;
};
BleuResult corpus_bleu(const std::vector<TokenSeq>& candidates,
                       const std::vector<std::vector<TokenSeq>>& references,
                       int max_n = 4);

// Consensus-based captioning score over n = 1..max_n. Each sentence maps
// to a TF-IDF n-gram vector: term frequency is the raw count, and
// IDF = ln(N / max(1, df)) where df counts the items whose reference set
// contains the n-gram. The per-item score averages, over the references,
// the cosine between candidate and reference vectors (a zero-norm side
// scores 0), then averages over n and scales by 10.
struct CiderResult {
  double score = 0.0;
  std::vector<double> per_item;
};
CiderResult cider(const std::vector<TokenSeq>& candidates,
                  const std::vector<std::vector<TokenSeq>>& references,
                  int max_n = 4);

// Mean sentence-level BLEU of each candidate against all the others.
// Precisions are smoothed as (matches + eps) / (total + eps) with
// eps = 1e-9, so identical candidates score exactly 1. Returns
// Self-BLEU@2..@max_n (element k is order k+2); requires at least two
// candidates and max_n >= 2.
std::vector<double> self_bleu(const std::vector<TokenSeq>& candidates,
                              int max_n = 5);

}  // namespace pivotcap
