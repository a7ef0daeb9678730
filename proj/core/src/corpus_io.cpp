#include "pivotcap/corpus_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>

#include "pivotcap/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "feature and checkpoint payloads are little-endian");

namespace pivotcap {

namespace {

constexpr char kFeatureMagic[4] = {'P', 'V', 'C', '1'};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return in;
}

int parse_line_int(const std::string& line, const std::string& path,
                   int line_no) {
  int v = 0;
  auto res = std::from_chars(line.data(), line.data() + line.size(), v);
  if (res.ec != std::errc() || res.ptr != line.data() + line.size()) {
    throw Error(path + ":" + std::to_string(line_no) + ": expected an integer");
  }
  return v;
}

}  // namespace

void write_sentences(const std::string& path,
                     const std::vector<TokenSeq>& sentences) {
  std::ofstream out = open_out(path);
  for (const TokenSeq& s : sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string& tok = s[i];
      if (tok.empty() || tok.find_first_of(" \n\r") != std::string::npos) {
        throw Error(path + ": token not writable as space-separated text: '" +
                    tok + "'");
      }
      if (i) out << ' ';
      out << tok;
    }
    out << '\n';
  }
  if (!out) throw Error("write failed on " + path);
}

std::vector<TokenSeq> read_sentences(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<TokenSeq> sentences;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    TokenSeq sent;
    if (!line.empty()) {
      std::size_t start = 0;
      while (true) {
        std::size_t space = line.find(' ', start);
        std::string tok = line.substr(
            start, space == std::string::npos ? space : space - start);
        if (tok.empty()) {
          throw Error(path + ":" + std::to_string(line_no) +
                      ": empty token (stray space)");
        }
        sent.push_back(std::move(tok));
        if (space == std::string::npos) break;
        start = space + 1;
      }
    }
    sentences.push_back(std::move(sent));
  }
  return sentences;
}

ParallelCorpus read_parallel(const std::string& src_path,
                             const std::string& tgt_path) {
  ParallelCorpus corpus;
  corpus.src = read_sentences(src_path);
  corpus.tgt = read_sentences(tgt_path);
  if (corpus.src.size() != corpus.tgt.size()) {
    throw Error("aligned corpus line counts differ: " + src_path + " has " +
                std::to_string(corpus.src.size()) + " lines but " + tgt_path +
                " has " + std::to_string(corpus.tgt.size()));
  }
  return corpus;
}

TensorPtr FeatureFile::as_tensor() const {
  if (rows() == 0) throw Error("feature set is empty");
  return make_tensor({rows(), dim}, data);
}

void write_features(const std::string& path, const FeatureFile& features) {
  if (features.dim < 1) throw Error(path + ": feature dim must be positive");
  const std::size_t expect =
      static_cast<std::size_t>(features.rows()) * features.dim;
  if (features.data.size() != expect) {
    throw Error(path + ": feature payload size does not match rows x dim");
  }
  std::ofstream out = open_out(path);
  out.write(kFeatureMagic, 4);
  const std::uint32_t counts[2] = {static_cast<std::uint32_t>(features.rows()),
                                   static_cast<std::uint32_t>(features.dim)};
  out.write(reinterpret_cast<const char*>(counts), sizeof(counts));
  out.write(reinterpret_cast<const char*>(features.data.data()),
            static_cast<std::streamsize>(features.data.size() * sizeof(double)));
  if (!out) throw Error("write failed on " + path);

  std::ofstream idx = open_out(path + ".idx");
  for (int id : features.scene_ids) idx << id << '\n';
  if (!idx) throw Error("write failed on " + path + ".idx");
}

FeatureFile read_features(const std::string& path) {
  std::ifstream in = open_in(path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kFeatureMagic, 4)) {
    throw Error(path + ": bad magic, not a feature file");
  }
  std::uint32_t counts[2];
  in.read(reinterpret_cast<char*>(counts), sizeof(counts));
  if (!in) throw Error(path + ": truncated header");
  FeatureFile features;
  features.dim = static_cast<int>(counts[1]);
  if (features.dim < 1) throw Error(path + ": feature dim must be positive");
  const std::size_t n = static_cast<std::size_t>(counts[0]) * features.dim;
  features.data.resize(n);
  in.read(reinterpret_cast<char*>(features.data.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(double)) {
    throw Error(path + ": truncated payload");
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw Error(path + ": trailing bytes after payload");
  }

  const std::string idx_path = path + ".idx";
  std::ifstream idx = open_in(idx_path);
  std::string line;
  int line_no = 0;
  while (std::getline(idx, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    features.scene_ids.push_back(parse_line_int(line, idx_path, line_no));
  }
  if (features.scene_ids.size() != counts[0]) {
    throw Error(idx_path + ": " + std::to_string(features.scene_ids.size()) +
                " scene ids for " + std::to_string(counts[0]) +
                " feature rows");
  }
  return features;
}

void write_references(const std::string& prefix,
                      const std::vector<std::vector<TokenSeq>>& refs_by_item) {
  if (refs_by_item.empty()) throw Error(prefix + ": no reference items");
  const std::size_t n_refs = refs_by_item.front().size();
  if (n_refs == 0) throw Error(prefix + ": items need at least one reference");
  for (const auto& item : refs_by_item) {
    if (item.size() != n_refs) {
      throw Error(prefix + ": items carry unequal reference counts");
    }
  }
  for (std::size_t k = 0; k < n_refs; ++k) {
    std::vector<TokenSeq> column;
    column.reserve(refs_by_item.size());
    for (const auto& item : refs_by_item) column.push_back(item[k]);
    write_sentences(prefix + ".ref" + std::to_string(k), column);
  }
}

std::vector<std::vector<TokenSeq>> read_references(const std::string& prefix,
                                                   int n_refs) {
  if (n_refs < 1) throw Error(prefix + ": need at least one reference file");
  std::vector<std::vector<TokenSeq>> refs_by_item;
  for (int k = 0; k < n_refs; ++k) {
    const std::string path = prefix + ".ref" + std::to_string(k);
    std::vector<TokenSeq> column = read_sentences(path);
    if (k == 0) {
      refs_by_item.resize(column.size());
    } else if (column.size() != refs_by_item.size()) {
      throw Error("aligned corpus line counts differ: " + prefix + ".ref0 has " +
                  std::to_string(refs_by_item.size()) + " lines but " + path +
                  " has " + std::to_string(column.size()));
    }
    for (std::size_t i = 0; i < column.size(); ++i) {
      refs_by_item[i].push_back(std::move(column[i]));
    }
  }
  return refs_by_item;
}

}  // namespace pivotcap
