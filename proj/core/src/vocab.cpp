#include "pivotcap/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "pivotcap/error.hpp"

namespace pivotcap {

const char* const kReservedTokens[kNumReserved] = {"<pad>", "<bos>", "<eos>",
                                                   "<unk>"};

Vocab::Vocab() {
  for (int i = 0; i < kNumReserved; ++i) add(kReservedTokens[i], 0);
}

void Vocab::add(std::string token, long count) {
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
  counts_.push_back(count);
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& corpus,
                   int min_freq) {
  if (corpus.empty()) throw Error("build_vocab: empty corpus");
  if (min_freq < 1) throw Error("build_vocab: min_freq must be at least 1");
  // std::map keeps tie-ordering lexicographic without a second sort key.
  std::map<std::string, long> counts;
  for (const auto& sent : corpus)
    for (const auto& tok : sent) {
      if (tok.empty()) throw Error("build_vocab: empty token in corpus");
      ++counts[tok];
    }
  for (int i = 0; i < kNumReserved; ++i)
    if (counts.count(kReservedTokens[i]))
      throw Error("build_vocab: corpus contains reserved token " +
                  std::string(kReservedTokens[i]));

  std::vector<std::pair<std::string, long>> kept;
  for (const auto& [tok, n] : counts)
    if (n >= min_freq) kept.emplace_back(tok, n);
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });

  Vocab v;
  for (auto& [tok, n] : kept) v.add(std::move(tok), n);
  return v;
}

int Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return index_.count(std::string(token)) != 0;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size())
    throw Error("vocab: id " + std::to_string(id) + " out of range [0," +
                std::to_string(size()) + ")");
  return tokens_[id];
}

long Vocab::count(int id) const {
  if (id < 0 || id >= size())
    throw Error("vocab: id " + std::to_string(id) + " out of range [0," +
                std::to_string(size()) + ")");
  return counts_[id];
}

std::vector<int> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size() + 2);
  ids.push_back(kBos);
  for (const auto& tok : tokens) ids.push_back(id(tok));
  ids.push_back(kEos);
  return ids;
}

std::vector<std::string> Vocab::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  for (int id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    out.push_back(token(id));
  }
  return out;
}

void Vocab::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("vocab: cannot write " + path);
  for (int i = 0; i < size(); ++i)
    f << tokens_[i] << '\t' << counts_[i] << '\n';
  if (!f) throw Error("vocab: write failed for " + path);
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("vocab: cannot read " + path);
  Vocab v;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error("vocab: malformed line " + std::to_string(lineno) +
                  " in " + path);
    std::string tok = line.substr(0, tab);
    long n = 0;
    try {
      n = std::stol(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw Error("vocab: bad count on line " + std::to_string(lineno) +
                  " in " + path);
    }
    if (lineno <= kNumReserved) {
      if (tok != kReservedTokens[lineno - 1])
        throw Error("vocab: " + path + " does not start with the reserved tokens");
      continue;
    }
    v.add(std::move(tok), n);
  }
  return v;
}

}  // namespace pivotcap
