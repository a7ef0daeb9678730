#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pivotcap {

// Reserved token ids, fixed across every vocabulary.
constexpr int kPad = 0;
constexpr int kBos = 1;
constexpr int kEos = 2;
constexpr int kUnk = 3;
constexpr int kNumReserved = 4;

extern const char* const kReservedTokens[kNumReserved];

// Token/id mapping with the four reserved entries up front. Content
// tokens are admitted when their corpus count reaches min_freq and are
// ordered by descending count, ties broken lexicographically, so the
// mapping is a pure function of the corpus.
class Vocab {
 public:
  Vocab();

  static Vocab build(const std::vector<std::vector<std::string>>& corpus,
                     int min_freq);

  // Returns kUnk for tokens that are not in the vocabulary.
  int id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  long count(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  // BOS + content ids + EOS; unknown tokens map to kUnk.
  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  // Inverse of encode: drops BOS/EOS/PAD, keeps UNK's surface form.
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

  bool operator==(const Vocab& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  void add(std::string token, long count);

  std::vector<std::string> tokens_;
  std::vector<long> counts_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace pivotcap
