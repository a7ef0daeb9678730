#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace pivotcap {

// Deterministic random source: xoshiro256** seeded through splitmix64.
// Every consumer owns its own stream obtained via split(), so adding or
// reordering draws in one part of the program never shifts another part.
// A stream is identified by its seed lineage, not by draw position:
// split() derives the child from the parent seed, so it returns the same
// child stream no matter how many values the parent has produced.
class SplitRng {
 public:
  SplitRng() : SplitRng(0) {}
  explicit SplitRng(std::uint64_t seed);

  SplitRng split(std::string_view label) const;
  SplitRng split(std::uint64_t index) const;

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);
  // Box-Muller; draws two uniforms per call, no cached spare.
  double normal(double mean, double stddev);
  // Uniform integer in [0, n). Requires n > 0.
  int uniform_int(int n);

  // Fisher-Yates, iterating from the back.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(
          uniform_int(static_cast<int>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t seed() const { return seed_; }
  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_;
};

}  // namespace pivotcap
