#include "pivotcap/rng.hpp"

#include <cmath>

#include "pivotcap/error.hpp"
#include "pivotcap/hash.hpp"

namespace pivotcap {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

SplitRng::SplitRng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& w : s_) w = splitmix64(x);
  // xoshiro must not start from the all-zero state; splitmix64 of any seed
  // cannot produce four zero words in a row, but keep the guard explicit.
  if (s_[0] == 0 && s_[1] == 0 && s_[2] == 0 && s_[3] == 0) s_[0] = 1;
}

SplitRng SplitRng::split(std::string_view label) const {
  return SplitRng(fnv1a(label, fnv1a(&seed_, sizeof(seed_))));
}

SplitRng SplitRng::split(std::uint64_t index) const {
  std::uint64_t buf[2] = {seed_, index};
  return SplitRng(fnv1a(buf, sizeof(buf)));
}

std::uint64_t SplitRng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double SplitRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SplitRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double SplitRng::normal(double mean, double stddev) {
  // u1 in (0, 1] so the log is finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(2.0 * M_PI * u2);
}

int SplitRng::uniform_int(int n) {
  if (n <= 0) throw Error("uniform_int: n must be positive, got " +
                          std::to_string(n));
  // Multiply-shift map of a 64-bit draw onto [0, n); bias is < 2^-32 for
  // any n that fits in int and identical on every platform.
  return static_cast<int>(
      (static_cast<unsigned __int128>(next_u64()) *
       static_cast<unsigned __int128>(n)) >> 64);
}

}  // namespace pivotcap
