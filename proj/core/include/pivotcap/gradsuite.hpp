#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pivotcap {

struct GradCheckReport {
  std::string suite;
  double max_rel_err = 0.0;
};

inline constexpr double kGradCheckThreshold = 1e-4;

// Central-difference battery (h = 1e-5) over every layer, the three model
// forwards, the loss terms, both alignment regularizers, and the joint
// objective, on 8-wide fixtures with a 20-word vocabulary. Returns one
// entry per suite with its worst relative error; anything at or above
// kGradCheckThreshold is a bug.
std::vector<GradCheckReport> gradient_check_suites(std::uint64_t seed);

}  // namespace pivotcap
