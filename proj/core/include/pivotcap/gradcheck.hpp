#pragma once

#include <functional>
#include <vector>

#include "pivotcap/tape.hpp"

namespace pivotcap {

// Compares reverse-mode gradients against central differences.
//
// build must construct the loss from scratch on the tape it is given and
// return a scalar; it is re-run twice per parameter coordinate with that
// coordinate displaced by +/- h (on a non-recording tape). For each
// parameter the error is |analytic - numeric| / max(1e-8, |analytic| +
// |numeric|) with |.| the max-abs norm over the parameter's coordinates,
// and the maximum over parameters is returned; no parameters at all yields
// 0. A non-finite loss anywhere is an error.
double finite_diff_check(const std::function<TensorPtr(Tape&)>& build,
                         const std::vector<TensorPtr>& params,
                         double h = 1e-5);

}  // namespace pivotcap
