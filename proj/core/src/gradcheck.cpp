#include "pivotcap/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "pivotcap/error.hpp"

namespace pivotcap {

namespace {

double eval_scalar(const std::function<TensorPtr(Tape&)>& build,
                   bool recording) {
  Tape tape(recording);
  TensorPtr loss = build(tape);
  if (loss->size() != 1)
    throw Error("finite_diff_check: loss has shape " + loss->shape_str() +
                ", expected a scalar");
  if (!std::isfinite(loss->data[0]))
    throw Error("finite_diff_check: loss is not finite");
  return loss->data[0];
}

}  // namespace

double finite_diff_check(const std::function<TensorPtr(Tape&)>& build,
                         const std::vector<TensorPtr>& params, double h) {
  if (h <= 0.0) throw Error("finite_diff_check: h must be positive");

  Tape tape(true);
  TensorPtr loss = build(tape);
  if (loss->size() != 1)
    throw Error("finite_diff_check: loss has shape " + loss->shape_str() +
                ", expected a scalar");
  if (!std::isfinite(loss->data[0]))
    throw Error("finite_diff_check: loss is not finite");
  for (const auto& p : params) p->zero_grad();
  // A loss with no recorded dependency on any parameter (constant graphs,
  // empty parameter lists) has identically zero gradients.
  if (loss->requires_grad) tape.backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) {
    p->ensure_grad();
    analytic.push_back(p->grad);
  }

  // Per-coordinate ratios are meaningless for near-dead coordinates: central
  // differences in doubles carry an absolute floor around 1e-11 (truncation
  // plus cancellation), so a coordinate whose true gradient is 1e-8 shows an
  // O(1e-3) ratio with a perfectly correct backward. The vector form below
  // divides the worst absolute disagreement by the gradient's overall scale,
  // which stays at the noise floor for correct gradients and jumps to O(1)
  // for real bugs.
  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params[pi];
    double diff_max = 0.0;
    double a_max = 0.0;
    double n_max = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p.data[i];
      p.data[i] = saved + h;
      const double f_plus = eval_scalar(build, false);
      p.data[i] = saved - h;
      const double f_minus = eval_scalar(build, false);
      p.data[i] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double a = analytic[pi][i];
      diff_max = std::max(diff_max, std::abs(a - numeric));
      a_max = std::max(a_max, std::abs(a));
      n_max = std::max(n_max, std::abs(numeric));
    }
    worst = std::max(worst, diff_max / std::max(1e-8, a_max + n_max));
  }
  return worst;
}

}  // namespace pivotcap
