#include "pivotcap/optim.hpp"

#include <cmath>

#include "pivotcap/error.hpp"

namespace pivotcap {

double global_grad_norm(const ParamList& params) {
  double sq = 0.0;
  for (const auto& p : params)
    for (double g : p.tensor->grad) sq += g * g;
  return std::sqrt(sq);
}

double clip_global_norm(const ParamList& params, double max_norm) {
  if (max_norm <= 0.0)
    throw Error("clip_global_norm: max_norm must be positive");
  const double norm = global_grad_norm(params);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (const auto& p : params)
      for (double& g : p.tensor->grad) g *= s;
  }
  return norm;
}

Adam::Adam(ParamList params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (cfg_.lr < 0.0) throw Error("adam: lr must be nonnegative");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor->size(), 0.0);
    v_.emplace_back(p.tensor->size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    Tensor& p = *params_[pi].tensor;
    const bool has_grad = !p.grad.empty();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = has_grad ? p.grad[i] : 0.0;
      if (!std::isfinite(g))
        throw Error("adam: non-finite gradient in " + params_[pi].name);
      if (cfg_.weight_decay != 0.0) p.data[i] *= 1.0 - cfg_.weight_decay;
      double& m = m_[pi][i];
      double& v = v_[pi][i];
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      p.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace pivotcap
