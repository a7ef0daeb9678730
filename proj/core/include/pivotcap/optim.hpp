#pragma once

#include <vector>

#include "pivotcap/layers.hpp"

namespace pivotcap {

// Global gradient norm over every parameter; absent gradients count as
// zero. clip_global_norm rescales all gradients in place when the norm
// exceeds max_norm and returns the pre-clip norm either way.
double global_grad_norm(const ParamList& params);
double clip_global_norm(const ParamList& params, double max_norm);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Decoupled: parameters are multiplied by (1 - weight_decay) before the
  // Adam delta is applied. Zero disables it.
  double weight_decay = 0.0;
};

// Adam with bias correction. step() consumes the gradients currently in
// the parameters' grad buffers and leaves them untouched for the caller
// to zero. Non-finite gradients raise an error naming the parameter.
class Adam {
 public:
  Adam(ParamList params, AdamConfig cfg);

  void step();
  long steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

  // Raw state access for checkpointing; moments are indexed like the
  // parameter list passed to the constructor.
  const ParamList& params() const { return params_; }
  std::vector<std::vector<double>>& moment1() { return m_; }
  std::vector<std::vector<double>>& moment2() { return v_; }
  void set_steps_taken(long t) { t_ = t; }

 private:
  ParamList params_;
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace pivotcap
