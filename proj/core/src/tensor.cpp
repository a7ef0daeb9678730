#include "pivotcap/tensor.hpp"

#include <cmath>

#include "pivotcap/error.hpp"

namespace pivotcap {

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

Tensor::Tensor(std::vector<int> shape_in, double fill)
    : shape(std::move(shape_in)) {
  if (shape.empty() || shape.size() > 2)
    throw Error("tensor: rank must be 1 or 2, got rank " +
                std::to_string(shape.size()));
  for (int d : shape)
    if (d <= 0)
      throw Error("tensor: dimension sizes must be positive, got " +
                  std::to_string(d));
  data.assign(shape_numel(shape), fill);
}

void Tensor::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
  grad.assign(grad.empty() ? 0 : data.size(), 0.0);
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

TensorPtr make_tensor(std::vector<int> shape, double fill) {
  return std::make_shared<Tensor>(std::move(shape), fill);
}

TensorPtr make_tensor(std::vector<int> shape, std::vector<double> values) {
  auto t = std::make_shared<Tensor>(std::move(shape));
  if (values.size() != t->data.size())
    throw Error("tensor: " + std::to_string(values.size()) +
                " values for shape " + t->shape_str());
  t->data = std::move(values);
  return t;
}

TensorPtr make_param(std::vector<int> shape, std::vector<double> values) {
  auto t = make_tensor(std::move(shape), std::move(values));
  t->requires_grad = true;
  return t;
}

TensorPtr make_param(std::vector<int> shape, double fill) {
  auto t = make_tensor(std::move(shape), fill);
  t->requires_grad = true;
  return t;
}

}  // namespace pivotcap
