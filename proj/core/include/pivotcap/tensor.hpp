#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace pivotcap {

// Dense float64 tensor of rank 1 or 2, row-major. Gradient storage lives
// alongside the values and is lazily allocated; a tensor participates in
// differentiation when requires_grad is set. tape_id/node_id identify the
// node within the tape currently recording it and are rewritten each time
// a tape produces the tensor.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until ensure_grad()
  bool requires_grad = false;

  std::uint64_t tape_id = 0;
  int node_id = -1;

  Tensor() = default;
  explicit Tensor(std::vector<int> shape_in, double fill = 0.0);

  std::size_t size() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }
  // Row/column view of a rank-2 tensor; rank-1 acts as a single row.
  int rows() const { return rank() == 2 ? shape[0] : 1; }
  int cols() const { return rank() == 2 ? shape[1] : shape[0]; }

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

  void ensure_grad();
  void zero_grad();
  bool all_finite() const;
  std::string shape_str() const;  // e.g. "3x4"
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(std::vector<int> shape, double fill = 0.0);
TensorPtr make_tensor(std::vector<int> shape, std::vector<double> values);
// Parameter factory: requires_grad is set.
TensorPtr make_param(std::vector<int> shape, std::vector<double> values);
TensorPtr make_param(std::vector<int> shape, double fill = 0.0);

std::size_t shape_numel(const std::vector<int>& shape);

}  // namespace pivotcap
