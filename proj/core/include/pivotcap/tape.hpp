#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pivotcap/tensor.hpp"

namespace pivotcap {

// Dynamic reverse-mode differentiation tape. Ops append nodes in creation
// order, which is already a topological order for a single-threaded
// forward pass; backward() walks it in reverse. Gradients accumulate into
// Tensor::grad, so parameters keep their gradients across tapes until the
// caller zeroes them.
//
// An op output requires grad iff any input does. Ops whose output does not
// require grad are evaluated but not recorded, and nothing is recorded on
// a tape constructed with recording = false (the decode path).
class Tape {
 public:
  explicit Tape(bool recording = true);

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t node_count() const { return nodes_.size(); }

  // Seeds d(scalar)/d(scalar) = 1 and propagates to every reachable input.
  // The argument must be a size-1 tensor produced by this tape. A second
  // call on the same tape is an error; graphs are single-use.
  void backward(const TensorPtr& scalar);

  // y = a . b, [m x k] . [k x n] -> [m x n]
  TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
  // y = x . W^T + b, x [n x in], W [out x in], b [out] (bias optional)
  TensorPtr affine(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b);

  TensorPtr add(const TensorPtr& a, const TensorPtr& b);
  TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
  TensorPtr mul(const TensorPtr& a, const TensorPtr& b);  // elementwise
  TensorPtr scale(const TensorPtr& a, double c);

  TensorPtr tanh(const TensorPtr& a);
  TensorPtr sigmoid(const TensorPtr& a);

  // Rowwise log softmax with max subtraction.
  TensorPtr log_softmax(const TensorPtr& a);
  // Rowwise softmax over positions where keep is nonzero; masked-out
  // entries are exactly zero. A row with nothing kept is an error.
  TensorPtr masked_softmax(const TensorPtr& a,
                           const std::vector<std::uint8_t>& keep);

  // rows of table [V x d] gathered by id -> [n x d]
  TensorPtr embedding_lookup(const TensorPtr& table,
                             const std::vector<int>& ids);

  TensorPtr concat_cols(const TensorPtr& a, const TensorPtr& b);
  // Stacks [ni x m] blocks (rank-1 inputs count as one row) -> [sum ni x m].
  TensorPtr concat_rows(const std::vector<TensorPtr>& parts);
  // Columns [lo, hi) of a rank-2 tensor.
  TensorPtr slice_cols(const TensorPtr& a, int lo, int hi);
  // Rows [lo, hi) of a rank-2 tensor.
  TensorPtr slice_rows(const TensorPtr& a, int lo, int hi);
  TensorPtr reshape(const TensorPtr& a, std::vector<int> shape);

  // y[i] = a(i, ids[i]) -> [n]
  TensorPtr pick(const TensorPtr& a, const std::vector<int>& ids);
  // Sum of all elements -> [1].
  TensorPtr sum(const TensorPtr& a);
  // y = sum_i a[i] * w[i] over a flat tensor, fixed weights -> [1].
  TensorPtr weighted_sum(const TensorPtr& a, const std::vector<double>& w);

  // y[p] = sqrt(sum_j a(p,j)^2 + eps) -> [P]. With eps = 0 a zero row has
  // zero gradient.
  TensorPtr l2_rows(const TensorPtr& a, double eps);

  // Forward identity whose output never requires grad.
  TensorPtr stop_gradient(const TensorPtr& a);

  // Additive attention scores. Shared layout: every row of p attends over
  // the same m annotation projections q [m x A]. Batched layout: q holds
  // per-row projections stored j-major, q row (j*B + b) belongs to batch
  // row b at source position j.
  //   e(b, j) = sum_a v[a] * tanh(p(b,a) + q(j,a or j*B+b,a))
  TensorPtr attn_scores_shared(const TensorPtr& p, const TensorPtr& q,
                               const TensorPtr& v);
  TensorPtr attn_scores_batched(const TensorPtr& p, const TensorPtr& q,
                                const TensorPtr& v, int m);
  // Context vectors from attention weights. Shared: ann [m x D] common to
  // all rows. Batched: ann [(m*B) x D] j-major as above.
  //   ctx(b, :) = sum_j w(b, j) * ann(j or j*B+b, :)
  TensorPtr attn_context_shared(const TensorPtr& w, const TensorPtr& ann);
  TensorPtr attn_context_batched(const TensorPtr& w, const TensorPtr& ann);

 private:
  struct Node {
    TensorPtr out;
    std::function<void()> back;
  };

  TensorPtr finish(TensorPtr out, std::vector<TensorPtr> ins,
                   std::function<void()> back);

  std::vector<Node> nodes_;
  std::uint64_t id_;
  bool recording_;
  bool backward_done_ = false;
};

}  // namespace pivotcap
