#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pivotcap/rng.hpp"
#include "pivotcap/tape.hpp"

namespace pivotcap {

struct NamedParam {
  std::string name;
  TensorPtr tensor;
};
using ParamList = std::vector<NamedParam>;

std::vector<TensorPtr> param_tensors(const ParamList& params);
void zero_grads(const ParamList& params);
std::size_t param_count(const ParamList& params);

// Uniform on (-s, s) with s = sqrt(6 / (fan_in + fan_out)), drawn in
// row-major order from the given stream.
TensorPtr glorot_uniform(std::vector<int> shape, int fan_in, int fan_out,
                         SplitRng& rng);

// y = x . w^T + b
struct LinearLayer {
  TensorPtr w;  // [out x in]
  TensorPtr b;  // [out], null when constructed without bias
};
LinearLayer make_linear(int in_dim, int out_dim, SplitRng& rng,
                        bool bias = true);

// Single LSTM cell with one fused weight matrix over [x; h], gate order
// input, forget, output, candidate. Forget-gate bias starts at 1.
struct LSTMCellParams {
  TensorPtr w;  // [4H x (in + H)]
  TensorPtr b;  // [4H]
  int input_dim = 0;
  int hidden_dim = 0;
};
LSTMCellParams make_lstm(int input_dim, int hidden_dim, SplitRng& rng);

struct LSTMState {
  TensorPtr h;  // [B x H]
  TensorPtr c;  // [B x H]
};
// All-zero initial state for a batch of the given width.
LSTMState lstm_begin(int batch, int hidden_dim);
LSTMState lstm_step(Tape& tape, const LSTMCellParams& p,
                    const LSTMState& s, const TensorPtr& x);
// As lstm_step, but batch rows with keep[b] == 0 carry the previous state
// through unchanged (used to run ragged batches to a common length).
LSTMState lstm_step_masked(Tape& tape, const LSTMCellParams& p,
                           const LSTMState& s, const TensorPtr& x,
                           const std::vector<std::uint8_t>& keep);

// Additive attention: score(j) = v . tanh(Ws s + Wh ann_j).
struct AttentionParams {
  TensorPtr ws;  // [A x H]
  TensorPtr wh;  // [A x D]
  TensorPtr v;   // [A]
};
AttentionParams make_attention(int query_dim, int ann_dim, int attn_dim,
                               SplitRng& rng);

// One query s [H] against annotations [M x D]; returns the context [D]
// and the attention weights [M], which form a probability distribution
// over the positions where mask is nonzero (masked weights are exactly
// zero; an all-masked input is an error).
std::pair<TensorPtr, TensorPtr> attend(Tape& tape, const AttentionParams& p,
                                       const TensorPtr& s,
                                       const TensorPtr& annotations,
                                       const std::vector<std::uint8_t>& mask);

// Runs one LSTM per direction over the rows of x [M x in] and concatenates
// the per-position hidden states into annotations [M x 2H]. Also exposes
// the final state of each direction for decoder initialization.
struct BiLstmOut {
  TensorPtr annotations;  // [M x 2H]
  LSTMState fwd_last;
  LSTMState bwd_last;
};
BiLstmOut bilstm_encode(Tape& tape, const LSTMCellParams& fwd,
                        const LSTMCellParams& bwd, const TensorPtr& x);

// Inverted-dropout mask: entries are 0 with probability rate, else
// 1 / (1 - rate). Multiply activations by it during training only.
TensorPtr dropout_mask(std::vector<int> shape, double rate, SplitRng& rng);

}  // namespace pivotcap
