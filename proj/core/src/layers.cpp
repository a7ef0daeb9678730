#include "pivotcap/layers.hpp"

#include <cmath>

#include "pivotcap/error.hpp"

namespace pivotcap {

std::vector<TensorPtr> param_tensors(const ParamList& params) {
  std::vector<TensorPtr> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.tensor);
  return out;
}

void zero_grads(const ParamList& params) {
  for (const auto& p : params) p.tensor->zero_grad();
}

std::size_t param_count(const ParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor->size();
  return n;
}

TensorPtr glorot_uniform(std::vector<int> shape, int fan_in, int fan_out,
                         SplitRng& rng) {
  if (fan_in <= 0 || fan_out <= 0)
    throw Error("glorot_uniform: fans must be positive");
  const double s = std::sqrt(6.0 / (fan_in + fan_out));
  auto t = make_param(std::move(shape));
  for (auto& v : t->data) v = rng.uniform(-s, s);
  return t;
}

LinearLayer make_linear(int in_dim, int out_dim, SplitRng& rng, bool bias) {
  LinearLayer l;
  l.w = glorot_uniform({out_dim, in_dim}, in_dim, out_dim, rng);
  if (bias) l.b = make_param({out_dim}, 0.0);
  return l;
}

LSTMCellParams make_lstm(int input_dim, int hidden_dim, SplitRng& rng) {
  LSTMCellParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  const int in = input_dim + hidden_dim;
  p.w = glorot_uniform({4 * hidden_dim, in}, in, 4 * hidden_dim, rng);
  p.b = make_param({4 * hidden_dim}, 0.0);
  for (int j = hidden_dim; j < 2 * hidden_dim; ++j) p.b->data[j] = 1.0;
  return p;
}

LSTMState lstm_begin(int batch, int hidden_dim) {
  return {make_tensor({batch, hidden_dim}), make_tensor({batch, hidden_dim})};
}

LSTMState lstm_step(Tape& tape, const LSTMCellParams& p, const LSTMState& s,
                    const TensorPtr& x) {
  if (x->rank() != 2 || x->shape[1] != p.input_dim)
    throw Error("lstm_step: input " + x->shape_str() + " does not match cell input dim " +
                std::to_string(p.input_dim));
  if (s.h->shape != std::vector<int>{x->shape[0], p.hidden_dim})
    throw Error("lstm_step: state " + s.h->shape_str() +
                " does not match input rows " + x->shape_str());
  const int hd = p.hidden_dim;
  auto z = tape.concat_cols(x, s.h);
  auto pre = tape.affine(z, p.w, p.b);
  auto i = tape.sigmoid(tape.slice_cols(pre, 0, hd));
  auto f = tape.sigmoid(tape.slice_cols(pre, hd, 2 * hd));
  auto o = tape.sigmoid(tape.slice_cols(pre, 2 * hd, 3 * hd));
  auto g = tape.tanh(tape.slice_cols(pre, 3 * hd, 4 * hd));
  auto c = tape.add(tape.mul(f, s.c), tape.mul(i, g));
  auto h = tape.mul(o, tape.tanh(c));
  return {h, c};
}

LSTMState lstm_step_masked(Tape& tape, const LSTMCellParams& p,
                           const LSTMState& s, const TensorPtr& x,
                           const std::vector<std::uint8_t>& keep) {
  const int batch = x->rows(), hd = p.hidden_dim;
  if (static_cast<int>(keep.size()) != batch)
    throw Error("lstm_step_masked: " + std::to_string(keep.size()) +
                " mask entries for batch " + std::to_string(batch));
  LSTMState next = lstm_step(tape, p, s, x);
  bool all = true;
  for (auto k : keep)
    if (!k) all = false;
  if (all) return next;
  auto m = make_tensor({batch, hd});
  auto inv = make_tensor({batch, hd});
  for (int b = 0; b < batch; ++b)
    for (int j = 0; j < hd; ++j) {
      m->at(b, j) = keep[b] ? 1.0 : 0.0;
      inv->at(b, j) = keep[b] ? 0.0 : 1.0;
    }
  auto h = tape.add(tape.mul(next.h, m), tape.mul(s.h, inv));
  auto c = tape.add(tape.mul(next.c, m), tape.mul(s.c, inv));
  return {h, c};
}

AttentionParams make_attention(int query_dim, int ann_dim, int attn_dim,
                               SplitRng& rng) {
  AttentionParams p;
  p.ws = glorot_uniform({attn_dim, query_dim}, query_dim, attn_dim, rng);
  p.wh = glorot_uniform({attn_dim, ann_dim}, ann_dim, attn_dim, rng);
  p.v = glorot_uniform({attn_dim}, attn_dim, 1, rng);
  return p;
}

std::pair<TensorPtr, TensorPtr> attend(Tape& tape, const AttentionParams& p,
                                       const TensorPtr& s,
                                       const TensorPtr& annotations,
                                       const std::vector<std::uint8_t>& mask) {
  const int m = annotations->shape[0];
  if (static_cast<int>(mask.size()) != m)
    throw Error("attend: mask size " + std::to_string(mask.size()) +
                " does not match " + std::to_string(m) + " annotations");
  TensorPtr query = s;
  if (s->rank() == 1) query = tape.reshape(s, {1, s->shape[0]});
  auto proj = tape.affine(query, p.ws, nullptr);          // [1 x A]
  auto keys = tape.affine(annotations, p.wh, nullptr);    // [M x A]
  auto scores = tape.attn_scores_shared(proj, keys, p.v); // [1 x M]
  auto weights = tape.masked_softmax(scores, mask);
  auto ctx = tape.attn_context_shared(weights, annotations);  // [1 x D]
  return {tape.reshape(ctx, {annotations->shape[1]}),
          tape.reshape(weights, {m})};
}

BiLstmOut bilstm_encode(Tape& tape, const LSTMCellParams& fwd,
                        const LSTMCellParams& bwd, const TensorPtr& x) {
  if (x->rank() != 2)
    throw Error("bilstm_encode: input must be rank 2, got " + x->shape_str());
  const int m = x->shape[0];
  std::vector<TensorPtr> hf(m), hb(m);

  LSTMState s = lstm_begin(1, fwd.hidden_dim);
  for (int t = 0; t < m; ++t) {
    s = lstm_step(tape, fwd, s, tape.slice_rows(x, t, t + 1));
    hf[t] = s.h;
  }
  LSTMState fwd_last = s;

  s = lstm_begin(1, bwd.hidden_dim);
  for (int t = m - 1; t >= 0; --t) {
    s = lstm_step(tape, bwd, s, tape.slice_rows(x, t, t + 1));
    hb[t] = s.h;
  }
  LSTMState bwd_last = s;

  std::vector<TensorPtr> rows(m);
  for (int t = 0; t < m; ++t) rows[t] = tape.concat_cols(hf[t], hb[t]);
  return {tape.concat_rows(rows), fwd_last, bwd_last};
}

TensorPtr dropout_mask(std::vector<int> shape, double rate, SplitRng& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw Error("dropout_mask: rate must be in [0, 1), got " +
                std::to_string(rate));
  auto t = make_tensor(std::move(shape));
  const double keep_scale = 1.0 / (1.0 - rate);
  for (auto& v : t->data) v = rng.uniform() < rate ? 0.0 : keep_scale;
  return t;
}

}  // namespace pivotcap
