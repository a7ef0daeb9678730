#include "pivotcap/models.hpp"

#include <algorithm>
#include <string>

#include "pivotcap/error.hpp"
#include "pivotcap/vocab.hpp"

namespace pivotcap {

namespace {

void check_dims(const ModelDims& d, const char* who) {
  if (d.embed < 1 || d.hidden < 1 || d.attn < 1 || d.feat < 1)
    throw Error(std::string(who) + ": all widths must be positive");
  if (d.embed != d.hidden)
    throw Error(std::string(who) + ": embed width " +
                std::to_string(d.embed) + " must equal hidden width " +
                std::to_string(d.hidden));
}

void check_ids(const std::vector<int>& ids, int vocab, const char* who) {
  for (int id : ids)
    if (id < 0 || id >= vocab)
      throw Error(std::string(who) + ": token id " + std::to_string(id) +
                  " outside vocabulary of size " + std::to_string(vocab));
}

void check_framed(const std::vector<int>& seq, int vocab, const char* who) {
  if (seq.size() < 2 || seq.front() != kBos || seq.back() != kEos)
    throw Error(std::string(who) +
                ": sequence must be framed <bos> ... <eos>");
  check_ids(seq, vocab, who);
}

TensorPtr maybe_drop(Tape& tape, const TensorPtr& x, const DropoutPlan& d) {
  if (!d.training || d.rate == 0.0) return x;
  if (d.rng == nullptr) throw Error("dropout plan is missing its rng");
  return tape.mul(x, dropout_mask(x->shape, d.rate, *d.rng));
}

TensorPtr repeat_row(Tape& tape, const TensorPtr& row, int rows) {
  if (row->rows() == rows) return row;
  if (row->rows() != 1)
    throw Error("repeat_row: expected a single row, got " + row->shape_str());
  return tape.embedding_lookup(row, std::vector<int>(rows, 0));
}

TensorPtr gather_rows(Tape& tape, const TensorPtr& x,
                      const std::vector<int>& rows) {
  return tape.embedding_lookup(x, rows);
}

// Flattened targets and mask for row t*B + b scoring framed[b][t + 1].
void fill_targets(const std::vector<std::vector<int>>& framed, int steps,
                  TeacherBatch* out) {
  const int b_count = static_cast<int>(framed.size());
  out->targets.assign(static_cast<std::size_t>(steps) * b_count, kPad);
  out->mask.assign(static_cast<std::size_t>(steps) * b_count, 0);
  for (int t = 0; t < steps; ++t)
    for (int b = 0; b < b_count; ++b)
      if (t + 1 < static_cast<int>(framed[b].size())) {
        out->targets[static_cast<std::size_t>(t) * b_count + b] =
            framed[b][t + 1];
        out->mask[static_cast<std::size_t>(t) * b_count + b] = 1;
      }
}

int max_len(const std::vector<std::vector<int>>& seqs) {
  std::size_t m = 0;
  for (const auto& s : seqs) m = std::max(m, s.size());
  return static_cast<int>(m);
}

// Token ids consumed at decoder step t across the batch; rows whose
// sequence has ended feed PAD (their logits are masked anyway).
std::vector<int> step_ids(const std::vector<std::vector<int>>& seqs, int t) {
  std::vector<int> ids(seqs.size(), kPad);
  for (std::size_t b = 0; b < seqs.size(); ++b)
    if (t < static_cast<int>(seqs[b].size())) ids[b] = seqs[b][t];
  return ids;
}

std::pair<TensorPtr, LSTMState> captioner_step_core(
    Tape& tape, const CaptionerParams& p, const LSTMState& s,
    const std::vector<int>& tokens) {
  check_ids(tokens, p.vocab, "captioner step");
  const auto x = tape.embedding_lookup(p.in_emb, tokens);
  const auto s2 = lstm_step(tape, p.decoder, s, x);
  const auto logits = tape.affine(s2.h, p.out_proj.w, p.out_proj.b);
  return {logits, s2};
}

std::pair<TensorPtr, LSTMState> autoencoder_step_core(
    Tape& tape, const AutoencoderParams& p, const LSTMState& s,
    const std::vector<int>& tokens) {
  check_ids(tokens, p.vocab, "autoencoder step");
  const auto x = tape.embedding_lookup(p.emb, tokens);
  const auto s2 = lstm_step(tape, p.decoder, s, x);
  const auto logits = tape.affine(s2.h, p.out_proj.w, p.out_proj.b);
  return {logits, s2};
}

std::pair<TensorPtr, LSTMState> translator_step_core(
    Tape& tape, const TranslatorParams& p, const TranslatorDecodeState& st,
    const std::vector<int>& tokens) {
  check_ids(tokens, p.tgt_vocab, "translator step");
  const int rows = st.s.h->rows();
  const int m = st.ann->rows();
  const auto q = tape.affine(st.s.h, p.attn.ws, nullptr);
  const auto e = tape.attn_scores_shared(q, st.keys, p.attn.v);
  const auto w = tape.masked_softmax(
      e, std::vector<std::uint8_t>(static_cast<std::size_t>(rows) * m, 1));
  const auto ctx = tape.attn_context_shared(w, st.ann);
  const auto emb = tape.embedding_lookup(p.dec_emb, tokens);
  const auto x = tape.concat_cols(emb, ctx);
  const auto s2 = lstm_step(tape, p.decoder, st.s, x);
  const auto logits = tape.affine(s2.h, p.out_proj.w, p.out_proj.b);
  return {logits, s2};
}

LSTMState encode_sequence(Tape& tape, const LSTMCellParams& cell,
                          const TensorPtr& x) {
  LSTMState s = lstm_begin(1, cell.hidden_dim);
  for (int j = 0; j < x->rows(); ++j)
    s = lstm_step(tape, cell, s, tape.slice_rows(x, j, j + 1));
  return s;
}

}  // namespace

CaptionerParams make_captioner(int vocab, const ModelDims& dims,
                               SplitRng& rng) {
  check_dims(dims, "make_captioner");
  if (vocab <= kNumReserved)
    throw Error("make_captioner: vocabulary too small: " +
                std::to_string(vocab));
  CaptionerParams p;
  p.vocab = vocab;
  p.dims = dims;
  p.img_proj = make_linear(dims.feat, dims.embed, rng);
  p.in_emb = glorot_uniform({vocab, dims.embed}, dims.embed, dims.embed, rng);
  p.decoder = make_lstm(dims.embed, dims.hidden, rng);
  p.out_proj = make_linear(dims.hidden, vocab, rng);
  return p;
}

ParamList captioner_param_list(const CaptionerParams& p,
                               const std::string& prefix) {
  return {
      {prefix + ".img_proj.w", p.img_proj.w},
      {prefix + ".img_proj.b", p.img_proj.b},
      {prefix + ".in_emb", p.in_emb},
      {prefix + ".decoder.w", p.decoder.w},
      {prefix + ".decoder.b", p.decoder.b},
      {prefix + ".out_proj.w", p.out_proj.w},
      {prefix + ".out_proj.b", p.out_proj.b},
  };
}

TranslatorParams make_translator(int src_vocab, int tgt_vocab,
                                 const ModelDims& dims, SplitRng& rng) {
  check_dims(dims, "make_translator");
  if (src_vocab <= kNumReserved || tgt_vocab <= kNumReserved)
    throw Error("make_translator: vocabulary too small");
  TranslatorParams p;
  p.src_vocab = src_vocab;
  p.tgt_vocab = tgt_vocab;
  p.dims = dims;
  p.enc_emb =
      glorot_uniform({src_vocab, dims.embed}, dims.embed, dims.embed, rng);
  p.enc_fwd = make_lstm(dims.embed, dims.hidden, rng);
  p.enc_bwd = make_lstm(dims.embed, dims.hidden, rng);
  p.attn = make_attention(dims.hidden, 2 * dims.hidden, dims.attn, rng);
  p.decoder = make_lstm(dims.embed + 2 * dims.hidden, dims.hidden, rng);
  p.dec_emb =
      glorot_uniform({tgt_vocab, dims.embed}, dims.embed, dims.embed, rng);
  p.out_proj = make_linear(dims.hidden, tgt_vocab, rng);
  return p;
}

ParamList translator_param_list(const TranslatorParams& p,
                                const std::string& prefix) {
  return {
      {prefix + ".enc_emb", p.enc_emb},
      {prefix + ".enc_fwd.w", p.enc_fwd.w},
      {prefix + ".enc_fwd.b", p.enc_fwd.b},
      {prefix + ".enc_bwd.w", p.enc_bwd.w},
      {prefix + ".enc_bwd.b", p.enc_bwd.b},
      {prefix + ".attn.ws", p.attn.ws},
      {prefix + ".attn.wh", p.attn.wh},
      {prefix + ".attn.v", p.attn.v},
      {prefix + ".decoder.w", p.decoder.w},
      {prefix + ".decoder.b", p.decoder.b},
      {prefix + ".dec_emb", p.dec_emb},
      {prefix + ".out_proj.w", p.out_proj.w},
      {prefix + ".out_proj.b", p.out_proj.b},
  };
}

AutoencoderParams make_autoencoder(int vocab, const ModelDims& dims,
                                   SplitRng& rng) {
  check_dims(dims, "make_autoencoder");
  if (vocab <= kNumReserved)
    throw Error("make_autoencoder: vocabulary too small: " +
                std::to_string(vocab));
  AutoencoderParams p;
  p.vocab = vocab;
  p.dims = dims;
  p.emb = glorot_uniform({vocab, dims.embed}, dims.embed, dims.embed, rng);
  p.encoder = make_lstm(dims.embed, dims.hidden, rng);
  p.decoder = make_lstm(dims.embed, dims.hidden, rng);
  p.out_proj = make_linear(dims.hidden, vocab, rng);
  return p;
}

ParamList autoencoder_param_list(const AutoencoderParams& p,
                                 const std::string& prefix) {
  return {
      {prefix + ".emb", p.emb},
      {prefix + ".encoder.w", p.encoder.w},
      {prefix + ".encoder.b", p.encoder.b},
      {prefix + ".decoder.w", p.decoder.w},
      {prefix + ".decoder.b", p.decoder.b},
      {prefix + ".out_proj.w", p.out_proj.w},
      {prefix + ".out_proj.b", p.out_proj.b},
  };
}

TeacherBatch captioner_teacher_batch(Tape& tape, const CaptionerParams& p,
                                     const TensorPtr& feats,
                                     const std::vector<std::vector<int>>& framed,
                                     const DropoutPlan& drop) {
  const int b_count = static_cast<int>(framed.size());
  if (b_count == 0) throw Error("captioner batch: empty batch");
  if (feats->rank() != 2 || feats->rows() != b_count ||
      feats->cols() != p.dims.feat)
    throw Error("captioner batch: features " + feats->shape_str() +
                " do not match batch of " + std::to_string(b_count) +
                " and feature width " + std::to_string(p.dims.feat));
  for (const auto& seq : framed)
    check_framed(seq, p.vocab, "captioner batch");

  const int steps = max_len(framed) - 1;
  const auto img = maybe_drop(
      tape, tape.affine(feats, p.img_proj.w, p.img_proj.b), drop);
  LSTMState s = lstm_begin(b_count, p.dims.hidden);
  s = lstm_step(tape, p.decoder, s, img);

  std::vector<TensorPtr> hs;
  hs.reserve(steps);
  for (int t = 0; t < steps; ++t) {
    const auto x = maybe_drop(
        tape, tape.embedding_lookup(p.in_emb, step_ids(framed, t)), drop);
    s = lstm_step(tape, p.decoder, s, x);
    hs.push_back(s.h);
  }

  TeacherBatch out;
  const auto h = maybe_drop(tape, tape.concat_rows(hs), drop);
  out.logits = tape.affine(h, p.out_proj.w, p.out_proj.b);
  fill_targets(framed, steps, &out);
  return out;
}

TeacherBatch translator_teacher_batch(Tape& tape, const TranslatorParams& p,
                                      const std::vector<std::vector<int>>& src,
                                      const std::vector<std::vector<int>>& framed_tgt,
                                      const DropoutPlan& drop) {
  const int b_count = static_cast<int>(src.size());
  if (b_count == 0) throw Error("translator batch: empty batch");
  if (framed_tgt.size() != src.size())
    throw Error("translator batch: " + std::to_string(src.size()) +
                " sources vs " + std::to_string(framed_tgt.size()) +
                " targets");
  for (const auto& s : src) {
    if (s.empty()) throw Error("translator batch: empty source");
    check_ids(s, p.src_vocab, "translator batch source");
  }
  for (const auto& t : framed_tgt)
    check_framed(t, p.tgt_vocab, "translator batch target");

  const int m = max_len(src);
  const int hidden = p.dims.hidden;

  // Bidirectional encoder with masked carry, so each row's final state
  // belongs to its own last live position.
  std::vector<std::vector<std::uint8_t>> keep(m);
  for (int j = 0; j < m; ++j) {
    keep[j].assign(b_count, 0);
    for (int b = 0; b < b_count; ++b)
      keep[j][b] = j < static_cast<int>(src[b].size()) ? 1 : 0;
  }
  std::vector<TensorPtr> fwd_h(m), bwd_h(m);
  LSTMState sf = lstm_begin(b_count, hidden);
  for (int j = 0; j < m; ++j) {
    const auto x = tape.embedding_lookup(p.enc_emb, step_ids(src, j));
    sf = lstm_step_masked(tape, p.enc_fwd, sf, x, keep[j]);
    fwd_h[j] = sf.h;
  }
  LSTMState sb = lstm_begin(b_count, hidden);
  for (int j = m - 1; j >= 0; --j) {
    const auto x = tape.embedding_lookup(p.enc_emb, step_ids(src, j));
    sb = lstm_step_masked(tape, p.enc_bwd, sb, x, keep[j]);
    bwd_h[j] = sb.h;
  }

  // Annotations laid out position-major: row j*B + b.
  std::vector<TensorPtr> ann_blocks(m);
  for (int j = 0; j < m; ++j)
    ann_blocks[j] = tape.concat_cols(fwd_h[j], bwd_h[j]);
  const auto ann = tape.concat_rows(ann_blocks);
  const auto keys = tape.affine(ann, p.attn.wh, nullptr);

  std::vector<std::uint8_t> attn_keep(static_cast<std::size_t>(b_count) * m);
  for (int b = 0; b < b_count; ++b)
    for (int j = 0; j < m; ++j)
      attn_keep[static_cast<std::size_t>(b) * m + j] = keep[j][b];

  LSTMState s{tape.scale(tape.add(sf.h, sb.h), 0.5),
              tape.scale(tape.add(sf.c, sb.c), 0.5)};

  const int steps = max_len(framed_tgt) - 1;
  std::vector<TensorPtr> hs;
  hs.reserve(steps);
  for (int t = 0; t < steps; ++t) {
    const auto q = tape.affine(s.h, p.attn.ws, nullptr);
    const auto e = tape.attn_scores_batched(q, keys, p.attn.v, m);
    const auto w = tape.masked_softmax(e, attn_keep);
    const auto ctx = tape.attn_context_batched(w, ann);
    const auto emb =
        tape.embedding_lookup(p.dec_emb, step_ids(framed_tgt, t));
    const auto x = maybe_drop(tape, tape.concat_cols(emb, ctx), drop);
    s = lstm_step(tape, p.decoder, s, x);
    hs.push_back(s.h);
  }

  TeacherBatch out;
  const auto h = maybe_drop(tape, tape.concat_rows(hs), drop);
  out.logits = tape.affine(h, p.out_proj.w, p.out_proj.b);
  fill_targets(framed_tgt, steps, &out);
  return out;
}

TeacherBatch autoencoder_teacher_batch(Tape& tape, const AutoencoderParams& p,
                                       const std::vector<std::vector<int>>& framed,
                                       const DropoutPlan& drop) {
  const int b_count = static_cast<int>(framed.size());
  if (b_count == 0) throw Error("autoencoder batch: empty batch");
  for (const auto& seq : framed)
    check_framed(seq, p.vocab, "autoencoder batch");

  const int m = max_len(framed);
  LSTMState s = lstm_begin(b_count, p.dims.hidden);
  for (int j = 0; j < m; ++j) {
    std::vector<std::uint8_t> keep(b_count, 0);
    for (int b = 0; b < b_count; ++b)
      keep[b] = j < static_cast<int>(framed[b].size()) ? 1 : 0;
    const auto x = tape.embedding_lookup(p.emb, step_ids(framed, j));
    s = lstm_step_masked(tape, p.encoder, s, x, keep);
  }

  const int steps = m - 1;
  std::vector<TensorPtr> hs;
  hs.reserve(steps);
  for (int t = 0; t < steps; ++t) {
    const auto x = maybe_drop(
        tape, tape.embedding_lookup(p.emb, step_ids(framed, t)), drop);
    s = lstm_step(tape, p.decoder, s, x);
    hs.push_back(s.h);
  }

  TeacherBatch out;
  const auto h = maybe_drop(tape, tape.concat_rows(hs), drop);
  out.logits = tape.affine(h, p.out_proj.w, p.out_proj.b);
  fill_targets(framed, steps, &out);
  return out;
}

TensorPtr captioner_forward(Tape& tape, const CaptionerParams& p,
                            const TensorPtr& feat,
                            const std::vector<int>& framed) {
  check_framed(framed, p.vocab, "captioner forward");
  auto st = captioner_decode_init(tape, p, feat, 1);
  std::vector<TensorPtr> rows;
  rows.reserve(framed.size() - 1);
  for (std::size_t t = 0; t + 1 < framed.size(); ++t) {
    auto [logits, s2] = captioner_step_core(tape, p, st.s, {framed[t]});
    rows.push_back(logits);
    st.s = s2;
  }
  return tape.concat_rows(rows);
}

TensorPtr translator_forward(Tape& tape, const TranslatorParams& p,
                             const std::vector<int>& src,
                             const std::vector<int>& framed_tgt) {
  check_framed(framed_tgt, p.tgt_vocab, "translator forward");
  auto st = translator_decode_init(tape, p, src, 1);
  std::vector<TensorPtr> rows;
  rows.reserve(framed_tgt.size() - 1);
  for (std::size_t t = 0; t + 1 < framed_tgt.size(); ++t) {
    auto [logits, s2] = translator_step_core(tape, p, st, {framed_tgt[t]});
    rows.push_back(logits);
    st.s = s2;
  }
  return tape.concat_rows(rows);
}

TensorPtr autoencoder_forward(Tape& tape, const AutoencoderParams& p,
                              const std::vector<int>& framed) {
  check_framed(framed, p.vocab, "autoencoder forward");
  auto st = autoencoder_decode_init(tape, p, framed, 1);
  std::vector<TensorPtr> rows;
  rows.reserve(framed.size() - 1);
  for (std::size_t t = 0; t + 1 < framed.size(); ++t) {
    auto [logits, s2] = autoencoder_step_core(tape, p, st.s, {framed[t]});
    rows.push_back(logits);
    st.s = s2;
  }
  return tape.concat_rows(rows);
}

CaptionerDecodeState captioner_decode_init(Tape& tape,
                                           const CaptionerParams& p,
                                           const TensorPtr& feat, int rows) {
  if (rows < 1) throw Error("captioner decode: rows must be positive");
  TensorPtr f = feat;
  if (f->rank() == 1) f = tape.reshape(f, {1, f->cols()});
  if (f->cols() != p.dims.feat)
    throw Error("captioner decode: feature width " +
                std::to_string(f->cols()) + " does not match " +
                std::to_string(p.dims.feat));
  f = repeat_row(tape, f, rows);
  const auto img = tape.affine(f, p.img_proj.w, p.img_proj.b);
  LSTMState s = lstm_begin(rows, p.dims.hidden);
  return {lstm_step(tape, p.decoder, s, img)};
}

std::pair<TensorPtr, CaptionerDecodeState> captioner_decode_step(
    Tape& tape, const CaptionerParams& p, const CaptionerDecodeState& st,
    const std::vector<int>& tokens) {
  auto [logits, s2] = captioner_step_core(tape, p, st.s, tokens);
  return {tape.log_softmax(logits), CaptionerDecodeState{s2}};
}

CaptionerDecodeState captioner_select_rows(Tape& tape,
                                           const CaptionerDecodeState& st,
                                           const std::vector<int>& rows) {
  return {{gather_rows(tape, st.s.h, rows), gather_rows(tape, st.s.c, rows)}};
}

TranslatorDecodeState translator_decode_init(Tape& tape,
                                             const TranslatorParams& p,
                                             const std::vector<int>& src,
                                             int rows) {
  if (rows < 1) throw Error("translator decode: rows must be positive");
  if (src.empty()) throw Error("translator decode: empty source");
  check_ids(src, p.src_vocab, "translator decode source");
  const auto x = tape.embedding_lookup(p.enc_emb, src);
  const auto enc = bilstm_encode(tape, p.enc_fwd, p.enc_bwd, x);
  TranslatorDecodeState st;
  st.ann = enc.annotations;
  st.keys = tape.affine(enc.annotations, p.attn.wh, nullptr);
  st.s.h = repeat_row(
      tape, tape.scale(tape.add(enc.fwd_last.h, enc.bwd_last.h), 0.5), rows);
  st.s.c = repeat_row(
      tape, tape.scale(tape.add(enc.fwd_last.c, enc.bwd_last.c), 0.5), rows);
  return st;
}

std::pair<TensorPtr, TranslatorDecodeState> translator_decode_step(
    Tape& tape, const TranslatorParams& p, const TranslatorDecodeState& st,
    const std::vector<int>& tokens) {
  auto [logits, s2] = translator_step_core(tape, p, st, tokens);
  TranslatorDecodeState next = st;
  next.s = s2;
  return {tape.log_softmax(logits), next};
}

TranslatorDecodeState translator_select_rows(Tape& tape,
                                             const TranslatorDecodeState& st,
                                             const std::vector<int>& rows) {
  TranslatorDecodeState next = st;
  next.s.h = gather_rows(tape, st.s.h, rows);
  next.s.c = gather_rows(tape, st.s.c, rows);
  return next;
}

AutoencoderDecodeState autoencoder_decode_init(Tape& tape,
                                               const AutoencoderParams& p,
                                               const std::vector<int>& input,
                                               int rows) {
  if (rows < 1) throw Error("autoencoder decode: rows must be positive");
  if (input.empty()) throw Error("autoencoder decode: empty input");
  check_ids(input, p.vocab, "autoencoder decode input");
  const auto x = tape.embedding_lookup(p.emb, input);
  LSTMState s = encode_sequence(tape, p.encoder, x);
  s.h = repeat_row(tape, s.h, rows);
  s.c = repeat_row(tape, s.c, rows);
  return {s};
}

std::pair<TensorPtr, AutoencoderDecodeState> autoencoder_decode_step(
    Tape& tape, const AutoencoderParams& p, const AutoencoderDecodeState& st,
    const std::vector<int>& tokens) {
  auto [logits, s2] = autoencoder_step_core(tape, p, st.s, tokens);
  return {tape.log_softmax(logits), AutoencoderDecodeState{s2}};
}

AutoencoderDecodeState autoencoder_select_rows(
    Tape& tape, const AutoencoderDecodeState& st,
    const std::vector<int>& rows) {
  return {{gather_rows(tape, st.s.h, rows), gather_rows(tape, st.s.c, rows)}};
}

}  // namespace pivotcap
