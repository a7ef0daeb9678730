#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pivotcap/layers.hpp"

namespace pivotcap {

// Widths shared by the three models. embed must equal hidden so that
// output-projection rows and input-embedding rows live in the same space
// and either can serve as a regularizer tie site.
struct ModelDims {
  int embed = 64;   // token embedding width d
  int hidden = 64;  // LSTM state width H
  int attn = 64;    // attention scoring width A
  int feat = 64;    // image feature width
};

// Image captioner: the projected feature is the decoder's first input
// (consumed once, before BOS), then a single-layer LSTM runs over teacher
// tokens. out_proj rows are the output embeddings.
struct CaptionerParams {
  LinearLayer img_proj;    // [d x feat]
  TensorPtr in_emb;        // [V x d]
  LSTMCellParams decoder;  // d -> H
  LinearLayer out_proj;    // [V x H]
  int vocab = 0;
  ModelDims dims;
};
CaptionerParams make_captioner(int vocab, const ModelDims& dims,
                               SplitRng& rng);
ParamList captioner_param_list(const CaptionerParams& p,
                               const std::string& prefix = "cap");

// Attention translator: bidirectional LSTM encoder over source embeddings,
// additive attention queried by the previous decoder state, decoder input
// is [token embedding; context]. The decoder starts from the mean of the
// two encoder final states.
struct TranslatorParams {
  TensorPtr enc_emb;  // [V_src x d]
  LSTMCellParams enc_fwd, enc_bwd;  // d -> H each
  AttentionParams attn;             // query H, annotations 2H
  LSTMCellParams decoder;           // (d + 2H) -> H
  TensorPtr dec_emb;                // [V_tgt x d]
  LinearLayer out_proj;             // [V_tgt x H]
  int src_vocab = 0;
  int tgt_vocab = 0;
  ModelDims dims;
};
TranslatorParams make_translator(int src_vocab, int tgt_vocab,
                                 const ModelDims& dims, SplitRng& rng);
ParamList translator_param_list(const TranslatorParams& p,
                                const std::string& prefix = "mt");

// Sequence autoencoder: one encoder LSTM reads the whole framed sentence,
// its final state initializes the decoder, and a single embedding matrix
// serves both sides.
struct AutoencoderParams {
  TensorPtr emb;  // [V x d]
  LSTMCellParams encoder, decoder;  // d -> H each
  LinearLayer out_proj;             // [V x H]
  int vocab = 0;
  ModelDims dims;
};
AutoencoderParams make_autoencoder(int vocab, const ModelDims& dims,
                                   SplitRng& rng);
ParamList autoencoder_param_list(const AutoencoderParams& p,
                                 const std::string& prefix = "ae");

// Dropout switches for the training paths. Active only when training is
// set and rate > 0; applied to decoder inputs and pre-softmax states.
struct DropoutPlan {
  double rate = 0.0;
  bool training = false;
  SplitRng* rng = nullptr;
};

// One teacher-forced minibatch, flattened for a single softmax/XE pass:
// logits row t*B + b scores framed[b][t + 1]. Rows past a sequence's end
// are masked out and carry a PAD target.
struct TeacherBatch {
  TensorPtr logits;  // [(T-1)*B x V]
  std::vector<int> targets;
  std::vector<std::uint8_t> mask;
};

// Batched training forwards. Sequences are ragged; the encoders use
// masked state carry so every row's final state is its own, and dead
// decoder steps are simply masked in the loss. feats is [B x feat].
TeacherBatch captioner_teacher_batch(Tape& tape, const CaptionerParams& p,
                                     const TensorPtr& feats,
                                     const std::vector<std::vector<int>>& framed,
                                     const DropoutPlan& drop = {});
TeacherBatch translator_teacher_batch(Tape& tape, const TranslatorParams& p,
                                      const std::vector<std::vector<int>>& src,
                                      const std::vector<std::vector<int>>& framed_tgt,
                                      const DropoutPlan& drop = {});
TeacherBatch autoencoder_teacher_batch(Tape& tape, const AutoencoderParams& p,
                                       const std::vector<std::vector<int>>& framed,
                                       const DropoutPlan& drop = {});

// Single-sequence teacher-forced forwards. framed is BOS ... EOS; the
// result is [(len-1) x V] with row t scoring framed[t + 1]. These run the
// same step code as the decode functions below, so stepping along the
// teacher sequence reproduces the forward logits bitwise. feat is a
// rank-1 feature [feat].
TensorPtr captioner_forward(Tape& tape, const CaptionerParams& p,
                            const TensorPtr& feat,
                            const std::vector<int>& framed);
// src is consumed as given (the trainer passes framed sources); it only
// has to be nonempty.
TensorPtr translator_forward(Tape& tape, const TranslatorParams& p,
                             const std::vector<int>& src,
                             const std::vector<int>& framed_tgt);
TensorPtr autoencoder_forward(Tape& tape, const AutoencoderParams& p,
                              const std::vector<int>& framed);

// Stepwise decoding interfaces. A state holds one row per live
// hypothesis; init starts every row from the same conditioning input,
// step consumes one token per row and returns log-probabilities [R x V],
// and select_rows reorders/duplicates rows after a beam reshuffle.

struct CaptionerDecodeState {
  LSTMState s;
};
CaptionerDecodeState captioner_decode_init(Tape& tape,
                                           const CaptionerParams& p,
                                           const TensorPtr& feat,
                                           int rows = 1);
std::pair<TensorPtr, CaptionerDecodeState> captioner_decode_step(
    Tape& tape, const CaptionerParams& p, const CaptionerDecodeState& st,
    const std::vector<int>& tokens);
CaptionerDecodeState captioner_select_rows(Tape& tape,
                                           const CaptionerDecodeState& st,
                                           const std::vector<int>& rows);

struct TranslatorDecodeState {
  TensorPtr ann;   // [M x 2H], fixed over the decode
  TensorPtr keys;  // [M x A], precomputed annotation projections
  LSTMState s;
};
TranslatorDecodeState translator_decode_init(Tape& tape,
                                             const TranslatorParams& p,
                                             const std::vector<int>& src,
                                             int rows = 1);
std::pair<TensorPtr, TranslatorDecodeState> translator_decode_step(
    Tape& tape, const TranslatorParams& p, const TranslatorDecodeState& st,
    const std::vector<int>& tokens);
TranslatorDecodeState translator_select_rows(Tape& tape,
                                             const TranslatorDecodeState& st,
                                             const std::vector<int>& rows);

struct AutoencoderDecodeState {
  LSTMState s;
};
AutoencoderDecodeState autoencoder_decode_init(Tape& tape,
                                               const AutoencoderParams& p,
                                               const std::vector<int>& input,
                                               int rows = 1);
std::pair<TensorPtr, AutoencoderDecodeState> autoencoder_decode_step(
    Tape& tape, const AutoencoderParams& p, const AutoencoderDecodeState& st,
    const std::vector<int>& tokens);
AutoencoderDecodeState autoencoder_select_rows(
    Tape& tape, const AutoencoderDecodeState& st,
    const std::vector<int>& rows);

}  // namespace pivotcap
