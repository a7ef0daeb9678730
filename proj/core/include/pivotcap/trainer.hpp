#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pivotcap/checkpoint.hpp"
#include "pivotcap/decode.hpp"
#include "pivotcap/metrics.hpp"
#include "pivotcap/models.hpp"
#include "pivotcap/objectives.hpp"
#include "pivotcap/synth.hpp"
#include "pivotcap/vocab.hpp"

namespace pivotcap {

// Framed id corpora. Every sequence is BOS ... EOS as produced by
// Vocab::encode.
struct CaptionSet {
  TensorPtr feats;  // [N x feat]
  std::vector<std::vector<int>> framed;
};
struct ParallelSet {
  std::vector<std::vector<int>> src;
  std::vector<std::vector<int>> tgt;
};
struct TextSet {
  std::vector<std::vector<int>> framed;
};
struct JointCorpora {
  CaptionSet captions;
  ParallelSet parallel;
  TextSet mono;
};

std::vector<std::vector<int>> encode_corpus(
    const Vocab& vocab, const std::vector<TokenSeq>& sentences);

// The four vocabularies of a run. The translator sides are built from
// the union of the parallel corpus and the matching caption corpus, so
// every caption-domain surface has translator rows to tie and score; the
// parallel data itself never trains those rows toward emission.
struct VocabBundle {
  Vocab cap;     // pivot captions
  Vocab mt_src;  // parallel pivot side + pivot captions
  Vocab mt_tgt;  // parallel target side + target captions
  Vocab ae;      // target captions
};
VocabBundle build_vocabularies(const SynthCorpora& corpora, int min_freq);

struct TrainOptions {
  double lr = 4e-4;
  int batch = 100;
  int epochs = 30;
  int patience = 5;
  // Fraction of each corpus held out for validation. Zero disables the
  // holdout; epoch selection then uses the epoch's mean training XE.
  double val_fraction = 0.1;
  double dropout = 0.0;
  double weight_decay = 0.0;
  double clip_norm = 5.0;
};

// Everything a run needs to continue from an epoch boundary. All
// within-epoch randomness is a pure function of (seed, epoch), so a
// resumed run reproduces the uninterrupted one bitwise.
struct TrainState {
  int next_epoch = 0;
  long steps_done = 0;
  double best_val = 0.0;  // valid once best_epoch >= 0
  int best_epoch = -1;
  int bad_epochs = 0;
  // Set by early stopping or divergence only. An exhausted epoch budget
  // leaves this false so the run can be extended with a larger budget.
  bool stopped = false;
  double r_pivot_start = 0.0;
  double r_target_start = 0.0;
  long adam_steps = 0;
  std::vector<double> adam_m, adam_v;  // flattened over the parameter list
  std::vector<double> best_params;     // flattened snapshot
  // End-of-last-epoch values. The live parameters hold the best epoch's
  // values after a run returns, so resumption restarts from these.
  std::vector<double> current_params;
};

// Bundles the current parameter values with the optimizer and early-stop
// state; loading applies the parameter values in place.
Checkpoint train_state_checkpoint(const ParamList& params,
                                  const TrainState& state,
                                  std::uint64_t config_hash);
TrainState train_state_from_checkpoint(const Checkpoint& ckpt,
                                       const ParamList& params);

struct TrainOutcome {
  double best_val = 0.0;
  int best_epoch = -1;
  int epochs_run = 0;
  bool diverged = false;
  std::vector<double> step_loss;  // training loss per step
  std::vector<double> epoch_val;  // selection metric per epoch
  // Alignment distances at the start of the joint phase and on the
  // returned parameters; NaN outside joint training.
  double r_pivot_start = 0.0, r_pivot_end = 0.0;
  double r_target_start = 0.0, r_target_end = 0.0;
  // One record per step and per epoch, identical across reruns:
  //   step=<s> epoch=<e> xe=<v>                                  (pretrain)
  //   step=<s> epoch=<e> l_ix=.. l_xy=.. l_yy=..
  //     r_pivot=.. r_target=.. total=..                          (joint)
  //   epoch=<e> val_xe=<v> [r_pivot=.. r_target=..] best=<0|1>
  //   diverged step=<s> epoch=<e>
  std::vector<std::string> log;
};

// Teacher-forced XE training with Adam, per-epoch shuffles, gradient
// clipping and best-validation selection. The parameters are left at the
// best epoch's values on return. A non-finite loss or gradient aborts
// the run with the last good parameters and marks the outcome diverged.
// When state is given, a run with state->next_epoch > 0 resumes there,
// and the final state is written back for persisting.
TrainOutcome pretrain_captioner(CaptionerParams& p, const CaptionSet& data,
                                const TrainOptions& opt, std::uint64_t seed,
                                TrainState* state = nullptr);
TrainOutcome pretrain_translator(TranslatorParams& p, const ParallelSet& data,
                                 const TrainOptions& opt, std::uint64_t seed,
                                 TrainState* state = nullptr);
TrainOutcome pretrain_autoencoder(AutoencoderParams& p, const TextSet& data,
                                  const TrainOptions& opt, std::uint64_t seed,
                                  TrainState* state = nullptr);

// Joint phase over the three corpora: every step draws one minibatch
// from each corpus (independent per-epoch shuffles, cycled within the
// epoch), and one epoch is a full pass over the largest corpus.
// Validation is the sum of the three teacher-forced XE terms. The
// alignment distances over the two vocabulary maps are measured at the
// phase start and on the returned parameters whether or not the
// regularizers are switched on.
TrainOutcome joint_train(CaptionerParams& cap, TranslatorParams& mt,
                         AutoencoderParams& ae, const JointCorpora& data,
                         const SharedVocabMap& pivot_map,
                         const SharedVocabMap& target_map,
                         const TrainOptions& opt, const RegConfig& reg,
                         std::uint64_t seed, TrainState* state = nullptr);

// Decodes caption -> translation for every feature row and scores the
// results against the references.
struct EvalReport {
  std::vector<TokenSeq> pivot;   // decoded pivot captions
  std::vector<TokenSeq> target;  // decoded target captions
  BleuResult bleu;
  CiderResult cider;
  std::vector<double> self_bleu;  // orders 2..5
};
EvalReport evaluate_pipeline(const CaptionerParams& cap, const Vocab& cap_vocab,
                             const TranslatorParams& mt,
                             const Vocab& mt_src_vocab,
                             const Vocab& mt_tgt_vocab, const TensorPtr& feats,
                             const std::vector<std::vector<TokenSeq>>& refs,
                             const BeamConfig& pivot_cfg,
                             const BeamConfig& target_cfg);

}  // namespace pivotcap
