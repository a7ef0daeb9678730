#pragma once

#include <memory>
#include <vector>

#include "pivotcap/models.hpp"
#include "pivotcap/vocab.hpp"

namespace pivotcap {

// One decoded candidate. ids always starts with BOS; a finished hypothesis
// ends with its single EOS. log_prob is the raw sum of step log
// probabilities (no length normalization). finished == false marks a
// decode that hit the length limit before emitting EOS.
struct Hypothesis {
  std::vector<int> ids;
  double log_prob = 0.0;
  bool finished = false;
};

struct BeamConfig {
  int beam = 1;
  int max_len = 1;
};

inline constexpr BeamConfig kCaptionDecode{5, 16};
inline constexpr BeamConfig kTranslationDecode{10, 20};

// Stepwise view of a conditioned model during decoding. An implementation
// tracks one row per live hypothesis, starting from a single row; step
// advances every row by one token and returns log probabilities, and
// select_rows reorders/duplicates rows to follow a beam reshuffle.
class StepModel {
 public:
  virtual ~StepModel() = default;
  virtual int vocab_size() const = 0;
  // tokens has one entry per current row; returns [rows x V] log-probs.
  virtual TensorPtr step(const std::vector<int>& tokens) = 0;
  // rows indexes the current rows; duplicates allowed.
  virtual void select_rows(const std::vector<int>& rows) = 0;
};

// Adapters over the model decode states. Each owns a non-recording tape
// and is conditioned once at construction; a fresh adapter starts a fresh
// decode.
class CaptionerStepper final : public StepModel {
 public:
  CaptionerStepper(const CaptionerParams& params, const TensorPtr& feat);
  int vocab_size() const override;
  TensorPtr step(const std::vector<int>& tokens) override;
  void select_rows(const std::vector<int>& rows) override;

 private:
  const CaptionerParams& params_;
  Tape tape_{false};
  CaptionerDecodeState state_;
};

class TranslatorStepper final : public StepModel {
 public:
  TranslatorStepper(const TranslatorParams& params,
                    const std::vector<int>& src);
  int vocab_size() const override;
  TensorPtr step(const std::vector<int>& tokens) override;
  void select_rows(const std::vector<int>& rows) override;

 private:
  const TranslatorParams& params_;
  Tape tape_{false};
  TranslatorDecodeState state_;
};

class AutoencoderStepper final : public StepModel {
 public:
  AutoencoderStepper(const AutoencoderParams& params,
                     const std::vector<int>& input);
  int vocab_size() const override;
  TensorPtr step(const std::vector<int>& tokens) override;
  void select_rows(const std::vector<int>& rows) override;

 private:
  const AutoencoderParams& params_;
  Tape tape_{false};
  AutoencoderDecodeState state_;
};

// Argmax decoding from BOS, lowest token id on ties, until EOS or max_len
// emitted tokens.
Hypothesis greedy_decode(StepModel& model, int max_len);

// Beam search over cumulative log probability. Each step expands every
// live hypothesis over the full vocabulary; candidates are ranked by score
// (ties: lexicographically smaller ids, then shorter). Walking that
// ranking, EOS candidates move to the completed pool and the others refill
// the beam until it holds cfg.beam rows again. Stops early once the best
// completed score is at least the best live score (extensions only lower a
// score), otherwise at cfg.max_len steps. Returns the best completed
// hypothesis, or the best live one marked unfinished if nothing completed.
Hypothesis beam_search(StepModel& model, const BeamConfig& cfg);

// Caption-then-translate: beam-decodes a pivot sentence from the image
// feature, re-maps its content tokens into the translator's source
// vocabulary by surface string (unknown surfaces become UNK), frames them
// with BOS/EOS, and beam-decodes the target. A pivot decode with no
// content tokens is an error.
struct TwoStageResult {
  Hypothesis pivot;
  std::vector<int> translator_src;
  Hypothesis target;
};
TwoStageResult two_stage_caption(const CaptionerParams& cap,
                                 const Vocab& cap_vocab,
                                 const TranslatorParams& mt,
                                 const Vocab& mt_src_vocab,
                                 const TensorPtr& feat,
                                 const BeamConfig& pivot_cfg,
                                 const BeamConfig& target_cfg);

}  // namespace pivotcap
