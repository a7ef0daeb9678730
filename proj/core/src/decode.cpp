#include "pivotcap/decode.hpp"

#include <algorithm>
#include <string>

#include "pivotcap/error.hpp"

namespace pivotcap {

namespace {

// Lexicographic order of (prefix + token) without materializing it.
bool extension_less(const std::vector<int>& a_prefix, int a_token,
                    const std::vector<int>& b_prefix, int b_token) {
  const std::size_t n = std::min(a_prefix.size(), b_prefix.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a_prefix[i] != b_prefix[i]) return a_prefix[i] < b_prefix[i];
  }
  const int a_next = a_prefix.size() == n ? a_token : a_prefix[n];
  const int b_next = b_prefix.size() == n ? b_token : b_prefix[n];
  if (a_next != b_next) return a_next < b_next;
  if (a_prefix.size() != b_prefix.size())
    return a_prefix.size() < b_prefix.size();
  return false;
}

bool better_hypothesis(const Hypothesis& a, const Hypothesis& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  if (a.ids != b.ids) return a.ids < b.ids;
  return false;
}

void check_limits(const char* who, int beam, int max_len) {
  if (beam < 1)
    throw Error(std::string(who) + ": beam size must be at least 1, got " +
                std::to_string(beam));
  if (max_len < 1)
    throw Error(std::string(who) + ": max length must be at least 1, got " +
                std::to_string(max_len));
}

}  // namespace

CaptionerStepper::CaptionerStepper(const CaptionerParams& params,
                                   const TensorPtr& feat)
    : params_(params),
      state_(captioner_decode_init(tape_, params, feat, 1)) {}

int CaptionerStepper::vocab_size() const { return params_.vocab; }

TensorPtr CaptionerStepper::step(const std::vector<int>& tokens) {
  auto [logp, next] = captioner_decode_step(tape_, params_, state_, tokens);
  state_ = next;
  return logp;
}

void CaptionerStepper::select_rows(const std::vector<int>& rows) {
  state_ = captioner_select_rows(tape_, state_, rows);
}

TranslatorStepper::TranslatorStepper(const TranslatorParams& params,
                                     const std::vector<int>& src)
    : params_(params),
      state_(translator_decode_init(tape_, params, src, 1)) {}

int TranslatorStepper::vocab_size() const { return params_.tgt_vocab; }

TensorPtr TranslatorStepper::step(const std::vector<int>& tokens) {
  auto [logp, next] = translator_decode_step(tape_, params_, state_, tokens);
  state_ = next;
  return logp;
}

void TranslatorStepper::select_rows(const std::vector<int>& rows) {
  state_ = translator_select_rows(tape_, state_, rows);
}

AutoencoderStepper::AutoencoderStepper(const AutoencoderParams& params,
                                       const std::vector<int>& input)
    : params_(params),
      state_(autoencoder_decode_init(tape_, params, input, 1)) {}

int AutoencoderStepper::vocab_size() const { return params_.vocab; }

TensorPtr AutoencoderStepper::step(const std::vector<int>& tokens) {
  auto [logp, next] = autoencoder_decode_step(tape_, params_, state_, tokens);
  state_ = next;
  return logp;
}

void AutoencoderStepper::select_rows(const std::vector<int>& rows) {
  state_ = autoencoder_select_rows(tape_, state_, rows);
}

Hypothesis greedy_decode(StepModel& model, int max_len) {
  check_limits("greedy_decode", 1, max_len);
  const int v = model.vocab_size();
  Hypothesis h;
  h.ids = {kBos};
  for (int t = 0; t < max_len && !h.finished; ++t) {
    TensorPtr logp = model.step({h.ids.back()});
    int best = 0;
    for (int j = 1; j < v; ++j) {
      if (logp->at(0, j) > logp->at(0, best)) best = j;
    }
    h.log_prob += logp->at(0, best);
    h.ids.push_back(best);
    if (best == kEos) h.finished = true;
  }
  return h;
}

Hypothesis beam_search(StepModel& model, const BeamConfig& cfg) {
  check_limits("beam_search", cfg.beam, cfg.max_len);
  const int v = model.vocab_size();

  struct Live {
    std::vector<int> ids;
    double score = 0.0;
  };
  std::vector<Live> live(1);
  live[0].ids = {kBos};

  Hypothesis best_completed;
  bool have_completed = false;

  struct Cand {
    double score;
    int parent;
    int token;
  };

  for (int t = 0; t < cfg.max_len; ++t) {
    std::vector<int> tokens(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) tokens[i] = live[i].ids.back();
    TensorPtr logp = model.step(tokens);

    std::vector<Cand> cands;
    cands.reserve(live.size() * static_cast<std::size_t>(v));
    for (std::size_t i = 0; i < live.size(); ++i) {
      for (int j = 0; j < v; ++j) {
        cands.push_back({live[i].score + logp->at(static_cast<int>(i), j),
                         static_cast<int>(i), j});
      }
    }
    std::sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
      if (a.score != b.score) return a.score > b.score;
      return extension_less(live[a.parent].ids, a.token, live[b.parent].ids,
                            b.token);
    });

    // Walk the ranking until the beam is refilled; EOS candidates met on
    // the way join the completed pool, everything ranked below the last
    // admitted live row is dropped.
    std::vector<Live> next;
    std::vector<int> parents;
    for (const Cand& c : cands) {
      if (static_cast<int>(next.size()) == cfg.beam) break;
      if (c.token == kEos) {
        Hypothesis done;
        done.ids = live[c.parent].ids;
        done.ids.push_back(kEos);
        done.log_prob = c.score;
        done.finished = true;
        if (!have_completed || better_hypothesis(done, best_completed)) {
          best_completed = done;
          have_completed = true;
        }
        continue;
      }
      Live ext;
      ext.ids = live[c.parent].ids;
      ext.ids.push_back(c.token);
      ext.score = c.score;
      next.push_back(std::move(ext));
      parents.push_back(c.parent);
    }
    if (next.empty()) break;
    live = std::move(next);
    model.select_rows(parents);

    if (have_completed && best_completed.log_prob >= live[0].score)
      return best_completed;
  }

  if (have_completed) return best_completed;
  Hypothesis truncated;
  truncated.ids = live[0].ids;
  truncated.log_prob = live[0].score;
  truncated.finished = false;
  return truncated;
}

TwoStageResult two_stage_caption(const CaptionerParams& cap,
                                 const Vocab& cap_vocab,
                                 const TranslatorParams& mt,
                                 const Vocab& mt_src_vocab,
                                 const TensorPtr& feat,
                                 const BeamConfig& pivot_cfg,
                                 const BeamConfig& target_cfg) {
  TwoStageResult out;
  {
    CaptionerStepper stepper(cap, feat);
    out.pivot = beam_search(stepper, pivot_cfg);
  }
  const std::vector<std::string> surface = cap_vocab.decode(out.pivot.ids);
  if (surface.empty())
    throw Error(
        "two_stage_caption: pivot decode produced no content tokens; the "
        "captioner is degenerate");
  out.translator_src.reserve(surface.size() + 2);
  out.translator_src.push_back(kBos);
  for (const auto& tok : surface)
    out.translator_src.push_back(mt_src_vocab.id(tok));
  out.translator_src.push_back(kEos);
  {
    TranslatorStepper stepper(mt, out.translator_src);
    out.target = beam_search(stepper, target_cfg);
  }
  return out;
}

}  // namespace pivotcap
