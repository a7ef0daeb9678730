#include "pivotcap/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "pivotcap/error.hpp"
#include "pivotcap/optim.hpp"
#include "pivotcap/rng.hpp"
#include "pivotcap/tape.hpp"
#include "pivotcap/textfmt.hpp"

namespace pivotcap {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

SplitRng epoch_rng(std::uint64_t seed, int epoch) {
  return SplitRng(seed).split("epoch").split(static_cast<std::uint64_t>(epoch));
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

std::vector<double> flatten(const ParamList& params) {
  std::vector<double> flat;
  flat.reserve(param_count(params));
  for (const NamedParam& p : params) {
    flat.insert(flat.end(), p.tensor->data.begin(), p.tensor->data.end());
  }
  return flat;
}

void unflatten(const std::vector<double>& flat, const ParamList& params) {
  if (flat.size() != param_count(params)) {
    throw Error("trainer: flattened state does not match the model");
  }
  std::size_t off = 0;
  for (const NamedParam& p : params) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off),
                p.tensor->size(), p.tensor->data.begin());
    off += p.tensor->size();
  }
}

std::vector<double> flatten_moments(const std::vector<std::vector<double>>& m) {
  std::vector<double> flat;
  for (const auto& v : m) flat.insert(flat.end(), v.begin(), v.end());
  return flat;
}

void unflatten_moments(const std::vector<double>& flat,
                       std::vector<std::vector<double>>& m) {
  std::size_t off = 0;
  for (auto& v : m) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), v.size(),
                v.begin());
    off += v.size();
  }
}

// Train/val holdout, a pure function of the stream passed in. Corpora of
// one item train on it and skip validation.
struct IndexSplit {
  std::vector<int> train, val;
};
IndexSplit split_indices(int n, double val_fraction, SplitRng rng) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  int n_val = 0;
  if (val_fraction > 0 && n > 1) {
    n_val = std::min(n - 1, std::max(1, static_cast<int>(n * val_fraction)));
  }
  IndexSplit split;
  split.val.assign(order.begin(), order.begin() + n_val);
  split.train.assign(order.begin() + n_val, order.end());
  return split;
}

// Whole shuffled passes concatenated until the order covers `need` draws,
// so a smaller corpus cycles independently within the epoch.
std::vector<int> epoch_order(const std::vector<int>& idx, std::size_t need,
                             const SplitRng& rng) {
  std::vector<int> order;
  order.reserve(need + idx.size());
  std::uint64_t pass = 0;
  while (order.size() < need) {
    std::vector<int> perm = idx;
    SplitRng pr = rng.split(pass++);
    pr.shuffle(perm);
    order.insert(order.end(), perm.begin(), perm.end());
  }
  return order;
}

using BatchForward = std::function<TeacherBatch(
    Tape&, const std::vector<int>& rows, const DropoutPlan&)>;

long masked_tokens(const TeacherBatch& batch) {
  long n = 0;
  for (std::uint8_t m : batch.mask) n += m ? 1 : 0;
  return n;
}

// Token-weighted mean XE over a row set, teacher-forced, dropout off.
double corpus_xe(const BatchForward& fwd, const std::vector<int>& rows,
                 int batch) {
  double weighted = 0.0;
  long total = 0;
  for (std::size_t start = 0; start < rows.size();
       start += static_cast<std::size_t>(batch)) {
    const std::size_t stop =
        std::min(rows.size(), start + static_cast<std::size_t>(batch));
    std::vector<int> chunk(rows.begin() + static_cast<std::ptrdiff_t>(start),
                           rows.begin() + static_cast<std::ptrdiff_t>(stop));
    Tape tape(false);
    TeacherBatch tb = fwd(tape, chunk, DropoutPlan{});
    const long tokens = masked_tokens(tb);
    weighted += xe_loss(tape, tb)->data[0] * static_cast<double>(tokens);
    total += tokens;
  }
  return total > 0 ? weighted / static_cast<double>(total) : 0.0;
}

struct DriverHooks {
  int steps_per_epoch = 0;
  std::function<void(int epoch)> begin_epoch;
  std::function<std::pair<TensorPtr, std::string>(Tape&, int step,
                                                  SplitRng& drop_rng)>
      step;
  bool has_validation = false;
  std::function<double()> validation;
  std::function<std::string()> epoch_extra;  // appended to the epoch record
};

void check_options(const TrainOptions& opt) {
  if (opt.lr < 0 || opt.batch < 1 || opt.epochs < 0 || opt.patience < 1 ||
      opt.val_fraction < 0 || opt.val_fraction >= 0.5 || opt.dropout < 0 ||
      opt.dropout >= 1 || !(opt.clip_norm > 0)) {
    throw Error("trainer: invalid training options");
  }
}

TrainOutcome run_driver(const ParamList& params, const TrainOptions& opt,
                        std::uint64_t seed, TrainState* st,
                        const DriverHooks& hooks) {
  check_options(opt);
  const std::size_t n_values = param_count(params);

  AdamConfig acfg;
  acfg.lr = opt.lr;
  acfg.weight_decay = opt.weight_decay;
  Adam adam(params, acfg);

  if (st->next_epoch > 0) {
    if (st->adam_m.size() != n_values || st->adam_v.size() != n_values) {
      throw Error("trainer: resume state does not match the model");
    }
    unflatten_moments(st->adam_m, adam.moment1());
    unflatten_moments(st->adam_v, adam.moment2());
    adam.set_steps_taken(st->adam_steps);
  }

  TrainOutcome out;
  out.r_pivot_start = out.r_pivot_end = kNan;
  out.r_target_start = out.r_target_end = kNan;

  // Fallback for a divergence before the first epoch completes.
  const std::vector<double> entry_params = flatten(params);

  for (int e = st->next_epoch; !st->stopped && e < opt.epochs; ++e) {
    hooks.begin_epoch(e);
    SplitRng drop_rng = epoch_rng(seed, e).split("dropout");
    double train_sum = 0.0;
    bool aborted = false;
    for (int s = 0; s < hooks.steps_per_epoch; ++s) {
      Tape tape(true);
      auto [loss, suffix] = hooks.step(tape, s, drop_rng);
      const double loss_value = loss->data[0];
      bool bad = !std::isfinite(loss_value);
      if (!bad) {
        tape.backward(loss);
        bad = !std::isfinite(clip_global_norm(params, opt.clip_norm));
      }
      if (bad) {
        zero_grads(params);
        out.log.push_back("diverged step=" +
                          std::to_string(st->steps_done + 1) +
                          " epoch=" + std::to_string(e));
        out.diverged = true;
        st->stopped = true;
        aborted = true;
        break;
      }
      adam.step();
      zero_grads(params);
      ++st->steps_done;
      out.step_loss.push_back(loss_value);
      train_sum += loss_value;
      out.log.push_back("step=" + std::to_string(st->steps_done) +
                        " epoch=" + std::to_string(e) + " " + suffix);
    }
    if (aborted) break;

    const double metric =
        hooks.has_validation
            ? hooks.validation()
            : train_sum / std::max(1, hooks.steps_per_epoch);
    const bool improved = st->best_epoch < 0 || metric < st->best_val;
    if (improved) {
      st->best_val = metric;
      st->best_epoch = e;
      st->bad_epochs = 0;
      st->best_params = flatten(params);
    } else {
      ++st->bad_epochs;
    }
    out.epoch_val.push_back(metric);
    out.log.push_back(
        "epoch=" + std::to_string(e) +
        (hooks.has_validation ? " val_xe=" : " train_xe=") +
        format_double(metric) + " " +
        (hooks.epoch_extra ? hooks.epoch_extra() : std::string()) +
        "best=" + (improved ? "1" : "0"));
    ++out.epochs_run;
    st->next_epoch = e + 1;
    if (st->bad_epochs >= opt.patience) {
      out.log.push_back("early_stop epoch=" + std::to_string(e));
      st->stopped = true;
    }
  }

  st->adam_m = flatten_moments(adam.moment1());
  st->adam_v = flatten_moments(adam.moment2());
  st->adam_steps = adam.steps_taken();
  st->current_params = flatten(params);
  if (st->best_epoch >= 0) {
    unflatten(st->best_params, params);
  } else if (out.diverged) {
    unflatten(entry_params, params);
  }

  out.best_val = st->best_val;
  out.best_epoch = st->best_epoch;
  return out;
}

TrainOutcome run_pretrain(const ParamList& params, const BatchForward& fwd,
                          int n_items, const TrainOptions& opt,
                          std::uint64_t seed, TrainState* state) {
  if (n_items < 1) throw Error("trainer: empty corpus");
  TrainState local;
  TrainState* st = state ? state : &local;

  const IndexSplit split = split_indices(n_items, opt.val_fraction,
                                         SplitRng(seed).split("val-split"));
  std::vector<int> order;

  DriverHooks hooks;
  hooks.steps_per_epoch =
      ceil_div(static_cast<int>(split.train.size()), opt.batch);
  hooks.begin_epoch = [&](int e) {
    order = split.train;
    SplitRng r = epoch_rng(seed, e).split("order");
    r.shuffle(order);
  };
  hooks.step = [&](Tape& tape, int s, SplitRng& drop_rng) {
    const int lo = s * opt.batch;
    const int hi =
        std::min(static_cast<int>(order.size()), lo + opt.batch);
    std::vector<int> rows(order.begin() + lo, order.begin() + hi);
    const DropoutPlan drop{opt.dropout, true, &drop_rng};
    TensorPtr loss = xe_loss(tape, fwd(tape, rows, drop));
    return std::make_pair(loss, "xe=" + format_double(loss->data[0]));
  };
  hooks.has_validation = !split.val.empty();
  hooks.validation = [&]() { return corpus_xe(fwd, split.val, opt.batch); };
  return run_driver(params, opt, seed, st, hooks);
}

BatchForward captioner_batches(const CaptionerParams& p,
                               const CaptionSet& data) {
  return [&p, &data](Tape& tape, const std::vector<int>& rows,
                     const DropoutPlan& drop) {
    const int dim = data.feats->cols();
    TensorPtr feats = make_tensor({static_cast<int>(rows.size()), dim});
    std::vector<std::vector<int>> framed(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::copy_n(data.feats->data.begin() +
                      static_cast<std::ptrdiff_t>(rows[i]) * dim,
                  dim, feats->data.begin() + static_cast<std::ptrdiff_t>(i) * dim);
      framed[i] = data.framed[static_cast<std::size_t>(rows[i])];
    }
    return captioner_teacher_batch(tape, p, feats, framed, drop);
  };
}

BatchForward translator_batches(const TranslatorParams& p,
                                const ParallelSet& data) {
  return [&p, &data](Tape& tape, const std::vector<int>& rows,
                     const DropoutPlan& drop) {
    std::vector<std::vector<int>> src(rows.size()), tgt(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      src[i] = data.src[static_cast<std::size_t>(rows[i])];
      tgt[i] = data.tgt[static_cast<std::size_t>(rows[i])];
    }
    return translator_teacher_batch(tape, p, src, tgt, drop);
  };
}

BatchForward autoencoder_batches(const AutoencoderParams& p,
                                 const TextSet& data) {
  return [&p, &data](Tape& tape, const std::vector<int>& rows,
                     const DropoutPlan& drop) {
    std::vector<std::vector<int>> framed(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      framed[i] = data.framed[static_cast<std::size_t>(rows[i])];
    }
    return autoencoder_teacher_batch(tape, p, framed, drop);
  };
}

// Raw alignment distances on the current parameters, independent of the
// regularizer switches.
std::pair<double, double> measure_alignment(const CaptionerParams& cap,
                                            const TranslatorParams& mt,
                                            const AutoencoderParams& ae,
                                            const SharedVocabMap& pivot_map,
                                            const SharedVocabMap& target_map,
                                            const RegConfig& reg) {
  Tape tape(false);
  const double rp = pivot_align_reg(tape, cap, mt, pivot_map, reg)->data[0];
  const double rt = target_align_reg(tape, mt, ae, target_map, reg)->data[0];
  return {rp, rt};
}

}  // namespace

std::vector<std::vector<int>> encode_corpus(
    const Vocab& vocab, const std::vector<TokenSeq>& sentences) {
  std::vector<std::vector<int>> out;
  out.reserve(sentences.size());
  for (const TokenSeq& s : sentences) out.push_back(vocab.encode(s));
  return out;
}

VocabBundle build_vocabularies(const SynthCorpora& corpora, int min_freq) {
  VocabBundle vb;
  vb.cap = Vocab::build(corpora.cap_pivot, min_freq);
  vb.ae = Vocab::build(corpora.ae_tgt, min_freq);

  std::vector<TokenSeq> src_union = corpora.mt_src;
  src_union.insert(src_union.end(), corpora.cap_pivot.begin(),
                   corpora.cap_pivot.end());
  vb.mt_src = Vocab::build(src_union, min_freq);

  std::vector<TokenSeq> tgt_union = corpora.mt_tgt;
  tgt_union.insert(tgt_union.end(), corpora.ae_tgt.begin(),
                   corpora.ae_tgt.end());
  vb.mt_tgt = Vocab::build(tgt_union, min_freq);
  return vb;
}

Checkpoint train_state_checkpoint(const ParamList& params,
                                  const TrainState& state,
                                  std::uint64_t config_hash) {
  const std::size_t n = param_count(params);
  if (state.current_params.size() != n || state.adam_m.size() != n ||
      state.adam_v.size() != n || state.best_params.size() != n) {
    throw Error("trainer: state does not match the parameter list");
  }
  Checkpoint ckpt;
  ckpt.config_hash = config_hash;
  ckpt.step = state.steps_done;
  std::size_t off = 0;
  for (const NamedParam& p : params) {
    CheckpointEntry e;
    e.name = p.name;
    e.shape = p.tensor->shape;
    e.data.assign(
        state.current_params.begin() + static_cast<std::ptrdiff_t>(off),
        state.current_params.begin() +
            static_cast<std::ptrdiff_t>(off + p.tensor->size()));
    ckpt.entries.push_back(std::move(e));
    off += p.tensor->size();
  }
  const int ni = static_cast<int>(n);
  ckpt.entries.push_back({"trainer.adam_m", {ni}, state.adam_m});
  ckpt.entries.push_back({"trainer.adam_v", {ni}, state.adam_v});
  ckpt.entries.push_back({"trainer.best_params", {ni}, state.best_params});
  ckpt.entries.push_back(
      {"trainer.scalars",
       {9},
       {static_cast<double>(state.next_epoch),
        static_cast<double>(state.steps_done), state.best_val,
        static_cast<double>(state.best_epoch),
        static_cast<double>(state.bad_epochs),
        state.stopped ? 1.0 : 0.0, state.r_pivot_start,
        state.r_target_start, static_cast<double>(state.adam_steps)}});
  return ckpt;
}

TrainState train_state_from_checkpoint(const Checkpoint& ckpt,
                                       const ParamList& params) {
  apply_checkpoint(ckpt, params);
  const std::size_t n = param_count(params);
  TrainState state;
  for (const char* name :
       {"trainer.adam_m", "trainer.adam_v", "trainer.best_params",
        "trainer.scalars"}) {
    if (ckpt.find(name) == nullptr) {
      throw Error("checkpoint has no entry for " + std::string(name));
    }
  }
  state.adam_m = ckpt.find("trainer.adam_m")->data;
  state.adam_v = ckpt.find("trainer.adam_v")->data;
  state.best_params = ckpt.find("trainer.best_params")->data;
  if (state.adam_m.size() != n || state.adam_v.size() != n ||
      state.best_params.size() != n) {
    throw Error("trainer: state does not match the parameter list");
  }
  const std::vector<double>& s = ckpt.find("trainer.scalars")->data;
  if (s.size() != 9) throw Error("trainer: malformed state scalars");
  state.next_epoch = static_cast<int>(s[0]);
  state.steps_done = static_cast<long>(s[1]);
  state.best_val = s[2];
  state.best_epoch = static_cast<int>(s[3]);
  state.bad_epochs = static_cast<int>(s[4]);
  state.stopped = s[5] != 0.0;
  state.r_pivot_start = s[6];
  state.r_target_start = s[7];
  state.adam_steps = static_cast<long>(s[8]);
  state.current_params = flatten(params);
  return state;
}

TrainOutcome pretrain_captioner(CaptionerParams& p, const CaptionSet& data,
                                const TrainOptions& opt, std::uint64_t seed,
                                TrainState* state) {
  if (data.feats == nullptr ||
      data.feats->rows() != static_cast<int>(data.framed.size())) {
    throw Error("trainer: caption features and sentences disagree");
  }
  return run_pretrain(captioner_param_list(p), captioner_batches(p, data),
                      static_cast<int>(data.framed.size()), opt, seed, state);
}

TrainOutcome pretrain_translator(TranslatorParams& p, const ParallelSet& data,
                                 const TrainOptions& opt, std::uint64_t seed,
                                 TrainState* state) {
  if (data.src.size() != data.tgt.size()) {
    throw Error("trainer: parallel corpus sides disagree");
  }
  return run_pretrain(translator_param_list(p), translator_batches(p, data),
                      static_cast<int>(data.src.size()), opt, seed, state);
}

TrainOutcome pretrain_autoencoder(AutoencoderParams& p, const TextSet& data,
                                  const TrainOptions& opt, std::uint64_t seed,
                                  TrainState* state) {
  return run_pretrain(autoencoder_param_list(p), autoencoder_batches(p, data),
                      static_cast<int>(data.framed.size()), opt, seed, state);
}

TrainOutcome joint_train(CaptionerParams& cap, TranslatorParams& mt,
                         AutoencoderParams& ae, const JointCorpora& data,
                         const SharedVocabMap& pivot_map,
                         const SharedVocabMap& target_map,
                         const TrainOptions& opt, const RegConfig& reg,
                         std::uint64_t seed, TrainState* state) {
  if (data.captions.feats == nullptr ||
      data.captions.feats->rows() !=
          static_cast<int>(data.captions.framed.size())) {
    throw Error("trainer: caption features and sentences disagree");
  }
  if (data.parallel.src.size() != data.parallel.tgt.size()) {
    throw Error("trainer: parallel corpus sides disagree");
  }
  if (data.captions.framed.empty() || data.parallel.src.empty() ||
      data.mono.framed.empty()) {
    throw Error("trainer: empty corpus");
  }

  ParamList params = captioner_param_list(cap);
  {
    ParamList more = translator_param_list(mt);
    params.insert(params.end(), more.begin(), more.end());
    more = autoencoder_param_list(ae);
    params.insert(params.end(), more.begin(), more.end());
  }

  TrainState local;
  TrainState* st = state ? state : &local;

  const BatchForward cap_fwd = captioner_batches(cap, data.captions);
  const BatchForward mt_fwd = translator_batches(mt, data.parallel);
  const BatchForward ae_fwd = autoencoder_batches(ae, data.mono);

  const SplitRng val_rng = SplitRng(seed).split("val-split");
  const IndexSplit cap_split =
      split_indices(static_cast<int>(data.captions.framed.size()),
                    opt.val_fraction, val_rng.split("captions"));
  const IndexSplit mt_split =
      split_indices(static_cast<int>(data.parallel.src.size()),
                    opt.val_fraction, val_rng.split("parallel"));
  const IndexSplit ae_split =
      split_indices(static_cast<int>(data.mono.framed.size()),
                    opt.val_fraction, val_rng.split("mono"));

  const int largest = std::max(
      {static_cast<int>(cap_split.train.size()),
       static_cast<int>(mt_split.train.size()),
       static_cast<int>(ae_split.train.size())});
  const int steps = ceil_div(largest, opt.batch);
  const std::size_t need =
      static_cast<std::size_t>(steps) * static_cast<std::size_t>(opt.batch);

  std::vector<int> cap_order, mt_order, ae_order;
  auto slice = [&](const std::vector<int>& order, int s) {
    return std::vector<int>(
        order.begin() + static_cast<std::ptrdiff_t>(s) * opt.batch,
        order.begin() + static_cast<std::ptrdiff_t>(s + 1) * opt.batch);
  };

  DriverHooks hooks;
  hooks.steps_per_epoch = steps;
  hooks.begin_epoch = [&](int e) {
    const SplitRng er = epoch_rng(seed, e);
    cap_order = epoch_order(cap_split.train, need, er.split("cap-order"));
    mt_order = epoch_order(mt_split.train, need, er.split("mt-order"));
    ae_order = epoch_order(ae_split.train, need, er.split("ae-order"));
  };
  hooks.step = [&](Tape& tape, int s, SplitRng& drop_rng) {
    const DropoutPlan drop{opt.dropout, true, &drop_rng};
    const TeacherBatch tb_cap = cap_fwd(tape, slice(cap_order, s), drop);
    const TeacherBatch tb_mt = mt_fwd(tape, slice(mt_order, s), drop);
    const TeacherBatch tb_ae = ae_fwd(tape, slice(ae_order, s), drop);
    JointLossResult jl = joint_loss(tape, cap, mt, ae, tb_cap, tb_mt, tb_ae,
                                    pivot_map, target_map, reg);
    const JointLossBreakdown& b = jl.breakdown;
    std::string suffix = "l_ix=" + format_double(b.l_ix) +
                         " l_xy=" + format_double(b.l_xy) +
                         " l_yy=" + format_double(b.l_yy) +
                         " r_pivot=" + format_double(b.r_pivot) +
                         " r_target=" + format_double(b.r_target) +
                         " total=" + format_double(b.total);
    return std::make_pair(jl.total, std::move(suffix));
  };
  hooks.has_validation =
      !cap_split.val.empty() || !mt_split.val.empty() || !ae_split.val.empty();
  hooks.validation = [&]() {
    double sum = 0.0;
    if (!cap_split.val.empty())
      sum += corpus_xe(cap_fwd, cap_split.val, opt.batch);
    if (!mt_split.val.empty())
      sum += corpus_xe(mt_fwd, mt_split.val, opt.batch);
    if (!ae_split.val.empty())
      sum += corpus_xe(ae_fwd, ae_split.val, opt.batch);
    return sum;
  };
  hooks.epoch_extra = [&]() {
    auto [rp, rt] = measure_alignment(cap, mt, ae, pivot_map, target_map, reg);
    return "r_pivot=" + format_double(rp) +
           " r_target=" + format_double(rt) + " ";
  };

  if (st->next_epoch == 0) {
    auto [rp, rt] = measure_alignment(cap, mt, ae, pivot_map, target_map, reg);
    st->r_pivot_start = rp;
    st->r_target_start = rt;
  }

  TrainOutcome out = run_driver(params, opt, seed, st, hooks);
  auto [rp_end, rt_end] =
      measure_alignment(cap, mt, ae, pivot_map, target_map, reg);
  out.r_pivot_start = st->r_pivot_start;
  out.r_target_start = st->r_target_start;
  out.r_pivot_end = rp_end;
  out.r_target_end = rt_end;
  return out;
}

EvalReport evaluate_pipeline(const CaptionerParams& cap, const Vocab& cap_vocab,
                             const TranslatorParams& mt,
                             const Vocab& mt_src_vocab,
                             const Vocab& mt_tgt_vocab, const TensorPtr& feats,
                             const std::vector<std::vector<TokenSeq>>& refs,
                             const BeamConfig& pivot_cfg,
                             const BeamConfig& target_cfg) {
  if (feats == nullptr || feats->rank() != 2) {
    throw Error("evaluate: features must be a [rows x dim] matrix");
  }
  const int n = feats->rows();
  if (n < 1) throw Error("evaluate: empty evaluation set");
  if (static_cast<int>(refs.size()) != n) {
    throw Error("evaluate: " + std::to_string(refs.size()) +
                " reference items for " + std::to_string(n) + " features");
  }

  EvalReport report;
  const int dim = feats->cols();
  for (int i = 0; i < n; ++i) {
    TensorPtr feat = make_tensor({dim});
    std::copy_n(feats->data.begin() + static_cast<std::ptrdiff_t>(i) * dim,
                dim, feat->data.begin());
    TwoStageResult r = two_stage_caption(cap, cap_vocab, mt, mt_src_vocab,
                                         feat, pivot_cfg, target_cfg);
    report.pivot.push_back(cap_vocab.decode(r.pivot.ids));
    report.target.push_back(mt_tgt_vocab.decode(r.target.ids));
  }
  report.bleu = corpus_bleu(report.target, refs, 4);
  report.cider = cider(report.target, refs, 4);
  if (n >= 2) report.self_bleu = self_bleu(report.target, 5);
  return report;
}

}  // namespace pivotcap
