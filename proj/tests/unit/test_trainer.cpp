#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "pivotcap/checkpoint.hpp"
#include "pivotcap/error.hpp"
#include "pivotcap/objectives.hpp"
#include "pivotcap/rng.hpp"
#include "pivotcap/synth.hpp"
#include "pivotcap/trainer.hpp"

using namespace pivotcap;

namespace {

ModelDims tiny_dims() {
  ModelDims dims;
  dims.embed = 8;
  dims.hidden = 8;
  dims.attn = 8;
  dims.feat = 8;
  return dims;
}

SynthWorldConfig small_world() {
  SynthWorldConfig cfg;
  cfg.n_subjects = 5;
  cfg.n_verbs = 3;
  cfg.n_objects = 4;
  cfg.n_settings = 2;
  cfg.feat_dim = 8;
  cfg.noise_sigma = 0.05;
  cfg.n_caption_pairs = 60;
  cfg.n_parallel_pairs = 120;
  cfg.n_target_captions = 50;
  cfg.n_eval_scenes = 12;
  cfg.n_eval_refs = 5;
  cfg.vocab_min_freq = 1;
  return cfg;
}

struct Fixture {
  SynthCorpora corpora;
  VocabBundle vocabs;
  JointCorpora data;
  SharedVocabMap pivot_map, target_map;
};

Fixture make_fixture(std::uint64_t seed) {
  Fixture f;
  f.corpora = gen_corpora(small_world(), seed);
  f.vocabs = build_vocabularies(f.corpora, 1);
  f.data.captions.feats = f.corpora.cap_feats;
  f.data.captions.framed = encode_corpus(f.vocabs.cap, f.corpora.cap_pivot);
  f.data.parallel.src = encode_corpus(f.vocabs.mt_src, f.corpora.mt_src);
  f.data.parallel.tgt = encode_corpus(f.vocabs.mt_tgt, f.corpora.mt_tgt);
  f.data.mono.framed = encode_corpus(f.vocabs.ae, f.corpora.ae_tgt);
  f.pivot_map = build_shared_vocab_map(f.vocabs.mt_src, f.vocabs.cap);
  f.target_map = build_shared_vocab_map(f.vocabs.mt_tgt, f.vocabs.ae);
  return f;
}

TrainOptions fast_options() {
  TrainOptions opt;
  opt.lr = 3e-3;
  opt.batch = 32;
  opt.epochs = 4;
  opt.patience = 10;
  opt.val_fraction = 0.1;
  return opt;
}

std::vector<double> flatten(const ParamList& params) {
  std::vector<double> flat;
  for (const NamedParam& p : params) {
    flat.insert(flat.end(), p.tensor->data.begin(), p.tensor->data.end());
  }
  return flat;
}

// 16 distinct noiseless scenes, all phrased with the same template so
// the only uncertainty left is which content words the feature selects.
CaptionSet memorization_set(const SynthWorldConfig& base, Vocab* vocab) {
  SynthWorldConfig cfg = base;
  cfg.noise_sigma = 0.0;
  SynthWorld world(cfg);
  SplitRng rng(5);
  std::vector<TokenSeq> captions;
  TensorPtr feats = make_tensor({16, cfg.feat_dim});
  for (int i = 0; i < 16; ++i) {
    const Scene scene = world.scene_from_id(i * 3 + 1);
    const TensorPtr f = scene_to_feature(scene, cfg, rng);
    std::copy(f->data.begin(), f->data.end(),
              feats->data.begin() + static_cast<std::ptrdiff_t>(i) * cfg.feat_dim);
    captions.push_back(world.caption_sentence(scene, 0, true));
  }
  *vocab = Vocab::build(captions, 1);
  CaptionSet set;
  set.feats = feats;
  set.framed = encode_corpus(*vocab, captions);
  return set;
}

}  // namespace

TEST_CASE("a 16-pair captioner memorizes within 200 steps") {
  SynthWorldConfig cfg = small_world();
  cfg.feat_dim = 64;
  Vocab vocab;
  CaptionSet data = memorization_set(cfg, &vocab);

  // At lr 4e-4 an Adam coordinate moves at most ~lr per step, so the
  // logit separation reachable in 200 steps grows with the hidden width.
  // 128 clears the 0.1 target with about a 3x margin.
  ModelDims dims;
  dims.embed = 128;
  dims.hidden = 128;
  dims.attn = 128;
  dims.feat = 64;
  SplitRng rng = SplitRng(11).split("init");
  CaptionerParams cap = make_captioner(vocab.size(), dims, rng);

  TrainOptions opt;
  opt.lr = 4e-4;
  opt.batch = 100;
  opt.epochs = 200;
  opt.patience = 200;
  opt.val_fraction = 0.0;

  TrainOutcome out = pretrain_captioner(cap, data, opt, 21);
  REQUIRE(out.step_loss.size() <= 200);
  const double lowest =
      *std::min_element(out.step_loss.begin(), out.step_loss.end());
  CHECK(lowest < 0.1);
  CHECK_FALSE(out.diverged);
}

TEST_CASE("pretraining selects the best validation epoch") {
  Fixture f = make_fixture(31);
  TrainOptions opt = fast_options();
  opt.epochs = 6;

  SplitRng rng = SplitRng(31).split("init");
  TranslatorParams mt = make_translator(f.vocabs.mt_src.size(),
                                        f.vocabs.mt_tgt.size(), tiny_dims(),
                                        rng);
  TrainOutcome out = pretrain_translator(mt, f.data.parallel, opt, 77);

  REQUIRE(out.epochs_run > 0);
  REQUIRE(out.epoch_val.size() == static_cast<std::size_t>(out.epochs_run));
  const double lowest =
      *std::min_element(out.epoch_val.begin(), out.epoch_val.end());
  CHECK(out.best_val == lowest);
  CHECK(out.best_epoch >= 0);
  CHECK(out.epoch_val[static_cast<std::size_t>(out.best_epoch)] ==
        out.best_val);
}

TEST_CASE("identical runs produce identical logs, different seeds differ") {
  Fixture f = make_fixture(32);
  TrainOptions opt = fast_options();
  opt.epochs = 2;

  auto run = [&](std::uint64_t init_seed, std::uint64_t train_seed) {
    SplitRng rng = SplitRng(init_seed).split("init");
    AutoencoderParams ae =
        make_autoencoder(f.vocabs.ae.size(), tiny_dims(), rng);
    return pretrain_autoencoder(ae, f.data.mono, opt, train_seed);
  };
  TrainOutcome a = run(1, 9);
  TrainOutcome b = run(1, 9);
  TrainOutcome c = run(1, 10);
  CHECK(a.log == b.log);
  CHECK(a.step_loss == b.step_loss);
  CHECK(a.step_loss != c.step_loss);
}

TEST_CASE("a zero learning rate changes nothing") {
  Fixture f = make_fixture(33);
  SplitRng rng = SplitRng(33).split("init");
  CaptionerParams cap = make_captioner(f.vocabs.cap.size(), tiny_dims(), rng);
  TranslatorParams mt = make_translator(f.vocabs.mt_src.size(),
                                        f.vocabs.mt_tgt.size(), tiny_dims(),
                                        rng);
  AutoencoderParams ae = make_autoencoder(f.vocabs.ae.size(), tiny_dims(), rng);

  ParamList params = captioner_param_list(cap);
  {
    ParamList more = translator_param_list(mt);
    params.insert(params.end(), more.begin(), more.end());
    more = autoencoder_param_list(ae);
    params.insert(params.end(), more.begin(), more.end());
  }
  const std::vector<double> before = flatten(params);

  TrainOptions opt = fast_options();
  opt.lr = 0.0;
  opt.epochs = 1;
  RegConfig reg;
  joint_train(cap, mt, ae, f.data, f.pivot_map, f.target_map, opt, reg, 3);
  CHECK(flatten(params) == before);
}

TEST_CASE("training resumes bitwise from a state checkpoint") {
  Fixture f = make_fixture(34);
  TrainOptions opt = fast_options();
  opt.epochs = 6;

  auto fresh = [&]() {
    SplitRng rng = SplitRng(34).split("init");
    return make_captioner(f.vocabs.cap.size(), tiny_dims(), rng);
  };

  CaptionerParams straight = fresh();
  TrainOutcome full = pretrain_captioner(straight, f.data.captions, opt, 55);

  CaptionerParams resumed = fresh();
  TrainOptions first_leg = opt;
  first_leg.epochs = 3;
  TrainState state;
  pretrain_captioner(resumed, f.data.captions, first_leg, 55, &state);

  const std::string path = "trainer_resume.ckpt";
  save_checkpoint(path, train_state_checkpoint(
                            captioner_param_list(resumed), state, 1));

  CaptionerParams continued = fresh();
  TrainState loaded = train_state_from_checkpoint(
      load_checkpoint(path), captioner_param_list(continued));
  CHECK(loaded.next_epoch == 3);
  TrainOutcome rest =
      pretrain_captioner(continued, f.data.captions, opt, 55, &loaded);

  CHECK(flatten(captioner_param_list(continued)) ==
        flatten(captioner_param_list(straight)));
  CHECK(rest.best_val == full.best_val);
  CHECK(rest.best_epoch == full.best_epoch);
  std::remove(path.c_str());
}

TEST_CASE("divergent training aborts with the last good parameters") {
  Fixture f = make_fixture(35);
  SplitRng rng = SplitRng(35).split("init");
  CaptionerParams cap = make_captioner(f.vocabs.cap.size(), tiny_dims(), rng);
  const std::vector<double> before = flatten(captioner_param_list(cap));

  TrainOptions opt = fast_options();
  // Large enough that the second step's forward pass overflows.
  opt.lr = 1e160;
  opt.epochs = 3;
  TrainOutcome out = pretrain_captioner(cap, f.data.captions, opt, 5);

  CHECK(out.diverged);
  bool finite = true;
  for (const NamedParam& p : captioner_param_list(cap)) {
    finite = finite && p.tensor->all_finite();
  }
  CHECK(finite);
  if (out.best_epoch < 0) {
    CHECK(flatten(captioner_param_list(cap)) == before);
  }
  CHECK(out.log.back().find("diverged") != std::string::npos);
}

TEST_CASE("joint training shrinks the alignment distances") {
  Fixture f = make_fixture(36);
  TrainOptions opt = fast_options();
  opt.epochs = 4;

  auto models = [&]() {
    SplitRng rng = SplitRng(36).split("init");
    struct {
      CaptionerParams cap;
      TranslatorParams mt;
      AutoencoderParams ae;
    } m{make_captioner(f.vocabs.cap.size(), tiny_dims(), rng),
        make_translator(f.vocabs.mt_src.size(), f.vocabs.mt_tgt.size(),
                        tiny_dims(), rng),
        make_autoencoder(f.vocabs.ae.size(), tiny_dims(), rng)};
    return m;
  };

  SUBCASE("with the regularizers on") {
    auto m = models();
    RegConfig reg;
    reg.lambda = 1.0;
    TrainOutcome out = joint_train(m.cap, m.mt, m.ae, f.data, f.pivot_map,
                                   f.target_map, opt, reg, 8);
    REQUIRE(out.r_pivot_start > 0);
    REQUIRE(out.r_target_start > 0);
    CHECK(out.r_pivot_end < out.r_pivot_start);
    CHECK(out.r_target_end < out.r_target_start);
    CHECK(out.log.front().find("l_ix=") != std::string::npos);
    CHECK(out.log.front().find("r_pivot=") != std::string::npos);
    CHECK(out.log.front().find("total=") != std::string::npos);
  }

  SUBCASE("lambda zero leaves the distances roughly alone") {
    auto m = models();
    RegConfig reg;
    reg.lambda = 0.0;
    TrainOutcome out = joint_train(m.cap, m.mt, m.ae, f.data, f.pivot_map,
                                   f.target_map, opt, reg, 8);
    const bool both_collapsed =
        out.r_pivot_end < 0.7 * out.r_pivot_start &&
        out.r_target_end < 0.7 * out.r_target_start;
    CHECK_FALSE(both_collapsed);
  }
}

TEST_CASE("evaluate pipeline scores decoded captions against references") {
  Fixture f = make_fixture(37);
  TrainOptions opt = fast_options();
  opt.epochs = 30;

  SplitRng rng = SplitRng(37).split("init");
  CaptionerParams cap = make_captioner(f.vocabs.cap.size(), tiny_dims(), rng);
  TranslatorParams mt = make_translator(f.vocabs.mt_src.size(),
                                        f.vocabs.mt_tgt.size(), tiny_dims(),
                                        rng);
  pretrain_captioner(cap, f.data.captions, opt, 61);
  pretrain_translator(mt, f.data.parallel, opt, 62);

  const BeamConfig pivot_cfg{3, 12};
  const BeamConfig target_cfg{3, 14};
  EvalReport report =
      evaluate_pipeline(cap, f.vocabs.cap, mt, f.vocabs.mt_src,
                        f.vocabs.mt_tgt, f.corpora.eval_feats,
                        f.corpora.eval_refs, pivot_cfg, target_cfg);

  const int n = f.corpora.eval_feats->rows();
  CHECK(report.pivot.size() == static_cast<std::size_t>(n));
  CHECK(report.target.size() == static_cast<std::size_t>(n));
  CHECK(report.bleu.bleu.size() == 4);
  CHECK(report.cider.per_item.size() == static_cast<std::size_t>(n));
  CHECK(report.self_bleu.size() == 4);

  EvalReport again =
      evaluate_pipeline(cap, f.vocabs.cap, mt, f.vocabs.mt_src,
                        f.vocabs.mt_tgt, f.corpora.eval_feats,
                        f.corpora.eval_refs, pivot_cfg, target_cfg);
  CHECK(again.target == report.target);
  CHECK(again.bleu.bleu == report.bleu.bleu);
  CHECK(again.cider.score == report.cider.score);

  SUBCASE("reference count must match the feature rows") {
    auto refs = f.corpora.eval_refs;
    refs.pop_back();
    CHECK_THROWS_AS(
        evaluate_pipeline(cap, f.vocabs.cap, mt, f.vocabs.mt_src,
                          f.vocabs.mt_tgt, f.corpora.eval_feats, refs,
                          pivot_cfg, target_cfg),
        Error);
  }
}

TEST_CASE("the ground-truth bijection scores perfectly on the references") {
  const SynthWorldConfig cfg = small_world();
  SynthCorpora corpora = gen_corpora(cfg, 38);
  SynthWorld world(cfg);

  std::vector<TokenSeq> oracle;
  for (const Scene& scene : corpora.eval_scenes) {
    oracle.push_back(world.to_target(world.caption_sentence(scene, 0, true)));
  }
  BleuResult bleu = corpus_bleu(oracle, corpora.eval_refs, 4);
  CHECK(bleu.bleu[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bleu.bleu[3] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("the vocabulary bundle spans both domains") {
  Fixture f = make_fixture(39);

  for (int id = kNumReserved; id < f.vocabs.cap.size(); ++id) {
    CHECK(f.vocabs.mt_src.contains(f.vocabs.cap.token(id)));
  }
  for (int id = kNumReserved; id < f.vocabs.ae.size(); ++id) {
    CHECK(f.vocabs.mt_tgt.contains(f.vocabs.ae.token(id)));
  }
  CHECK(f.pivot_map.pairs.size() ==
        static_cast<std::size_t>(f.vocabs.cap.size() - kNumReserved));
  CHECK(f.target_map.pairs.size() ==
        static_cast<std::size_t>(f.vocabs.ae.size() - kNumReserved));
}

TEST_CASE("empty corpora are rejected") {
  Fixture f = make_fixture(40);
  SplitRng rng = SplitRng(40).split("init");
  CaptionerParams cap = make_captioner(f.vocabs.cap.size(), tiny_dims(), rng);

  CaptionSet empty;
  empty.feats = f.corpora.cap_feats;
  CHECK_THROWS_AS(pretrain_captioner(cap, empty, fast_options(), 1), Error);
}
