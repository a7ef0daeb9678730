#include "doctest.h"

#include <cmath>
#include <vector>

#include "pivotcap/error.hpp"
#include "pivotcap/gradcheck.hpp"
#include "pivotcap/models.hpp"
#include "pivotcap/objectives.hpp"
#include "pivotcap/vocab.hpp"

using namespace pivotcap;

namespace {

ModelDims tiny_dims() {
  ModelDims d;
  d.embed = d.hidden = d.attn = 4;
  d.feat = 3;
  return d;
}

Vocab vocab_of(const std::vector<std::string>& words) {
  std::vector<std::vector<std::string>> corpus;
  corpus.push_back(words);
  return Vocab::build(corpus, 1);
}

struct JointFixture {
  CaptionerParams cap;
  TranslatorParams mt;
  AutoencoderParams ae;
  TensorPtr feats;
  std::vector<std::vector<int>> cap_seqs, src_seqs, tgt_seqs, ae_seqs;
  SharedVocabMap pivot_map, target_map;

  explicit JointFixture(SplitRng& rng, int v = 9, ModelDims dims = tiny_dims())
      : cap(make_captioner(v, dims, rng)),
        mt(make_translator(v, v, dims, rng)),
        ae(make_autoencoder(v, dims, rng)) {
    feats = make_tensor({2, dims.feat});
    for (auto& x : feats->data) x = rng.uniform(-1.0, 1.0);
    cap_seqs = {{kBos, 4, 5, kEos}, {kBos, 6, kEos}};
    src_seqs = {{kBos, 7, 8, kEos}, {kBos, 5, kEos}};
    tgt_seqs = {{kBos, 6, 4, kEos}, {kBos, 8, kEos}};
    ae_seqs = {{kBos, 5, 7, kEos}, {kBos, 4, kEos}};
    for (int i = kNumReserved; i < v; ++i) {
      pivot_map.pairs.emplace_back(i, i);
      target_map.pairs.emplace_back(i, i);
    }
  }

  JointLossResult run(Tape& tape, const RegConfig& reg) {
    auto cb = captioner_teacher_batch(tape, cap, feats, cap_seqs);
    auto mb = translator_teacher_batch(tape, mt, src_seqs, tgt_seqs);
    auto ab = autoencoder_teacher_batch(tape, ae, ae_seqs);
    return joint_loss(tape, cap, mt, ae, cb, mb, ab, pivot_map, target_map,
                      reg);
  }

  ParamList all_params() {
    ParamList all = captioner_param_list(cap);
    for (auto& p : translator_param_list(mt)) all.push_back(p);
    for (auto& p : autoencoder_param_list(ae)) all.push_back(p);
    return all;
  }
};

}  // namespace

TEST_CASE("xe of uniform logits is ln V") {
  Tape tape;
  auto logits = make_tensor({3, 4}, 0.0);
  auto loss = xe_loss(tape, logits, {0, 1, 2}, {1, 1, 1});
  CHECK(loss->data[0] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("xe hand value on a two-step example") {
  Tape tape;
  auto logits = make_tensor({2, 2});
  logits->at(0, 0) = 1.0;
  logits->at(1, 1) = 1.0;
  auto loss = xe_loss(tape, logits, {0, 1}, {1, 1});
  const double expected = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
  CHECK(loss->data[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("xe ignores masked rows") {
  Tape tape;
  auto logits = make_tensor({2, 3});
  logits->at(0, 0) = 2.0;
  logits->at(1, 2) = 50.0;  // would dominate if not masked
  auto full = xe_loss(tape, logits, {0, 0}, {1, 0});
  auto only = xe_loss(tape, tape.slice_rows(logits, 0, 1), {0}, {1});
  CHECK(full->data[0] == doctest::Approx(only->data[0]).epsilon(1e-12));
}

TEST_CASE("xe with everything masked is an error") {
  Tape tape;
  auto logits = make_tensor({2, 3});
  CHECK_THROWS_AS(xe_loss(tape, logits, {0, 1}, {0, 0}), Error);
}

TEST_CASE("xe approaches zero when the target takes all the mass") {
  Tape tape;
  auto logits = make_tensor({1, 3});
  logits->at(0, 1) = 40.0;
  auto loss = xe_loss(tape, logits, {1}, {1});
  CHECK(loss->data[0] < 1e-12);
}

TEST_CASE("alignment distance of a 3-4-5 row pair is five") {
  Tape tape;
  auto a = make_param({2, 2}, {3.0, 4.0, 1.0, 1.0});
  auto b = make_param({1, 2}, {0.0, 0.0});
  SharedVocabMap map;
  map.pairs.emplace_back(0, 0);
  auto r = embed_align_reg(tape, a, b, map, 0.0);
  CHECK(r->data[0] == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("alignment of identical rows is at most sqrt(eps) per pair") {
  Tape tape;
  auto a = make_param({3, 2}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  auto b = make_param({3, 2}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  SharedVocabMap map;
  for (int i = 0; i < 3; ++i) map.pairs.emplace_back(i, i);
  auto r = embed_align_reg(tape, a, b, map, 1e-12);
  CHECK(r->data[0] <= 3.0 * std::sqrt(1e-12) + 1e-15);
  CHECK(r->data[0] >= 0.0);
}

TEST_CASE("empty map contributes a constant zero") {
  Tape tape;
  auto a = make_param({2, 2}, {1.0, 2.0, 3.0, 4.0});
  auto b = make_param({2, 2}, {0.0, 0.0, 0.0, 0.0});
  auto r = embed_align_reg(tape, a, b, SharedVocabMap{}, 1e-12);
  CHECK(r->data[0] == 0.0);
  CHECK_FALSE(r->requires_grad);
}

TEST_CASE("gradient reaches only the trainable side") {
  Tape tape;
  auto train = make_param({2, 3}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  auto frozen = make_param({2, 3}, {0.5, 0.5, 0.5, 2.0, 2.0, 2.0});
  SharedVocabMap map;
  map.pairs.emplace_back(0, 1);
  map.pairs.emplace_back(1, 0);
  auto r = embed_align_reg(tape, train, frozen, map, 1e-12);
  tape.backward(r);
  REQUIRE_FALSE(train->grad.empty());
  double train_norm = 0.0;
  for (double g : train->grad) train_norm += g * g;
  CHECK(train_norm > 1e-6);
  for (double g : frozen->grad) CHECK(g == 0.0);
}

TEST_CASE("alignment regularizer passes a finite-difference check") {
  SplitRng rng(201);
  auto train = make_param({4, 3});
  auto frozen = make_param({4, 3});
  for (auto& v : train->data) v = rng.uniform(-1.0, 1.0);
  for (auto& v : frozen->data) v = rng.uniform(-1.0, 1.0);
  SharedVocabMap map;
  map.pairs.emplace_back(0, 2);
  map.pairs.emplace_back(3, 1);
  const double err = finite_diff_check(
      [&](Tape& t) {
        return embed_align_reg(t, train, frozen, map, 1e-12);
      },
      {train});
  CHECK(err < 1e-7);
}

TEST_CASE("shared vocab map pairs content tokens by surface") {
  Vocab a = vocab_of({"red", "dog", "runs", "red", "dog", "red"});
  Vocab b = vocab_of({"dog", "blue", "runs", "dog", "blue", "blue", "dog"});
  auto map = build_shared_vocab_map(a, b);
  REQUIRE(map.pairs.size() == 2);
  for (const auto& [ia, ib] : map.pairs) {
    CHECK(ia >= kNumReserved);
    CHECK(ib >= kNumReserved);
    CHECK(a.token(ia) == b.token(ib));
  }
}

TEST_CASE("joint loss breakdown identity holds exactly") {
  SplitRng rng(202);
  JointFixture fx(rng);
  RegConfig reg;
  reg.lambda = 1.7;
  Tape tape;
  auto res = fx.run(tape, reg);
  const auto& b = res.breakdown;
  CHECK(b.total == ((b.l_ix + b.l_xy) + b.l_yy) +
                       reg.lambda * (b.r_pivot + b.r_target));
  CHECK(b.total == res.total->data[0]);
  CHECK(b.r_pivot >= 0.0);
  CHECK(b.r_target >= 0.0);
}

TEST_CASE("lambda scales only the regularizer part") {
  SplitRng rng(203);
  JointFixture fx(rng);
  Tape t0, t1, t2;
  RegConfig reg;
  reg.lambda = 0.0;
  auto r0 = fx.run(t0, reg);
  reg.lambda = 1.0;
  auto r1 = fx.run(t1, reg);
  reg.lambda = 2.0;
  auto r2 = fx.run(t2, reg);

  const double xe = r0.breakdown.total;
  CHECK(xe == doctest::Approx(r0.breakdown.l_ix + r0.breakdown.l_xy +
                              r0.breakdown.l_yy)
                  .epsilon(1e-12));
  CHECK(r2.breakdown.total - xe ==
        doctest::Approx(2.0 * (r1.breakdown.total - xe)).epsilon(1e-12));
}

TEST_CASE("pipeline loss is the joint loss at lambda zero minus the ae term") {
  SplitRng rng(204);
  JointFixture fx(rng);
  RegConfig reg;
  reg.lambda = 0.0;
  Tape tape;
  auto joint = fx.run(tape, reg);
  Tape tape2;
  auto cb = captioner_teacher_batch(tape2, fx.cap, fx.feats, fx.cap_seqs);
  auto mb = translator_teacher_batch(tape2, fx.mt, fx.src_seqs, fx.tgt_seqs);
  auto pipe = pipeline_loss(tape2, cb, mb);
  CHECK(pipe->data[0] == doctest::Approx(joint.breakdown.total -
                                         joint.breakdown.l_yy)
                             .epsilon(1e-12));
}

TEST_CASE("pipeline loss of zero models is the sum of uniform entropies") {
  SplitRng rng(205);
  JointFixture fx(rng, 9);
  for (const auto& p : fx.all_params())
    for (auto& v : p.tensor->data) v = 0.0;
  Tape tape;
  auto cb = captioner_teacher_batch(tape, fx.cap, fx.feats, fx.cap_seqs);
  auto mb = translator_teacher_batch(tape, fx.mt, fx.src_seqs, fx.tgt_seqs);
  auto pipe = pipeline_loss(tape, cb, mb);
  CHECK(pipe->data[0] ==
        doctest::Approx(2.0 * std::log(9.0)).epsilon(1e-12));
}

// The frozen sides of the regularizers (the captioner and autoencoder
// output projections under the default sites) stay out of the perturbed
// list: the loss genuinely depends on them, but the gradient is stopped by
// design, so displacing them moves the loss without moving the analytic
// gradient. Their stopped-gradient behavior has its own test above.
// Fresh glorot attention sits at a near-uniform-softmax point where the
// score-path gradients are degenerately small relative to the rest of the
// network; scaling those parameters moves the check to a generic point.
TEST_CASE("joint loss differentiates through every parameter") {
  SplitRng rng(206);
  ModelDims dims;
  dims.embed = dims.hidden = dims.attn = 8;
  dims.feat = 8;
  JointFixture fx(rng, 20, dims);
  for (auto& x : fx.mt.attn.ws->data) x *= 3.0;
  for (auto& x : fx.mt.attn.wh->data) x *= 3.0;
  for (auto& x : fx.mt.attn.v->data) x *= 3.0;
  RegConfig reg;
  reg.lambda = 0.8;
  std::vector<TensorPtr> perturbed;
  for (const auto& np : fx.all_params())
    if (np.name != "cap.out_proj.w" && np.name != "ae.out_proj.w")
      perturbed.push_back(np.tensor);
  const double err = finite_diff_check(
      [&](Tape& t) { return fx.run(t, reg).total; }, perturbed);
  CHECK(err < 1e-4);
}

TEST_CASE("regularizer site switch changes the tied matrices") {
  SplitRng rng(207);
  JointFixture fx(rng);
  RegConfig out_site;
  RegConfig in_site;
  in_site.pivot_site = TieSite::kInputEmbedding;
  in_site.target_site = TieSite::kInputEmbedding;
  Tape t1, t2;
  auto a = pivot_align_reg(t1, fx.cap, fx.mt, fx.pivot_map, out_site);
  auto b = pivot_align_reg(t1, fx.cap, fx.mt, fx.pivot_map, in_site);
  CHECK(a->data[0] != b->data[0]);
  auto c = target_align_reg(t2, fx.mt, fx.ae, fx.target_map, out_site);
  auto d = target_align_reg(t2, fx.mt, fx.ae, fx.target_map, in_site);
  CHECK(c->data[0] != d->data[0]);
}

TEST_CASE("joint loss stop-gradient routing") {
  SplitRng rng(208);
  JointFixture fx(rng);
  RegConfig reg;
  Tape tape;
  // Regularizers only: scale the xe terms away by zeroing their weight in
  // a fresh loss built from the regularizer ops alone.
  auto rp = pivot_align_reg(tape, fx.cap, fx.mt, fx.pivot_map, reg);
  auto rt = target_align_reg(tape, fx.mt, fx.ae, fx.target_map, reg);
  auto total = tape.add(rp, rt);
  tape.backward(total);

  // Trainable sides got gradient.
  REQUIRE_FALSE(fx.mt.enc_emb->grad.empty());
  REQUIRE_FALSE(fx.mt.out_proj.w->grad.empty());
  double n = 0.0;
  for (double g : fx.mt.enc_emb->grad) n += g * g;
  CHECK(n > 1e-8);

  // Frozen sides stayed untouched: no gradient buffer or all zeros.
  for (const auto& t : {fx.cap.out_proj.w, fx.ae.out_proj.w})
    for (double g : t->grad) CHECK(g == 0.0);
}
