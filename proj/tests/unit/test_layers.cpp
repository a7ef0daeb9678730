#include "doctest.h"

#include <cmath>
#include <vector>

#include "pivotcap/error.hpp"
#include "pivotcap/gradcheck.hpp"
#include "pivotcap/layers.hpp"

using namespace pivotcap;

namespace {

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

TensorPtr randomize(TensorPtr t, SplitRng& rng, double s = 0.8) {
  for (auto& v : t->data) v = rng.uniform(-s, s);
  return t;
}

}  // namespace

TEST_CASE("glorot_uniform respects its bound and its stream") {
  SplitRng a(11), b(11);
  auto w1 = glorot_uniform({6, 4}, 4, 6, a);
  auto w2 = glorot_uniform({6, 4}, 4, 6, b);
  CHECK(w1->data == w2->data);
  const double s = std::sqrt(6.0 / 10.0);
  for (double v : w1->data) {
    CHECK(v < s);
    CHECK(v > -s);
  }
  CHECK(w1->requires_grad);
}

TEST_CASE("make_lstm sets the forget-gate bias slice to one") {
  SplitRng rng(12);
  auto p = make_lstm(3, 4, rng);
  CHECK(p.w->shape == std::vector<int>{16, 7});
  for (int j = 0; j < 16; ++j)
    CHECK(p.b->data[j] == (j >= 4 && j < 8 ? 1.0 : 0.0));
}

TEST_CASE("lstm_step with zero weights and zero input is exactly zero") {
  SplitRng rng(13);
  auto p = make_lstm(2, 3, rng);
  for (auto& v : p.w->data) v = 0.0;  // bias keeps its forget-gate ones
  Tape tape;
  auto x = make_tensor({1, 2}, 0.0);
  auto s = lstm_begin(1, 3);
  auto next = lstm_step(tape, p, s, x);
  for (double v : next.h->data) CHECK(v == 0.0);
  for (double v : next.c->data) CHECK(v == 0.0);
}

TEST_CASE("lstm_step matches the gate equations on a hand example") {
  LSTMCellParams p;
  p.input_dim = 1;
  p.hidden_dim = 1;
  // Rows: input, forget, output, candidate over [x; h].
  p.w = make_param({4, 2}, {1.0, 0.0,
                            0.0, 0.0,
                            0.5, -0.5,
                            2.0, 0.0});
  p.b = make_param({4}, {0.0, 1.0, 0.0, 0.0});

  Tape tape;
  auto x = make_tensor({1, 1}, {0.5});
  LSTMState s{make_tensor({1, 1}, {0.2}), make_tensor({1, 1}, {0.3})};
  auto next = lstm_step(tape, p, s, x);

  const double i = sigmoid_ref(0.5);
  const double f = sigmoid_ref(1.0);
  const double o = sigmoid_ref(0.5 * 0.5 - 0.5 * 0.2);
  const double g = std::tanh(1.0);
  const double c1 = f * 0.3 + i * g;
  const double h1 = o * std::tanh(c1);
  CHECK(next.c->data[0] == doctest::Approx(c1).epsilon(1e-14));
  CHECK(next.h->data[0] == doctest::Approx(h1).epsilon(1e-14));
}

TEST_CASE("lstm_step differentiates through params, state and input") {
  SplitRng rng(14);
  auto p = make_lstm(3, 4, rng);
  auto x = randomize(make_param({2, 3}), rng);
  auto h0 = randomize(make_param({2, 4}), rng);
  auto c0 = randomize(make_param({2, 4}), rng);

  auto build = [&](Tape& t) {
    auto next = lstm_step(t, p, {h0, c0}, x);
    std::vector<double> w(16);
    for (int i = 0; i < 16; ++i) w[i] = 0.2 + 0.15 * i;
    return t.weighted_sum(t.concat_cols(next.h, next.c), w);
  };
  CHECK(finite_diff_check(build, {p.w, p.b, x, h0, c0}) < 1e-6);
}

TEST_CASE("lstm_step_masked carries masked rows through unchanged") {
  SplitRng rng(15);
  auto p = make_lstm(2, 3, rng);
  auto x = randomize(make_param({2, 2}), rng);
  auto h0 = randomize(make_param({2, 3}), rng);
  auto c0 = randomize(make_param({2, 3}), rng);

  Tape tape;
  auto plain = lstm_step(tape, p, {h0, c0}, x);
  auto masked = lstm_step_masked(tape, p, {h0, c0}, x, {1, 0});
  for (int j = 0; j < 3; ++j) {
    CHECK(masked.h->at(0, j) == plain.h->at(0, j));
    CHECK(masked.h->at(1, j) == h0->at(1, j));
    CHECK(masked.c->at(1, j) == c0->at(1, j));
  }

  SUBCASE("all-keep fast path is the plain step") {
    auto kept = lstm_step_masked(tape, p, {h0, c0}, x, {1, 1});
    CHECK(kept.h->data == plain.h->data);
  }

  SUBCASE("mask size must match the batch") {
    CHECK_THROWS_AS(lstm_step_masked(tape, p, {h0, c0}, x, {1}), Error);
  }

  auto build = [&](Tape& t) {
    auto a = lstm_step_masked(t, p, {h0, c0}, x, {0, 1});
    auto b = lstm_step_masked(t, p, a, x, {1, 0});
    std::vector<double> w(6, 1.0);
    w[2] = 2.0;
    return t.weighted_sum(b.h, w);
  };
  CHECK(finite_diff_check(build, {p.w, p.b, x, h0, c0}) < 1e-6);
}

TEST_CASE("attend produces a distribution and a convex context") {
  SplitRng rng(16);
  auto p = make_attention(3, 4, 5, rng);
  auto s = randomize(make_param({3}), rng);
  auto ann = randomize(make_param({6, 4}), rng);
  const std::vector<std::uint8_t> all(6, 1);

  Tape tape;
  auto [ctx, w] = attend(tape, p, s, ann, all);
  CHECK(ctx->shape == std::vector<int>{4});
  CHECK(w->shape == std::vector<int>{6});
  double total = 0.0;
  for (double v : w->data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    total += v;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  for (int k = 0; k < 4; ++k) {
    double want = 0.0;
    for (int j = 0; j < 6; ++j) want += w->data[j] * ann->at(j, k);
    CHECK(ctx->data[k] == doctest::Approx(want).epsilon(1e-12));
  }

  SUBCASE("masked positions get exactly zero weight") {
    auto [c2, w2] = attend(tape, p, s, ann, {1, 0, 1, 0, 1, 0});
    CHECK(w2->data[1] == 0.0);
    CHECK(w2->data[3] == 0.0);
    CHECK(w2->data[5] == 0.0);
    CHECK(w2->data[0] + w2->data[2] + w2->data[4] ==
          doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("a single position takes all the weight") {
    auto one = randomize(make_param({1, 4}), rng);
    auto [c1, w1] = attend(tape, p, s, one, {1});
    CHECK(w1->data[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (int k = 0; k < 4; ++k)
      CHECK(c1->data[k] == doctest::Approx(one->data[k]).epsilon(1e-12));
  }

  SUBCASE("identical annotations attract uniform weights") {
    auto same = make_param({5, 4});
    for (int j = 0; j < 5; ++j)
      for (int k = 0; k < 4; ++k) same->at(j, k) = ann->at(0, k);
    auto [cu, wu] = attend(tape, p, s, same, std::vector<std::uint8_t>(5, 1));
    for (double v : wu->data) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
  }

  SUBCASE("an all-masked input is an error") {
    CHECK_THROWS_AS(attend(tape, p, s, ann, {0, 0, 0, 0, 0, 0}), Error);
  }

  auto build = [&](Tape& t) {
    auto [c2, w2] = attend(t, p, s, ann, all);
    return t.weighted_sum(t.concat_rows({t.reshape(c2, {1, 4})}),
                          {0.4, -0.3, 0.8, 1.2});
  };
  CHECK(finite_diff_check(build, {p.ws, p.wh, p.v, s, ann}) < 1e-6);
}

TEST_CASE("bilstm_encode is symmetric under sequence reversal") {
  SplitRng rng(17);
  auto fwd = make_lstm(3, 2, rng);
  auto bwd = make_lstm(3, 2, rng);
  auto x = randomize(make_param({5, 3}), rng);
  auto xr = make_param({5, 3});
  for (int t = 0; t < 5; ++t)
    for (int j = 0; j < 3; ++j) xr->at(t, j) = x->at(4 - t, j);

  Tape tape;
  auto out = bilstm_encode(tape, fwd, bwd, x);
  auto rev = bilstm_encode(tape, bwd, fwd, xr);
  CHECK(out.annotations->shape == std::vector<int>{5, 4});
  // Position t forward-half equals reversed position M-1-t backward-half.
  for (int t = 0; t < 5; ++t)
    for (int j = 0; j < 2; ++j) {
      CHECK(out.annotations->at(t, j) == rev.annotations->at(4 - t, 2 + j));
      CHECK(out.annotations->at(t, 2 + j) == rev.annotations->at(4 - t, j));
    }
  CHECK(out.fwd_last.h->data == rev.bwd_last.h->data);
  CHECK(out.bwd_last.c->data == rev.fwd_last.c->data);

  auto build = [&](Tape& t) {
    auto enc = bilstm_encode(t, fwd, bwd, x);
    std::vector<double> w(20);
    for (int i = 0; i < 20; ++i) w[i] = 0.1 * (i % 7) - 0.2;
    return t.weighted_sum(enc.annotations, w);
  };
  CHECK(finite_diff_check(build, {fwd.w, fwd.b, bwd.w, bwd.b, x}) < 1e-6);
}

TEST_CASE("dropout_mask scales kept entries and respects the rate") {
  SplitRng rng(18);
  auto m = dropout_mask({100, 100}, 0.3, rng);
  int zeros = 0;
  for (double v : m->data) {
    if (v == 0.0)
      ++zeros;
    else
      CHECK(v == doctest::Approx(1.0 / 0.7));
  }
  CHECK(zeros > 2500);
  CHECK(zeros < 3500);
  CHECK_FALSE(m->requires_grad);

  auto none = dropout_mask({4}, 0.0, rng);
  for (double v : none->data) CHECK(v == 1.0);
  CHECK_THROWS_AS(dropout_mask({2}, 1.0, rng), Error);
  CHECK_THROWS_AS(dropout_mask({2}, -0.1, rng), Error);
}
