#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "pivotcap/error.hpp"
#include "pivotcap/optim.hpp"
#include "pivotcap/tensor.hpp"

using namespace pivotcap;

namespace {

NamedParam param(const char* name, std::vector<double> values) {
  auto t = make_param({static_cast<int>(values.size())}, values);
  return {name, t};
}

void set_grad(const NamedParam& p, std::vector<double> g) {
  p.tensor->ensure_grad();
  p.tensor->grad = std::move(g);
}

}  // namespace

TEST_CASE("global norm counts absent gradients as zero") {
  auto a = param("a", {1.0, 2.0});
  auto b = param("b", {5.0});
  set_grad(a, {3.0, 4.0});
  // b has no gradient buffer at all.
  CHECK(global_grad_norm({a, b}) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("clipping rescales to the ceiling and reports the old norm") {
  auto a = param("a", {0.0, 0.0});
  auto b = param("b", {0.0});
  set_grad(a, {6.0, 8.0});
  set_grad(b, {0.0});
  const double pre = clip_global_norm({a, b}, 5.0);
  CHECK(pre == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(a.tensor->grad[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(a.tensor->grad[1] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(global_grad_norm({a, b}) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("clipping below the ceiling is a no-op") {
  auto a = param("a", {0.0});
  set_grad(a, {2.0});
  const double pre = clip_global_norm({a}, 5.0);
  CHECK(pre == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(a.tensor->grad[0] == 2.0);
}

TEST_CASE("first adam step moves by about lr in magnitude") {
  AdamConfig cfg;
  cfg.lr = 4e-4;
  auto a = param("a", {1.0, -2.0, 0.5});
  Adam opt({a}, cfg);
  set_grad(a, {0.3, -0.7, 1.2});
  opt.step();
  CHECK(opt.steps_taken() == 1);
  // With bias correction, t=1 gives m_hat = g and v_hat = g^2, so the
  // update is lr * g / (|g| + eps) = lr * sign(g) up to eps rounding.
  CHECK(a.tensor->data[0] ==
        doctest::Approx(1.0 - cfg.lr).epsilon(1e-6));
  CHECK(a.tensor->data[1] ==
        doctest::Approx(-2.0 + cfg.lr).epsilon(1e-6));
  CHECK(a.tensor->data[2] ==
        doctest::Approx(0.5 - cfg.lr).epsilon(1e-6));
}

TEST_CASE("constant gradient keeps unit-scaled steps after correction") {
  AdamConfig cfg;
  cfg.lr = 1e-2;
  auto a = param("a", {0.0});
  Adam opt({a}, cfg);
  double prev = 0.0;
  for (int t = 0; t < 3; ++t) {
    set_grad(a, {0.5});
    opt.step();
    const double delta = a.tensor->data[0] - prev;
    CHECK(delta == doctest::Approx(-cfg.lr).epsilon(1e-6));
    prev = a.tensor->data[0];
  }
}

TEST_CASE("zero gradient with weight decay only shrinks the parameter") {
  AdamConfig cfg;
  cfg.lr = 1e-3;
  cfg.weight_decay = 1e-2;
  auto a = param("a", {2.0});
  Adam opt({a}, cfg);
  set_grad(a, {0.0});
  opt.step();
  CHECK(a.tensor->data[0] == doctest::Approx(2.0 * 0.99).epsilon(1e-12));
}

TEST_CASE("adam state survives a save/restore of its raw buffers") {
  AdamConfig cfg;
  cfg.lr = 1e-2;
  auto mk = [&] {
    auto p = param("a", {1.0});
    return p;
  };
  auto a1 = mk();
  auto a2 = mk();
  Adam opt1({a1}, cfg);
  Adam opt2({a2}, cfg);

  set_grad(a1, {0.4});
  opt1.step();
  set_grad(a2, {0.4});
  opt2.step();

  // Transplant opt1's state into a fresh optimizer and check the next
  // step matches opt2 exactly.
  Adam opt3({a1}, cfg);
  opt3.moment1() = opt1.moment1();
  opt3.moment2() = opt1.moment2();
  opt3.set_steps_taken(opt1.steps_taken());

  set_grad(a1, {-0.2});
  opt3.step();
  set_grad(a2, {-0.2});
  opt2.step();
  CHECK(a1.tensor->data[0] == a2.tensor->data[0]);
}

TEST_CASE("non-finite gradient aborts the step naming the parameter") {
  auto a = param("enc.w", {1.0});
  Adam opt({a}, AdamConfig{});
  set_grad(a, {std::numeric_limits<double>::quiet_NaN()});
  CHECK_THROWS_WITH_AS(opt.step(),
                       doctest::Contains("enc.w"), Error);
}

TEST_CASE("a parameter without a gradient buffer is left alone") {
  auto a = param("a", {1.5});
  Adam opt({a}, AdamConfig{});
  opt.step();
  CHECK(a.tensor->data[0] == 1.5);
}
