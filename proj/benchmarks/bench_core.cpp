#include <benchmark/benchmark.h>

#include "pivotcap/gradcheck.hpp"
#include "pivotcap/layers.hpp"
#include "pivotcap/rng.hpp"

namespace {

using namespace pivotcap;

void bm_lstm_step_forward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const int hidden = 64, input = 128;
  SplitRng rng(1);
  auto cell = make_lstm(input, hidden, rng);
  auto x = make_tensor({batch, input});
  for (auto& v : x->data) v = rng.uniform(-1, 1);
  auto s = lstm_begin(batch, hidden);
  for (auto _ : state) {
    Tape tape(false);
    auto next = lstm_step(tape, cell, s, x);
    benchmark::DoNotOptimize(next.h->data.data());
  }
}
BENCHMARK(bm_lstm_step_forward)->Arg(1)->Arg(64)->Arg(100);

void bm_lstm_step_train(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const int hidden = 64, input = 128;
  SplitRng rng(1);
  auto cell = make_lstm(input, hidden, rng);
  auto x = make_param({batch, input});
  for (auto& v : x->data) v = rng.uniform(-1, 1);
  std::vector<double> w(static_cast<std::size_t>(batch) * hidden, 1e-3);
  for (auto _ : state) {
    Tape tape;
    auto s = lstm_begin(batch, hidden);
    auto next = lstm_step(tape, cell, s, x);
    auto loss = tape.weighted_sum(next.h, w);
    tape.backward(loss);
    cell.w->zero_grad();
    cell.b->zero_grad();
    x->zero_grad();
    benchmark::DoNotOptimize(loss->data[0]);
  }
}
BENCHMARK(bm_lstm_step_train)->Arg(1)->Arg(64)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
