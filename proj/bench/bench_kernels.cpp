#include <benchmark/benchmark.h>

#include <vector>

#include "tua/env.hpp"
#include "tua/harness/config.hpp"
#include "tua/kernels.hpp"
#include "tua/utility.hpp"

using namespace tua;

namespace {

struct DenseCase {
  Matrix x, w, dy, y, dx, dw;
  std::vector<double> b, db;

  DenseCase(std::size_t batch, std::size_t in, std::size_t out)
      : x(batch, in), w(out, in), dy(batch, out), y(batch, out), dx(batch, in), dw(out, in), b(out), db(out) {
    Rng rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto* m : {&x, &w, &dy})
      for (std::size_t r = 0; r < m->rows(); ++r)
        for (double& v : m->row(r)) v = u(rng);
    for (double& v : b) v = u(rng);
  }
};

void args(benchmark::internal::Benchmark* b) {
  b->Args({16, 32, 32})->Args({150, 32, 32})->Args({256, 128, 128})->Args({1024, 128, 128});
}

template <bool Parallel>
void BM_DenseForward(benchmark::State& state) {
  DenseCase c(state.range(0), state.range(1), state.range(2));
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::dense_forward(c.x, c.w, c.b, c.y);
    else
      kernels::reference::dense_forward(c.x, c.w, c.b, c.y);
    benchmark::DoNotOptimize(c.y.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_DenseBackward(benchmark::State& state) {
  DenseCase c(state.range(0), state.range(1), state.range(2));
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::dense_backward(c.x, c.w, c.dy, c.dx, c.dw, c.db);
    else
      kernels::reference::dense_backward(c.x, c.w, c.dy, c.dx, c.dw, c.db);
    benchmark::DoNotOptimize(c.dw.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

AssociationProblem oracle_problem(std::size_t k) {
  auto cfg = harness::reduced_config().train.env;
  Rng rng(11);
  Environment env(cfg, 11);
  env.reset(generate_deployment(cfg.network, k, rng));
  return env.realized_problem();
}

template <bool Parallel>
void BM_Oracle(benchmark::State& state) {
  const auto problem = oracle_problem(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto r = Parallel ? exact_oracle(problem) : exact_oracle_serial(problem);
    benchmark::DoNotOptimize(r.value);
  }
}

}  // namespace

BENCHMARK(BM_DenseForward<true>)->Name("dense_forward/omp")->Apply(args);
BENCHMARK(BM_DenseForward<false>)->Name("dense_forward/reference")->Apply(args);
BENCHMARK(BM_DenseBackward<true>)->Name("dense_backward/omp")->Apply(args);
BENCHMARK(BM_DenseBackward<false>)->Name("dense_backward/reference")->Apply(args);
BENCHMARK(BM_Oracle<true>)->Name("oracle/omp")->DenseRange(4, 8, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Oracle<false>)->Name("oracle/serial")->DenseRange(4, 8, 2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
