#include <benchmark/benchmark.h>

#include "slowvar/admgraph.hpp"
#include "slowvar/covariance.hpp"
#include "slowvar/network.hpp"
#include "slowvar/rng.hpp"
#include "slowvar/simulate.hpp"
#include "slowvar/spectral.hpp"

using namespace slowvar;

namespace {

// A square CS-I box of the given half width around (100, 100).
LatticeDomain cs1_box(int half) { return LatticeDomain({100 - half, 100 - half}, {100 + half, 100 + half}); }

std::vector<LocalCovariance> covariances(const Model& m, const LatticeDomain& d) {
  return all_covariances(m.network, d, 1.0, 1);
}

}  // namespace

static void BM_GraphBuild(benchmark::State& state) {
  const Model m = builtin_cs1();
  const auto d = cs1_box(int(state.range(0)));
  const auto covs = covariances(m, d);
  for (auto _ : state) benchmark::DoNotOptimize(build_graph(d, covs, 4.0, 0.1, 1));
  state.counters["nodes"] = double(d.size());
}
BENCHMARK(BM_GraphBuild)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

static void BM_Eigensolve(benchmark::State& state) {
  const Model m = builtin_cs1();
  const auto d = cs1_box(int(state.range(0)));
  const auto g = build_graph(d, covariances(m, d), 4.0, 0.1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(top_eigenpairs(g, 1));
  state.counters["nodes"] = double(d.size());
}
BENCHMARK(BM_Eigensolve)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

static void BM_SsaStep(benchmark::State& state) {
  const Model m = builtin_cs2();
  RngStream rng(1, 0);
  State x{40, 30};
  for (auto _ : state) {
    const auto step = gillespie_step(m.network, x, rng);
    const auto& nu = m.network.reaction(step.reaction).stoich;
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += nu[k];
    if (!m.domain.contains(x)) x = {40, 30};
  }
}
BENCHMARK(BM_SsaStep);

static void BM_CssaStep(benchmark::State& state) {
  const Model m = builtin_cs2();
  const WeightedSlowCoordinate slow({1.0, 2.0}, m.domain);
  RngStream rng(1, 0);
  State x{40, 30};
  for (auto _ : state) benchmark::DoNotOptimize(cssa_step(m.network, x, slow, m.domain, rng));
}
BENCHMARK(BM_CssaStep);

static void BM_CssaRun(benchmark::State& state) {
  const Model m = builtin_cs1();
  const WeightedSlowCoordinate slow({0.5, 0.5}, m.domain);
  const State x0{100, 100};
  std::uint64_t stream = 0;
  for (auto _ : state) {
    RngStream rng(1, stream++);
    benchmark::DoNotOptimize(cssa_run(m.network, m.domain, slow, x0, std::uint64_t(state.range(0)), rng, false));
  }
}
BENCHMARK(BM_CssaRun)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
