// Serial reference kernels against their OpenMP counterparts.  Thread count
// follows FPF_LAB_THREADS / OMP_NUM_THREADS.

#include "fpf/kernels.hpp"

#include <benchmark/benchmark.h>

#include <algorithm>

namespace {

using namespace fpf;

SdeModel bench_model() {
  Mat F(2, 2);
  F << -1.0, 0.5, -0.5, -1.0;
  SdeModel m = make_linear_model(F, Mat::Identity(2, 2), Vec::Ones(2));
  m.obs = [](const Vec& x) { return x(0) * x(0) * x(0) + x(1); };
  m.obs_grad = [](const Vec& x) { return Vec(Eigen::Vector2d(3.0 * x(0) * x(0), 1.0)); };
  m.affine_obs.reset();
  return m;
}

Exec exec_of(const benchmark::State& s) { return s.range(1) ? Exec::parallel : Exec::serial; }

void label(benchmark::State& s) {
  s.SetLabel(s.range(1) ? "omp" : "serial");
  s.SetItemsProcessed(s.iterations() * s.range(0));
}

void BM_Propagate(benchmark::State& s) {
  const SdeModel m = bench_model();
  auto e = sample_initial_ensemble(static_cast<int>(s.range(0)), Vec::Zero(2), Mat::Identity(2, 2), 1);
  std::uint64_t c = 1;
  for (auto _ : s) c = kernels::propagate_em(exec_of(s), e.states, m, 1e-3, 1, c);
  label(s);
}

void BM_Gram(benchmark::State& s) {
  const SdeModel m = bench_model();
  const auto e = sample_initial_ensemble(static_cast<int>(s.range(0)), Vec::Zero(2), Mat::Identity(2, 2), 1);
  const GalerkinBasis basis(2, 3);
  const Vec h = kernels::serial::eval_obs(e.states, m);
  const Vec ch = h.array() - h.mean();
  Mat A;
  Vec b;
  for (auto _ : s) {
    kernels::assemble_gram(exec_of(s), basis, e.states, ch, A, b);
    benchmark::DoNotOptimize(A.data());
  }
  label(s);
}

void BM_GalerkinField(benchmark::State& s) {
  const SdeModel m = bench_model();
  const auto e = sample_initial_ensemble(static_cast<int>(s.range(0)), Vec::Zero(2), Mat::Identity(2, 2), 1);
  const GalerkinBasis basis(2, 3);
  const Vec coef = Vec::LinSpaced(basis.size(), -0.2, 0.3);
  const Vec h = kernels::serial::eval_obs(e.states, m);
  GainField g;
  for (auto _ : s) {
    kernels::galerkin_field(exec_of(s), basis, coef, e.states, h, h.mean(), m, g);
    benchmark::DoNotOptimize(g.u.data());
  }
  label(s);
}

void BM_Kde(benchmark::State& s) {
  const auto e = sample_initial_ensemble(static_cast<int>(s.range(0)), Vec::Zero(1), Mat::Identity(1, 1), 1);
  Vec sorted = e.states.col(0);
  std::sort(sorted.data(), sorted.data() + sorted.size());
  for (auto _ : s) benchmark::DoNotOptimize(kernels::kde_on_grid(exec_of(s), sorted, 0.1, -10.0, 0.01, 2001));
  label(s);
}

void sizes(benchmark::internal::Benchmark* b) {
  for (long n : {1000L, 10000L, 100000L})
    for (long par : {0L, 1L}) b->Args({n, par});
}

BENCHMARK(BM_Propagate)->Apply(sizes);
BENCHMARK(BM_Gram)->Apply(sizes);
BENCHMARK(BM_GalerkinField)->Apply(sizes);
BENCHMARK(BM_Kde)->Apply(sizes);

}  // namespace

BENCHMARK_MAIN();
