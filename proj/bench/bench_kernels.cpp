// Serial reference loops vs the OpenMP kernels.
//   ./bench_kernels --benchmark_filter=sum

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "qcert/kernels.hpp"
#include "qcert/randomness.hpp"

namespace {

using qcert::Matrix;
using qcert::kernels::Exec;

std::vector<double> values(std::size_t n) {
  qcert::SeededRng rng(1);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform();
  return v;
}

void BM_SumReference(benchmark::State& state) {
  const auto v = values(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(qcert::kernels::reference::sum(v));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SumChunked(benchmark::State& state, Exec exec) {
  const auto v = values(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(qcert::kernels::chunked_sum(v, exec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

struct Twirl {
  std::vector<Matrix> us;
  std::vector<double> ws;
  Matrix a;
};

Twirl twirl(std::size_t count, std::size_t d) {
  qcert::SeededRng rng(2);
  Twirl t;
  for (std::size_t i = 0; i < count; ++i) t.us.push_back(qcert::sample_haar_unitary(rng, d));
  t.ws.assign(count, 1.0 / static_cast<double>(count));
  t.a = qcert::sample_haar_unitary(rng, d);
  return t;
}

void BM_ConjugationReference(benchmark::State& state) {
  const auto t = twirl(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(qcert::kernels::reference::weighted_conjugation_sum(t.us, t.ws, t.a));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Conjugation(benchmark::State& state, Exec exec) {
  const auto t = twirl(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(qcert::kernels::weighted_conjugation_sum(t.us, t.ws, t.a, exec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

std::vector<double> uniform_cdf(std::size_t d) {
  return qcert::kernels::cumulative(std::vector<double>(d, 1.0 / static_cast<double>(d)));
}

void BM_SampleReference(benchmark::State& state) {
  const auto cdf = uniform_cdf(static_cast<std::size_t>(state.range(1)));
  const auto shots = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(qcert::kernels::reference::sample_counts(cdf, shots, 3, 0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Sample(benchmark::State& state, Exec exec) {
  const auto cdf = uniform_cdf(static_cast<std::size_t>(state.range(1)));
  const auto shots = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(qcert::kernels::sample_counts(cdf, shots, 3, 0, exec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_SumReference)->Arg(1 << 16)->Arg(1 << 22);
BENCHMARK_CAPTURE(BM_SumChunked, serial, Exec::Serial)->Arg(1 << 16)->Arg(1 << 22);
BENCHMARK_CAPTURE(BM_SumChunked, parallel, Exec::Parallel)->Arg(1 << 16)->Arg(1 << 22);

BENCHMARK(BM_ConjugationReference)->Args({1000, 4})->Args({200, 32});
BENCHMARK_CAPTURE(BM_Conjugation, serial, Exec::Serial)->Args({1000, 4})->Args({200, 32});
BENCHMARK_CAPTURE(BM_Conjugation, parallel, Exec::Parallel)->Args({1000, 4})->Args({200, 32});

BENCHMARK(BM_SampleReference)->Args({1 << 20, 2})->Args({1 << 20, 1024});
BENCHMARK_CAPTURE(BM_Sample, serial, Exec::Serial)->Args({1 << 20, 2})->Args({1 << 20, 1024});
BENCHMARK_CAPTURE(BM_Sample, parallel, Exec::Parallel)->Args({1 << 20, 2})->Args({1 << 20, 1024});

BENCHMARK_MAIN();
