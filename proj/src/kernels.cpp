#include "qcert/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <exception>

#include <omp.h>

#include "qcert/randomness.hpp"

namespace qcert::kernels {

namespace {

std::atomic<int> g_thread_cap{0};

int threads_for(Exec exec) {
  if (exec == Exec::Serial) return 1;
  const int cap = g_thread_cap.load();
  return cap > 0 ? cap : omp_get_max_threads();
}

std::size_t chunk_count(std::size_t n) { return (n + kReduceChunk - 1) / kReduceChunk; }

std::uint64_t block_stream(std::uint64_t stream, std::uint64_t block) { return mix_seed(stream, block); }

void draw_block(std::span<const double> cdf, std::uint64_t n_draws, std::uint64_t seed, std::uint64_t stream,
                std::uint64_t* counts) {
  SeededRng rng(seed, stream);
  for (std::uint64_t s = 0; s < n_draws; ++s) ++counts[inverse_cdf(cdf, rng.uniform())];
}

}  // namespace

void set_thread_cap(int threads) { g_thread_cap.store(std::max(0, threads)); }
int thread_cap() { return g_thread_cap.load(); }

std::vector<double> map_indexed(std::size_t n, const std::function<double(std::size_t)>& fn, Exec exec) {
  std::vector<double> out(n);
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads_for(exec))
  for (std::int64_t i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
  return out;
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn, Exec exec) {
  const auto count = static_cast<std::int64_t>(n);
  // Exceptions cannot leave an OpenMP region; keep the one from the lowest index and rethrow it.
  std::exception_ptr first;
  std::int64_t first_index = count;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads_for(exec))
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(qcert_for_each_error)
      if (i < first_index) {
        first_index = i;
        first = std::current_exception();
      }
    }
  }
  if (first) std::rethrow_exception(first);
}

double chunked_sum(std::span<const double> values, Exec exec) {
  const std::size_t chunks = chunk_count(values.size());
  std::vector<double> partial(chunks, 0.0);
  const auto count = static_cast<std::int64_t>(chunks);
#pragma omp parallel for schedule(static) num_threads(threads_for(exec))
  for (std::int64_t c = 0; c < count; ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kReduceChunk;
    const std::size_t hi = std::min(values.size(), lo + kReduceChunk);
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += values[i];
    partial[static_cast<std::size_t>(c)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

Matrix weighted_conjugation_sum(std::span<const Matrix> unitaries, std::span<const double> weights, const Matrix& a,
                                Exec exec) {
  if (unitaries.size() != weights.size()) throw DimensionMismatch("weighted_conjugation_sum: weight count");
  const std::size_t chunks = chunk_count(unitaries.size());
  std::vector<Matrix> partial(chunks, Matrix::Zero(a.rows(), a.cols()));
  const auto count = static_cast<std::int64_t>(chunks);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads_for(exec))
  for (std::int64_t c = 0; c < count; ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kReduceChunk;
    const std::size_t hi = std::min(unitaries.size(), lo + kReduceChunk);
    Matrix& acc = partial[static_cast<std::size_t>(c)];
    for (std::size_t i = lo; i < hi; ++i) acc.noalias() += weights[i] * (unitaries[i] * a * unitaries[i].adjoint());
  }
  Matrix total = Matrix::Zero(a.rows(), a.cols());
  for (const auto& p : partial) total += p;
  return total;
}

std::vector<std::uint64_t> sample_counts(std::span<const double> cdf, std::uint64_t shots, std::uint64_t seed,
                                         std::uint64_t stream, Exec exec) {
  const std::uint64_t blocks = (shots + kShotBlock - 1) / kShotBlock;
  const std::size_t k = cdf.size();
  std::vector<std::uint64_t> per_block(blocks * k, 0);
  const auto count = static_cast<std::int64_t>(blocks);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads_for(exec))
  for (std::int64_t b = 0; b < count; ++b) {
    const auto ub = static_cast<std::uint64_t>(b);
    const std::uint64_t n = std::min(kShotBlock, shots - ub * kShotBlock);
    draw_block(cdf, n, seed, block_stream(stream, ub), per_block.data() + ub * k);
  }
  std::vector<std::uint64_t> counts(k, 0);
  for (std::uint64_t b = 0; b < blocks; ++b)
    for (std::size_t i = 0; i < k; ++i) counts[i] += per_block[b * k + i];
  return counts;
}

double count_weighted_mean(std::span<const std::uint64_t> counts, std::span<const double> values, Exec exec) {
  if (counts.size() != values.size()) throw DimensionMismatch("count_weighted_mean: size mismatch");
  std::vector<double> terms(counts.size());
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    terms[i] = counts[i] == 0 ? 0.0 : static_cast<double>(counts[i]) * values[i];
    total += counts[i];
  }
  if (total == 0) throw InvalidInput("count_weighted_mean: no samples");
  return chunked_sum(terms, exec) / static_cast<double>(total);
}

std::size_t inverse_cdf(std::span<const double> cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) return cdf.size() - 1;
  return static_cast<std::size_t>(it - cdf.begin());
}

std::vector<double> cumulative(std::span<const double> probabilities) {
  std::vector<double> cdf(probabilities.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    acc += probabilities[i];
    cdf[i] = acc;
  }
  if (!cdf.empty()) {
    for (auto& c : cdf) c /= acc;
    cdf.back() = 1.0;
  }
  return cdf;
}

namespace reference {

double sum(std::span<const double> values) {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc;
}

Matrix weighted_conjugation_sum(std::span<const Matrix> unitaries, std::span<const double> weights, const Matrix& a) {
  Matrix total = Matrix::Zero(a.rows(), a.cols());
  for (std::size_t i = 0; i < unitaries.size(); ++i) total += weights[i] * unitaries[i] * a * unitaries[i].adjoint();
  return total;
}

std::vector<std::uint64_t> sample_counts(std::span<const double> cdf, std::uint64_t shots, std::uint64_t seed,
                                         std::uint64_t stream) {
  std::vector<std::uint64_t> counts(cdf.size(), 0);
  for (std::uint64_t shot = 0; shot < shots; shot += kShotBlock) {
    SeededRng rng(seed, block_stream(stream, shot / kShotBlock));
    const std::uint64_t n = std::min(kShotBlock, shots - shot);
    for (std::uint64_t s = 0; s < n; ++s) {
      const double u = rng.uniform();
      std::size_t k = 0;
      while (k + 1 < cdf.size() && cdf[k] <= u) ++k;
      ++counts[k];
    }
  }
  return counts;
}

}  // namespace reference

}  // namespace qcert::kernels
