#pragma once

// Data-parallel inner loops. Every kernel has an OpenMP path and a plain serial path;
// the reference:: namespace keeps the naive loops the kernels are tested against.
//
// Results never depend on the thread count: work items draw randomness from
// (seed, item index) streams, and reductions are done per fixed-size chunk and then
// summed serially in chunk order.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "qcert/linalg.hpp"

namespace qcert::kernels {

enum class Exec { Serial, Parallel };

/// Chunk length for deterministic reductions.
inline constexpr std::size_t kReduceChunk = 256;
/// Shots drawn per rng sub-stream when sampling outcome counts.
inline constexpr std::uint64_t kShotBlock = 4096;

void set_thread_cap(int threads);
int thread_cap();

/// out[i] = fn(i) for i in [0, n).
std::vector<double> map_indexed(std::size_t n, const std::function<double(std::size_t)>& fn, Exec exec = Exec::Parallel);

/// Calls fn(i) for i in [0, n); fn must only touch state owned by item i.
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn, Exec exec = Exec::Parallel);

/// Order-stable sum: fixed chunks summed in parallel, chunk totals summed in order.
double chunked_sum(std::span<const double> values, Exec exec = Exec::Parallel);

/// Order-stable sum of w_i U_i A U_i^dagger.
Matrix weighted_conjugation_sum(std::span<const Matrix> unitaries, std::span<const double> weights, const Matrix& a,
                                Exec exec = Exec::Parallel);

/// Multinomial outcome counts for `shots` Born-rule draws from the cumulative distribution
/// `cdf` (last entry 1). Shot block b uses stream mix(seed, stream, b).
std::vector<std::uint64_t> sample_counts(std::span<const double> cdf, std::uint64_t shots, std::uint64_t seed,
                                         std::uint64_t stream, Exec exec = Exec::Parallel);

/// Mean of f(p[x]) over the outcome counts (XEB-style estimator).
double count_weighted_mean(std::span<const std::uint64_t> counts, std::span<const double> values,
                           Exec exec = Exec::Parallel);

namespace reference {

double sum(std::span<const double> values);
Matrix weighted_conjugation_sum(std::span<const Matrix> unitaries, std::span<const double> weights, const Matrix& a);
std::vector<std::uint64_t> sample_counts(std::span<const double> cdf, std::uint64_t shots, std::uint64_t seed,
                                         std::uint64_t stream);

}  // namespace reference

/// Inverse-CDF draw: first index with cdf[k] > u.
std::size_t inverse_cdf(std::span<const double> cdf, double u);
std::vector<double> cumulative(std::span<const double> probabilities);

}  // namespace qcert::kernels
