#include "qcert/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qcert/kernels.hpp"

namespace qcert {

void ConfidenceSpec::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidInput("epsilon must be a positive number");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
}

std::uint64_t ceil_count(double x) {
  if (!std::isfinite(x)) throw InvalidInput("ceil_count: non-finite sample count");
  if (x <= 1.0) return 1;
  if (x > 1e18) throw InvalidInput("ceil_count: sample count too large");
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, x)) return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::ceil(x));
}

std::uint64_t hoeffding_n(double range_width, const ConfidenceSpec& spec) {
  spec.validate();
  if (!(range_width >= 0.0)) throw InvalidInput("hoeffding_n: range width must be nonnegative");
  return ceil_count(range_width * range_width / (2.0 * spec.epsilon * spec.epsilon) * std::log(2.0 / spec.delta));
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw InvalidInput("mean: empty input");
  return kernels::chunked_sum(xs) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return acc / static_cast<double>(xs.size() - 1);
}

double standard_error(std::span<const double> xs) {
  if (xs.empty()) throw InvalidInput("standard_error: empty input");
  return std::sqrt(variance(xs) / static_cast<double>(xs.size()));
}

double lower_median(std::vector<double> xs) {
  if (xs.empty()) throw InvalidInput("lower_median: empty input");
  const std::size_t k = (xs.size() + 1) / 2 - 1;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k), xs.end());
  return xs[k];
}

double median_of_means(std::span<const double> samples, std::size_t n_groups) {
  if (samples.empty()) throw InvalidInput("median_of_means: empty input");
  if (n_groups == 0) throw InvalidInput("median_of_means: need at least one group");
  if (n_groups > samples.size()) throw InvalidInput("median_of_means: more groups than samples");
  const std::size_t size = samples.size() / n_groups;
  std::vector<double> means(n_groups);
  for (std::size_t g = 0; g < n_groups; ++g) {
    double acc = 0.0;
    for (std::size_t i = g * size; i < (g + 1) * size; ++i) acc += samples[i];
    means[g] = acc / static_cast<double>(size);
  }
  return lower_median(std::move(means));
}

Estimate importance_sampler(std::span<const double> p, std::span<const double> q,
                            const std::function<double(std::size_t)>& f, std::size_t m, SeededRng& rng) {
  if (p.size() != q.size() || p.empty()) throw DimensionMismatch("importance_sampler: p and q must match");
  if (m == 0) throw InvalidInput("importance_sampler: need at least one draw");
  double total = 0.0;
  for (double w : q) {
    if (!(w >= 0.0)) throw InvalidInput("importance_sampler: negative proposal weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("importance_sampler: proposal does not sum to 1");
  for (std::size_t i = 0; i < p.size(); ++i)
    if (q[i] == 0.0 && p[i] != 0.0 && f(i) != 0.0)
      throw InvalidInput("importance_sampler: proposal misses support of p*f");
  const auto cdf = kernels::cumulative(q);
  std::vector<double> vals(m);
  for (std::size_t s = 0; s < m; ++s) {
    const std::size_t i = kernels::inverse_cdf(cdf, rng.uniform());
    vals[s] = f(i) * p[i] / q[i];
  }
  Estimate e;
  e.value = mean(vals);
  e.n_samples_used = m;
  e.method = "importance_sampling";
  e.std_error = standard_error(vals);
  return e;
}

bool amplify_confidence(const std::function<bool(std::size_t)>& trial, std::size_t n) {
  if (n == 0) throw InvalidInput("amplify_confidence: need at least one run");
  std::size_t accepts = 0;
  for (std::size_t i = 0; i < n; ++i) accepts += trial(i) ? 1 : 0;
  return 2 * accepts > n;
}

double union_bound(std::span<const double> deltas) {
  double s = 0.0;
  for (double d : deltas) {
    if (!(d >= 0.0)) throw InvalidInput("union_bound: failure probabilities must be nonnegative");
    s += d;
  }
  return s;
}

namespace {

TailCheck finish(double threshold, std::size_t hits, std::size_t n, double bound) {
  if (n == 0) throw InvalidInput("tail check: no draws");
  TailCheck c;
  c.threshold = threshold;
  c.empirical = static_cast<double>(hits) / static_cast<double>(n);
  c.bound = bound;
  const double b = std::clamp(bound, 1.0 / static_cast<double>(n), 1.0);
  c.slack = 3.0 * std::sqrt(b * (1.0 - b) / static_cast<double>(n));
  c.holds = c.empirical <= bound + c.slack;
  return c;
}

}  // namespace

TailCheck chebyshev_check(std::span<const double> draws, double mu, double sigma2, double t) {
  if (!(t > 0.0)) throw InvalidInput("chebyshev_check: threshold must be positive");
  std::size_t hits = 0;
  for (double x : draws) hits += std::abs(x - mu) >= t ? 1 : 0;
  return finish(t, hits, draws.size(), sigma2 / (t * t));
}

TailCheck markov_check(std::span<const double> draws, double mu, double t) {
  if (!(t > 0.0)) throw InvalidInput("markov_check: threshold must be positive");
  std::size_t hits = 0;
  for (double x : draws) {
    if (x < 0.0) throw InvalidInput("markov_check: draws must be nonnegative");
    hits += x >= t ? 1 : 0;
  }
  return finish(t, hits, draws.size(), mu / t);
}

TailCheck hoeffding_check(std::span<const double> means, double mu, double range, std::size_t n, double t) {
  if (!(t > 0.0) || !(range > 0.0) || n == 0) throw InvalidInput("hoeffding_check: bad parameters");
  std::size_t hits = 0;
  for (double x : means) hits += std::abs(x - mu) >= t ? 1 : 0;
  return finish(t, hits, means.size(), 2.0 * std::exp(-2.0 * static_cast<double>(n) * t * t / (range * range)));
}

}  // namespace qcert
