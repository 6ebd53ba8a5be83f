#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qcert/randomness.hpp"

namespace qcert {

/// Accuracy epsilon and failure probability delta.
struct ConfidenceSpec {
  double epsilon = 0.1;
  double delta = 0.05;

  void validate() const;
};

struct Estimate {
  double value = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  std::uint64_t n_samples_used = 0;
  std::string method;
  double std_error = 0.0;  // empirical standard error where meaningful, else 0
};

/// ceil(x) for a sample-count formula; never below 1. Values within 1e-9 above an integer round down to it.
std::uint64_t ceil_count(double x);

/// Hoeffding sample count (b - a)^2 / (2 eps^2) ln(2/delta), rounded up.
std::uint64_t hoeffding_n(double range_width, const ConfidenceSpec& spec);

double mean(std::span<const double> xs);
/// Unbiased sample variance (0 for a single sample).
double variance(std::span<const double> xs);
double standard_error(std::span<const double> xs);

/// Median of the group means. The samples are split in order into n_groups equal groups; a
/// remainder that does not fill a group is dropped. Even group counts use the lower median.
double median_of_means(std::span<const double> samples, std::size_t n_groups);
/// Lower median (order statistic ceil(n/2)).
double lower_median(std::vector<double> xs);

/// Importance-sampling estimate of sum_i p_i f(i) from m draws i ~ q.
Estimate importance_sampler(std::span<const double> p, std::span<const double> q,
                            const std::function<double(std::size_t)>& f, std::size_t m, SeededRng& rng);

/// Majority vote over n independent runs of an accept/reject trial; ties reject.
bool amplify_confidence(const std::function<bool(std::size_t)>& trial, std::size_t n);

/// Boole's inequality: the combined failure budget is the sum of the parts.
double union_bound(std::span<const double> deltas);

/// Empirical tail frequency vs a tail-bound envelope.
struct TailCheck {
  double threshold = 0.0;
  double empirical = 0.0;
  double bound = 0.0;
  double slack = 0.0;  // 3-sigma binomial band on the empirical frequency
  bool holds = false;
};

/// Pr[|X - mu| >= t] <= sigma^2 / t^2.
TailCheck chebyshev_check(std::span<const double> draws, double mu, double sigma2, double t);
/// Pr[X >= t] <= E[X] / t for X >= 0.
TailCheck markov_check(std::span<const double> draws, double mu, double t);
/// Pr[|mean_n - mu| >= t] <= 2 exp(-2 n t^2 / range^2) for means of n iid variables with the given range.
TailCheck hoeffding_check(std::span<const double> means, double mu, double range, std::size_t n, double t);

}  // namespace qcert
