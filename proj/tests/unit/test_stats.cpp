#include <doctest.h>

#include <algorithm>
#include <random>

#include "qcert/randomness.hpp"
#include "qcert/stats.hpp"

using namespace qcert;

TEST_CASE("hoeffding sample counts") {
  CHECK(hoeffding_n(2.0, {0.1, 0.05}) == 738);
  CHECK(hoeffding_n(2.0, {1e9, 0.05}) == 1);
  // Quadrupling before the ceiling: compare the raw formula through large counts.
  const double n1 = static_cast<double>(hoeffding_n(1.0, {1e-3, 0.05}));
  const double n2 = static_cast<double>(hoeffding_n(2.0, {1e-3, 0.05}));
  CHECK(n2 / n1 == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(ceil_count(3.0000000001) == 3);
  CHECK(ceil_count(3.01) == 4);
  CHECK_THROWS(hoeffding_n(1.0, {0.1, 1.5}));
}

TEST_CASE("median of means") {
  const std::vector<double> c(12, 2.5);
  CHECK(median_of_means(c, 4) == 2.5);
  const std::vector<double> s{1, 2, 3, 4, 5, 6};
  CHECK(median_of_means(s, 3) == doctest::Approx(3.5));
  CHECK(lower_median({4, 1, 3, 2}) == 2);
}

TEST_CASE("median of means beats the mean on heavy tails") {
  // Pareto(alpha = 2.5) draws have finite variance but heavy tails.
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double alpha = 2.5, mu = alpha / (alpha - 1.0);
  const std::size_t trials = 10000, n = 1000, groups = 20;
  std::vector<double> err_mean, err_mom;
  std::vector<double> xs(n);
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& x : xs) x = std::pow(1.0 - u(gen), -1.0 / alpha);
    err_mean.push_back(std::abs(mean(xs) - mu));
    err_mom.push_back(std::abs(median_of_means(xs, groups) - mu));
  }
  auto quantile = [](std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    return v[static_cast<std::size_t>(q * static_cast<double>(v.size() - 1))];
  };
  CHECK(quantile(err_mom, 0.999) < quantile(err_mean, 0.999));
}

TEST_CASE("importance sampling") {
  SeededRng rng(1);
  const std::vector<double> p{0.25, 0.25, 0.25, 0.25};
  auto indicator = [](std::size_t i) { return i == 2 ? 1.0 : 0.0; };
  const auto plain = importance_sampler(p, p, indicator, 20000, rng);
  CHECK(std::abs(plain.value - 0.25) < 3.0 * plain.std_error);

  // Optimal proposal q* = p f / E[f] gives a zero-variance estimate from a single draw.
  const std::vector<double> f{1.0, 2.0, 3.0, 4.0};
  const std::vector<double> q{0.1, 0.2, 0.3, 0.4};
  const auto one = importance_sampler(p, q, [&](std::size_t i) { return f[i]; }, 1, rng);
  CHECK(one.value == doctest::Approx(2.5));
}

TEST_CASE("confidence amplification") {
  CHECK(amplify_confidence([](std::size_t) { return true; }, 1));
  CHECK_FALSE(amplify_confidence([](std::size_t) { return false; }, 1));

  std::mt19937_64 gen(5);
  std::bernoulli_distribution good(0.9), bad(0.1);
  const int runs = 100000;
  int acc_good = 0, acc_bad = 0;
  for (int r = 0; r < runs; ++r) {
    if (amplify_confidence([&](std::size_t) { return good(gen); }, 15)) ++acc_good;
    if (amplify_confidence([&](std::size_t) { return bad(gen); }, 15)) ++acc_bad;
  }
  CHECK(acc_good >= 0.999 * runs);
  CHECK(acc_bad <= 0.001 * runs);
}

TEST_CASE("tail bounds hold empirically") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> g(50000), e(50000);
  for (auto& x : g) x = nd(gen);
  for (auto& x : e) x = ex(gen);
  CHECK(chebyshev_check(g, 0.0, 1.0, 2.0).holds);
  CHECK(markov_check(e, 1.0, 3.0).holds);

  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> means(20000);
  for (auto& m : means) {
    double s = 0.0;
    for (int i = 0; i < 50; ++i) s += u(gen);
    m = s / 50.0;
  }
  CHECK(hoeffding_check(means, 0.5, 1.0, 50, 0.1).holds);
  const std::vector<double> deltas{0.01, 0.02, 0.02};
  CHECK(union_bound(deltas) == doctest::Approx(0.05));
}

TEST_CASE("moments") {
  const std::vector<double> xs{1, 2, 3, 4};
  CHECK(mean(xs) == 2.5);
  CHECK(variance(xs) == doctest::Approx(5.0 / 3.0));
  CHECK(standard_error(xs) == doctest::Approx(std::sqrt(5.0 / 12.0)));
  const std::vector<double> one{7.0};
  CHECK(variance(one) == 0.0);
}
