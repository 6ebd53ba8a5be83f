#include "qcert/suites.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include <Eigen/QR>

#include "qcert/channels.hpp"
#include "qcert/devicesim.hpp"
#include "qcert/oracle.hpp"
#include "qcert/protocols.hpp"
#include "qcert/randomness.hpp"

namespace qcert::suites {

namespace {

std::string fmt(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

Check within(std::string name, double measured, double expected, double tol) {
  return {std::move(name), measured, expected, "|measured - expected| <= " + fmt(tol),
          std::abs(measured - expected) <= tol};
}
Check at_most(std::string name, double measured, double bound) {
  return {std::move(name), measured, bound, "measured <= " + fmt(bound), measured <= bound};
}
Check below(std::string name, double measured, double bound) {
  return {std::move(name), measured, bound, "measured < " + fmt(bound), measured < bound};
}
Check at_least(std::string name, double measured, double bound) {
  return {std::move(name), measured, bound, "measured >= " + fmt(bound), measured >= bound};
}
Check above(std::string name, double measured, double bound) {
  return {std::move(name), measured, bound, "measured > " + fmt(bound), measured > bound};
}
Check equal_int(std::string name, std::uint64_t measured, std::uint64_t expected) {
  return {std::move(name), static_cast<double>(measured), static_cast<double>(expected), "measured == expected",
          measured == expected};
}
// |mean - expected| < 3 sigma.
Check three_sigma(std::string name, double mean, double expected, double sigma) {
  return {std::move(name), mean, expected, "|measured - expected| < 3 sigma = " + fmt(3.0 * sigma),
          std::abs(mean - expected) < 3.0 * sigma};
}

Matrix ginibre(SeededRng& rng, Eigen::Index r, Eigen::Index c) {
  Matrix g(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) g(i, j) = rng.complex_normal();
  return g;
}

Matrix random_density(SeededRng& rng, std::size_t d, std::size_t rank) {
  const Matrix g = ginibre(rng, static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(rank));
  Matrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

Vector random_vector(SeededRng& rng, std::size_t d) {
  Vector v = ginibre(rng, static_cast<Eigen::Index>(d), 1).col(0);
  return v / v.norm();
}

// Random channel from an isometry C^d -> C^{r d}.
Channel random_channel(SeededRng& rng, std::size_t d, std::size_t rank) {
  const auto dr = static_cast<Eigen::Index>(d * rank), dd = static_cast<Eigen::Index>(d);
  Eigen::HouseholderQR<Matrix> qr(ginibre(rng, dr, dd));
  const Matrix v = qr.householderQ() * Matrix::Identity(dr, dd);
  std::vector<Matrix> kraus;
  for (std::size_t k = 0; k < rank; ++k) kraus.push_back(v.block(static_cast<Eigen::Index>(k) * dd, 0, dd, dd));
  return Channel::kraus_list(std::move(kraus));
}

double binom(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

double trace_norm(const Matrix& x) { return schatten_norm(x, Schatten::One); }

StabilizerGroup ghz3() { return StabilizerGroup::parse("+XXX\n+ZZI\n+IZZ\n"); }
StabilizerGroup bell() { return StabilizerGroup::parse("+XX\n+ZZ\n"); }

// ---------------------------------------------------------------------------

Report norms(std::uint64_t seed) {
  Report r{"norms", {}};
  const std::size_t trials = 1000;
  for (std::size_t d : {2, 3, 4, 8}) {
    SeededRng rng(seed, d);
    double fvdg_lo = -1e300, fvdg_hi = -1e300, holder1 = -1e300, holder2 = -1e300, rank_a = -1e300,
           rank_b = -1e300, order = -1e300, swap = 0.0, rank_one = 0.0;
    const Matrix f = swap_operator(d);
    for (std::size_t t = 0; t < trials; ++t) {
      // Fuchs - van de Graaf: 1 - sqrt(F) <= T <= sqrt(1 - F).
      const DensityMatrix rho(random_density(rng, d, 1 + rng.index(d)));
      const DensityMatrix sigma(random_density(rng, d, 1 + rng.index(d)));
      const double fid = fidelity(rho, sigma);
      const double td = trace_distance(rho, sigma);
      fvdg_lo = std::max(fvdg_lo, (1.0 - std::sqrt(fid)) - td);
      fvdg_hi = std::max(fvdg_hi, td - std::sqrt(std::max(0.0, 1.0 - fid)));

      // Hoelder: |Tr[A^dagger B]| <= ||A||_p ||B||_q for (1, inf) and (2, 2).
      const auto dd = static_cast<Eigen::Index>(d);
      const Matrix a = ginibre(rng, dd, dd), b = ginibre(rng, dd, dd);
      const double ip = std::abs(hs_inner(a, b));
      holder1 = std::max(holder1, ip - schatten_norm(a, Schatten::One) * schatten_norm(b, Schatten::Inf));
      holder2 = std::max(holder2, ip - schatten_norm(a, Schatten::Two) * schatten_norm(b, Schatten::Two));

      // Rank bounds: ||X||_1 <= sqrt(r) ||X||_2 <= r ||X||_inf and ||X||_inf <= ||X||_2 <= ||X||_1.
      const auto rk = static_cast<Eigen::Index>(1 + rng.index(d));
      const Matrix x = ginibre(rng, dd, rk) * ginibre(rng, rk, dd);
      const double n1 = schatten_norm(x, Schatten::One), n2 = schatten_norm(x, Schatten::Two),
                   ni = schatten_norm(x, Schatten::Inf), sr = std::sqrt(static_cast<double>(rk));
      const double scale = std::max(1.0, n1);
      rank_a = std::max(rank_a, (n1 - sr * n2) / scale);
      rank_b = std::max(rank_b, (sr * n2 - static_cast<double>(rk) * ni) / scale);
      order = std::max(order, std::max(ni - n2, n2 - n1) / scale);

      // Swap trick: Tr[(A (x) B) F] = Tr[A B].
      swap = std::max(swap, std::abs((kron(a, b) * f).trace() - (a * b).trace()) / std::max(1.0, a.norm() * b.norm()));

      // Rank-one trace norm: || |psi><psi| - |phi><phi| ||_1 = 2 sqrt(1 - |<psi|phi>|^2).
      const Vector psi = random_vector(rng, d), phi = random_vector(rng, d);
      const double closed = 2.0 * std::sqrt(std::max(0.0, 1.0 - std::norm(psi.dot(phi))));
      rank_one = std::max(rank_one, std::abs(trace_norm(psi * psi.adjoint() - phi * phi.adjoint()) - closed));
    }
    const std::string sfx = " (d=" + std::to_string(d) + ")";
    r.checks.push_back(at_most("FvdG lower: 1-sqrt(F) - T" + sfx, fvdg_lo, 1e-9));
    r.checks.push_back(at_most("FvdG upper: T - sqrt(1-F)" + sfx, fvdg_hi, 1e-9));
    r.checks.push_back(at_most("Hoelder (1,inf) violation" + sfx, holder1, 1e-9));
    r.checks.push_back(at_most("Hoelder (2,2) violation" + sfx, holder2, 1e-9));
    r.checks.push_back(at_most("rank: ||X||_1 - sqrt(r)||X||_2" + sfx, rank_a, 1e-9));
    r.checks.push_back(at_most("rank: sqrt(r)||X||_2 - r||X||_inf" + sfx, rank_b, 1e-9));
    r.checks.push_back(at_most("norm order inf <= 2 <= 1 violation" + sfx, order, 1e-9));
    r.checks.push_back(at_most("swap trick deviation" + sfx, swap, 1e-9));
    r.checks.push_back(at_most("rank-one trace norm deviation" + sfx, rank_one, 1e-9));
  }
  return r;
}

Report designs(std::uint64_t) {
  Report r{"designs", {}};
  const auto ens = UnitaryEnsemble::explicit_set(clifford_group_dense(1));
  for (std::size_t k = 1; k <= 3; ++k) {
    const auto rep = verify_design(ens, k, 1e-10);
    r.checks.push_back(at_most("Clifford-1 moment deviation k=" + std::to_string(k), rep.max_deviation, 1e-10));
  }
  const auto rep4 = verify_design(ens, 4, 1e-10);
  r.checks.push_back(above("Clifford-1 moment deviation k=4", rep4.max_deviation, 1e-3));
  return r;
}

Report haar_moments(std::uint64_t seed) {
  Report r{"haar_moments", {}};
  const std::size_t samples = 100000;
  for (std::size_t d : {2, 4, 16}) {
    SeededRng rng(seed, 100 + d);
    std::vector<std::vector<double>> pw(4, std::vector<double>(samples));
    for (std::size_t i = 0; i < samples; ++i) {
      const double x = std::norm(sample_haar_state(rng, d).amplitudes()[0]);
      double p = 1.0;
      for (std::size_t k = 0; k < 4; ++k) pw[k][i] = (p *= x);
    }
    for (std::size_t k = 1; k <= 4; ++k) {
      const double expected = 1.0 / binom(k + d - 1, k);
      r.checks.push_back(three_sigma("E|<0|psi>|^" + std::to_string(2 * k) + " (d=" + std::to_string(d) + ")",
                                     mean(pw[k - 1]), expected, standard_error(pw[k - 1])));
    }
  }
  return r;
}

Report minimax(std::uint64_t seed) {
  Report r{"minimax", {}};
  SeededRng rng(seed, 4);
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto s = StabilizerGroup::computational_zero(n).conjugated_by(sample_clifford(rng, n));
    const RealVector ev = hermitian_eigenvalues(minimax_operator(s));
    const double two_n = std::ldexp(1.0, static_cast<int>(n));
    const double lambda2 = (two_n / 2.0 - 1.0) / (two_n - 1.0);
    const std::string sfx = " (n=" + std::to_string(n) + ")";
    r.checks.push_back(within("lambda_1 of Omega" + sfx, ev[ev.size() - 1], 1.0, 1e-12));
    r.checks.push_back(within("lambda_2 of Omega" + sfx, ev.size() > 1 ? ev[ev.size() - 2] : 0.0, lambda2, 1e-12));
    r.checks.push_back(within("nu = 1 - lambda_2" + sfx, minimax_spectral_gap(n), 1.0 - lambda2, 1e-12));
  }
  return r;
}

Report direct_cert(std::uint64_t seed) {
  Report r{"direct_cert", {}};
  const ConfidenceSpec spec{0.05, 0.1};
  const std::size_t trials = 10000;
  const auto target = ghz3();
  DirectCertOptions opts;
  opts.strategy = CertStrategy::StabilizerMinimax;

  const std::uint64_t planned = direct_cert_sample_count(target, spec, opts);
  r.checks.push_back(equal_int("planned n = ceil(2 ln(1/delta)/eps)", planned,
                               static_cast<std::uint64_t>(std::ceil(2.0 * std::log(10.0) / 0.05))));

  DeviceConfig clean;
  clean.n_qubits = 3;
  clean.target = target;
  clean.noise = NoiseModel::noiseless(8);
  clean.seed = seed;
  SimulatedDevice ideal(clean);
  std::size_t accepted = 0;
  for (std::size_t t = 0; t < trials; ++t)
    if (direct_state_certify(ideal, target, spec, opts, mix_seed(seed, t)).accepted()) ++accepted;
  r.checks.push_back(at_least("noiseless target accepted (of 10^4)", static_cast<double>(accepted), 10000.0));

  // Planted state at infidelity 2 eps along an orthogonal stabilizer state.
  const Vector psi = target.state_vector();
  const Vector phi = PauliString::parse("ZII").apply(psi);
  const Matrix planted = (1.0 - 2.0 * spec.epsilon) * psi * psi.adjoint() + 2.0 * spec.epsilon * phi * phi.adjoint();
  DeviceConfig noisy = clean;
  noisy.target = planted;
  noisy.seed = mix_seed(seed, 99);
  SimulatedDevice dev(noisy);
  const double infidelity = 1.0 - fidelity(PureState(psi), oracle::prepared_state(noisy));
  const double nu = minimax_spectral_gap(3);
  const double omega_pass = hs_inner(minimax_operator(target), oracle::prepared_state(noisy).matrix()).real();

  std::size_t rejected = 0, rejected47 = 0;
  std::uint64_t passes = 0, shots = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto plan = plan_direct_state(target, spec, opts, mix_seed(seed, 1000000 + t));
    const auto batches = execute(dev, plan.experiment);
    if (!analyze_direct(plan, batches).accepted()) ++rejected;
    const auto out = ordered_outcomes(plan.experiment, batches);
    bool fail47 = false;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i] == 0) ++passes;
      else if (i < 47) fail47 = true;
    }
    shots += out.size();
    if (fail47) ++rejected47;
  }
  const double p_hat = static_cast<double>(passes) / static_cast<double>(shots);
  r.checks.push_back(within("oracle infidelity of planted state", infidelity, 2.0 * spec.epsilon, 1e-12));
  r.checks.push_back(within("oracle Tr[Omega rho~] = 1 - nu * infidelity", omega_pass, 1.0 - nu * infidelity, 1e-12));
  r.checks.push_back(at_least("planted reject rate, n = 93", static_cast<double>(rejected) / trials, 0.9));
  r.checks.push_back(at_least("planted reject rate, first 47 rounds", static_cast<double>(rejected47) / trials, 0.9));
  r.checks.push_back(three_sigma("per-shot pass probability", p_hat, 1.0 - nu * infidelity,
                                 std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(shots))));
  return r;
}

Report dfe_suite(std::uint64_t seed) {
  Report r{"dfe", {}};
  const ConfidenceSpec spec{0.05, 0.05};
  const auto target = ghz3();
  DeviceConfig cfg;
  cfg.n_qubits = 3;
  cfg.target = target;
  cfg.noise = NoiseModel::noiseless(8);
  cfg.noise.prep_error = Channel::depolarizing(8, 0.9);
  cfg.seed = seed;
  SimulatedDevice dev(cfg);
  const double f_true = fidelity(PureState(target.state_vector()), oracle::prepared_state(cfg));
  r.checks.push_back(within("oracle fidelity under D_0.9", f_true, 0.9 + 0.1 / 8.0, 1e-12));

  DfeOptions wc{DfeMode::WellConditioned, 1.0};
  r.checks.push_back(equal_int("well-conditioned ell = ceil(2/eps^2 ln(2/delta))", dfe_ell(spec, wc),
                               static_cast<std::uint64_t>(std::ceil(2.0 / (0.05 * 0.05) * std::log(2.0 / 0.05)))));
  DfeOptions gen{DfeMode::General, 1.0};
  r.checks.push_back(equal_int("general ell = ceil(1/(eps^2 delta))", dfe_ell(spec, gen),
                               static_cast<std::uint64_t>(std::ceil(1.0 / (0.05 * 0.05 * 0.05) - 1e-9))));

  const std::size_t runs = 10000;
  for (const auto& [name, opts] : {std::pair{std::string("well-conditioned"), wc}, std::pair{std::string("general"), gen}}) {
    std::vector<double> y(runs);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < runs; ++t) {
      y[t] = dfe(dev, target, spec, opts, mix_seed(seed, (opts.mode == DfeMode::General ? 1u << 30 : 0u) + t)).value;
      if (std::abs(y[t] - f_true) <= spec.epsilon) ++hits;
    }
    r.checks.push_back(three_sigma(name + ": mean Y over 10^4 runs", mean(y), f_true, standard_error(y)));
    if (opts.mode == DfeMode::WellConditioned)
      r.checks.push_back(at_least(name + ": eps-accuracy hit rate", static_cast<double>(hits) / runs, 1.0 - spec.delta));
  }
  return r;
}

Report sfe_suite(std::uint64_t seed) {
  Report r{"sfe", {}};
  const ConfidenceSpec spec{0.1, 0.05};
  const auto target = bell();
  const Vector psi = target.state_vector();
  const auto [k, n] = sfe_sample_count(spec, {});
  const std::uint64_t k_ref = static_cast<std::uint64_t>(std::ceil(8.0 * std::log(20.0)));
  const double n0 = 160.0 / (0.1 * 0.1) * std::log(20.0);
  r.checks.push_back(equal_int("group size k = ceil(8 ln(1/delta))", k, k_ref));
  r.checks.push_back(equal_int("n = 160 eps^-2 ln(1/delta) rounded up to a multiple of k", n,
                               static_cast<std::uint64_t>(std::ceil(std::ceil(n0) / static_cast<double>(k_ref))) * k_ref));

  auto device_with = [&](Channel prep, std::uint64_t s) {
    DeviceConfig cfg;
    cfg.n_qubits = 2;
    cfg.target = target;
    cfg.noise = NoiseModel::noiseless(4);
    cfg.noise.prep_error = std::move(prep);
    cfg.seed = s;
    return cfg;
  };
  const std::vector<std::pair<std::string, Channel>> models = {
      {"identity", Channel::identity(4)},
      {"D_0.5", Channel::depolarizing(4, 0.5)},
      {"amplitude damping 0.3", Channel::amplitude_damping(0.3, 2)}};
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto cfg = device_with(models[i].second, mix_seed(seed, i));
    SimulatedDevice dev(cfg);
    const auto res = sfe(dev, target, spec, {}, mix_seed(seed, 10 + i));
    const double f = fidelity(PureState(psi), oracle::prepared_state(cfg));
    r.checks.push_back(below("Var[f] < 5, " + models[i].first, res.variance, 5.0));
    r.checks.push_back(three_sigma("mean f vs oracle fidelity, " + models[i].first, res.mean, f,
                                   std::sqrt(res.variance / static_cast<double>(res.fhat.size()))));
  }

  const auto cfg = device_with(Channel::depolarizing(4, 0.8), mix_seed(seed, 77));
  SimulatedDevice dev(cfg);
  const double f = fidelity(PureState(psi), oracle::prepared_state(cfg));
  r.checks.push_back(within("oracle fidelity under D_0.8", f, 0.85, 1e-12));
  const std::size_t runs = 200;
  std::size_t hits = 0;
  for (std::size_t t = 0; t < runs; ++t)
    if (std::abs(sfe(dev, target, spec, {}, mix_seed(seed, 5000 + t)).estimate.value - f) <= spec.epsilon) ++hits;
  r.checks.push_back(at_least("median-of-means hit rate (200 runs)", static_cast<double>(hits) / runs, 0.95));
  return r;
}

Report twirl_suite(std::uint64_t) {
  Report r{"twirl", {}};
  for (std::size_t n : {1, 2}) {
    const Channel ad = Channel::amplitude_damping(0.3, n);
    const Channel tw = twirl(ad, UnitaryEnsemble::clifford(n), TwirlMode::Exact);
    const std::size_t d = std::size_t{1} << n;
    const Channel dep = Channel::depolarizing(d, effective_depol_parameter(ad));
    r.checks.push_back(at_most("||Choi(twirl AD_0.3) - Choi(D_p)||_F, n=" + std::to_string(n),
                               (tw.choi() - dep.choi()).norm(), 1e-10));
  }
  return r;
}

// (X (x) id)(|psi><psi|) for a map given by its Choi matrix (output (x) input), ancilla of the input size.
Matrix apply_extended(const Matrix& choi, std::size_t din, std::size_t dout, const Vector& psi) {
  const auto di = static_cast<Eigen::Index>(din), dout_i = static_cast<Eigen::Index>(dout);
  Matrix out = Matrix::Zero(dout_i * di, dout_i * di);
  for (Eigen::Index i = 0; i < di; ++i) {
    for (Eigen::Index j = 0; j < di; ++j) {
      Matrix xij(dout_i, dout_i);  // X(|i><j|)
      for (Eigen::Index o = 0; o < dout_i; ++o)
        for (Eigen::Index p = 0; p < dout_i; ++p) xij(o, p) = choi(o * di + i, p * di + j);
      Matrix anc(di, di);  // sum_ab psi_ia conj(psi_jb) |a><b|
      for (Eigen::Index a = 0; a < di; ++a)
        for (Eigen::Index b = 0; b < di; ++b) anc(a, b) = psi[i * di + a] * std::conj(psi[j * di + b]);
      out += kron(xij, anc);
    }
  }
  return out;
}

Report diamond(std::uint64_t seed) {
  Report r{"diamond", {}};
  SeededRng rng(seed, 9);
  double worst = 0.0;
  for (std::size_t pair = 0; pair < 50; ++pair) {
    const Matrix u = sample_haar_unitary(rng, 2), v = sample_haar_unitary(rng, 2);
    const double closed = diamond_distance_unitaries(u, v);
    const Matrix ue = kron(u, Matrix::Identity(2, 2)), ve = kron(v, Matrix::Identity(2, 2));
    double best = 0.0;
    for (std::size_t s = 0; s < 10000; ++s) {
      const Vector psi = random_vector(rng, 4);
      const Vector a = ue * psi, b = ve * psi;
      best = std::max(best, 0.5 * trace_norm(a * a.adjoint() - b * b.adjoint()));
    }
    worst = std::max(worst, std::abs(best - closed));
  }
  r.checks.push_back(at_most("max |brute force - closed form| over 50 pairs", worst, 1e-3));

  double at_phi = 0.0, upper = -1e300;
  for (std::size_t t = 0; t < 1000; ++t) {
    const std::size_t d = 2 + (t % 2);
    const auto dd = static_cast<Eigen::Index>(d * d);
    Matrix h = ginibre(rng, dd, dd);
    h = 0.5 * (h + h.adjoint());  // Hermitian Choi: a Hermiticity-preserving map
    if (t % 3 == 0) h = random_channel(rng, d, 1 + rng.index(3)).choi() - random_channel(rng, d, 1 + rng.index(3)).choi();
    const auto [lo, hi] = diamond_trace_bounds(h, d);
    Vector phi = Vector::Zero(dd);
    for (std::size_t i = 0; i < d; ++i) phi[static_cast<Eigen::Index>(i * d + i)] = 1.0 / std::sqrt(static_cast<double>(d));
    at_phi = std::max(at_phi, std::abs(trace_norm(apply_extended(h, d, d, phi)) - lo) / std::max(1.0, lo));
    double best = trace_norm(apply_extended(h, d, d, phi));
    for (std::size_t s = 0; s < 50; ++s) best = std::max(best, trace_norm(apply_extended(h, d, d, random_vector(rng, d * d))));
    upper = std::max(upper, (best - hi) / std::max(1.0, hi));
  }
  r.checks.push_back(at_most("lower end ||J||_1 attained at max-entangled input (rel. dev)", at_phi, 1e-9));
  r.checks.push_back(at_most("sampled ||(X (x) id)(psi)||_1 - d ||J||_1 (rel.)", upper, 1e-9));
  return r;
}

RbOptions rb_lengths(std::size_t k, std::uint64_t s) {
  RbOptions o;
  o.lengths = {1, 2, 4, 8, 16, 32, 64, 128};
  o.sequences_per_length = k;
  o.shots_per_sequence = s;
  return o;
}

Report rb_suite(std::uint64_t seed) {
  Report r{"rb", {}};
  const auto opts = rb_lengths(30, 200);
  DeviceConfig cfg;
  cfg.n_qubits = 2;
  cfg.target = StabilizerGroup::computational_zero(2);
  cfg.noise = NoiseModel::noiseless(4);
  cfg.seed = seed;
  SimulatedDevice clean(cfg);
  const auto ideal = rb_standard(clean, opts, mix_seed(seed, 1));
  r.checks.push_back(within("noiseless p", ideal.p.value, 1.0, 1e-12));
  r.checks.push_back(within("noiseless A + B", ideal.curve.fit.a + ideal.curve.fit.b, 1.0, 1e-12));

  cfg.noise.gate_noise = Channel::depolarizing(4, 0.95);
  SimulatedDevice plain(cfg);
  const auto base = rb_standard(plain, opts, mix_seed(seed, 2));
  r.checks.push_back(within("p with D_0.95", base.p.value, 0.95, 0.01));

  // SPAM: depolarized preparation and a 5% readout flip 1 -> 0 on each qubit. Same sequences and
  // shot streams as the run above, so the shifts in A and B are not swamped by sequence sampling.
  cfg.noise.prep_error = Channel::depolarizing(4, 0.9);
  cfg.noise.meas_error = Channel::amplitude_damping(0.05, 2);
  SimulatedDevice spam(cfg);
  const auto with_spam = rb_standard(spam, opts, mix_seed(seed, 2));
  r.checks.push_back(within("p with D_0.95 and SPAM", with_spam.p.value, 0.95, 0.01));
  r.checks.push_back(above("|A(SPAM) - A|", std::abs(with_spam.curve.fit.a - base.curve.fit.a), 0.02));
  r.checks.push_back(above("|B(SPAM) - B|", std::abs(with_spam.curve.fit.b - base.curve.fit.b), 0.02));
  return r;
}

Report interleaved_suite(std::uint64_t seed) {
  Report r{"interleaved_rb", {}};
  DeviceConfig cfg;
  cfg.n_qubits = 2;
  cfg.target = StabilizerGroup::computational_zero(2);
  cfg.noise = NoiseModel::noiseless(4);
  cfg.noise.gate_noise = Channel::depolarizing(4, 0.95);
  cfg.noise.overrides["target"] = Channel::depolarizing(4, 0.98);
  cfg.seed = seed;
  SimulatedDevice dev(cfg);
  const UnitaritySource u{UnitaritySource::Kind::Oracle, unitarity(cfg.noise.gate_noise)};
  const auto res = rb_interleaved(dev, CliffordElement::cnot(2, 0, 1), rb_lengths(30, 10000), u, mix_seed(seed, 1));
  r.checks.push_back(at_most("|center - 0.98| - halfwidth", std::abs(res.center - 0.98) - res.halfwidth, 0.0));
  r.checks.push_back(below("halfwidth", res.halfwidth, 0.01));

  SeededRng rng(seed, 11);
  double worst = -1e300;
  for (std::size_t t = 0; t < 1000; ++t) {
    const Channel x = random_channel(rng, 2, 1 + rng.index(4));
    const Channel y = random_channel(rng, 2, 1 + rng.index(4));
    const auto b = composite_param_bound(effective_depol_parameter(compose(x, y)), effective_depol_parameter(y),
                                         unitarity(y));
    worst = std::max(worst, std::abs(effective_depol_parameter(x) - b.center) - b.halfwidth);
  }
  r.checks.push_back(at_most("composite bound violation over 10^3 random pairs", worst, 1e-9));
  return r;
}

Report xeb_suite(std::uint64_t seed) {
  Report r{"xeb", {}};
  const std::size_t n = 10, d = std::size_t{1} << n, circuits = 50;
  const std::uint64_t shots = 100000;
  const double dd = static_cast<double>(d);
  const double ideal = (dd - 1.0) / (dd + 1.0);

  std::vector<XebCircuit> circ;
  SeededRng rng(seed, 12);
  for (std::size_t c = 0; c < circuits; ++c)
    circ.push_back({"haar" + std::to_string(seed) + "-" + std::to_string(c),
                    std::make_shared<const Matrix>(sample_haar_unitary(rng, d))});

  auto run = [&](const Channel& noise, std::uint64_t s) {
    DeviceConfig cfg;
    cfg.n_qubits = n;
    cfg.target = StabilizerGroup::computational_zero(n);
    cfg.noise = NoiseModel::noiseless(d);
    cfg.noise.gate_noise = noise;
    cfg.seed = s;
    SimulatedDevice dev(cfg);
    std::vector<double> f;
    for (std::size_t c = 0; c < circuits; ++c) f.push_back(xeb(dev, circ[c], shots, XebEstimator::Linear, mix_seed(s, c)).estimate.value);
    return f;
  };
  const auto f0 = run(Channel::identity(d), mix_seed(seed, 1));
  r.checks.push_back(three_sigma("noiseless mean F_X", mean(f0), ideal, standard_error(f0)));
  const auto fu = run(Channel::depolarizing(d, 0.0), mix_seed(seed, 2));
  r.checks.push_back(three_sigma("uniform sampler mean F_X", mean(fu), 0.0, standard_error(fu)));
  const auto fp = run(Channel::depolarizing(d, 0.7), mix_seed(seed, 3));
  r.checks.push_back(three_sigma("global depolarizing 0.7 mean F_X", mean(fp), 0.7 * ideal, standard_error(fp)));

  const ConfidenceSpec spec{0.05, 0.05};
  const double l = std::log(2.0 * dd / spec.delta);
  const double m = std::exp(2.0) / (2.0 * spec.epsilon * spec.epsilon) * l * l * std::log(2.0 / spec.delta);
  r.checks.push_back(equal_int("planned m (eps=0.05, delta=0.05, d=1024)", xeb_planned_shots(spec, d),
                               static_cast<std::uint64_t>(std::ceil(m))));

  const auto pt = porter_thomas_check(*circ[0].unitary);
  r.checks.push_back(below("Porter-Thomas KS, Haar n=10", pt.ks_statistic, 0.05));
  r.checks.push_back(within("mean of d p_U(x), Haar n=10", pt.moments[0], 1.0, 1e-9));
  const auto pid = porter_thomas_check(Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
  r.checks.push_back(at_least("Porter-Thomas KS, identity circuit", pid.ks_statistic, 0.05));
  return r;
}

const std::map<std::string, std::function<Report(std::uint64_t)>>& registry() {
  static const std::map<std::string, std::function<Report(std::uint64_t)>> r = {
      {"norms", norms},           {"designs", designs},     {"haar_moments", haar_moments},
      {"minimax", minimax},       {"direct_cert", direct_cert}, {"dfe", dfe_suite},
      {"sfe", sfe_suite},         {"twirl", twirl_suite},   {"diamond", diamond},
      {"rb", rb_suite},           {"interleaved_rb", interleaved_suite}, {"xeb", xeb_suite}};
  return r;
}

}  // namespace

bool Report::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const std::vector<std::string>& suite_ids() {
  static const std::vector<std::string> ids = {"norms", "designs",    "haar_moments", "minimax",
                                               "direct_cert", "dfe",  "sfe",          "twirl",
                                               "diamond", "rb",       "interleaved_rb", "xeb"};
  return ids;
}

Report run_suite(const std::string& id, std::uint64_t seed) {
  const auto& reg = registry();
  const auto it = reg.find(id);
  if (it == reg.end()) {
    std::string known;
    for (const auto& s : suite_ids()) known += (known.empty() ? "" : ", ") + s;
    throw std::invalid_argument("unknown suite '" + id + "' (known: " + known + ")");
  }
  return it->second(seed);
}

}  // namespace qcert::suites
