#include <doctest.h>

#include "helpers.hpp"
#include "qcert/channels.hpp"
#include "qcert/stabilizer.hpp"
#include "qcert/stats.hpp"

using namespace qcert;
using qcert::testing::dist;

namespace {

Matrix pauli(const char* s) { return pauli_to_dense(PauliString::parse(s)); }

Vector phi_plus(std::size_t d) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(d * d));
  for (std::size_t i = 0; i < d; ++i) v[static_cast<Eigen::Index>(i * d + i)] = 1.0 / std::sqrt(static_cast<double>(d));
  return v;
}

}  // namespace

TEST_CASE("depolarizing channel") {
  CHECK(dist(Channel::depolarizing(2, 1.0).choi(), Channel::identity(2).choi()) < 1e-15);
  const auto out = Channel::depolarizing(2, 0.0).apply(qcert::testing::ket0_projector(2));
  CHECK(dist(out, Matrix::Identity(2, 2) * 0.5) < 1e-15);
  for (double q : {0.3, 0.9}) CHECK(effective_depol_parameter(Channel::depolarizing(4, q)) == doctest::Approx(q));
  CHECK_THROWS(Channel::depolarizing(2, 1.5));
  CHECK_THROWS(Channel::depolarizing(2, -0.5));  // below -1/(d^2 - 1)
  CHECK_NOTHROW(Channel::depolarizing(2, -1.0 / 3.0));
}

TEST_CASE("representation invariants") {
  SeededRng rng(1);
  for (const auto& ch : {Channel::amplitude_damping(0.3, 2), Channel::bit_flip(0.1, 2), Channel::depolarizing(4, 0.7),
                         Channel::unitary(sample_haar_unitary(rng, 4))}) {
    CHECK(ch.is_cp(1e-10));
    CHECK(ch.is_tp(1e-9));
    CHECK(dist(choi_from_kraus(ch.kraus()), ch.choi()) < 1e-10);
    CHECK(dist(partial_trace(ch.choi(), {ch.dim_out(), ch.dim_in()}, 0), Matrix::Identity(4, 4)) < 1e-9);
    const auto back = Channel::from_choi(ch.choi(), 4, 4);
    CHECK(dist(back.choi(), ch.choi()) < 1e-10);
  }
  Matrix not_tp = Matrix::Identity(2, 2) * 0.9;
  CHECK_THROWS(Channel::kraus_list({not_tp}));
  CHECK_NOTHROW(Channel::kraus_list({not_tp}, false));
}

TEST_CASE("composition and application") {
  SeededRng rng(2);
  const auto ad = Channel::amplitude_damping(0.2);
  CHECK(dist(compose(Channel::identity(2), ad).choi(), ad.choi()) < 1e-12);
  const Matrix u = sample_haar_unitary(rng, 2);
  const Matrix rho = qcert::testing::random_density(rng, 2);
  CHECK(dist(Channel::unitary(u).apply(rho), u * rho * u.adjoint()) < 1e-14);
  CHECK(dist(compose(Channel::depolarizing(2, 0.5), Channel::depolarizing(2, 0.5)).choi(),
             Channel::depolarizing(2, 0.25).choi()) < 1e-12);
  // outer o inner applies inner first
  const auto x = Channel::unitary(pauli("X"));
  const Matrix got = compose(ad, x).apply(qcert::testing::ket0_projector(2));
  CHECK(dist(got, ad.apply(x.apply(qcert::testing::ket0_projector(2)))) < 1e-15);
  CHECK(dist(tensor(ad, ad).choi(), Channel::amplitude_damping(0.2, 2).choi()) < 1e-12);
  const Matrix e = pauli("Z");
  CHECK(std::abs(hs_inner(e, ad.apply(rho)) - hs_inner(ad.adjoint_apply(e), rho)) < 1e-14);
}

TEST_CASE("choi states") {
  const Vector phi = phi_plus(2);
  CHECK(dist(Channel::identity(2).choi_state().matrix(), phi * phi.adjoint()) < 1e-15);
  CHECK(dist(Channel::depolarizing(2, 0.0).choi_state().matrix(), Matrix::Identity(4, 4) / 4.0) < 1e-15);
  SeededRng rng(3);
  const Matrix j = Channel::unitary(sample_haar_unitary(rng, 2)).choi_state().matrix();
  CHECK(hermitian_eigenvalues(j).maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("average gate fidelity") {
  const auto id = Channel::identity(2);
  CHECK(avg_gate_fidelity(id, id) == doctest::Approx(1.0));
  for (double p : {0.0, 0.5, 0.9}) CHECK(avg_gate_fidelity(id, Channel::depolarizing(2, p)) == doctest::Approx(p + (1 - p) / 2));
  CHECK(avg_gate_fidelity(id, Channel::unitary(pauli("Z"))) == doctest::Approx(1.0 / 3.0));
  CHECK(entanglement_fidelity(id, Channel::depolarizing(2, 0.9)) == doctest::Approx(0.9 + 0.1 / 4));

  // Monte-Carlo over Haar input states.
  SeededRng rng(4);
  const auto ad = Channel::amplitude_damping(0.3);
  std::vector<double> f;
  for (int i = 0; i < 10000; ++i) {
    const auto psi = sample_haar_state(rng, 2);
    f.push_back(fidelity(psi, ad.apply(psi.density())));
  }
  CHECK(std::abs(mean(f) - avg_gate_fidelity(id, ad)) < 3.0 * standard_error(f));
}

TEST_CASE("effective depolarizing parameter and unitarity") {
  const auto id = Channel::identity(2);
  CHECK(effective_depol_parameter(id) == doctest::Approx(1.0));
  CHECK(unitarity(id) == doctest::Approx(1.0));
  for (double q : {0.2, 0.8}) {
    CHECK(effective_depol_parameter(Channel::depolarizing(2, q)) == doctest::Approx(q));
    CHECK(unitarity(Channel::depolarizing(2, q)) == doctest::Approx(q * q));
  }
  SeededRng rng(5);
  CHECK(unitarity(Channel::unitary(sample_haar_unitary(rng, 4))) == doctest::Approx(1.0));
  const auto ad = Channel::amplitude_damping(0.3);
  const double p = effective_depol_parameter(ad);
  CHECK(unitarity(ad) >= p * p - 1e-12);
}

TEST_CASE("twirls") {
  const auto cliff = UnitaryEnsemble::clifford(1);
  const auto d = Channel::depolarizing(2, 0.6);
  CHECK(dist(twirl(d, cliff, TwirlMode::Exact).choi(), d.choi()) < 1e-12);
  CHECK(dist(twirl(Channel::identity(2), cliff, TwirlMode::Exact).choi(), Channel::identity(2).choi()) < 1e-12);
  const auto ad = Channel::amplitude_damping(0.3);
  const auto tw = twirl(ad, cliff, TwirlMode::Exact);
  CHECK(dist(tw.choi(), Channel::depolarizing(2, effective_depol_parameter(ad)).choi()) < 1e-10);
  SeededRng rng(6);
  const auto mc = twirl(ad, UnitaryEnsemble::haar(2), TwirlMode::MonteCarlo, 4000, &rng);
  CHECK(dist(mc.choi(), tw.choi()) < 0.05);
}

TEST_CASE("diamond distance of unitaries") {
  const Matrix id = Matrix::Identity(2, 2);
  CHECK(diamond_distance_unitaries(id, id) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(diamond_distance_unitaries(id, pauli("Z")) == doctest::Approx(1.0));
  Matrix s = Matrix::Identity(2, 2);
  s(1, 1) = cplx(0.0, 1.0);
  CHECK(diamond_distance_unitaries(id, s) == doctest::Approx(1.0 / std::sqrt(2.0)));

  // Brute force over random inputs on C^2 (x) C^2.
  SeededRng rng(7);
  double best = 0.0;
  const Matrix se = kron(s, id), ie = Matrix::Identity(4, 4);
  for (int i = 0; i < 10000; ++i) {
    const Vector psi = sample_haar_state(rng, 4).amplitudes();
    const Vector a = ie * psi, b = se * psi;
    best = std::max(best, 0.5 * schatten_norm(a * a.adjoint() - b * b.adjoint(), Schatten::One));
  }
  CHECK(best <= 1.0 / std::sqrt(2.0) + 1e-12);
  CHECK(best == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));
}

TEST_CASE("diamond trace bounds") {
  const auto zero = diamond_trace_bounds(Matrix::Zero(4, 4), 2);
  CHECK(zero.first == 0.0);
  CHECK(zero.second == 0.0);

  // r(X) = 1 - F_avg; (d+1)/d r <= half the diamond distance <= upper/2.
  const auto id = Channel::identity(2), dp = Channel::depolarizing(2, 0.9);
  const auto [lo, hi] = diamond_trace_bounds(id, dp);
  const double r = 1.0 - avg_gate_fidelity(id, dp);
  CHECK(lo <= hi);
  CHECK(1.5 * r <= 0.5 * hi + 1e-12);

  SeededRng rng(8);
  for (int t = 0; t < 100; ++t) {
    const Matrix u = sample_haar_unitary(rng, 2), v = sample_haar_unitary(rng, 2);
    const auto [l, h] = diamond_trace_bounds(Channel::unitary(u), Channel::unitary(v));
    const double exact = 2.0 * diamond_distance_unitaries(u, v);  // full diamond norm
    CHECK(l <= exact + 1e-9);
    CHECK(exact <= h + 1e-9);
  }
}

TEST_CASE("composite parameter bound") {
  const auto b1 = composite_param_bound(1.0, 1.0, 1.0);
  CHECK(b1.center == doctest::Approx(1.0));
  CHECK(b1.halfwidth == doctest::Approx(0.0));
  const double a = 0.97, b = 0.9;
  const auto b2 = composite_param_bound(a * b, b, b * b);
  CHECK(b2.center == doctest::Approx(a));
  CHECK(b2.halfwidth == doctest::Approx(0.0).epsilon(1e-7));

  SeededRng rng(9);
  for (int t = 0; t < 200; ++t) {
    const auto x = Channel::unitary(sample_haar_unitary(rng, 2));
    const auto y = compose(Channel::amplitude_damping(0.3 * rng.uniform()), Channel::depolarizing(2, 0.8 + 0.2 * rng.uniform()));
    const auto bd = composite_param_bound(effective_depol_parameter(compose(x, y)), effective_depol_parameter(y), unitarity(y));
    CHECK(std::abs(effective_depol_parameter(x) - bd.center) <= bd.halfwidth + 1e-9);
  }
}
