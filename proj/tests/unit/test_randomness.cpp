#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "qcert/randomness.hpp"
#include "qcert/stabilizer.hpp"
#include "qcert/stats.hpp"

using namespace qcert;
using qcert::testing::dist;

TEST_CASE("seeded streams are reproducible and distinct") {
  SeededRng a(42, 1), b(42, 1), c(42, 2);
  const double x = a.uniform();
  CHECK(x == b.uniform());
  CHECK(x != c.uniform());
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
}

TEST_CASE("haar unitary samples") {
  SeededRng rng(1);
  const Matrix u1 = sample_haar_unitary(rng, 1);
  CHECK(std::abs(u1(0, 0)) == doctest::Approx(1.0));
  const Matrix u = sample_haar_unitary(rng, 5);
  CHECK(is_unitary(u, 1e-12));

  std::vector<double> m2, m4;
  for (int i = 0; i < 100000; ++i) {
    const double x = std::norm(sample_haar_unitary(rng, 4)(0, 0));
    m2.push_back(x);
    m4.push_back(x * x);
  }
  CHECK(std::abs(mean(m2) - 0.25) < 3.0 * standard_error(m2));
  CHECK(std::abs(mean(m4) - 0.1) < 3.0 * standard_error(m4));
}

TEST_CASE("haar state moments") {
  SeededRng rng(2);
  CHECK(std::abs(sample_haar_state(rng, 1).amplitudes()[0]) == doctest::Approx(1.0));
  std::vector<double> m4, m2;
  for (int i = 0; i < 100000; ++i) {
    m4.push_back(std::pow(std::norm(sample_haar_state(rng, 2).amplitudes()[0]), 2));
    m2.push_back(std::norm(sample_haar_state(rng, 8).amplitudes()[0]));
  }
  CHECK(std::abs(mean(m4) - 1.0 / 3.0) < 3.0 * standard_error(m4));
  CHECK(std::abs(mean(m2) - 0.125) < 3.0 * standard_error(m2));
}

TEST_CASE("symmetric projector") {
  CHECK(sym_projector(2, 2).trace().real() == doctest::Approx(3.0));
  CHECK(sym_projector(3, 2).trace().real() == doctest::Approx(6.0));
  const Matrix p = sym_projector(2, 3);
  CHECK(dist(p * p, p) < 1e-12);
  CHECK(sym_subspace_dim(4, 3) == doctest::Approx(20.0));
  CHECK(dist(antisym_projector(3) + sym_projector(3, 2), Matrix::Identity(9, 9)) < 1e-12);
}

TEST_CASE("moment operators") {
  SeededRng rng(3);
  const auto haar = UnitaryEnsemble::haar(2);
  CHECK(dist(moment_operator(haar, 1, Matrix::Identity(2, 2), 10, rng), Matrix::Identity(2, 2)) < 1e-12);

  // Monte-Carlo second moment against the closed form; the error of each entry is O(1/sqrt(n)).
  const Matrix a = qcert::testing::random_matrix(rng, 4, 4);
  const Matrix mc = moment_operator(haar, 2, a, 20000, rng);
  CHECK(dist(mc, haar_second_moment(a, 2)) < 0.1);
  CHECK(dist(haar_moment(a, 2, 2), haar_second_moment(a, 2)) < 1e-12);

  // Clifford-1 third moment of a product of pure states is c P_sym.
  const auto cliff = UnitaryEnsemble::explicit_set(clifford_group_dense(1));
  const Matrix a3 = tensor_power(qcert::testing::ket0_projector(2), 3);
  const Matrix p = sym_projector(2, 3);
  const Matrix got = moment_operator(cliff, 3, a3, 0, rng);
  CHECK(dist(got, (p * a3).trace() / p.trace() * p) < 1e-12);
}

TEST_CASE("haar moment is the projection onto permutations") {
  SeededRng rng(4);
  const Matrix a = qcert::testing::random_matrix(rng, 8, 8);
  const Matrix t = haar_moment(a, 2, 3);
  // A twirl is idempotent and trace preserving, and commutes with U^{(x)3}.
  CHECK(dist(haar_moment(t, 2, 3), t) < 1e-10);
  CHECK(std::abs(t.trace() - a.trace()) < 1e-10);
  const Matrix u3 = tensor_power(sample_haar_unitary(rng, 2), 3);
  CHECK(dist(u3 * t * u3.adjoint(), t) < 1e-10);
}

TEST_CASE("design verification") {
  const auto cliff = UnitaryEnsemble::explicit_set(clifford_group_dense(1));
  CHECK(verify_design(cliff, 2).is_design);
  CHECK(verify_design(cliff, 3).is_design);
  CHECK_FALSE(verify_design(cliff, 4).is_design);
  const auto paulis = UnitaryEnsemble::explicit_set(
      {Matrix::Identity(2, 2), pauli_to_dense(PauliString::parse("X")), pauli_to_dense(PauliString::parse("Y")),
       pauli_to_dense(PauliString::parse("Z"))});
  CHECK(verify_design(paulis, 1).is_design);
  CHECK_FALSE(verify_design(paulis, 2).is_design);
}
