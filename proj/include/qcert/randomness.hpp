#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "qcert/linalg.hpp"

namespace qcert {

/// Reproducible random source: identical (seed, stream) pairs yield identical sequences.
/// Parallel workers use disjoint stream ids derived from the work-item index.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Uniform double in [0, 1).
  double uniform();
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);
  bool coin() { return (engine_() >> 63) != 0; }
  cplx complex_normal();  // E|z|^2 = 1

  /// Child generator on a derived stream; used to hand out independent sub-streams.
  SeededRng split(std::uint64_t child) const;

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Mixes two words into a well-spread 64-bit value (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

Matrix sample_haar_unitary(SeededRng& rng, std::size_t d);
PureState sample_haar_state(SeededRng& rng, std::size_t d);

/// Size guard for k-fold tensor power operators (d^k x d^k dense).
inline constexpr std::size_t kTensorPowerEntryBudget = 1'000'000;

/// Operator permuting the k tensor factors of (C^d)^{(x)k}: factor i is sent to slot perm[i].
Matrix permutation_operator(std::size_t d, const std::vector<std::size_t>& perm);
/// Projector onto the symmetric subspace of (C^d)^{(x)k}.
Matrix sym_projector(std::size_t d, std::size_t k);
/// Projector onto the antisymmetric subspace of C^d (x) C^d.
Matrix antisym_projector(std::size_t d);
/// Dimension of the symmetric subspace, binom(k + d - 1, k).
double sym_subspace_dim(std::size_t d, std::size_t k);

Matrix tensor_power(const Matrix& a, std::size_t k);

/// A distribution over unitaries on C^dim.
struct UnitaryEnsemble {
  enum class Kind { Haar, Clifford, Explicit };

  Kind kind = Kind::Haar;
  std::size_t dim = 2;
  std::vector<Matrix> unitaries;  // Explicit only
  std::vector<double> weights;    // Explicit only

  static UnitaryEnsemble haar(std::size_t dim);
  /// Uniform distribution on the n-qubit Clifford group (sampled via tableaux).
  static UnitaryEnsemble clifford(std::size_t n_qubits);
  /// Finite ensemble; empty weights mean uniform.
  static UnitaryEnsemble explicit_set(std::vector<Matrix> unitaries, std::vector<double> weights = {});

  Matrix sample(SeededRng& rng) const;
};

/// k-th moment operator E[U^{(x)k} A U^{dagger (x)k}]. Exact weighted sum for explicit
/// ensembles; Monte-Carlo average over n_samples draws otherwise.
Matrix moment_operator(const UnitaryEnsemble& ensemble, std::size_t k, const Matrix& a, std::size_t n_samples,
                       SeededRng& rng);

/// Haar k-th moment of A on (C^d)^{(x)k}, by projecting onto the permutation operators (Weingarten).
Matrix haar_moment(const Matrix& a, std::size_t d, std::size_t k);
/// Haar second moment of an arbitrary A on C^d (x) C^d: c_sym P_sym + c_alt P_alt.
Matrix haar_second_moment(const Matrix& a, std::size_t d);

struct DesignReport {
  std::size_t k = 0;
  std::size_t probes = 0;
  double max_deviation = 0.0;  // max entrywise deviation from the Haar moment over all probes
  bool is_design = false;
};

/// Compares the exact moment operator of an explicit ensemble with the Haar closed forms on a
/// spanning probe set: all matrix units for k <= 2, product operators B^{(x)k} for k >= 3.
DesignReport verify_design(const UnitaryEnsemble& ensemble, std::size_t k, double tol = 1e-10);

}  // namespace qcert
