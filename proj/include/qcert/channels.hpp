#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qcert/linalg.hpp"
#include "qcert/randomness.hpp"

namespace qcert {

/// Largest din * dout for which a Choi matrix is materialized.
inline constexpr std::size_t kMaxChoiSide = 1024;

/// Quantum channel L(C^din) -> L(C^dout).
///
/// Identity, unitary and depolarizing channels keep their structure so they can act on large
/// dimensions; Kraus operators and the Choi matrix are built on first use and shared between copies.
///
/// Choi convention: Choi(X) = sum_ij X(E_ij) (x) E_ij (output factor first, unnormalized), so that
/// Tr[B X(A)] = Tr[(B (x) A^T) Choi(X)].
class Channel {
 public:
  enum class Kind { Identity, Unitary, Depolarizing, Kraus };

  /// Identity channel on C^1; placeholder for default-constructed holders.
  Channel();

  static Channel identity(std::size_t d);
  static Channel unitary(const Matrix& u);
  /// D_p(X) = p X + (1 - p) Tr[X] 1/d; p must lie in the CPT range.
  static Channel depolarizing(std::size_t d, double p);
  /// Single-qubit amplitude damping tensored over n qubits.
  static Channel amplitude_damping(double gamma, std::size_t n_qubits = 1);
  /// Independent bit flip with probability p on each of n qubits.
  static Channel bit_flip(double p, std::size_t n_qubits = 1);
  /// General channel from Kraus operators (dout x din); validated CP by construction and TP when require_tp.
  static Channel kraus_list(std::vector<Matrix> kraus, bool require_tp = true);
  /// Channel from an (unnormalized) Choi matrix; Kraus operators from its eigendecomposition.
  static Channel from_choi(const Matrix& choi, std::size_t din, std::size_t dout);

  Kind kind() const { return kind_; }
  std::size_t dim_in() const { return din_; }
  std::size_t dim_out() const { return dout_; }
  /// Depolarizing parameter for Identity (1) and Depolarizing kinds.
  double depolarizing_parameter() const;
  /// Unitary matrix for Identity and Unitary kinds.
  const Matrix& unitary_matrix() const;

  const std::vector<Matrix>& kraus() const;
  const Matrix& choi() const;
  /// Normalized Choi state Choi / din.
  DensityMatrix choi_state() const;

  Matrix apply(const Matrix& x) const;
  DensityMatrix apply(const DensityMatrix& rho) const;
  /// Heisenberg-picture map sum_i K_i^dagger E K_i.
  Matrix adjoint_apply(const Matrix& e) const;

  bool is_cp(double tol) const;
  bool is_tp(double tol) const;

 private:
  struct Cache;

  Channel(Kind kind, std::size_t din, std::size_t dout);

  Kind kind_ = Kind::Identity;
  std::size_t din_ = 0;
  std::size_t dout_ = 0;
  double p_ = 1.0;
  Matrix u_;
  std::shared_ptr<Cache> cache_;
};

/// outer o inner: apply `inner` first.
Channel compose(const Channel& outer, const Channel& inner);
Channel tensor(const Channel& a, const Channel& b);
/// Kraus operators reconstructed from a Choi matrix (eigenvalues below tol dropped).
std::vector<Matrix> kraus_from_choi(const Matrix& choi, std::size_t din, std::size_t dout, double tol = 1e-12);
/// Choi matrix sum_k |K_k>><<K_k| of a Kraus list.
Matrix choi_from_kraus(const std::vector<Matrix>& kraus);

/// <X, Y> = Tr[Choi(X)^dagger Choi(Y)].
double channel_inner(const Channel& x, const Channel& y);
/// F_avg(X, Y) = (<X, Y> + <X(1), Y(1)>) / (d (d + 1)).
double avg_gate_fidelity(const Channel& x, const Channel& y);
/// F_e(X, Y) = <X, Y> / d^2.
double entanglement_fidelity(const Channel& x, const Channel& y);
/// p(X) = (d F_avg(id, X) - 1) / (d - 1).
double effective_depol_parameter(const Channel& ch);
/// u(X) = d/(d-1) F_avg(X', X') with X' = X o (id - D_0), the channel restricted to traceless inputs.
double unitarity(const Channel& ch);

enum class TwirlMode { Exact, MonteCarlo };
/// T(X) = E_U U^dagger o X o U over the ensemble; Exact needs an explicit set, Clifford on <= 2 qubits, or Haar.
Channel twirl(const Channel& ch, const UnitaryEnsemble& ensemble, TwirlMode mode, std::size_t n_samples = 0,
              SeededRng* rng = nullptr);

/// Half the diamond norm of U.U^dagger - V.V^dagger: sqrt(1 - dist(0, conv{eig(U^dagger V)})^2).
double diamond_distance_unitaries(const Matrix& u, const Matrix& v);
/// (||J||_1, din ||J||_1) for the Choi state J = choi / din of a Hermiticity-preserving map; brackets its diamond norm.
std::pair<double, double> diamond_trace_bounds(const Matrix& choi_diff, std::size_t din);
std::pair<double, double> diamond_trace_bounds(const Channel& a, const Channel& b);

struct CompositeBound {
  double center = 0.0;
  double halfwidth = 0.0;
};
/// Interval for p(X) given p(X o Y), p(Y) and u(Y).
CompositeBound composite_param_bound(double p_xy, double p_y, double u_y);

/// Gate-independent noise model with SPAM channels and per-gate overrides.
struct NoiseModel {
  Channel gate_noise;
  Channel prep_error;
  Channel meas_error;
  std::map<std::string, Channel> overrides;

  static NoiseModel noiseless(std::size_t d);
  /// Noise after gate `gate_id`: the override if one exists, else gate_noise.
  const Channel& noise_for(const std::string& gate_id) const;
  void validate(std::size_t d) const;
};

}  // namespace qcert
