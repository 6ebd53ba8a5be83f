#pragma once

// Certification and estimation protocols. Each one only sees a MeasurementDevice plus a classical
// description of the target, and is split into plan (settings and shot counts), execute (device
// calls) and analyze (outcome counts to a verdict or estimate) so recorded lab data can stand in
// for the simulator.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qcert/channels.hpp"
#include "qcert/device.hpp"
#include "qcert/stabilizer.hpp"
#include "qcert/stats.hpp"

namespace qcert {

/// A protocol ran but could not produce a result (e.g. the decay fit did not converge).
class ProtocolFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Verdict {
  enum class Decision { Accept, Reject };

  Decision decision = Decision::Reject;
  double epsilon = 0.0;
  double delta = 0.0;
  std::uint64_t n_used = 0;
  std::uint64_t n_planned = 0;
  std::string protocol;
  std::string distance;  // "infidelity" or "trace_distance"
  /// Set by certify_from_estimate: the infidelity threshold actually tested.
  std::optional<double> infidelity_threshold;

  bool accepted() const { return decision == Decision::Accept; }
};

// ---------------------------------------------------------------------------
// Plans

struct PlannedMeasurement {
  MeasurementSetting setting;
  std::uint64_t shots = 0;
  std::uint64_t stream = 0;
  std::uint64_t first_shot = 0;
};

struct ExperimentPlan {
  std::string protocol;
  std::uint64_t seed = 0;
  std::vector<PlannedMeasurement> measurements;
  /// Draw position -> measurement index, for protocols whose analysis depends on shot order.
  /// With aggregation one measurement serves every draw of the same setting.
  std::vector<std::size_t> sequence;
  std::uint64_t planned_n = 0;

  std::uint64_t total_shots() const;
};

/// Runs every planned measurement (in parallel over measurements). Batch i answers measurement i.
std::vector<ShotBatch> execute(MeasurementDevice& device, const ExperimentPlan& plan);

/// Outcome index of every draw in plan.sequence. An aggregated measurement's outcomes are put in a
/// seeded random order and handed to its draws in sequence order.
std::vector<std::size_t> ordered_outcomes(const ExperimentPlan& plan, const std::vector<ShotBatch>& batches);

// ---------------------------------------------------------------------------
// Observables

struct ObservablePlan {
  ExperimentPlan experiment;
  std::vector<double> eigenvalues;  // value of each POVM outcome
  ConfidenceSpec spec;
};

ObservablePlan plan_observable(const Matrix& observable, const ConfidenceSpec& spec, std::uint64_t seed);
Estimate analyze_observable(const ObservablePlan& plan, const std::vector<ShotBatch>& batches);
/// Empirical mean of eigenvalue outcomes over hoeffding_n(spectral range) shots.
Estimate estimate_observable(MeasurementDevice& device, const Matrix& observable, const ConfidenceSpec& spec,
                             std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Direct state certification

enum class CertStrategy { ExactPovm, StabilizerMinimax, Custom };

/// One binary test of a custom strategy: pass effect E_i drawn with weight w_i; Omega = sum w_i E_i.
struct CustomTest {
  Matrix pass_effect;
  double weight = 1.0;
};

struct DirectCertOptions {
  CertStrategy strategy = CertStrategy::StabilizerMinimax;
  std::vector<CustomTest> custom;
  /// Stop at the first failed test; otherwise every planned test counts.
  bool adaptive = true;
};

using CertTarget = std::variant<StabilizerGroup, PureState>;

/// nu = 2^{n-1} / (2^n - 1), the gap 1 - lambda_2 of the minimax stabilizer strategy.
double minimax_spectral_gap(std::size_t n_qubits);
/// Dense Omega = (2^n - 1)^{-1} sum of the nontrivial stabilizer elements' +1 projectors; n <= 10.
Matrix minimax_operator(const StabilizerGroup& s);
/// Planned sample count of a strategy (custom strategies use nu(Omega) = 1 - lambda_2(Omega)).
std::uint64_t direct_cert_sample_count(const CertTarget& target, const ConfidenceSpec& spec,
                                       const DirectCertOptions& options);

struct DirectCertPlan {
  ExperimentPlan experiment;
  ConfidenceSpec spec;
  bool adaptive = true;
};

/// Every measurement's outcome 0 is "pass".
DirectCertPlan plan_direct_state(const CertTarget& target, const ConfidenceSpec& spec, const DirectCertOptions& options,
                                 std::uint64_t seed, bool aggregate = true);
Verdict analyze_direct(const DirectCertPlan& plan, const std::vector<ShotBatch>& batches);
Verdict direct_state_certify(MeasurementDevice& device, const CertTarget& target, const ConfidenceSpec& spec,
                             const DirectCertOptions& options = {}, std::uint64_t seed = 0);

/// Certifies a Clifford gate (device gate id `gate_id`) in entanglement infidelity by testing random
/// stabilizers of its Choi state through Pauli-eigenstate inputs and Pauli measurements.
DirectCertPlan plan_direct_process(const CliffordElement& target, const std::string& gate_id,
                                   const ConfidenceSpec& spec, bool adaptive, std::uint64_t seed,
                                   bool aggregate = true);
Verdict direct_process_certify(MeasurementDevice& device, const CliffordElement& target, const ConfidenceSpec& spec,
                               const std::string& gate_id = "target", bool adaptive = true, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Direct fidelity estimation

enum class DfeMode { General, WellConditioned };

struct DfeOptions {
  DfeMode mode = DfeMode::General;
  double alpha = 1.0;  // well-conditioned lower bound on nonzero |Tr[W_k rho]|
};

using FidelityTarget = std::variant<StabilizerGroup, PureState>;

struct DfePlan {
  ExperimentPlan experiment;
  ConfidenceSpec spec;
  DfeMode mode = DfeMode::General;
  std::uint64_t ell = 0;
  double expected_total = 0.0;                // ell * sum_k q_k m_k
  std::vector<double> expectation;          // Tr[W rho] of each measurement's Pauli
  std::vector<std::uint64_t> shots_per_draw;  // m_k of each measurement's Pauli
};

/// ell = ceil(1/(eps^2 delta)) (general) or ceil(2/(alpha eps)^2 ln(2/delta)) (well-conditioned).
std::uint64_t dfe_ell(const ConfidenceSpec& spec, const DfeOptions& options);
DfePlan plan_dfe(const FidelityTarget& target, const ConfidenceSpec& spec, const DfeOptions& options,
                 std::uint64_t seed, bool aggregate = true);
Estimate analyze_dfe(const DfePlan& plan, const std::vector<ShotBatch>& batches);
Estimate dfe(MeasurementDevice& device, const FidelityTarget& target, const ConfidenceSpec& spec,
             const DfeOptions& options = {}, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Shadow fidelity estimation

enum class SfeEnsemble { Clifford, Haar };

struct SfeOptions {
  SfeEnsemble ensemble = SfeEnsemble::Clifford;
  double constant = 160.0;
  std::optional<std::uint64_t> n_override;  // rounded up to a multiple of the group size
};

struct SfePlan {
  ExperimentPlan experiment;
  ConfidenceSpec spec;
  std::uint64_t group_size = 0;  // k = ceil(8 ln(1/delta))
  std::uint64_t n_groups = 0;
  std::vector<std::vector<double>> overlaps;  // per measurement: <b|U rho U^dagger|b> for every b
};

struct SfeResult {
  Estimate estimate;  // median of means
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> fhat;
};

/// Group size k and total n (a multiple of k, at least constant/eps^2 ln(1/delta)).
std::pair<std::uint64_t, std::uint64_t> sfe_sample_count(const ConfidenceSpec& spec, const SfeOptions& options);
SfePlan plan_sfe(const FidelityTarget& target, const ConfidenceSpec& spec, const SfeOptions& options,
                 std::uint64_t seed, bool aggregate = true);
SfeResult analyze_sfe(const SfePlan& plan, const std::vector<ShotBatch>& batches);
SfeResult sfe(MeasurementDevice& device, const FidelityTarget& target, const ConfidenceSpec& spec,
              const SfeOptions& options = {}, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Randomized benchmarking

struct RbOptions {
  std::vector<std::size_t> lengths;
  std::size_t sequences_per_length = 30;
  std::uint64_t shots_per_sequence = 200;
};

struct RbFit {
  double a = 0.0;
  double b = 0.0;
  double p = 0.0;
  double p_std_error = 0.0;
  std::vector<double> residuals;
  double residual_rms = 0.0;
  int evaluations = 0;
  bool converged = false;
};

struct RbCurve {
  std::vector<std::size_t> lengths;
  std::vector<double> survival;   // mean survival per length
  std::vector<double> std_error;  // spread of per-sequence survivals / sqrt(K)
  std::vector<std::uint64_t> shots;
  RbFit fit;
};

struct RbResult {
  RbCurve curve;
  Estimate p;
  Estimate agf;
};

/// Least-squares fit of A p^m + B with 0 <= p <= 1. Throws ProtocolFailure when it does not converge.
RbFit fit_rb_decay(const std::vector<std::size_t>& lengths, const std::vector<double>& survival);

struct RbPlan {
  ExperimentPlan experiment;
  RbOptions options;
  std::size_t n_qubits = 0;
};

/// Random Clifford sequences (gate id "clifford") closed by their inverse, each started from |0...0>.
/// With an interleaved gate, every random Clifford is followed by it (gate id `interleaved_id`).
RbPlan plan_rb(std::size_t n_qubits, const RbOptions& options, std::uint64_t seed,
               const std::optional<CliffordElement>& interleaved = std::nullopt,
               const std::string& interleaved_id = "target");
RbResult analyze_rb(const RbPlan& plan, const std::vector<ShotBatch>& batches);
RbResult rb_standard(MeasurementDevice& device, const RbOptions& options, std::uint64_t seed = 0);

struct UnitaritySource {
  enum class Kind { Oracle, AssumedIncoherence };
  Kind kind = Kind::AssumedIncoherence;
  /// Oracle: u(Lambda). Assumed: excess coherence, u = min(1, p_ref^2 + value).
  double value = 0.0;
};

struct InterleavedResult {
  RbResult reference;
  RbResult interleaved;
  double unitarity = 0.0;
  double center = 0.0;                 // estimate of the target gate's effective depolarizing parameter
  double systematic_halfwidth = 0.0;   // composite channel bound
  double statistical_halfwidth = 0.0;  // 3 sigma, propagated from the two fits
  double halfwidth = 0.0;
  Estimate agf;
  bool uninformative = false;  // halfwidth > 0.5
};

InterleavedResult rb_interleaved(MeasurementDevice& device, const CliffordElement& target, const RbOptions& options,
                                 const UnitaritySource& unitarity, std::uint64_t seed = 0,
                                 const std::string& gate_id = "target");

// ---------------------------------------------------------------------------
// Cross-entropy benchmarking

enum class XebEstimator { Linear, Log };

struct XebCircuit {
  std::string id;  // must identify the unitary
  std::shared_ptr<const Matrix> unitary;
};

struct XebResult {
  Estimate estimate;
  bool infinite_cross_entropy = false;
  /// H_X(p_uni, p_U); with the log estimator d_XE = shift - estimate.
  double cross_entropy_shift = 0.0;
  double d_xe = 0.0;
};

/// m = e^2/(2 eps^2) ln^2(2d/delta) ln(2/delta), rounded up.
std::uint64_t xeb_planned_shots(const ConfidenceSpec& spec, std::size_t d);
/// Ideal output distribution |<x|U|0>|^2.
std::vector<double> ideal_distribution(const Matrix& u);

struct XebPlan {
  ExperimentPlan experiment;
  XebEstimator estimator = XebEstimator::Linear;
  std::vector<double> ideal;
};

/// The device's own preparation is taken to be |0...0>; the circuit runs as a single noisy gate.
XebPlan plan_xeb(const XebCircuit& circuit, std::uint64_t shots, XebEstimator estimator, std::uint64_t seed);
XebResult analyze_xeb(const XebPlan& plan, const std::vector<ShotBatch>& batches);
XebResult xeb(MeasurementDevice& device, const XebCircuit& circuit, std::uint64_t shots,
              XebEstimator estimator = XebEstimator::Linear, std::uint64_t seed = 0);

struct PorterThomasReport {
  double ks_statistic = 0.0;
  std::array<double, 3> moments{};           // E[v], E[v^2], E[v^3] for v = d p_U(x)
  std::array<double, 3> expected_moments{};  // finite-d Haar values d^k k! / (d (d+1) ... (d+k-1))
  bool passes = false;                       // ks < 0.05
};

PorterThomasReport porter_thomas_check(const Matrix& u);

// ---------------------------------------------------------------------------

enum class ThresholdPolicy { Infidelity, TraceDistance };

/// Accept iff est.value >= 1 - eps~ with eps~ = eps (infidelity) or eps^2 / 2 (trace distance).
Verdict certify_from_estimate(const Estimate& est, double epsilon, ThresholdPolicy policy);

}  // namespace qcert
