#pragma once

// Simulation-side ground truth for tests and acceptance checks. Protocol code never includes this.

#include <vector>

#include "qcert/devicesim.hpp"

namespace qcert::oracle {

/// Exact composed channel Lambda_m o G_m o ... o Lambda_1 o G_1, optionally wrapped in the SPAM channels
/// (meas o sequence o prep).
Channel run_gate_sequence(const NoiseModel& noise, const std::vector<Gate>& gates, std::size_t d,
                          bool include_spam = true);

/// The device's state after preparation noise (no drift).
DensityMatrix prepared_state(const DeviceConfig& cfg);
/// The ideal target state as a density matrix.
DensityMatrix target_state(const DeviceConfig& cfg);

std::vector<double> exact_probabilities(const SimulatedDevice& device, const MeasurementSetting& setting);

/// Tr[P rho] in O(d) for a dense rho.
cplx pauli_expectation(const PauliString& p, const Matrix& rho);

}  // namespace qcert::oracle
