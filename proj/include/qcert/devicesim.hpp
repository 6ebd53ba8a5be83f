#pragma once

#include <memory>
#include <shared_mutex>
#include <unordered_map>
#include <variant>

#include "qcert/channels.hpp"
#include "qcert/device.hpp"

namespace qcert {

struct DeviceConfig {
  std::size_t n_qubits = 1;
  /// State the device prepares: a stabilizer state, a pure vector, or an explicit density matrix.
  std::variant<StabilizerGroup, Vector, Matrix> target = StabilizerGroup::computational_zero(1);
  NoiseModel noise = NoiseModel::noiseless(2);
  /// Shot t prepares D_{(1 - r)^t}(rho); 0 means iid preparations.
  double drift_rate = 0.0;
  std::uint64_t seed = 0;

  std::size_t dim() const { return std::size_t{1} << n_qubits; }
  void validate() const;
};

/// Seeded noisy device. Outcome distributions are computed exactly per setting (and cached by
/// setting id); shots are inverse-CDF draws on rng streams keyed by the call's stream id.
class SimulatedDevice : public MeasurementDevice {
 public:
  explicit SimulatedDevice(DeviceConfig cfg);

  std::size_t dim() const override { return cfg_.dim(); }
  bool is_iid() const override { return cfg_.drift_rate == 0.0; }
  ShotBatch measure(const MeasurementSetting& setting, std::uint64_t shots, std::uint64_t stream,
                    std::uint64_t first_shot = 0) override;

  const DeviceConfig& config() const { return cfg_; }

  /// Exact outcome distribution of a setting for the iid preparation (test oracle).
  std::vector<double> exact_probabilities(const MeasurementSetting& setting) const;
  /// Distribution when the preparation is replaced by the maximally mixed state (drift limit).
  std::vector<double> mixed_probabilities(const MeasurementSetting& setting) const;

 private:
  struct Distribution {
    std::vector<double> probs;
    std::vector<double> cdf;
    std::vector<double> mixed_cdf;  // drift mode only
    std::shared_ptr<const std::vector<std::string>> labels;
  };

  std::shared_ptr<const Distribution> distribution(const MeasurementSetting& setting);
  std::vector<double> compute(const MeasurementSetting& setting, bool mixed_input) const;

  DeviceConfig cfg_;
  Vector target_vector_;  // set when the target is pure
  bool target_pure_ = false;
  std::shared_mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<const Distribution>> cache_;
};

}  // namespace qcert
