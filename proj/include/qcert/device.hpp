#pragma once

// The measurement interface protocols run against. Protocol code sees settings going in and outcome
// counts coming out; nothing here exposes the state a device actually prepares.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "qcert/linalg.hpp"
#include "qcert/stabilizer.hpp"

namespace qcert {

/// Most shots a single measure() call may request.
inline constexpr std::uint64_t kMaxShotsPerCall = 100'000'000;

/// An ideal gate; the device adds its own noise after it.
struct Gate {
  std::string id;
  std::shared_ptr<const Matrix> unitary;
};

struct MeasurementSetting {
  enum class Kind { ComputationalBasis, Pauli, Povm };

  /// Identifies the setting; equal ids must describe identical settings (devices cache by id).
  std::string id;
  /// Replaces the device's own state preparation (still subject to preparation noise).
  std::shared_ptr<const Matrix> input_state;
  /// Noisy gate sequence applied after preparation.
  std::vector<Gate> gates;
  /// Ideal basis change applied right before the measurement.
  std::shared_ptr<const Matrix> pre_rotation;

  Kind kind = Kind::ComputationalBasis;
  std::optional<PauliString> pauli;  // Kind::Pauli; outcomes "+1", "-1"
  std::shared_ptr<const Povm> povm;  // Kind::Povm

  static MeasurementSetting computational(std::string id);
  static MeasurementSetting pauli_measurement(std::string id, PauliString p);
  static MeasurementSetting povm_measurement(std::string id, std::shared_ptr<const Povm> povm);
};

/// Outcome labels of a setting on a device of dimension d, in the order counts are reported.
std::shared_ptr<const std::vector<std::string>> setting_labels(const MeasurementSetting& s, std::size_t d);
/// Bit-string labels of the computational basis of n qubits (cached).
std::shared_ptr<const std::vector<std::string>> basis_labels(std::size_t n_qubits);

struct ShotBatch {
  std::string setting_id;
  std::uint64_t stream = 0;
  std::shared_ptr<const std::vector<std::string>> labels;
  std::vector<std::uint64_t> counts;

  std::uint64_t shots() const;
};

class MeasurementDevice {
 public:
  virtual ~MeasurementDevice() = default;

  virtual std::size_t dim() const = 0;
  /// True when every shot is an independent draw from the same setting-dependent distribution.
  virtual bool is_iid() const = 0;
  /// Runs `shots` repetitions of a setting. `stream` keys the randomness of the call and must be
  /// unique within an experiment; `first_shot` is the global index of the first shot (drift clocks).
  virtual ShotBatch measure(const MeasurementSetting& setting, std::uint64_t shots, std::uint64_t stream,
                            std::uint64_t first_shot = 0) = 0;
};

std::size_t qubit_count(std::size_t dim);

/// One JSON object per line: {"setting_id": ..., "stream": ..., "counts": {label: n, ...}}.
void write_batch_jsonl(std::ostream& out, const ShotBatch& batch);
struct RecordedBatch {
  std::string setting_id;
  std::optional<std::uint64_t> stream;
  std::map<std::string, std::uint64_t> counts;
};
/// Parses JSON-lines records; errors name the offending line.
std::vector<RecordedBatch> read_records_jsonl(std::istream& in);

/// Replays recorded outcome counts. Batches are matched by (setting id, stream) when the record
/// carries a stream, otherwise by setting id in file order.
class RecordDevice : public MeasurementDevice {
 public:
  RecordDevice(std::vector<RecordedBatch> records, std::size_t dim);

  std::size_t dim() const override { return dim_; }
  bool is_iid() const override { return true; }
  ShotBatch measure(const MeasurementSetting& setting, std::uint64_t shots, std::uint64_t stream,
                    std::uint64_t first_shot = 0) override;

 private:
  std::size_t dim_;
  std::mutex mu_;
  std::map<std::pair<std::string, std::uint64_t>, RecordedBatch> by_stream_;
  std::map<std::string, std::vector<RecordedBatch>> by_id_;
  std::map<std::string, std::size_t> next_;
};

/// Forwards to another device and keeps every batch, for writing records.
class RecordingDevice : public MeasurementDevice {
 public:
  explicit RecordingDevice(MeasurementDevice& inner) : inner_(inner) {}

  std::size_t dim() const override { return inner_.dim(); }
  bool is_iid() const override { return inner_.is_iid(); }
  ShotBatch measure(const MeasurementSetting& setting, std::uint64_t shots, std::uint64_t stream,
                    std::uint64_t first_shot = 0) override;

  /// Batches sorted by stream, so the order does not depend on thread scheduling.
  std::vector<ShotBatch> batches() const;

 private:
  MeasurementDevice& inner_;
  mutable std::mutex mu_;
  std::vector<ShotBatch> batches_;
};

}  // namespace qcert
