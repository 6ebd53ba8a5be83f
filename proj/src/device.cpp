#include "qcert/device.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace qcert {

using nlohmann::json;

MeasurementSetting MeasurementSetting::computational(std::string id) {
  MeasurementSetting s;
  s.id = std::move(id);
  return s;
}

MeasurementSetting MeasurementSetting::pauli_measurement(std::string id, PauliString p) {
  if (!p.is_hermitian()) throw InvalidInput("pauli_measurement: observable must be Hermitian");
  MeasurementSetting s;
  s.id = std::move(id);
  s.kind = Kind::Pauli;
  s.pauli = std::move(p);
  return s;
}

MeasurementSetting MeasurementSetting::povm_measurement(std::string id, std::shared_ptr<const Povm> povm) {
  if (!povm) throw InvalidInput("povm_measurement: null POVM");
  MeasurementSetting s;
  s.id = std::move(id);
  s.kind = Kind::Povm;
  s.povm = std::move(povm);
  return s;
}

std::size_t qubit_count(std::size_t dim) {
  std::size_t n = 0;
  while ((std::size_t{1} << n) < dim) ++n;
  if ((std::size_t{1} << n) != dim) throw InvalidInput("device dimension " + std::to_string(dim) + " is not 2^n");
  return n;
}

std::shared_ptr<const std::vector<std::string>> basis_labels(std::size_t n_qubits) {
  static std::mutex mu;
  static std::map<std::size_t, std::shared_ptr<const std::vector<std::string>>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n_qubits];
  if (!slot) {
    auto labels = std::make_shared<std::vector<std::string>>();
    const std::size_t d = std::size_t{1} << n_qubits;
    labels->reserve(d);
    for (std::size_t i = 0; i < d; ++i) {
      std::string s(n_qubits, '0');
      for (std::size_t q = 0; q < n_qubits; ++q)
        if ((i >> (n_qubits - 1 - q)) & 1) s[q] = '1';
      labels->push_back(std::move(s));
    }
    slot = std::move(labels);
  }
  return slot;
}

std::shared_ptr<const std::vector<std::string>> setting_labels(const MeasurementSetting& s, std::size_t d) {
  static const auto pm = std::make_shared<const std::vector<std::string>>(std::vector<std::string>{"+1", "-1"});
  switch (s.kind) {
    case MeasurementSetting::Kind::ComputationalBasis:
      return basis_labels(qubit_count(d));
    case MeasurementSetting::Kind::Pauli:
      return pm;
    case MeasurementSetting::Kind::Povm:
      return std::make_shared<const std::vector<std::string>>(s.povm->labels());
  }
  return nullptr;
}

std::uint64_t ShotBatch::shots() const {
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

void write_batch_jsonl(std::ostream& out, const ShotBatch& batch) {
  json counts = json::object();
  for (std::size_t i = 0; i < batch.counts.size(); ++i)
    if (batch.counts[i] > 0) counts[(*batch.labels)[i]] = batch.counts[i];
  json line = {{"setting_id", batch.setting_id}, {"stream", batch.stream}, {"counts", counts}};
  out << line.dump() << '\n';
}

std::vector<RecordedBatch> read_records_jsonl(std::istream& in) {
  std::vector<RecordedBatch> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "records line " + std::to_string(lineno) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InvalidInput(where + "not valid JSON (" + e.what() + ")");
    }
    if (!j.is_object() || !j.contains("setting_id") || !j["setting_id"].is_string())
      throw InvalidInput(where + "missing string field 'setting_id'");
    if (!j.contains("counts") || !j["counts"].is_object()) throw InvalidInput(where + "missing object field 'counts'");
    RecordedBatch b;
    b.setting_id = j["setting_id"].get<std::string>();
    if (j.contains("stream")) {
      if (!j["stream"].is_number_unsigned()) throw InvalidInput(where + "'stream' must be a nonnegative integer");
      b.stream = j["stream"].get<std::uint64_t>();
    }
    for (const auto& [label, n] : j["counts"].items()) {
      if (!n.is_number_unsigned()) throw InvalidInput(where + "count for '" + label + "' must be a nonnegative integer");
      b.counts[label] = n.get<std::uint64_t>();
    }
    out.push_back(std::move(b));
  }
  return out;
}

RecordDevice::RecordDevice(std::vector<RecordedBatch> records, std::size_t dim) : dim_(dim) {
  qubit_count(dim);
  for (auto& r : records) {
    if (r.stream) {
      auto key = std::make_pair(r.setting_id, *r.stream);
      if (by_stream_.count(key))
        throw InvalidInput("records: duplicate batch for setting '" + r.setting_id + "' stream " +
                           std::to_string(*r.stream));
      by_stream_.emplace(std::move(key), r);
    }
    by_id_[r.setting_id].push_back(std::move(r));
  }
}

ShotBatch RecordDevice::measure(const MeasurementSetting& setting, std::uint64_t shots, std::uint64_t stream,
                                std::uint64_t) {
  const RecordedBatch* rec = nullptr;
  {
    std::lock_guard lock(mu_);
    const auto it = by_stream_.find({setting.id, stream});
    if (it != by_stream_.end()) {
      rec = &it->second;
    } else {
      const auto jt = by_id_.find(setting.id);
      auto& next = next_[setting.id];
      if (jt == by_id_.end() || next >= jt->second.size())
        throw InvalidInput("records: no recorded batch left for setting '" + setting.id + "'");
      rec = &jt->second[next++];
    }
  }
  ShotBatch b;
  b.setting_id = setting.id;
  b.stream = stream;
  b.labels = setting_labels(setting, dim_);
  b.counts.assign(b.labels->size(), 0);
  for (const auto& [label, n] : rec->counts) {
    const auto pos = std::find(b.labels->begin(), b.labels->end(), label);
    if (pos == b.labels->end())
      throw InvalidInput("records: unknown outcome label '" + label + "' for setting '" + setting.id + "'");
    b.counts[static_cast<std::size_t>(pos - b.labels->begin())] = n;
  }
  if (b.shots() != shots)
    throw InvalidInput("records: setting '" + setting.id + "' has " + std::to_string(b.shots()) +
                       " recorded shots, the protocol asks for " + std::to_string(shots));
  return b;
}

ShotBatch RecordingDevice::measure(const MeasurementSetting& setting, std::uint64_t shots, std::uint64_t stream,
                                   std::uint64_t first_shot) {
  ShotBatch b = inner_.measure(setting, shots, stream, first_shot);
  std::lock_guard lock(mu_);
  batches_.push_back(b);
  return b;
}

std::vector<ShotBatch> RecordingDevice::batches() const {
  std::lock_guard lock(mu_);
  std::vector<ShotBatch> out = batches_;
  std::stable_sort(out.begin(), out.end(), [](const ShotBatch& a, const ShotBatch& b) {
    return a.stream != b.stream ? a.stream < b.stream : a.setting_id < b.setting_id;
  });
  return out;
}

}  // namespace qcert
