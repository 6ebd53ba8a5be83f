#pragma once

// Experiment runner behind the qcert command-line tool.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace qcert::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;  // I/O failure, or failed checks in verify
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitProtocolFailure = 3;

/// Config or record file problem; the message names the file position or field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;  // overrides the config's seed
  std::optional<std::string> records_path;
  std::optional<std::string> save_records_path;
  std::string out_dir = ".";
  int threads = 0;  // 0 keeps the OpenMP default
};

/// Runs one experiment and writes result.json (plus CSV tables for RB and XEB, and timing.json).
/// Returns an exit code; diagnostics go to stderr.
int run(const RunOptions& options);

/// Runs a named check suite, prints a table and writes <suite>.json into out_dir.
int verify(const std::string& suite, std::uint64_t seed, const std::string& out_dir, int threads);

/// FNV-1a of the text, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace qcert::cli
