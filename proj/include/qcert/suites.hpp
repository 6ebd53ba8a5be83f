#pragma once

// Named check bundles: measured value, expected value and the pass rule for each check.
// Used by `qcert verify` and by the acceptance test.

#include <cstdint>
#include <string>
#include <vector>

namespace qcert::suites {

struct Check {
  std::string name;
  double measured = 0.0;
  double expected = 0.0;
  std::string rule;  // human-readable pass rule, e.g. "|measured - expected| <= 1e-10"
  bool pass = false;
};

struct Report {
  std::string suite;
  std::vector<Check> checks;

  bool passed() const;
};

/// Suite ids in criterion order.
const std::vector<std::string>& suite_ids();
/// Throws std::invalid_argument for an unknown id.
Report run_suite(const std::string& id, std::uint64_t seed);

}  // namespace qcert::suites
