#pragma once

// Shared numerical tolerances. Validators and tests read these so they agree.
namespace qcert::tol {

inline constexpr double kHermitian = 1e-10;  // max |X - X^dagger| entrywise
inline constexpr double kPsd = 1e-10;        // smallest admissible eigenvalue is -kPsd
inline constexpr double kUnitTrace = 1e-10;  // |Tr rho - 1|
inline constexpr double kStateNorm = 1e-12;  // | ||psi|| - 1 |
inline constexpr double kPovmSum = 1e-10;    // sum of effects vs identity, entrywise
inline constexpr double kTracePreserving = 1e-9;
inline constexpr double kUnitary = 1e-8;     // U^dagger U vs identity for unitary inputs
inline constexpr double kProbability = 1e-12;

}  // namespace qcert::tol
