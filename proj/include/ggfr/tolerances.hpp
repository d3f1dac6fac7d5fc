#pragma once

#include <cstddef>

// Numerical thresholds shared by the library and its tests.
namespace ggfr::tol {

inline constexpr double kHermiticity = 1e-12;        // |A_ij - conj(A_ji)|
inline constexpr double kUnitarity = 1e-10;          // ||U^dag U - I||_max
inline constexpr double kReconstruction = 1e-9;      // relative to ||A||_max
inline constexpr double kCommuting = 1e-10;          // relative to ||A|| ||B||
inline constexpr double kChargeAdmission = 1e-9;     // relative to ||A|| ||B||
inline constexpr double kEnsembleNorm = 1e-12;       // sum of GGE occupations
inline constexpr double kDistributionNorm = 1e-10;   // sum of outcome probabilities
inline constexpr double kStochasticity = 1e-10;      // row/column sums of pi
inline constexpr double kWorkMerge = 1e-9;           // atoms closer than this merge
inline constexpr double kTcrFloor = 1e-14;           // residual denominator floor
inline constexpr double kTcrPass = 1e-8;
inline constexpr double kTruncationLeakage = 1e-10;  // GGE mass in top phonon quanta
inline constexpr double kTruncationTopFraction = 0.05;
inline constexpr double kPhaseThreshold = 1e-8;      // "nonzero" for the phase convention
inline constexpr double kDegeneracy = 1e-12;         // relative eigenvalue tie

// O(dim^3) post-condition checks (eigenvector unitarity, propagator
// unitarity) run only up to this dimension.
inline constexpr std::ptrdiff_t kValidationDimLimit = 2048;

}  // namespace ggfr::tol
