#pragma once

// Tolerances and statistical thresholds shared by the library, the CLI and the test suites.

namespace ecfim::tol {

// Hermitian check on model outputs (elementwise, absolute).
inline constexpr double kHermitian = 1e-12;

// FIM symmetry (relative) and PSD slack relative to the largest eigenvalue.
inline constexpr double kFimSymmetry = 1e-10;
inline constexpr double kFimPsdSlack = 1e-8;

// Largest FIM condition number accepted by crb_from_fim.
inline constexpr double kMaxCondition = 1e12;

// Default relative step for central finite differences.
inline constexpr double kFiniteDiffStep = 1e-6;

// Monte Carlo gate: deviation allowed in units of standard error.
inline constexpr double kMcStderrGate = 4.0;

// A report is flagged inconclusive when stderr exceeds this fraction of an entry.
inline constexpr double kMcInconclusiveFraction = 0.2;

// Significance level for Kolmogorov-Smirnov distribution checks.
inline constexpr double kKsAlpha = 0.01;

// Minimum number of Monte Carlo trials in an empirical FIM.
inline constexpr long kMinTrials = 1000;

// Closed-form identity checks.
inline constexpr double kGaussianReduction = 1e-10;
inline constexpr double kMomentQuadrature = 1e-8;
inline constexpr double kFirstMomentIdentity = 1e-8;
inline constexpr double kPdfNormalization = 1e-10;
inline constexpr double kStudentLimit = 1e-5;

}  // namespace ecfim::tol
