#pragma once

namespace rotlearn {

/// Numerical thresholds used across the library. Collected in one place so
/// experiments and tests agree on what "degenerate" means.
namespace tol {

/// A projection residual or column norm below this is treated as collapsed.
inline constexpr double degenerate = 1e-12;

/// Singular-value pair sums below svd_gap * max(1, sigma_1) flag the
/// analytic SVD Jacobian as near-degenerate. Wide on purpose: entries grow
/// like 1 / (s_i + s_j), so anything past 1e6 x input scale gets marked.
inline constexpr double svd_gap = 1e-6;

/// psi returns infinity when lambda_min < psi_inf * max(1, lambda_max).
/// Relative to the largest eigenvalue: the roundoff floor of forming B B^T
/// scales with ||B||^2, an absolute cutoff would misclassify large Jacobians.
inline constexpr double psi_inf = 1e-14;

/// Off-diagonal Frobenius target for the cyclic Jacobi eigensolver.
inline constexpr double jacobi_off = 1e-30;

/// Sweep cap for the Jacobi eigensolver.
inline constexpr int jacobi_max_sweeps = 64;

/// Relative step for central finite differences in fallback Jacobians.
inline constexpr double fd_step = 1e-6;

}  // namespace tol

}  // namespace rotlearn
