// constants.hpp — Central numerical tolerances; operations and tests agree on these.

#pragma once

namespace unravel::tol {

inline constexpr int kDimCap = 16;  // largest supported Hilbert-space dimension

inline constexpr double kNorm = 1e-9;               // |<psi|psi> - 1| for asserted-normalized states
inline constexpr double kHermitian = 1e-12;         // Hermiticity of Hamiltonians / generic operators
inline constexpr double kIdentity = 1e-12;          // is_identity predicate
inline constexpr double kDensityHermitian = 1e-10;  // density-matrix Hermiticity
inline constexpr double kDensityTrace = 1e-10;      // |Tr(rho) - 1|
inline constexpr double kDensityPositivity = 1e-8;  // eigenvalues >= -kDensityPositivity
inline constexpr double kRealExpectation = 1e-10;   // Im part of Hermitian expectations
inline constexpr double kPurity = 1e-9;             // idempotence of pure projectors
inline constexpr double kBlochNorm = 1e-8;          // |r|^2 <= 1 + kBlochNorm
inline constexpr double kOverlapDegenerate = 1e-12; // |<psi0|psiT>| below this: phase undefined
inline constexpr double kVisibilityDefined = 1e-6;  // |mean f| below this: ensemble phase undefined
inline constexpr double kStepCount = 1e-9;          // relative slack for t_final/dt integrality
inline constexpr double kDegenerateNorm = 1e-12;    // state norm below this mid-step: degenerate
inline constexpr double kTrajectoryNorm = 1e-6;     // per-step norm of renormalized trajectories
inline constexpr double kFloatSlack = 1e-9;         // absolute slack added to statistical bands

}  // namespace unravel::tol
