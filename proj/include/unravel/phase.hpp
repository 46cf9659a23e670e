// phase.hpp — Total, dynamical and geometric phases per realization and on
// ensemble average, plus the interferometric intensity and visibility.
//
// Convention: the normative total phase is Arg E_Q[<phi_0|phi_T>].  The
// interference functional f is assembled so that Arg E[f] coincides with it:
// f = (|phi_+|^2 e^{+i mu_b T} + |phi_-|^2 e^{-i mu_b T}) / <phi|phi>, built
// from the two sigma_z eigenchannel amplitudes of the free-norm linear
// solution.  The opposite channel-phase convention (the conjugate f) is what a
// detector behind the shifter arm pairs against; see intensity() callers.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "unravel/angles.hpp"
#include "unravel/constants.hpp"
#include "unravel/errors.hpp"
#include "unravel/lindblad.hpp"
#include "unravel/sse.hpp"
#include "unravel/stats.hpp"

namespace unravel {

struct InterferometerSetup {
    double chi{0.0};              // variable phase shifter, radians
    double interaction_time{0.0}; // time T the field acts on the travelling spin
    DephasingSpinModel model;

    InterferometerSetup(double shifter, double time, DephasingSpinModel m)
        : chi(shifter), interaction_time(time), model(m) {
        if (!(interaction_time >= 0.0))
            throw std::invalid_argument("InterferometerSetup: interaction time must be >= 0");
    }
};

struct PhaseRecord {
    double total{0.0};      // principal value (-pi, pi]
    double dynamical{0.0};  // unwrapped accumulator
    double geometric{0.0};  // total - dynamical reduced to (-pi, pi]
    long trajectory_id{0};
};

// Arg<psi0|psiT> in (-pi, pi]; undefined for (near-)orthogonal states.
inline double pancharatnam_total_phase(const StateVector& psi0, const StateVector& psiT) {
    const Complex overlap = inner(psi0, psiT);
    if (std::abs(overlap) <= tol::kOverlapDegenerate)
        throw UndefinedPhaseError("pancharatnam_total_phase: orthogonal states, phase undefined");
    return std::arg(overlap);
}

namespace detail {

// Interference functional from the final free-norm linear state.
inline Complex interference_functional(const Vector& phi_final, double mu_b, double t) {
    const double nrm2 = phi_final.squaredNorm();
    if (nrm2 < tol::kDegenerateNorm * tol::kDegenerateNorm)
        throw DegenerateStateError("interference functional: vanishing linear norm");
    const Complex up = std::polar(1.0, mu_b * t);
    return (std::norm(phi_final(0)) * up + std::norm(phi_final(1)) * std::conj(up)) / nrm2;
}

// Weight times functional: the numerator alone, no norm division.
inline Complex weighted_interference_functional(const Vector& phi_final, double mu_b, double t) {
    const Complex up = std::polar(1.0, mu_b * t);
    return std::norm(phi_final(0)) * up + std::norm(phi_final(1)) * std::conj(up);
}

inline const Vector& linear_final_state(const TrajectoryRecord& traj) {
    if (traj.measure() == Measure::Q) return traj.states.back().amplitudes();
    if (!traj.linear_companion_final)
        throw std::invalid_argument("trajectory carries no linear companion state");
    return *traj.linear_companion_final;
}

}  // namespace detail

// Per-realization interference functional of a spin trajectory: reads the
// sigma_z channel amplitudes of the linear solution at the final time (a Q
// trajectory's own state, or the companion recorded along a P trajectory).
inline Complex trajectory_f(const TrajectoryRecord& traj, const InterferometerSetup& setup) {
    const Vector& phi = detail::linear_final_state(traj);
    if (phi.size() != 2) throw std::invalid_argument("trajectory_f: spin (dim-2) model required");
    return detail::interference_functional(phi, setup.model.mu_b, setup.interaction_time);
}

// Output intensity behind the beam splitter for a given realization's f.
inline double intensity(const InterferometerSetup& setup, const Complex& f) {
    const double mod = std::abs(f);
    if (mod > 1.0 + tol::kFloatSlack)
        throw std::invalid_argument("intensity: |f| exceeds 1");
    const double value = 0.5 + 0.5 * mod * std::cos(setup.chi + std::arg(f));
    return std::clamp(value, 0.0, 1.0);
}

// Ito increment of the dynamical phase Im<psi|d psi> along the nonlinear
// equation: d(gamma) = Im<psi|drift> dt + sum_n Im<psi|diffusion_n> dW_n,
// evaluated at the left point.  For the spin model this reduces to
// mu_b <sz> dt + lambda sin(phi) <sz> dW + lambda^2 sin(phi) cos(phi) <sz>^2 dt.
inline double dynamical_phase_increment(const LindbladModel& model, const UnravellingGauge& gauge,
                                        const StateVector& psi, std::span<const double> dw,
                                        double dt) {
    if (dw.size() != model.n_channels())
        throw std::invalid_argument("dynamical_phase_increment: one increment per channel required");
    const auto dd = nonlinear_drift_diffusion(model, gauge, psi);
    double inc = psi.amplitudes().dot(dd.drift).imag() * dt;
    for (std::size_t n = 0; n < dw.size(); ++n)
        inc += psi.amplitudes().dot(dd.diffusion[n]).imag() * dw[n];
    return inc;
}

inline PhaseRecord make_phase_record(const TrajectoryRecord& traj,
                                     const InterferometerSetup& setup, long trajectory_id = 0) {
    const Complex f = trajectory_f(traj, setup);
    if (std::abs(f) <= tol::kOverlapDegenerate)
        throw UndefinedPhaseError("make_phase_record: vanishing interference functional");
    PhaseRecord rec;
    rec.total = std::arg(f);
    rec.dynamical = traj.dyn_phase_path.back();
    rec.geometric = principal_value(rec.total - rec.dynamical);
    rec.trajectory_id = trajectory_id;
    return rec;
}

inline double geometric_phase(const PhaseRecord& record) {
    return principal_value(record.total - record.dynamical);
}

struct TotalPhaseEstimate {
    std::optional<double> phase;  // absent when the visibility is numerically zero
    double phase_stderr{0.0};
    double visibility{0.0};
    double visibility_stderr{0.0};
    long n_traj{0};
};

// Ensemble total phase and visibility from linear (Q) trajectories:
// Arg and modulus of the plain mean of the measure-weighted functional
// <phi|phi> f, whose Q expectation equals the P average of f.
inline TotalPhaseEstimate ensemble_total_phase(std::span<const TrajectoryRecord> trajectories,
                                               const InterferometerSetup& setup) {
    if (trajectories.size() < 2)
        throw std::invalid_argument("ensemble_total_phase: at least two trajectories required");
    ComplexStat stat;
    for (const auto& traj : trajectories) {
        if (traj.measure() != Measure::Q)
            throw std::invalid_argument("ensemble_total_phase: Q (linear) trajectories required");
        const Vector& phi = detail::linear_final_state(traj);
        if (phi.size() != 2)
            throw std::invalid_argument("ensemble_total_phase: spin (dim-2) model required");
        stat.add(detail::weighted_interference_functional(phi, setup.model.mu_b,
                                                          setup.interaction_time));
    }
    TotalPhaseEstimate est;
    est.n_traj = stat.n;
    est.visibility = std::abs(stat.mean());
    est.visibility_stderr = stat.stderr_modulus();
    if (est.visibility >= tol::kVisibilityDefined) {
        est.phase = std::arg(stat.mean());
        est.phase_stderr = stat.stderr_argument();
    }
    return est;
}

struct MeanEstimate {
    double value{0.0};
    double std_error{0.0};  // "stderr" is a <cstdio> macro, hence the longhand
    long n{0};
};

namespace detail {

inline double trajectory_p_weight(const TrajectoryRecord& traj) {
    // Under P every realization counts equally; under Q the final measure
    // weight <phi_T|phi_T> converts the estimate into a P expectation.
    return traj.measure() == Measure::P ? 1.0 : traj.states.back().squared_norm();
}

}  // namespace detail

// P average of the accumulated dynamical phase (measure-weighted on Q input).
inline MeanEstimate mean_dynamical_phase(std::span<const TrajectoryRecord> trajectories) {
    if (trajectories.empty())
        throw std::invalid_argument("mean_dynamical_phase: empty ensemble");
    ScalarStat stat;
    for (const auto& traj : trajectories)
        stat.add(detail::trajectory_p_weight(traj) * traj.dyn_phase_path.back());
    return MeanEstimate{stat.mean(), stat.stderr_of_mean(), stat.n};
}

struct PhaseFactorEstimate {
    Complex mean{0.0};
    double modulus_stderr{0.0};
    double argument_stderr{0.0};
    long n{0};
};

// P average of e^{i gamma_dyn} (measure-weighted on Q input).
inline PhaseFactorEstimate mean_dynamical_phase_factor(
    std::span<const TrajectoryRecord> trajectories) {
    if (trajectories.empty())
        throw std::invalid_argument("mean_dynamical_phase_factor: empty ensemble");
    ComplexStat stat;
    for (const auto& traj : trajectories)
        stat.add(detail::trajectory_p_weight(traj) *
                 std::polar(1.0, traj.dyn_phase_path.back()));
    return PhaseFactorEstimate{stat.mean(), stat.stderr_modulus(), stat.stderr_argument(), stat.n};
}

enum class GeoConvention { PhaseAverage, FactorAverage };

// Ensemble geometric phase: total phase minus the average dynamical phase,
// with the dynamical average taken over the phase or over the phase factor.
inline std::optional<double> mean_geometric_phase(std::span<const TrajectoryRecord> trajectories,
                                                  const InterferometerSetup& setup,
                                                  GeoConvention convention) {
    const auto total = ensemble_total_phase(trajectories, setup);
    if (!total.phase) return std::nullopt;
    if (convention == GeoConvention::PhaseAverage) {
        const auto dyn = mean_dynamical_phase(trajectories);
        return principal_value(*total.phase - dyn.value);
    }
    const auto factor = mean_dynamical_phase_factor(trajectories);
    if (std::abs(factor.mean) < tol::kVisibilityDefined) return std::nullopt;
    return principal_value(*total.phase - std::arg(factor.mean));
}

// Per-(gauge, ensemble) phase report.  The geometric entries combine the two
// estimates' standard errors in quadrature (their covariance is dropped).
struct PhaseSummary {
    UnravellingGauge gauge{std::vector<double>{0.0}};
    std::optional<double> mean_total;
    double mean_total_stderr{0.0};
    double visibility{0.0};
    double visibility_stderr{0.0};
    double mean_dyn_phase_average{0.0};
    double mean_dyn_phase_average_stderr{0.0};
    std::optional<double> mean_dyn_factor_average;  // Arg E[e^{i gamma}]
    double mean_dyn_factor_average_stderr{0.0};
    double dyn_factor_modulus{0.0};
    double dyn_factor_modulus_stderr{0.0};
    std::optional<double> mean_geo_by_phase;
    double mean_geo_by_phase_stderr{0.0};
    std::optional<double> mean_geo_by_factor;
    double mean_geo_by_factor_stderr{0.0};
    double sz_sq_time_integral{0.0};  // mean of the per-trajectory integral of <sz>^2 dt
    double sz_sq_time_integral_stderr{0.0};
    long n_traj{0};
};

}  // namespace unravel
