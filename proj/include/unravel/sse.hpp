// sse.hpp — Stochastic unravelling proper: Euler–Maruyama integration of the
// norm-preserving nonlinear equation (measure P) and the free-norm linear
// equation (measure Q), the one-parameter gauge family of equivalent
// unravellings, and the noise substitution / measure weights connecting P and Q.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "unravel/angles.hpp"
#include "unravel/constants.hpp"
#include "unravel/errors.hpp"
#include "unravel/lindblad.hpp"
#include "unravel/quantum.hpp"
#include "unravel/rng.hpp"

namespace unravel {

// One phase angle per Lindblad operator; L_n -> e^{i phi_n} L_n leaves the
// master equation invariant but changes the trajectory law.
struct UnravellingGauge {
    std::vector<double> phases;  // stored reduced to (-pi, pi]

    explicit UnravellingGauge(std::vector<double> angles) : phases(std::move(angles)) {
        for (double& p : phases) {
            if (!std::isfinite(p)) throw std::invalid_argument("UnravellingGauge: non-finite angle");
            p = principal_value(p);
        }
    }

    static UnravellingGauge single(double phi) { return UnravellingGauge(std::vector<double>{phi}); }

    std::size_t n_channels() const { return phases.size(); }

    std::vector<Complex> factors() const {
        std::vector<Complex> c;
        c.reserve(phases.size());
        for (double p : phases) c.emplace_back(std::cos(p), std::sin(p));
        return c;
    }
};

enum class SdeScheme { EulerMaruyama };

struct SdeConfig {
    double dt{1e-3};
    double t_final{1.0};
    SdeScheme scheme{SdeScheme::EulerMaruyama};
    bool renormalize_each_step{true};  // nonlinear path only
    long record_stride{1};

    long n_steps() const {
        if (!(dt > 0.0)) throw std::invalid_argument("SdeConfig: dt must be > 0");
        if (t_final < 0.0) throw std::invalid_argument("SdeConfig: t_final must be >= 0");
        if (record_stride < 1) throw std::invalid_argument("SdeConfig: record_stride must be >= 1");
        const double ratio = t_final / dt;
        const double rounded = std::round(ratio);
        if (std::abs(ratio - rounded) > tol::kStepCount * std::max(1.0, ratio))
            throw std::invalid_argument("SdeConfig: t_final/dt is not an integer step count");
        return std::lround(rounded);
    }
};

enum class Measure { P, Q };

// Wiener increments, one row per channel, one column per step; each entry is
// Normal(0, dt).  The tag records which measure the increments are standard
// Brownian increments of.
struct NoisePath {
    Eigen::MatrixXd increments;
    double dt{0.0};
    Measure measure{Measure::P};

    long n_channels() const { return increments.rows(); }
    long n_steps() const { return increments.cols(); }
};

inline NoisePath sample_noise(long n_channels, long n_steps, double dt, std::uint64_t seed,
                              Measure measure) {
    if (n_channels < 1 || n_steps < 0 || !(dt > 0.0))
        throw std::invalid_argument("sample_noise: invalid shape");
    NoisePath path;
    path.increments.resize(n_channels, n_steps);
    path.dt = dt;
    path.measure = measure;
    GaussianStream stream(seed);
    const double sqrt_dt = std::sqrt(dt);
    for (long k = 0; k < n_steps; ++k)
        for (long n = 0; n < n_channels; ++n)
            path.increments(n, k) = sqrt_dt * stream.standard_normal();
    return path;
}

// Aggregate consecutive fine increments into coarse ones (Brownian refinement,
// used for common-random-number step-size studies).
inline NoisePath coarsen_noise(const NoisePath& fine, long factor) {
    if (factor < 1) throw std::invalid_argument("coarsen_noise: factor must be >= 1");
    if (fine.n_steps() % factor != 0)
        throw std::invalid_argument("coarsen_noise: step count not divisible by factor");
    NoisePath coarse;
    coarse.dt = fine.dt * static_cast<double>(factor);
    coarse.measure = fine.measure;
    coarse.increments.resize(fine.n_channels(), fine.n_steps() / factor);
    coarse.increments.setZero();
    for (long j = 0; j < coarse.n_steps(); ++j)
        for (long i = 0; i < factor; ++i) coarse.increments.col(j) += fine.increments.col(j * factor + i);
    return coarse;
}

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<StateVector> states;  // psi under P, phi under Q; decimated by record_stride
    NoisePath noise;                  // full resolution
    std::vector<double> sz_path;      // <sigma_z> of the normalized state (dim-2 models only)
    std::vector<double> weight_path;  // <phi|phi>, linear (Q) trajectories only
    std::vector<double> dyn_phase_path;
    // Under P the integrator co-evolves the free-norm linear companion through the
    // shifted noise; its final state feeds the interference functional.
    std::optional<Vector> linear_companion_final;
    long record_stride{1};

    Measure measure() const { return noise.measure; }
};

namespace detail {

template <int D>
using VecD = Eigen::Matrix<Complex, D, 1>;
template <int D>
using MatD = Eigen::Matrix<Complex, D, D>;

// Gauge-dressed model constants reused across steps.
template <int D>
struct GaugedKernel {
    MatD<D> minus_i_h;           // -i H
    std::vector<MatD<D>> ops;    // e^{i phi_n} L_n
    MatD<D> linear_drift;        // -i H - (lambda^2/2) sum_n L_n^dag L_n
    double lambda{0.0};
    Eigen::Index dim{0};
};

template <int D>
GaugedKernel<D> make_kernel(const LindbladModel& model, const UnravellingGauge& gauge) {
    if (gauge.n_channels() != model.n_channels())
        throw std::invalid_argument("gauge/channel count mismatch: " +
                                    std::to_string(gauge.n_channels()) + " angles for " +
                                    std::to_string(model.n_channels()) + " operators");
    GaugedKernel<D> k;
    k.dim = model.dim();
    k.lambda = model.lambda;
    k.minus_i_h = Complex(0.0, -1.0) * model.hamiltonian.entries();
    k.linear_drift = k.minus_i_h;
    const auto factors = gauge.factors();
    k.ops.reserve(model.n_channels());
    for (std::size_t n = 0; n < model.n_channels(); ++n) {
        k.ops.emplace_back(factors[n] * model.lindblad_ops[n].entries());
        k.linear_drift -= (0.5 * k.lambda * k.lambda) *
                          (k.ops.back().adjoint() * k.ops.back()).eval();
    }
    return k;
}

inline double qubit_sz(const Complex& a0, const Complex& a1, double nrm2) {
    return (std::norm(a0) - std::norm(a1)) / nrm2;
}

template <int D>
struct TrajectorySample {
    long step;
    double t;
    const VecD<D>& state;  // raw evolving state: psi (P) or phi (Q)
    double sz;             // NaN for dim != 2
    double weight;         // squared norm of the raw state
    double dyn_phase;
    double sz_sq_integral;  // running left-point integral of <sz>^2 dt (qubit)
    double max_sz_drift;    // running max over steps of |<sz>_t - <sz>_0| (qubit)
};

// Fused Euler–Maruyama integrator.  Under P it advances the nonlinear equation
// and co-integrates the free-norm linear companion through the shifted noise
// d(xi) = dW + 2 lambda r dt; under Q it advances the linear equation and
// reconstructs dW = d(xi) - 2 lambda r dt for the phase accumulator.  The
// visitor sees every step with index % record_stride == 0 plus the final one,
// then finish(companion) with the companion state (P) or nullptr (Q).
template <int D, class Visitor>
void integrate_trajectory(const GaugedKernel<D>& kernel, const VecD<D>& start,
                          const SdeConfig& cfg, const NoisePath& noise, Visitor&& vis) {
    const long steps = cfg.n_steps();
    if (noise.n_steps() != steps)
        throw std::invalid_argument("integrate_trajectory: noise has " +
                                    std::to_string(noise.n_steps()) + " steps, config wants " +
                                    std::to_string(steps));
    if (noise.n_channels() != static_cast<long>(kernel.ops.size()))
        throw std::invalid_argument("integrate_trajectory: noise channel count mismatch");
    if (std::abs(noise.dt - cfg.dt) > 1e-12 * cfg.dt)
        throw std::invalid_argument("integrate_trajectory: noise dt differs from config dt");

    const Eigen::Index dim = kernel.dim;
    const std::size_t nch = kernel.ops.size();
    const double dt = cfg.dt;
    const double lambda = kernel.lambda;
    const bool is_p = noise.measure == Measure::P;
    const bool qubit = dim == 2;

    VecD<D> state = start;                 // psi (P) or phi (Q)
    VecD<D> companion;                     // linear companion (P only)
    if (is_p) companion = start;
    VecD<D> drift(dim), next(dim), gstate(dim);
    std::vector<VecD<D>> u(nch, VecD<D>(dim));
    std::vector<double> r(nch), im_u(nch);
    double dyn_phase = 0.0;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    double sz_now = qubit ? qubit_sz(state(0), state(1), state.squaredNorm()) : nan;
    const double sz_start = sz_now;
    double sz_sq_integral = qubit ? 0.0 : nan;
    double max_sz_drift = qubit ? 0.0 : nan;

    const auto emit = [&](long step) {
        vis.sample(TrajectorySample<D>{step, static_cast<double>(step) * dt, state, sz_now,
                                       state.squaredNorm(), dyn_phase, sz_sq_integral,
                                       max_sz_drift});
    };

    emit(0);
    for (long k = 0; k < steps; ++k) {
        const double nrm2 = state.squaredNorm();
        if (nrm2 < tol::kDegenerateNorm * tol::kDegenerateNorm)
            throw DegenerateStateError("trajectory norm collapsed at step " + std::to_string(k));
        if (qubit) sz_sq_integral += sz_now * sz_now * dt;

        for (std::size_t n = 0; n < nch; ++n) {
            u[n].noalias() = kernel.ops[n] * state;
            const Complex overlap = state.dot(u[n]);
            r[n] = overlap.real() / nrm2;
            im_u[n] = overlap.imag() / nrm2;
        }

        if (is_p) {
            // Nonlinear drift at the current state.
            drift.noalias() = kernel.linear_drift * state;
            double r2 = 0.0;
            for (std::size_t n = 0; n < nch; ++n) {
                drift += (lambda * lambda * r[n]) * u[n];
                r2 += r[n] * r[n];
            }
            drift -= (0.5 * lambda * lambda * r2) * state;

            double dgamma = (state.dot(drift).imag() / nrm2) * dt;
            next = state + dt * drift;
            for (std::size_t n = 0; n < nch; ++n) {
                const double dw = noise.increments(n, k);
                next += (lambda * dw) * u[n];
                next -= (lambda * dw * r[n]) * state;
                dgamma += lambda * im_u[n] * dw;
            }

            // Companion linear step with the shifted increments.
            gstate.noalias() = kernel.linear_drift * companion;
            gstate *= dt;
            for (std::size_t n = 0; n < nch; ++n) {
                const double dxi = noise.increments(n, k) + 2.0 * lambda * r[n] * dt;
                gstate.noalias() += (lambda * dxi) * (kernel.ops[n] * companion);
            }
            companion += gstate;

            if (cfg.renormalize_each_step) {
                const double nn = next.norm();
                if (nn < tol::kDegenerateNorm)
                    throw DegenerateStateError("renormalization hit a degenerate state at step " +
                                               std::to_string(k));
                next /= nn;
            }
            state = next;
            dyn_phase += dgamma;
        } else {
            gstate.noalias() = kernel.linear_drift * state;
            double dgamma = (state.dot(gstate).imag() / nrm2) * dt;
            next = state + dt * gstate;
            for (std::size_t n = 0; n < nch; ++n) {
                const double dxi = noise.increments(n, k);
                const double dw = dxi - 2.0 * lambda * r[n] * dt;
                dgamma += lambda * lambda * r[n] * im_u[n] * dt + lambda * im_u[n] * dw;
                next += (lambda * dxi) * u[n];
            }
            state = next;
            dyn_phase += dgamma;
        }

        if (qubit) {
            sz_now = qubit_sz(state(0), state(1), state.squaredNorm());
            max_sz_drift = std::max(max_sz_drift, std::abs(sz_now - sz_start));
        }
        if ((k + 1) % cfg.record_stride == 0 || k + 1 == steps) emit(k + 1);
    }
    vis.finish(is_p ? &companion : nullptr);
}

template <int D>
struct RecordingVisitor {
    TrajectoryRecord record;
    bool renormalized_p;

    void sample(const TrajectorySample<D>& s) {
        record.times.push_back(s.t);
        Vector v = s.state;
        record.states.push_back(renormalized_p ? StateVector::normalized(std::move(v))
                                               : StateVector::free_norm(std::move(v)));
        if (!std::isnan(s.sz)) record.sz_path.push_back(s.sz);
        if (record.noise.measure == Measure::Q) record.weight_path.push_back(s.weight);
        record.dyn_phase_path.push_back(s.dyn_phase);
    }

    void finish(const VecD<D>* companion) {
        if (companion) record.linear_companion_final = Vector(*companion);
    }
};

template <int D>
TrajectoryRecord simulate_impl(const LindbladModel& model, const UnravellingGauge& gauge,
                               const Vector& start, const SdeConfig& cfg, NoisePath noise) {
    const auto kernel = make_kernel<D>(model, gauge);
    RecordingVisitor<D> vis;
    vis.record.noise = std::move(noise);
    vis.record.record_stride = cfg.record_stride;
    vis.renormalized_p = vis.record.noise.measure == Measure::P && cfg.renormalize_each_step;
    const VecD<D> s0 = start;
    integrate_trajectory<D>(kernel, s0, cfg, vis.record.noise, vis);
    return std::move(vis.record);
}

}  // namespace detail

struct DriftDiffusion {
    Vector drift;                   // [-iH - (lambda^2/2) sum (LdL - 2 L r + r^2)] psi
    std::vector<Vector> diffusion;  // lambda (L_n - r_n) psi per channel
};

// SDE coefficient vectors of the nonlinear equation at a normalized state,
// with gauged operators L_n -> e^{i phi_n} L_n and r_n = Re<psi|L_n psi>.
inline DriftDiffusion nonlinear_drift_diffusion(const LindbladModel& model,
                                                const UnravellingGauge& gauge,
                                                const StateVector& psi) {
    detail::check_same_dim(model.dim(), psi.dim(), "nonlinear_drift_diffusion");
    if (!psi.is_asserted_normalized())
        throw std::invalid_argument("nonlinear_drift_diffusion: state must be normalized");
    const auto kernel = detail::make_kernel<Eigen::Dynamic>(model, gauge);
    const Vector& v = psi.amplitudes();

    DriftDiffusion out;
    out.drift = kernel.linear_drift * v;
    out.diffusion.reserve(kernel.ops.size());
    double r2 = 0.0;
    for (const auto& op : kernel.ops) {
        const Vector u = op * v;
        const double r = v.dot(u).real();
        out.drift += (kernel.lambda * kernel.lambda * r) * u;
        r2 += r * r;
        out.diffusion.push_back(kernel.lambda * (u - r * v));
    }
    out.drift -= (0.5 * kernel.lambda * kernel.lambda * r2) * v;
    return out;
}

// One Euler–Maruyama step of the nonlinear equation.
inline StateVector step_nonlinear(const LindbladModel& model, const UnravellingGauge& gauge,
                                  const StateVector& psi, std::span<const double> dw, double dt,
                                  bool renormalize = true) {
    if (dw.size() != model.n_channels())
        throw std::invalid_argument("step_nonlinear: one increment per channel required");
    for (double x : dw)
        if (!std::isfinite(x)) throw std::invalid_argument("step_nonlinear: non-finite increment");
    const auto dd = nonlinear_drift_diffusion(model, gauge, psi);
    Vector next = psi.amplitudes() + dt * dd.drift;
    for (std::size_t n = 0; n < dw.size(); ++n) next += dw[n] * dd.diffusion[n];
    if (!renormalize) return StateVector::free_norm(std::move(next));
    const double nn = next.norm();
    if (nn < tol::kDegenerateNorm)
        throw DegenerateStateError("step_nonlinear: resulting norm below degeneracy threshold");
    return StateVector::normalized(next / nn);
}

// One Euler–Maruyama step of the linear equation; never renormalizes.
inline StateVector step_linear(const LindbladModel& model, const UnravellingGauge& gauge,
                               const StateVector& phi, std::span<const double> dxi, double dt) {
    detail::check_same_dim(model.dim(), phi.dim(), "step_linear");
    if (dxi.size() != model.n_channels())
        throw std::invalid_argument("step_linear: one increment per channel required");
    for (double x : dxi)
        if (!std::isfinite(x)) throw std::invalid_argument("step_linear: non-finite increment");
    const auto kernel = detail::make_kernel<Eigen::Dynamic>(model, gauge);
    Vector next = phi.amplitudes() + dt * (kernel.linear_drift * phi.amplitudes());
    for (std::size_t n = 0; n < dxi.size(); ++n)
        next += (kernel.lambda * dxi[n]) * (kernel.ops[n] * phi.amplitudes());
    return StateVector::free_norm(std::move(next));
}

// Full nonlinear trajectory under P.  Records every record_stride-th state, the
// qubit <sigma_z> path, the running dynamical phase, and the final state of the
// co-integrated linear companion.
inline TrajectoryRecord simulate_nonlinear(const LindbladModel& model,
                                           const UnravellingGauge& gauge, const StateVector& psi0,
                                           const SdeConfig& cfg, NoisePath noise) {
    if (noise.measure != Measure::P)
        throw std::invalid_argument("simulate_nonlinear: noise must carry the P tag");
    if (!psi0.is_asserted_normalized())
        throw std::invalid_argument("simulate_nonlinear: initial state must be normalized");
    detail::check_same_dim(model.dim(), psi0.dim(), "simulate_nonlinear");
    if (model.dim() == 2)
        return detail::simulate_impl<2>(model, gauge, psi0.amplitudes(), cfg, std::move(noise));
    return detail::simulate_impl<Eigen::Dynamic>(model, gauge, psi0.amplitudes(), cfg,
                                                 std::move(noise));
}

// Full linear trajectory under Q; states are free-norm, weights <phi|phi>.
inline TrajectoryRecord simulate_linear(const LindbladModel& model, const UnravellingGauge& gauge,
                                        const StateVector& phi0, const SdeConfig& cfg,
                                        NoisePath noise) {
    if (noise.measure != Measure::Q)
        throw std::invalid_argument("simulate_linear: noise must carry the Q tag");
    detail::check_same_dim(model.dim(), phi0.dim(), "simulate_linear");
    if (model.dim() == 2)
        return detail::simulate_impl<2>(model, gauge, phi0.amplitudes(), cfg, std::move(noise));
    return detail::simulate_impl<Eigen::Dynamic>(model, gauge, phi0.amplitudes(), cfg,
                                                 std::move(noise));
}

// Noise substitution along a P trajectory: d(xi)_n = dW_n + 2 lambda r_n dt with
// r_n evaluated at the recorded state of each step (requires record_stride 1).
inline NoisePath girsanov_shift(const LindbladModel& model, const UnravellingGauge& gauge,
                                const TrajectoryRecord& trajectory) {
    if (trajectory.measure() != Measure::P)
        throw std::invalid_argument("girsanov_shift: trajectory must be a P (nonlinear) path");
    if (trajectory.record_stride != 1)
        throw std::invalid_argument("girsanov_shift: requires record_stride 1");
    const auto kernel = detail::make_kernel<Eigen::Dynamic>(model, gauge);
    NoisePath out = trajectory.noise;
    out.measure = Measure::Q;
    const long steps = trajectory.noise.n_steps();
    for (long k = 0; k < steps; ++k) {
        const Vector& psi = trajectory.states[static_cast<std::size_t>(k)].amplitudes();
        const double nrm2 = psi.squaredNorm();
        for (std::size_t n = 0; n < kernel.ops.size(); ++n) {
            const double r = psi.dot(kernel.ops[n] * psi).real() / nrm2;
            out.increments(static_cast<long>(n), k) += 2.0 * kernel.lambda * r * trajectory.noise.dt;
        }
    }
    return out;
}

// <phi_t|phi_t> path of a linear trajectory (the importance weight relating the
// two measures); recomputed from the stored states.
inline std::vector<double> measure_weight(const TrajectoryRecord& trajectory) {
    if (trajectory.measure() != Measure::Q)
        throw std::invalid_argument("measure_weight: trajectory must be a Q (linear) path");
    std::vector<double> w;
    w.reserve(trajectory.states.size());
    for (const auto& s : trajectory.states) w.push_back(s.squared_norm());
    return w;
}

namespace detail {

template <int D>
double pathwise_check_impl(const LindbladModel& model, const UnravellingGauge& gauge,
                           const Vector& start, const NoisePath& noise, double dt) {
    const auto kernel = make_kernel<D>(model, gauge);
    const double lambda = kernel.lambda;
    const std::size_t nch = kernel.ops.size();
    const long steps = noise.n_steps();
    const Eigen::Index dim = kernel.dim;

    VecD<D> phi = start;
    VecD<D> psi = start;
    VecD<D> u(dim), drift(dim), next(dim);
    double max_dev = 0.0;

    for (long k = 0; k <= steps; ++k) {
        max_dev = std::max(max_dev, (phi / phi.norm() - psi).norm());
        if (k == steps) break;

        // Nonlinear coefficients and reconstructed dW at psi.
        drift.noalias() = kernel.linear_drift * psi;
        double r2 = 0.0;
        next = psi;
        for (std::size_t n = 0; n < nch; ++n) {
            u.noalias() = kernel.ops[n] * psi;
            const double r = psi.dot(u).real() / psi.squaredNorm();
            drift += (lambda * lambda * r) * u;
            r2 += r * r;
            const double dw = noise.increments(static_cast<long>(n), k) - 2.0 * lambda * r * dt;
            next += (lambda * dw) * u;
            next -= (lambda * dw * r) * psi;
        }
        drift -= (0.5 * lambda * lambda * r2) * psi;
        next += dt * drift;
        const double nn = next.norm();
        if (nn < tol::kDegenerateNorm)
            throw DegenerateStateError("pathwise_equivalence_check: degenerate state at step " +
                                       std::to_string(k));
        psi = next / nn;

        // Linear step with the given Q increments.
        next.noalias() = kernel.linear_drift * phi;
        next *= dt;
        next += phi;
        for (std::size_t n = 0; n < nch; ++n)
            next += (lambda * noise.increments(static_cast<long>(n), k)) * (kernel.ops[n] * phi);
        phi = next;
        if (phi.norm() < tol::kDegenerateNorm)
            throw DegenerateStateError("pathwise_equivalence_check: linear norm collapsed at step " +
                                       std::to_string(k));
    }
    return max_dev;
}

}  // namespace detail

// Integrates the linear equation with the given Q noise and, side by side, the
// nonlinear equation with dW reconstructed through the noise substitution from
// the nonlinear state's own r.  Returns the maximum over time of
// || phi/||phi|| - psi ||.  Contract: -> 0 as dt -> 0 at strong order >= 0.5.
inline double pathwise_equivalence_check(const LindbladModel& model,
                                         const UnravellingGauge& gauge, const StateVector& phi0,
                                         const NoisePath& noise, double dt) {
    if (noise.measure != Measure::Q)
        throw std::invalid_argument("pathwise_equivalence_check: noise must carry the Q tag");
    if (!phi0.is_asserted_normalized())
        throw std::invalid_argument("pathwise_equivalence_check: initial state must be normalized");
    if (std::abs(noise.dt - dt) > 1e-12 * dt)
        throw std::invalid_argument("pathwise_equivalence_check: noise dt differs from dt");
    detail::check_same_dim(model.dim(), phi0.dim(), "pathwise_equivalence_check");
    if (model.dim() == 2)
        return detail::pathwise_check_impl<2>(model, gauge, phi0.amplitudes(), noise, dt);
    return detail::pathwise_check_impl<Eigen::Dynamic>(model, gauge, phi0.amplitudes(), noise, dt);
}

}  // namespace unravel
