// lindblad.hpp — Deterministic density-matrix evolution: the master-equation
// generator, a classical RK4 integrator, and the closed-form dephasing solution
// used as the oracle of record.

#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "unravel/constants.hpp"
#include "unravel/errors.hpp"
#include "unravel/quantum.hpp"

namespace unravel {

struct LindbladModel {
    Operator hamiltonian;               // Hermitian within tol::kHermitian
    std::vector<Operator> lindblad_ops; // environment coupling operators
    double lambda{0.0};                 // coupling strength, >= 0

    LindbladModel(Operator h, std::vector<Operator> ops, double coupling)
        : hamiltonian(std::move(h)), lindblad_ops(std::move(ops)), lambda(coupling) {
        if (!hamiltonian.is_hermitian())
            throw std::invalid_argument("LindbladModel: Hamiltonian not Hermitian");
        if (!(lambda >= 0.0) || !std::isfinite(lambda))
            throw std::invalid_argument("LindbladModel: lambda must be finite and >= 0");
        for (const auto& op : lindblad_ops)
            detail::check_same_dim(op.dim(), hamiltonian.dim(), "LindbladModel");
    }

    Eigen::Index dim() const { return hamiltonian.dim(); }
    std::size_t n_channels() const { return lindblad_ops.size(); }
};

// Spin-1/2 dephasing in a constant z field: H = -mu_b sigma_z, single L = sigma_z,
// initial state cos(theta/2)|up> + sin(theta/2)|down>.  hbar = 1 throughout; the
// field enters only through the single energy mu_b.
struct DephasingSpinModel {
    double mu_b{1.0};
    double lambda{0.0};
    double theta{0.0};  // in [0, pi]

    DephasingSpinModel(double field, double coupling, double angle)
        : mu_b(field), lambda(coupling), theta(angle) {
        if (!std::isfinite(mu_b) || !std::isfinite(lambda) || !std::isfinite(theta))
            throw std::invalid_argument("DephasingSpinModel: non-finite parameter");
        if (lambda < 0.0)
            throw std::invalid_argument("DephasingSpinModel: lambda must be >= 0");
        if (theta < 0.0 || theta > M_PI)
            throw std::invalid_argument("DephasingSpinModel: theta outside [0, pi]");
    }

    LindbladModel to_lindblad() const {
        return LindbladModel(Operator(-mu_b * pauli_z()), {Operator(pauli_z())}, lambda);
    }

    StateVector initial_state() const { return spin_theta(theta); }
};

namespace detail {

// drho/dt = -i[H, rho] - (lambda^2/2) sum_n (Ld L rho + rho Ld L - 2 L rho Ld).
// Works on raw matrices so RK4 stages (which are not density matrices) can reuse it.
inline Matrix lindblad_generator(const LindbladModel& model, const Matrix& rho) {
    const Matrix& h = model.hamiltonian.entries();
    Matrix out = Complex(0.0, -1.0) * (h * rho - rho * h);
    const double g = 0.5 * model.lambda * model.lambda;
    for (const auto& op : model.lindblad_ops) {
        const Matrix& l = op.entries();
        const Matrix ldl = l.adjoint() * l;
        out -= g * (ldl * rho + rho * ldl - 2.0 * l * rho * l.adjoint());
    }
    return out;
}

}  // namespace detail

inline Matrix lindblad_rhs(const LindbladModel& model, const DensityMatrix& rho) {
    detail::check_same_dim(model.dim(), rho.dim(), "lindblad_rhs");
    return detail::lindblad_generator(model, rho.entries());
}

struct MasterPath {
    std::vector<double> times;
    std::vector<DensityMatrix> states;
};

// Classical 4th-order Runge-Kutta on the vectorized density matrix; fixed step,
// no adaptivity.  Every snapshot is validated against the DensityMatrix
// invariants; a violation raises IntegrationError with the offending step.
inline MasterPath integrate_master(const LindbladModel& model, const DensityMatrix& rho0,
                                   double t_final, double dt) {
    detail::check_same_dim(model.dim(), rho0.dim(), "integrate_master");
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_master: dt must be > 0");
    if (t_final < 0.0) throw std::invalid_argument("integrate_master: t_final must be >= 0");

    const long steps = std::lround(t_final / dt);
    MasterPath path;
    path.times.reserve(steps + 1);
    path.states.reserve(steps + 1);
    path.times.push_back(0.0);
    path.states.push_back(rho0);

    Matrix rho = rho0.entries();
    for (long k = 0; k < steps; ++k) {
        const Matrix k1 = detail::lindblad_generator(model, rho);
        const Matrix k2 = detail::lindblad_generator(model, rho + 0.5 * dt * k1);
        const Matrix k3 = detail::lindblad_generator(model, rho + 0.5 * dt * k2);
        const Matrix k4 = detail::lindblad_generator(model, rho + dt * k3);
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        path.times.push_back(static_cast<double>(k + 1) * dt);
        try {
            path.states.emplace_back(rho);
        } catch (const std::invalid_argument& e) {
            throw IntegrationError(std::string("integrate_master: ") + e.what(), k + 1);
        }
    }
    return path;
}

// Closed-form dephasing solution: populations constant, coherence
// rho01(t) = rho01(0) e^{(2 i mu_b - 2 lambda^2) t} with rho01(0) = sin(theta)/2.
inline DensityMatrix dephasing_exact(const DephasingSpinModel& model, double t) {
    if (t < 0.0) throw std::invalid_argument("dephasing_exact: t must be >= 0");
    const double c = std::cos(model.theta / 2.0);
    const double s = std::sin(model.theta / 2.0);
    const Complex decay =
        std::exp(Complex(-2.0 * model.lambda * model.lambda * t, 2.0 * model.mu_b * t));
    Matrix rho(2, 2);
    rho(0, 0) = c * c;
    rho(1, 1) = s * s;
    rho(0, 1) = c * s * decay;
    rho(1, 0) = std::conj(rho(0, 1));
    return DensityMatrix(std::move(rho));
}

}  // namespace unravel
