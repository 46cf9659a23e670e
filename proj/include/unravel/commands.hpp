// commands.hpp — The experiment commands behind the CLI: deterministic master
// path, trajectory moments, phase scans, interference curves, and the
// verification suite.  Every command echoes its fully-resolved config into the
// output directory and emits CSV and/or JSON tables.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "unravel/acceptance.hpp"
#include "unravel/config.hpp"
#include "unravel/ensemble.hpp"
#include "unravel/result_table.hpp"

namespace unravel {

namespace detail {

inline void prepare_out_dir(const ExperimentConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream echo(std::filesystem::path(cfg.out_dir) / "config_resolved.json");
    if (!echo) throw std::runtime_error("cannot write config echo in " + cfg.out_dir);
    echo << config_to_json(cfg).dump(2) << "\n";
}

inline void write_table(const ResultTable& table, const ExperimentConfig& cfg,
                        const std::string& basename) {
    const auto dir = std::filesystem::path(cfg.out_dir);
    if (cfg.write_csv) table.write_csv((dir / (basename + ".csv")).string());
    if (cfg.write_json) table.write_json((dir / (basename + ".json")).string());
}

inline double opt_or_nan(const std::optional<double>& v) {
    return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

// Deterministic master-equation path next to the closed-form solution.
inline int cmd_master(const ExperimentConfig& cfg) {
    detail::prepare_out_dir(cfg);
    const auto spin = cfg.spin_model();
    const auto path = integrate_master(spin.to_lindblad(), pure_density(spin.initial_state()),
                                       cfg.t_final, cfg.dt);
    ResultTable table(
        {"t", "rho00_re", "rho00_im", "rho01_re", "rho01_im", "rho10_re", "rho10_im", "rho11_re",
         "rho11_im", "oracle_rho00_re", "oracle_rho00_im", "oracle_rho01_re", "oracle_rho01_im",
         "oracle_rho10_re", "oracle_rho10_im", "oracle_rho11_re", "oracle_rho11_im",
         "abs_deviation"},
        {"t in 1/(mu_b) units (hbar = 1); rho entries dimensionless",
         "integrator: classical RK4, dt = " + ResultTable::format_value(cfg.dt),
         "abs_deviation: max entrywise |rho - oracle| at this t"});
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        if (k % static_cast<std::size_t>(cfg.record_stride) != 0 && k + 1 != path.times.size())
            continue;
        const Matrix& rho = path.states[k].entries();
        const Matrix oracle = dephasing_exact(spin, path.times[k]).entries();
        std::vector<double> row{path.times[k]};
        for (Eigen::Index i = 0; i < 2; ++i)
            for (Eigen::Index j = 0; j < 2; ++j) {
                row.push_back(rho(i, j).real());
                row.push_back(rho(i, j).imag());
            }
        for (Eigen::Index i = 0; i < 2; ++i)
            for (Eigen::Index j = 0; j < 2; ++j) {
                row.push_back(oracle(i, j).real());
                row.push_back(oracle(i, j).imag());
            }
        row.push_back((rho - oracle).cwiseAbs().maxCoeff());
        table.add_row(std::move(row));
    }
    detail::write_table(table, cfg, "master");
    return 0;
}

// Per-gauge <sigma_z> moment statistics, plus optional decimated Bloch paths.
inline int cmd_trajectories(const ExperimentConfig& cfg) {
    detail::prepare_out_dir(cfg);
    const auto spin = cfg.spin_model();
    for (std::size_t g = 0; g < cfg.phi.size(); ++g) {
        auto spec = EnsembleSpec::dephasing(spin, cfg.phi[g], cfg.sde(), cfg.n_traj,
                                            cfg.master_seed, Equation::NonlinearP);
        const auto stats = run_ensemble(spec, cfg.threads);
        ResultTable table({"t", "mean_sz", "stderr_sz", "mean_sz2", "stderr_sz2"},
                          {"gauge phi = " + ResultTable::format_value(cfg.phi[g]) + " rad",
                           "n_traj = " + std::to_string(cfg.n_traj)});
        for (std::size_t k = 0; k < stats.times.size(); ++k)
            table.add_row({stats.times[k], stats.mean_sz[k], stats.stderr_sz[k],
                           stats.mean_sz2[k], stats.stderr_sz2[k]});
        detail::write_table(table, cfg, "trajectories_phi" + std::to_string(g));

        if (cfg.dump_count > 0) {
            ResultTable dump({"trajectory", "t", "x", "y", "z"},
                             {"Bloch paths, gauge phi = " +
                                  ResultTable::format_value(cfg.phi[g]) + " rad",
                              "decimation stride " + std::to_string(cfg.dump_stride)});
            SdeConfig sde = cfg.sde();
            sde.record_stride = cfg.dump_stride;
            const auto gauge = UnravellingGauge::single(cfg.phi[g]);
            const auto model = spin.to_lindblad();
            for (long i = 0; i < std::min(cfg.dump_count, cfg.n_traj); ++i) {
                auto noise = sample_noise(1, sde.n_steps(), sde.dt,
                                          derive_stream_seed(cfg.master_seed,
                                                             static_cast<std::uint64_t>(i)),
                                          Measure::P);
                const auto rec =
                    simulate_nonlinear(model, gauge, spin.initial_state(), sde, std::move(noise));
                for (std::size_t k = 0; k < rec.times.size(); ++k) {
                    const auto b = bloch(rec.states[k]);
                    dump.add_row({static_cast<double>(i), rec.times[k], b.x, b.y, b.z});
                }
            }
            detail::write_table(dump, cfg, "bloch_paths_phi" + std::to_string(g));
        }
    }
    return 0;
}

// One row per gauge: total/dynamical/geometric phases (both averaging
// conventions) with standard errors; common random numbers across gauges.
inline int cmd_phase_scan(const ExperimentConfig& cfg) {
    if (cfg.phi.size() < 2)
        throw std::invalid_argument("phase-scan: at least two gauge angles required");
    detail::prepare_out_dir(cfg);
    const auto spin = cfg.spin_model();
    ResultTable table(
        {"phi", "total_phase", "total_phase_stderr", "total_phase_defined", "visibility",
         "visibility_stderr", "dyn_phase_mean", "dyn_phase_mean_stderr", "dyn_factor_arg",
         "dyn_factor_arg_stderr", "dyn_factor_modulus", "dyn_factor_modulus_stderr",
         "geo_by_phase", "geo_by_phase_stderr", "geo_by_factor", "geo_by_factor_stderr",
         "sz_sq_time_integral", "sz_sq_time_integral_stderr", "n_traj"},
        {"angles in radians; phases reported in (-pi, pi] except the unwrapped dynamical mean",
         "common random numbers across gauges (master_seed = " +
             std::to_string(cfg.master_seed) + ")"});
    for (double phi : cfg.phi) {
        auto spec = EnsembleSpec::dephasing(spin, phi, cfg.sde(), cfg.n_traj, cfg.master_seed,
                                            Equation::NonlinearP);
        const auto stats = run_ensemble(spec, cfg.threads);
        const auto& ph = *stats.phases;
        table.add_row({phi, detail::opt_or_nan(ph.mean_total), ph.mean_total_stderr,
                       ph.mean_total ? 1.0 : 0.0, ph.visibility, ph.visibility_stderr,
                       ph.mean_dyn_phase_average, ph.mean_dyn_phase_average_stderr,
                       detail::opt_or_nan(ph.mean_dyn_factor_average),
                       ph.mean_dyn_factor_average_stderr, ph.dyn_factor_modulus,
                       ph.dyn_factor_modulus_stderr, detail::opt_or_nan(ph.mean_geo_by_phase),
                       ph.mean_geo_by_phase_stderr, detail::opt_or_nan(ph.mean_geo_by_factor),
                       ph.mean_geo_by_factor_stderr, ph.sz_sq_time_integral,
                       ph.sz_sq_time_integral_stderr, static_cast<double>(ph.n_traj)});
    }
    detail::write_table(table, cfg, "phase_scan");
    return 0;
}

// Averaged intensity I(chi) per (lambda, gauge), plus fitted (visibility,
// total phase) against the direct estimates.
inline int cmd_interference(const ExperimentConfig& cfg) {
    detail::prepare_out_dir(cfg);
    const auto chi = cfg.resolved_chi_grid();
    if (chi.empty()) throw std::invalid_argument("interference: chi grid is empty");
    ResultTable curve({"lambda", "phi", "chi", "intensity", "intensity_stderr"},
                      {"averaged output intensity; angles in radians"});
    ResultTable fits({"lambda", "phi", "visibility_fit", "total_phase_fit", "fit_residual",
                      "visibility_direct", "visibility_stderr", "total_phase_direct",
                      "total_phase_stderr", "n_traj"},
                     {"fit model: 1/2 + (nu/2) cos(chi - gamma_tot)"});
    for (double lambda : cfg.lambda_scan) {
        for (double phi : cfg.phi) {
            DephasingSpinModel m(cfg.mu_b, lambda, cfg.theta);
            auto spec = EnsembleSpec::dephasing(m, phi, cfg.sde(), cfg.n_traj, cfg.master_seed,
                                                Equation::NonlinearP);
            const auto stats = run_ensemble_with_intensity(spec, chi, cfg.threads);
            const auto& ph = *stats.phases;
            for (std::size_t j = 0; j < chi.size(); ++j)
                curve.add_row({lambda, phi, chi[j], stats.mean_intensity[j],
                               stats.stderr_intensity[j]});
            const auto fit = detail::fit_interference(chi, stats.mean_intensity);
            fits.add_row({lambda, phi, fit.visibility, fit.total_phase, fit.residual,
                          ph.visibility, ph.visibility_stderr, detail::opt_or_nan(ph.mean_total),
                          ph.mean_total_stderr, static_cast<double>(ph.n_traj)});
        }
    }
    detail::write_table(curve, cfg, "intensity");
    detail::write_table(fits, cfg, "interference_fits");
    return 0;
}

// Runs the acceptance suite; one line per criterion, machine-readable report,
// exit 0 iff everything passed.
inline int cmd_verify(const ExperimentConfig& cfg, std::ostream& out = std::cout) {
    detail::prepare_out_dir(cfg);
    AcceptanceOptions options;
    options.model = cfg.spin_model();
    options.dt = cfg.dt;
    options.t_final = cfg.t_final;
    options.record_stride = cfg.record_stride;
    options.n_traj = cfg.n_traj;
    options.master_seed = cfg.master_seed;
    options.threads = cfg.threads;
    const auto results = run_acceptance(options);

    nlohmann::json report;
    report["criteria"] = nlohmann::json::array();
    bool all_pass = true;
    for (const auto& r : results) {
        out << "[" << outcome_name(r.outcome) << "] " << r.id << " " << r.name << ": "
            << r.details << "\n";
        report["criteria"].push_back({{"id", r.id},
                                      {"name", r.name},
                                      {"outcome", outcome_name(r.outcome)},
                                      {"details", r.details}});
        all_pass = all_pass && r.outcome == Outcome::Pass;
    }
    report["all_pass"] = all_pass;
    std::ofstream f(std::filesystem::path(cfg.out_dir) / "verify_report.json");
    f << report.dump(2) << "\n";
    out << (all_pass ? "all criteria passed" : "verification FAILED") << "\n";
    return all_pass ? 0 : 1;
}

}  // namespace unravel
