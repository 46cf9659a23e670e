// acceptance.hpp — The verification suite behind the `verify` command: eleven
// criteria with pinned tolerances, each reporting pass / fail / inconclusive.
// Statistical criteria are evaluated as 3-sigma bands around analytic targets
// (plus a 1e-9 absolute float slack); they report "inconclusive" instead of a
// vacuous pass when the run is underpowered.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "unravel/angles.hpp"
#include "unravel/constants.hpp"
#include "unravel/ensemble.hpp"
#include "unravel/lindblad.hpp"
#include "unravel/phase.hpp"
#include "unravel/sse.hpp"

namespace unravel {

enum class Outcome { Pass, Fail, Inconclusive };

inline const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Pass: return "PASS";
        case Outcome::Fail: return "FAIL";
        default: return "INCONCLUSIVE";
    }
}

struct CriterionResult {
    std::string id;
    std::string name;
    Outcome outcome{Outcome::Fail};
    std::string details;
};

struct AcceptanceOptions {
    DephasingSpinModel model{1.0, 0.5, M_PI / 3.0};
    double dt{1e-3};
    double t_final{2.0};
    long record_stride{10};
    long n_traj{10000};
    std::uint64_t master_seed{1905};
    long threads{0};
    long min_statistical_traj{1000};  // below this, statistical criteria are inconclusive
};

namespace detail {

struct AcceptanceContext {
    const AcceptanceOptions& opt;
    // P-ensembles cached by (phi, lambda); several criteria share them.
    std::map<std::pair<double, double>, EnsembleStats> p_cache;

    SdeConfig sde() const {
        return SdeConfig{opt.dt, opt.t_final, SdeScheme::EulerMaruyama, true, opt.record_stride};
    }

    const EnsembleStats& p_ensemble(double phi, double lambda) {
        const auto key = std::make_pair(phi, lambda);
        auto it = p_cache.find(key);
        if (it != p_cache.end()) return it->second;
        DephasingSpinModel m(opt.model.mu_b, lambda, opt.model.theta);
        auto spec = EnsembleSpec::dephasing(m, phi, sde(), opt.n_traj, opt.master_seed,
                                            Equation::NonlinearP);
        return p_cache.emplace(key, run_ensemble(spec, opt.threads)).first->second;
    }
};

inline std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

inline double band(double se, double sigmas = 3.0) { return sigmas * se + tol::kFloatSlack; }

inline CriterionResult statistical_guard(const AcceptanceContext& ctx, const std::string& id,
                                         const std::string& name) {
    CriterionResult res{id, name, Outcome::Inconclusive,
                        "n_traj = " + std::to_string(ctx.opt.n_traj) + " < " +
                            std::to_string(ctx.opt.min_statistical_traj) +
                            ": statistically underpowered"};
    return res;
}

// C1: RK4 master path vs the closed-form dephasing solution over t in [0, 5].
inline CriterionResult c01_oracle_equivalence(AcceptanceContext& ctx) {
    CriterionResult res{"C01", "master-oracle-equivalence", Outcome::Fail, ""};
    const auto& m = ctx.opt.model;
    const auto path = integrate_master(m.to_lindblad(), pure_density(m.initial_state()), 5.0,
                                       ctx.opt.dt);
    double max_dev = 0.0;
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        const Matrix exact = dephasing_exact(m, path.times[k]).entries();
        max_dev = std::max(max_dev, (path.states[k].entries() - exact).cwiseAbs().maxCoeff());
    }
    res.outcome = max_dev <= 1e-8 ? Outcome::Pass : Outcome::Fail;
    res.details = "max entrywise deviation " + fmt(max_dev) + " (bound 1e-8)";
    return res;
}

// C2: trajectory-averaged projector vs the oracle for phi in {0, pi/4, pi/2}.
inline CriterionResult c02_unravelling_consistency(AcceptanceContext& ctx) {
    CriterionResult res{"C02", "unravelling-consistency", Outcome::Pass, ""};
    if (ctx.opt.n_traj < ctx.opt.min_statistical_traj)
        return statistical_guard(ctx, res.id, res.name);
    double worst_excess = -1e300;
    for (double phi : {0.0, M_PI / 4.0, M_PI / 2.0}) {
        const auto& stats = ctx.p_ensemble(phi, ctx.opt.model.lambda);
        for (std::size_t k = 0; k < stats.times.size(); ++k) {
            const Matrix exact = dephasing_exact(ctx.opt.model, stats.times[k]).entries();
            for (Eigen::Index j = 0; j < 2; ++j) {
                for (Eigen::Index i = 0; i < 2; ++i) {
                    const Complex d = stats.mean_density[k](i, j) - exact(i, j);
                    const Complex se = stats.stderr_density[k](i, j);
                    const double ex_re =
                        std::abs(d.real()) - std::max(band(se.real()), 0.02);
                    const double ex_im =
                        std::abs(d.imag()) - std::max(band(se.imag()), 0.02);
                    worst_excess = std::max({worst_excess, ex_re, ex_im});
                }
            }
        }
    }
    res.outcome = worst_excess <= 0.0 ? Outcome::Pass : Outcome::Fail;
    res.details = "worst excess over max(3*stderr, 0.02): " + fmt(worst_excess);
    return res;
}

// C3: pathwise linear<->nonlinear correspondence and its strong-convergence
// factor per halving.  The stated statistic (ratio of 100-path medians) sits
// exactly at sqrt(2) in the population, so it is evaluated over independent
// replicates with a 3-sigma one-sided band, like every other statistical
// criterion here.
inline CriterionResult c03_pathwise_correspondence(AcceptanceContext& ctx) {
    CriterionResult res{"C03", "pathwise-correspondence", Outcome::Fail, ""};
    const auto& m = ctx.opt.model;
    const auto model = m.to_lindblad();
    const auto gauge = UnravellingGauge::single(0.0);
    const double dt = ctx.opt.dt;
    const long fine_steps = 2 * SdeConfig{dt, ctx.opt.t_final}.n_steps();
    constexpr long kPaths = 100;
    constexpr long kReplicates = 12;

    std::vector<double> factors;
    double median_coarse_first = 0.0;
    for (long rep = 0; rep < kReplicates; ++rep) {
        std::vector<double> dev_c, dev_f;
        dev_c.reserve(kPaths);
        dev_f.reserve(kPaths);
        for (long i = 0; i < kPaths; ++i) {
            const std::uint64_t seed =
                derive_stream_seed(ctx.opt.master_seed, 0x100000ULL + rep * kPaths + i);
            auto fine = sample_noise(1, fine_steps, 0.5 * dt, seed, Measure::Q);
            auto coarse = coarsen_noise(fine, 2);
            dev_c.push_back(
                pathwise_equivalence_check(model, gauge, m.initial_state(), coarse, dt));
            dev_f.push_back(
                pathwise_equivalence_check(model, gauge, m.initial_state(), fine, 0.5 * dt));
        }
        auto median = [](std::vector<double>& v) {
            std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
            return v[v.size() / 2];
        };
        const double mc = median(dev_c);
        const double mf = median(dev_f);
        if (rep == 0) median_coarse_first = mc;
        factors.push_back(mc / mf);
    }
    ScalarStat fstat;
    for (double f : factors) fstat.add(f);
    const double mean_factor = fstat.mean();
    const double se = fstat.stderr_of_mean();
    const double target = std::sqrt(2.0);
    const bool order_ok = mean_factor >= target - band(se) && mean_factor >= 1.30;
    const bool close = median_coarse_first <= 0.05;
    res.outcome = (order_ok && close) ? Outcome::Pass : Outcome::Fail;
    res.details = "halving factor " + fmt(mean_factor) + " +- " + fmt(se) + " (target >= " +
                  fmt(target) + " - 3*SE), median deviation at dt " + fmt(median_coarse_first);
    return res;
}

// C4: E_Q[<phi_t|phi_t>] = 1 at every recorded time.
inline CriterionResult c04_martingale_weight(AcceptanceContext& ctx) {
    CriterionResult res{"C04", "measure-weight-martingale", Outcome::Pass, ""};
    if (ctx.opt.n_traj < ctx.opt.min_statistical_traj)
        return statistical_guard(ctx, res.id, res.name);
    auto spec = EnsembleSpec::dephasing(ctx.opt.model, 0.0, ctx.sde(), ctx.opt.n_traj,
                                        ctx.opt.master_seed, Equation::LinearQ);
    const auto stats = run_ensemble(spec, ctx.opt.threads);
    double worst = -1e300;
    for (std::size_t k = 0; k < stats.times.size(); ++k)
        worst = std::max(worst,
                         std::abs(stats.mean_weight[k] - 1.0) - band(stats.stderr_weight[k]));
    res.outcome = worst <= 0.0 ? Outcome::Pass : Outcome::Fail;
    res.details = "worst |mean weight - 1| excess over 3*stderr: " + fmt(worst);
    return res;
}

// C5: moment laws: E[<sz>] flat at cos(theta); E[<sz>^2] nondecreasing within
// 1 stderr; every path's <sz> frozen at phi = pi/2.
inline CriterionResult c05_moment_laws(AcceptanceContext& ctx) {
    CriterionResult res{"C05", "sz-moment-laws", Outcome::Pass, ""};
    if (ctx.opt.n_traj < ctx.opt.min_statistical_traj)
        return statistical_guard(ctx, res.id, res.name);
    const double target = std::cos(ctx.opt.model.theta);
    const auto& stats = ctx.p_ensemble(0.0, ctx.opt.model.lambda);
    double worst_flat = -1e300;
    for (std::size_t k = 0; k < stats.times.size(); ++k)
        worst_flat = std::max(worst_flat,
                              std::abs(stats.mean_sz[k] - target) - band(stats.stderr_sz[k]));
    double worst_decrease = -1e300;
    for (std::size_t k = 1; k < stats.times.size(); ++k) {
        const double slack = std::sqrt(stats.stderr_sz2[k] * stats.stderr_sz2[k] +
                                       stats.stderr_sz2[k - 1] * stats.stderr_sz2[k - 1]);
        worst_decrease = std::max(worst_decrease, (stats.mean_sz2[k - 1] - stats.mean_sz2[k]) -
                                                      slack - tol::kFloatSlack);
    }
    const auto& frozen = ctx.p_ensemble(M_PI / 2.0, ctx.opt.model.lambda);
    const double fluct = frozen.max_sz_initial_deviation;
    const bool ok = worst_flat <= 0.0 && worst_decrease <= 0.0 && fluct <= 10.0 * ctx.opt.dt;
    res.outcome = ok ? Outcome::Pass : Outcome::Fail;
    res.details = "flatness excess " + fmt(worst_flat) + ", decrease excess " +
                  fmt(worst_decrease) + ", max frozen-sz fluctuation " + fmt(fluct) +
                  " (bound " + fmt(10.0 * ctx.opt.dt) + ")";
    return res;
}

struct InterferenceFit {
    double visibility{0.0};
    double total_phase{0.0};
    double residual{0.0};
};

// Least squares of I(chi) = 1/2 + (A cos chi + B sin chi)/2 on the sampled
// curve; recovers nu = |(A, B)| and gamma = atan2(B, A).
inline InterferenceFit fit_interference(const std::vector<double>& chi,
                                        const std::vector<double>& intensity) {
    double scc = 0.0, sss = 0.0, scs = 0.0, syc = 0.0, sys = 0.0;
    for (std::size_t j = 0; j < chi.size(); ++j) {
        const double c = std::cos(chi[j]);
        const double s = std::sin(chi[j]);
        const double y = 2.0 * (intensity[j] - 0.5);
        scc += c * c;
        sss += s * s;
        scs += c * s;
        syc += y * c;
        sys += y * s;
    }
    const double det = scc * sss - scs * scs;
    if (std::abs(det) < 1e-12) throw std::invalid_argument("fit_interference: degenerate grid");
    const double a = (sss * syc - scs * sys) / det;
    const double b = (scc * sys - scs * syc) / det;
    InterferenceFit fit;
    fit.visibility = std::hypot(a, b);
    fit.total_phase = std::atan2(b, a);
    double worst = 0.0;
    for (std::size_t j = 0; j < chi.size(); ++j) {
        const double model = 0.5 + 0.5 * (a * std::cos(chi[j]) + b * std::sin(chi[j]));
        worst = std::max(worst, std::abs(model - intensity[j]));
    }
    fit.residual = worst;
    return fit;
}

// C6: pi pulse: fitted gamma_tot = pi and nu = 1 within 3 stderr.
inline CriterionResult c06_pi_pulse_total_phase(AcceptanceContext& ctx) {
    CriterionResult res{"C06", "pi-pulse-total-phase", Outcome::Pass, ""};
    if (ctx.opt.n_traj < ctx.opt.min_statistical_traj)
        return statistical_guard(ctx, res.id, res.name);
    const double t_pulse = M_PI / ctx.opt.model.mu_b;
    const SdeConfig sde{t_pulse / 3142.0, t_pulse, SdeScheme::EulerMaruyama, true,
                        ctx.opt.record_stride};
    auto spec = EnsembleSpec::dephasing(ctx.opt.model, 0.0, sde, ctx.opt.n_traj,
                                        ctx.opt.master_seed, Equation::NonlinearP);
    std::vector<double> chi;
    for (long j = 0; j < 25; ++j) chi.push_back(-M_PI + 2.0 * M_PI * j / 25.0);
    const auto stats = run_ensemble_with_intensity(spec, chi, ctx.opt.threads);
    const auto& ph = *stats.phases;
    const auto fit = fit_interference(chi, stats.mean_intensity);
    const double phase_err = principal_distance(fit.total_phase, M_PI);
    const double vis_err = std::abs(fit.visibility - 1.0);
    const bool ok = phase_err <= band(ph.mean_total_stderr) &&
                    vis_err <= band(ph.visibility_stderr) && fit.residual <= 1e-6 &&
                    ph.mean_total &&
                    principal_distance(fit.total_phase, *ph.mean_total) <= 1e-6 + fit.residual &&
                    std::abs(fit.visibility - ph.visibility) <= 1e-6 + fit.residual;
    res.outcome = ok ? Outcome::Pass : Outcome::Fail;
    res.details = "fitted gamma " + fmt(fit.total_phase) + " (|d pi| " + fmt(phase_err) +
                  " vs band " + fmt(band(ph.mean_total_stderr)) + "), nu " +
                  fmt(fit.visibility) + " (|d 1| " + fmt(vis_err) + " vs band " +
                  fmt(band(ph.visibility_stderr)) + "), fit residual " + fmt(fit.residual);
    return res;
}

// C7: total phase and visibility do not depend on the gauge or on lambda.
inline CriterionResult c07_gauge_lambda_independence(AcceptanceContext& ctx) {
    CriterionResult res{"C07", "total-phase-gauge-lambda-independence", Outcome::Pass, ""};
    if (ctx.opt.n_traj < ctx.opt.min_statistical_traj)
        return statistical_guard(ctx, res.id, res.name);
    struct Cell {
        double phase, phase_se, vis, vis_se;
    };
    std::vector<Cell> cells;
    for (double lambda : {0.25, 0.5, 1.0}) {
        for (double phi : {0.0, M_PI / 4.0, M_PI / 2.0}) {
            const auto& stats = ctx.p_ensemble(phi, lambda);
            const auto& ph = *stats.phases;
            if (!ph.mean_total) {
                res.outcome = Outcome::Fail;
                res.details = "undefined total phase at phi=" + fmt(phi) +
                              ", lambda=" + fmt(lambda);
                return res;
            }
            cells.push_back(Cell{*ph.mean_total, ph.mean_total_stderr, ph.visibility,
                                 ph.visibility_stderr});
        }
    }
    double worst = -1e300;
    for (std::size_t a = 0; a < cells.size(); ++a) {
        for (std::size_t b = a + 1; b < cells.size(); ++b) {
            const double se_p = std::sqrt(cells[a].phase_se * cells[a].phase_se +
                                          cells[b].phase_se * cells[b].phase_se);
            const double se_v = std::sqrt(cells[a].vis_se * cells[a].vis_se +
                                          cells[b].vis_se * cells[b].vis_se);
            worst = std::max(worst, principal_distance(cells[a].phase, cells[b].phase) -
                                        band(se_p));
            worst = std::max(worst, std::abs(cells[a].vis - cells[b].vis) - band(se_v));
        }
    }
    res.outcome = worst <= 0.0 ? Outcome::Pass : Outcome::Fail;
    res.details = "worst pairwise excess over 3*combined stderr: " + fmt(worst) + " across 9 (phi, lambda) cells";
    return res;
}

// C8: the dynamical (hence geometric) phase depends on the gauge, with the
// shift lambda^2 sin(phi) cos(phi) * integral E[<sz>^2] dt.
inline CriterionResult c08_gauge_dependence(AcceptanceContext& ctx) {
    CriterionResult res{"C08", "dynamical-phase-gauge-dependence", Outcome::Pass, ""};
    if (ctx.opt.n_traj < ctx.opt.min_statistical_traj)
        return statistical_guard(ctx, res.id, res.name);
    DephasingSpinModel m(ctx.opt.model.mu_b, 1.0, ctx.opt.model.theta);
    auto base = EnsembleSpec::dephasing(m, 0.0, ctx.sde(), ctx.opt.n_traj, ctx.opt.master_seed,
                                        Equation::NonlinearP);
    const std::vector<UnravellingGauge> gauges{UnravellingGauge::single(M_PI / 4.0),
                                               UnravellingGauge::single(0.0)};
    const auto cmp = compare_gauges(base, gauges, ctx.opt.threads);
    const auto& pair = cmp.pairs.front();  // gamma(pi/4) - gamma(0)
    const double diff = pair.dyn_phase_difference.value;
    const double diff_se = pair.dyn_phase_difference.std_error;
    const double resid = pair.dyn_phase_difference_minus_prediction.value;
    const double resid_se = pair.dyn_phase_difference_minus_prediction.std_error;

    const auto& ph_a = *cmp.per_gauge[0].phases;  // pi/4
    const auto& ph_b = *cmp.per_gauge[1].phases;  // 0
    bool geo_ok = true;
    std::string geo_note;
    const auto check_geo = [&](std::optional<double> ga, double se_a, std::optional<double> gb,
                               double se_b, const char* label) {
        if (!ga || !gb) {
            geo_ok = false;
            geo_note += std::string(" ") + label + ": undefined";
            return;
        }
        // gamma_geo(0) - gamma_geo(pi/4) should match the dynamical shift.
        const double d = principal_value(*gb - *ga);
        const double se = std::sqrt(se_a * se_a + se_b * se_b);
        if (!(d >= 5.0 * se - tol::kFloatSlack &&
              std::abs(d - diff) <= band(std::sqrt(se * se + diff_se * diff_se))))
            geo_ok = false;
        geo_note += std::string(" ") + label + " " + fmt(d) + " +- " + fmt(se);
    };
    check_geo(ph_a.mean_geo_by_phase, ph_a.mean_geo_by_phase_stderr, ph_b.mean_geo_by_phase,
              ph_b.mean_geo_by_phase_stderr, "geo(phase-avg) shift");
    check_geo(ph_a.mean_geo_by_factor, ph_a.mean_geo_by_factor_stderr, ph_b.mean_geo_by_factor,
              ph_b.mean_geo_by_factor_stderr, "geo(factor-avg) shift");

    const bool ok = diff > 0.0 && diff >= 5.0 * diff_se - tol::kFloatSlack &&
                    std::abs(resid) <= band(resid_se) && geo_ok;
    res.outcome = ok ? Outcome::Pass : Outcome::Fail;
    res.details = "dyn shift " + fmt(diff) + " +- " + fmt(diff_se) + " (significance " +
                  fmt(diff_se > 0 ? diff / diff_se : 0.0) + " sigma), prediction residual " +
                  fmt(resid) + " +- " + fmt(resid_se) + ";" + geo_note;
    return res;
}

// C9: closed-form phase-factor average at theta = 0.
inline CriterionResult c09_phase_factor_closed_form(AcceptanceContext& ctx) {
    CriterionResult res{"C09", "eigenstate-phase-factor", Outcome::Pass, ""};
    if (ctx.opt.n_traj < ctx.opt.min_statistical_traj)
        return statistical_guard(ctx, res.id, res.name);
    const double lambda = 1.0, t_final = 1.0;
    double worst = -1e300;
    std::string note;
    for (double phi : {M_PI / 4.0, M_PI / 2.0}) {
        DephasingSpinModel m(ctx.opt.model.mu_b, lambda, 0.0);
        const SdeConfig sde{ctx.opt.dt, t_final, SdeScheme::EulerMaruyama, true,
                            ctx.opt.record_stride};
        auto spec = EnsembleSpec::dephasing(m, phi, sde, ctx.opt.n_traj, ctx.opt.master_seed,
                                            Equation::NonlinearP);
        const auto stats = run_ensemble(spec, ctx.opt.threads);
        const auto& ph = *stats.phases;
        const double s = std::sin(phi), c = std::cos(phi);
        const double target_mod = std::exp(-0.5 * lambda * lambda * s * s * t_final);
        const double target_arg =
            (ctx.opt.model.mu_b + lambda * lambda * s * c) * t_final;
        worst = std::max(worst, std::abs(ph.dyn_factor_modulus - target_mod) -
                                    band(ph.dyn_factor_modulus_stderr));
        if (!ph.mean_dyn_factor_average) {
            res.outcome = Outcome::Fail;
            res.details = "undefined factor argument at phi=" + fmt(phi);
            return res;
        }
        worst = std::max(worst, principal_distance(*ph.mean_dyn_factor_average, target_arg) -
                                    band(ph.mean_dyn_factor_average_stderr));
        note += " phi=" + fmt(phi) + ": |E| " + fmt(ph.dyn_factor_modulus) + " vs " +
                fmt(target_mod) + ", arg " + fmt(*ph.mean_dyn_factor_average) + " vs " +
                fmt(principal_value(target_arg)) + ";";
    }
    res.outcome = worst <= 0.0 ? Outcome::Pass : Outcome::Fail;
    res.details = "worst excess over 3*stderr: " + fmt(worst) + ";" + note;
    return res;
}

// C10: unitary-limit geometric phase pi (1 - cos theta).
inline CriterionResult c10_unitary_geometric_phase(AcceptanceContext& ctx) {
    CriterionResult res{"C10", "unitary-geometric-phase", Outcome::Pass, ""};
    const double t_pulse = M_PI / ctx.opt.model.mu_b;
    double worst = 0.0;
    for (double theta : {M_PI / 6.0, M_PI / 3.0, M_PI / 2.0}) {
        DephasingSpinModel m(ctx.opt.model.mu_b, 0.0, theta);
        const SdeConfig sde{t_pulse / 3142.0, t_pulse, SdeScheme::EulerMaruyama, true,
                            ctx.opt.record_stride};
        auto spec = EnsembleSpec::dephasing(m, 0.0, sde, 16, ctx.opt.master_seed,
                                            Equation::NonlinearP);
        const auto stats = run_ensemble(spec, ctx.opt.threads);
        const auto& ph = *stats.phases;
        const double target = principal_value(M_PI * (1.0 - std::cos(theta)));
        if (!ph.mean_geo_by_phase || !ph.mean_geo_by_factor) {
            res.outcome = Outcome::Fail;
            res.details = "undefined geometric phase at theta=" + fmt(theta);
            return res;
        }
        worst = std::max(worst, principal_distance(*ph.mean_geo_by_phase, target));
        worst = std::max(worst, principal_distance(*ph.mean_geo_by_factor, target));
    }
    res.outcome = worst <= 1e-6 ? Outcome::Pass : Outcome::Fail;
    res.details = "max |gamma_geo - pi(1-cos theta)| = " + fmt(worst) + " (bound 1e-6)";
    return res;
}

// C11: bit-identical ensembles across 1, 2 and 8 workers.
inline CriterionResult c11_determinism(AcceptanceContext& ctx) {
    CriterionResult res{"C11", "worker-count-determinism", Outcome::Pass, ""};
    const long n = std::min<long>(ctx.opt.n_traj, 4000);
    auto spec = EnsembleSpec::dephasing(ctx.opt.model, M_PI / 4.0, ctx.sde(), n,
                                        ctx.opt.master_seed, Equation::NonlinearP);
    const auto s1 = run_ensemble(spec, 1);
    const auto s2 = run_ensemble(spec, 2);
    const auto s8 = run_ensemble(spec, 8);
    const bool ok = identical(s1, s2) && identical(s1, s8);
    res.outcome = ok ? Outcome::Pass : Outcome::Fail;
    res.details = ok ? "identical statistics across 1, 2, 8 workers (n_traj " +
                           std::to_string(n) + ")"
                     : "worker count changed the results";
    return res;
}

}  // namespace detail

inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
    detail::AcceptanceContext ctx{options, {}};
    std::vector<CriterionResult> results;
    results.push_back(detail::c01_oracle_equivalence(ctx));
    results.push_back(detail::c02_unravelling_consistency(ctx));
    results.push_back(detail::c03_pathwise_correspondence(ctx));
    results.push_back(detail::c04_martingale_weight(ctx));
    results.push_back(detail::c05_moment_laws(ctx));
    results.push_back(detail::c06_pi_pulse_total_phase(ctx));
    results.push_back(detail::c07_gauge_lambda_independence(ctx));
    results.push_back(detail::c08_gauge_dependence(ctx));
    results.push_back(detail::c09_phase_factor_closed_form(ctx));
    results.push_back(detail::c10_unitary_geometric_phase(ctx));
    results.push_back(detail::c11_determinism(ctx));
    return results;
}

}  // namespace unravel
