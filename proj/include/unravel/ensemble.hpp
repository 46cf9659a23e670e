// ensemble.hpp — Deterministic, parallelizable Monte Carlo orchestration:
// trajectory ensembles over mixed initial states, streaming statistics, and
// cross-gauge comparisons with common random numbers.
//
// Reproducibility scheme: trajectory i draws its noise from a stream derived
// from (master_seed, i); trajectories are grouped into fixed-size blocks, each
// block accumulates in index order, and block partials are merged in block
// order after all workers finish.  Results are therefore bit-identical for a
// given spec regardless of the worker count.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "unravel/constants.hpp"
#include "unravel/lindblad.hpp"
#include "unravel/phase.hpp"
#include "unravel/quantum.hpp"
#include "unravel/rng.hpp"
#include "unravel/sse.hpp"
#include "unravel/stats.hpp"

namespace unravel {

struct InitialEnsemble {
    struct Member {
        StateVector state;
        double weight;
    };

    std::vector<Member> members;

    explicit InitialEnsemble(std::vector<Member> m) : members(std::move(m)) {
        if (members.empty()) throw std::invalid_argument("InitialEnsemble: no members");
        double total = 0.0;
        for (const auto& member : members) {
            if (!(member.weight > 0.0))
                throw std::invalid_argument("InitialEnsemble: weights must be > 0");
            if (!member.state.is_asserted_normalized())
                throw std::invalid_argument("InitialEnsemble: members must be normalized");
            detail::check_same_dim(member.state.dim(), members.front().state.dim(),
                                   "InitialEnsemble");
            total += member.weight;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("InitialEnsemble: weights sum to " + std::to_string(total));
    }

    static InitialEnsemble pure(StateVector psi) {
        std::vector<Member> m;
        m.push_back(Member{std::move(psi), 1.0});
        return InitialEnsemble(std::move(m));
    }

    Eigen::Index dim() const { return members.front().state.dim(); }
    bool is_single_pure() const { return members.size() == 1; }

    // Deterministic stratified assignment: member m receives floor(p_m n) or
    // ceil(p_m n) trajectories, remainders resolved by largest fractional part
    // (ties to the lower index).
    std::vector<long> stratified_counts(long n_traj) const {
        std::vector<long> counts(members.size());
        std::vector<std::pair<double, std::size_t>> fractional;
        long assigned = 0;
        for (std::size_t m = 0; m < members.size(); ++m) {
            const double share = members[m].weight * static_cast<double>(n_traj);
            counts[m] = static_cast<long>(std::floor(share));
            assigned += counts[m];
            fractional.emplace_back(share - std::floor(share), m);
        }
        std::stable_sort(fractional.begin(), fractional.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (long k = 0; k < n_traj - assigned; ++k)
            ++counts[fractional[static_cast<std::size_t>(k)].second];
        return counts;
    }
};

enum class Equation { NonlinearP, LinearQ };

struct EnsembleSpec {
    LindbladModel model;
    UnravellingGauge gauge;
    InitialEnsemble initial;
    SdeConfig sde;
    long n_traj{1};
    std::uint64_t master_seed{0};
    Equation equation{Equation::NonlinearP};
    // Set when the model comes from the dephasing preset; enables phase
    // extraction (interference functional needs the spin channel structure).
    std::optional<DephasingSpinModel> spin;

    static EnsembleSpec dephasing(const DephasingSpinModel& m, double phi, const SdeConfig& sde,
                                  long n_traj, std::uint64_t seed,
                                  Equation equation = Equation::NonlinearP) {
        EnsembleSpec spec{m.to_lindblad(), UnravellingGauge::single(phi),
                          InitialEnsemble::pure(m.initial_state()), sde, n_traj, seed, equation,
                          m};
        return spec;
    }
};

struct EnsembleStats {
    std::vector<double> times;
    std::vector<Matrix> mean_density;
    // Per-entry standard errors, stored as complex(se_re, se_im).
    std::vector<Matrix> stderr_density;
    std::vector<double> mean_sz, stderr_sz;
    std::vector<double> mean_sz2, stderr_sz2;
    std::vector<double> mean_weight, stderr_weight;  // Q ensembles only
    std::vector<double> mean_observable, stderr_observable;  // when an observable was requested
    std::vector<double> mean_intensity, stderr_intensity;    // over a requested chi grid
    double max_sz_initial_deviation{0.0};  // max over trajectories and steps of |sz_t - sz_0|
    std::optional<PhaseSummary> phases;
    long n_traj{0};
    Equation equation{Equation::NonlinearP};
};

using NoiseProvider = std::function<NoisePath(long trajectory_index)>;

namespace detail {

struct BlockAccumulator {
    std::vector<Matrix> density_sum;
    std::vector<Matrix> density_sum_sq;  // entrywise component squares as complex(re^2, im^2)
    std::vector<double> sz_sum, sz_sum_sq, sz2_sum, sz2_sum_sq;
    std::vector<double> w_sum, w_sum_sq;
    std::vector<double> obs_sum, obs_sum_sq;
    std::vector<double> intensity_sum, intensity_sum_sq;  // over the chi grid
    double max_sz_drift{0.0};
    ComplexStat f_stat;
    ScalarStat dyn_stat;
    ComplexStat factor_stat;
    ScalarStat szsq_int_stat;
    long count{0};

    void init(Eigen::Index dim, std::size_t n_recorded, bool qubit, bool q_mode, bool with_obs,
              std::size_t n_chi = 0) {
        density_sum.assign(n_recorded, Matrix::Zero(dim, dim));
        density_sum_sq.assign(n_recorded, Matrix::Zero(dim, dim));
        if (qubit) {
            sz_sum.assign(n_recorded, 0.0);
            sz_sum_sq.assign(n_recorded, 0.0);
            sz2_sum.assign(n_recorded, 0.0);
            sz2_sum_sq.assign(n_recorded, 0.0);
        }
        if (q_mode) {
            w_sum.assign(n_recorded, 0.0);
            w_sum_sq.assign(n_recorded, 0.0);
        }
        if (with_obs) {
            obs_sum.assign(n_recorded, 0.0);
            obs_sum_sq.assign(n_recorded, 0.0);
        }
        if (n_chi > 0) {
            intensity_sum.assign(n_chi, 0.0);
            intensity_sum_sq.assign(n_chi, 0.0);
        }
    }

    void merge(const BlockAccumulator& o) {
        for (std::size_t k = 0; k < density_sum.size(); ++k) {
            density_sum[k] += o.density_sum[k];
            density_sum_sq[k] += o.density_sum_sq[k];
        }
        const auto merge_vec = [](std::vector<double>& a, const std::vector<double>& b) {
            for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
        };
        merge_vec(sz_sum, o.sz_sum);
        merge_vec(sz_sum_sq, o.sz_sum_sq);
        merge_vec(sz2_sum, o.sz2_sum);
        merge_vec(sz2_sum_sq, o.sz2_sum_sq);
        merge_vec(w_sum, o.w_sum);
        merge_vec(w_sum_sq, o.w_sum_sq);
        merge_vec(obs_sum, o.obs_sum);
        merge_vec(obs_sum_sq, o.obs_sum_sq);
        merge_vec(intensity_sum, o.intensity_sum);
        merge_vec(intensity_sum_sq, o.intensity_sum_sq);
        max_sz_drift = std::max(max_sz_drift, o.max_sz_drift);
        f_stat.merge(o.f_stat);
        dyn_stat.merge(o.dyn_stat);
        factor_stat.merge(o.factor_stat);
        szsq_int_stat.merge(o.szsq_int_stat);
        count += o.count;
    }
};

// Streams one trajectory into a block accumulator.
template <int D>
struct AccumulatingVisitor {
    BlockAccumulator* acc{nullptr};
    bool q_mode{false};
    bool qubit{false};
    bool want_phases{false};
    const Matrix* observable{nullptr};
    std::vector<Vector>* path_out{nullptr};  // normalized snapshots for pairwise distances
    const std::vector<double>* chi_grid{nullptr};
    double mu_b{0.0};
    double interaction_time{0.0};
    std::size_t slot{0};
    double last_dyn_phase{0.0};
    double last_sz_sq_integral{0.0};

    void sample(const TrajectorySample<D>& s) {
        const std::size_t k = slot++;
        if (path_out) path_out->push_back(Vector(s.state / std::sqrt(s.weight)));
        auto& rho = acc->density_sum[k];
        auto& rho_sq = acc->density_sum_sq[k];
        const double inv = q_mode ? 1.0 : 1.0 / s.weight;  // normalized projector under P
        for (Eigen::Index j = 0; j < rho.cols(); ++j) {
            for (Eigen::Index i = 0; i < rho.rows(); ++i) {
                const Complex e = s.state(i) * std::conj(s.state(j)) * inv;
                rho(i, j) += e;
                rho_sq(i, j) += Complex(e.real() * e.real(), e.imag() * e.imag());
            }
        }
        if (qubit) {
            acc->sz_sum[k] += s.sz;
            acc->sz_sum_sq[k] += s.sz * s.sz;
            const double sz2 = s.sz * s.sz;
            acc->sz2_sum[k] += sz2;
            acc->sz2_sum_sq[k] += sz2 * sz2;
            acc->max_sz_drift = std::max(acc->max_sz_drift, s.max_sz_drift);
        }
        if (q_mode) {
            acc->w_sum[k] += s.weight;
            acc->w_sum_sq[k] += s.weight * s.weight;
        }
        if (observable) {
            // <O> of the normalized state under P; free-norm form <phi|O|phi>
            // under Q (its Q mean is the P average of the quantum expectation).
            Complex val(0.0, 0.0);
            for (Eigen::Index j = 0; j < observable->cols(); ++j)
                for (Eigen::Index i = 0; i < observable->rows(); ++i)
                    val += std::conj(s.state(i)) * (*observable)(i, j) * s.state(j);
            const double o = val.real() * inv;
            acc->obs_sum[k] += o;
            acc->obs_sum_sq[k] += o * o;
        }
        last_dyn_phase = s.dyn_phase;
        last_sz_sq_integral = s.sz_sq_integral;
    }

    void finish(const VecD<D>* companion) {
        if (want_phases && companion) {
            const Vector phi = *companion;
            const Complex f = interference_functional(phi, mu_b, interaction_time);
            acc->f_stat.add(f);
            acc->dyn_stat.add(last_dyn_phase);
            acc->factor_stat.add(std::polar(1.0, last_dyn_phase));
            acc->szsq_int_stat.add(last_sz_sq_integral);
            if (chi_grid) {
                // Physical output curve: the shifter phase is measured against
                // the field arm, so the realization contributes
                // 1/2 + (1/2)|f| cos(chi - Arg f); see the convention note in
                // phase.hpp.
                const double mod = std::abs(f);
                const double arg = std::arg(f);
                for (std::size_t jx = 0; jx < chi_grid->size(); ++jx) {
                    const double intensity = 0.5 + 0.5 * mod * std::cos((*chi_grid)[jx] - arg);
                    acc->intensity_sum[jx] += intensity;
                    acc->intensity_sum_sq[jx] += intensity * intensity;
                }
            }
        }
        ++acc->count;
    }
};

inline constexpr long kBlockSize = 128;

inline std::size_t recorded_count(const SdeConfig& cfg) {
    const long steps = cfg.n_steps();
    std::size_t n = 1;  // step 0
    for (long k = 1; k <= steps; ++k)
        if (k % cfg.record_stride == 0 || k == steps) ++n;
    return n;
}

struct RunRequest {
    const EnsembleSpec& spec;
    long threads{0};
    const Matrix* observable{nullptr};
    const NoiseProvider* noise_provider{nullptr};
    const std::vector<double>* chi_grid{nullptr};
};

template <int D>
void run_blocks(const RunRequest& req, std::vector<BlockAccumulator>& partials) {
    const EnsembleSpec& spec = req.spec;
    const auto kernel = make_kernel<D>(spec.model, spec.gauge);
    const long steps = spec.sde.n_steps();
    const long channels = static_cast<long>(spec.model.n_channels());
    const Measure measure = spec.equation == Equation::NonlinearP ? Measure::P : Measure::Q;
    const bool qubit = spec.model.dim() == 2;
    const bool q_mode = spec.equation == Equation::LinearQ;
    const bool want_phases = spec.equation == Equation::NonlinearP && spec.spin.has_value() &&
                             spec.initial.is_single_pure() && qubit;
    const std::size_t n_rec = recorded_count(spec.sde);

    const auto counts = spec.initial.stratified_counts(spec.n_traj);
    std::vector<long> boundaries(counts.size());
    long running = 0;
    for (std::size_t m = 0; m < counts.size(); ++m) {
        running += counts[m];
        boundaries[m] = running;
    }
    std::vector<VecD<D>> starts;
    starts.reserve(spec.initial.members.size());
    for (const auto& member : spec.initial.members)
        starts.emplace_back(member.state.amplitudes());

    const long n_blocks = static_cast<long>(partials.size());
    std::atomic<long> next_block{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    const auto worker = [&]() {
        try {
            long b;
            while ((b = next_block.fetch_add(1)) < n_blocks) {
                auto& acc = partials[static_cast<std::size_t>(b)];
                acc.init(spec.model.dim(), n_rec, qubit, q_mode, req.observable != nullptr,
                         want_phases && req.chi_grid ? req.chi_grid->size() : 0);
                const long begin = b * kBlockSize;
                const long end = std::min(spec.n_traj, begin + kBlockSize);
                for (long i = begin; i < end; ++i) {
                    NoisePath noise =
                        req.noise_provider
                            ? (*req.noise_provider)(i)
                            : sample_noise(channels, steps, spec.sde.dt,
                                           derive_stream_seed(spec.master_seed,
                                                              static_cast<std::uint64_t>(i)),
                                           measure);
                    noise.measure = measure;
                    const std::size_t m = static_cast<std::size_t>(
                        std::upper_bound(boundaries.begin(), boundaries.end(), i) -
                        boundaries.begin());
                    AccumulatingVisitor<D> vis;
                    vis.acc = &acc;
                    vis.q_mode = q_mode;
                    vis.qubit = qubit;
                    vis.want_phases = want_phases;
                    vis.observable = req.observable;
                    if (want_phases) {
                        vis.mu_b = spec.spin->mu_b;
                        vis.interaction_time = spec.sde.t_final;
                        vis.chi_grid = req.chi_grid;
                    }
                    try {
                        integrate_trajectory<D>(kernel, starts[m], spec.sde, noise, vis);
                    } catch (const std::exception& e) {
                        throw std::runtime_error("trajectory " + std::to_string(i) + ": " +
                                                 e.what());
                    }
                }
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    long n_threads = req.threads > 0 ? req.threads
                                     : static_cast<long>(std::thread::hardware_concurrency());
    n_threads = std::max<long>(1, std::min(n_threads, n_blocks));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (long t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
}

inline EnsembleStats finalize_stats(const EnsembleSpec& spec,
                                    std::vector<BlockAccumulator>& partials, bool with_obs) {
    BlockAccumulator total = std::move(partials.front());
    for (std::size_t b = 1; b < partials.size(); ++b) total.merge(partials[b]);

    const double n = static_cast<double>(total.count);
    const auto se_scalar = [&](double sum, double sum_sq) {
        if (total.count < 2) return 0.0;
        const double m = sum / n;
        const double var = std::max(0.0, (sum_sq - n * m * m) / (n - 1.0));
        return std::sqrt(var / n);
    };

    EnsembleStats stats;
    stats.n_traj = total.count;
    stats.equation = spec.equation;
    const long steps = spec.sde.n_steps();
    for (long k = 0; k <= steps; ++k)
        if (k % spec.sde.record_stride == 0 || k == steps)
            stats.times.push_back(static_cast<double>(k) * spec.sde.dt);

    const std::size_t n_rec = total.density_sum.size();
    stats.mean_density.reserve(n_rec);
    stats.stderr_density.reserve(n_rec);
    for (std::size_t k = 0; k < n_rec; ++k) {
        stats.mean_density.push_back(total.density_sum[k] / n);
        Matrix se = Matrix::Zero(total.density_sum[k].rows(), total.density_sum[k].cols());
        for (Eigen::Index j = 0; j < se.cols(); ++j) {
            for (Eigen::Index i = 0; i < se.rows(); ++i) {
                const Complex sum = total.density_sum[k](i, j);
                const Complex sum_sq = total.density_sum_sq[k](i, j);
                se(i, j) = Complex(se_scalar(sum.real(), sum_sq.real()),
                                   se_scalar(sum.imag(), sum_sq.imag()));
            }
        }
        stats.stderr_density.push_back(std::move(se));
    }

    const auto fill = [&](const std::vector<double>& sum, const std::vector<double>& sum_sq,
                          std::vector<double>& mean, std::vector<double>& se) {
        mean.reserve(sum.size());
        se.reserve(sum.size());
        for (std::size_t k = 0; k < sum.size(); ++k) {
            mean.push_back(sum[k] / n);
            se.push_back(se_scalar(sum[k], sum_sq[k]));
        }
    };
    fill(total.sz_sum, total.sz_sum_sq, stats.mean_sz, stats.stderr_sz);
    fill(total.sz2_sum, total.sz2_sum_sq, stats.mean_sz2, stats.stderr_sz2);
    fill(total.w_sum, total.w_sum_sq, stats.mean_weight, stats.stderr_weight);
    if (with_obs) fill(total.obs_sum, total.obs_sum_sq, stats.mean_observable,
                       stats.stderr_observable);
    fill(total.intensity_sum, total.intensity_sum_sq, stats.mean_intensity,
         stats.stderr_intensity);
    stats.max_sz_initial_deviation = total.max_sz_drift;

    if (total.f_stat.n > 0) {
        PhaseSummary ph;
        ph.gauge = spec.gauge;
        ph.n_traj = total.f_stat.n;
        ph.visibility = std::abs(total.f_stat.mean());
        ph.visibility_stderr = total.f_stat.stderr_modulus();
        if (ph.visibility >= tol::kVisibilityDefined) {
            ph.mean_total = std::arg(total.f_stat.mean());
            ph.mean_total_stderr = total.f_stat.stderr_argument();
        }
        ph.mean_dyn_phase_average = total.dyn_stat.mean();
        ph.mean_dyn_phase_average_stderr = total.dyn_stat.stderr_of_mean();
        ph.dyn_factor_modulus = std::abs(total.factor_stat.mean());
        ph.dyn_factor_modulus_stderr = total.factor_stat.stderr_modulus();
        if (ph.dyn_factor_modulus >= tol::kVisibilityDefined) {
            ph.mean_dyn_factor_average = std::arg(total.factor_stat.mean());
            ph.mean_dyn_factor_average_stderr = total.factor_stat.stderr_argument();
        }
        if (ph.mean_total) {
            ph.mean_geo_by_phase = principal_value(*ph.mean_total - ph.mean_dyn_phase_average);
            ph.mean_geo_by_phase_stderr = std::sqrt(
                ph.mean_total_stderr * ph.mean_total_stderr +
                ph.mean_dyn_phase_average_stderr * ph.mean_dyn_phase_average_stderr);
            if (ph.mean_dyn_factor_average) {
                ph.mean_geo_by_factor =
                    principal_value(*ph.mean_total - *ph.mean_dyn_factor_average);
                ph.mean_geo_by_factor_stderr = std::sqrt(
                    ph.mean_total_stderr * ph.mean_total_stderr +
                    ph.mean_dyn_factor_average_stderr * ph.mean_dyn_factor_average_stderr);
            }
        }
        ph.sz_sq_time_integral = total.szsq_int_stat.mean();
        ph.sz_sq_time_integral_stderr = total.szsq_int_stat.stderr_of_mean();
        stats.phases = std::move(ph);
    }
    return stats;
}

inline EnsembleStats run_core(const RunRequest& req) {
    const EnsembleSpec& spec = req.spec;
    if (spec.n_traj < 1) throw std::invalid_argument("EnsembleSpec: n_traj must be >= 1");
    detail::check_same_dim(spec.initial.dim(), spec.model.dim(), "run_ensemble");
    const long n_blocks = (spec.n_traj + kBlockSize - 1) / kBlockSize;
    std::vector<BlockAccumulator> partials(static_cast<std::size_t>(n_blocks));
    if (spec.model.dim() == 2)
        run_blocks<2>(req, partials);
    else
        run_blocks<Eigen::Dynamic>(req, partials);
    return finalize_stats(spec, partials, req.observable != nullptr);
}

}  // namespace detail

inline EnsembleStats run_ensemble(const EnsembleSpec& spec, long threads = 0) {
    return detail::run_core({spec, threads, nullptr, nullptr, nullptr});
}

inline EnsembleStats run_ensemble_with_noise(const EnsembleSpec& spec,
                                             const NoiseProvider& provider, long threads = 0) {
    return detail::run_core({spec, threads, nullptr, &provider, nullptr});
}

// Additionally samples the averaged output intensity on the given shifter grid
// (phase extraction must be active, i.e. a spin-model P ensemble).
inline EnsembleStats run_ensemble_with_intensity(const EnsembleSpec& spec,
                                                 const std::vector<double>& chi_grid,
                                                 long threads = 0) {
    return detail::run_core({spec, threads, nullptr, nullptr, &chi_grid});
}

// Trajectory mean of quantum expectations of a Hermitian observable, with the
// matching standard errors.
struct ObservableAverage {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> std_error;
};

inline ObservableAverage observable_average(const EnsembleSpec& spec, const Operator& op,
                                            long threads = 0) {
    if (!op.is_hermitian(tol::kHermitian))
        throw std::invalid_argument("observable_average: operator must be Hermitian");
    detail::check_same_dim(op.dim(), spec.model.dim(), "observable_average");
    const Matrix m = op.entries();
    detail::RunRequest req{spec, threads, &m, nullptr, nullptr};
    EnsembleStats stats = detail::run_core(req);
    return ObservableAverage{std::move(stats.times), std::move(stats.mean_observable),
                             std::move(stats.stderr_observable)};
}

// ---------------------------------------------------------------------------
// Cross-gauge comparison with common random numbers: every gauge consumes the
// identical Wiener increments per trajectory index, enabling paired-difference
// statistics on the phase accumulators and pathwise state distances.

struct GaugePairComparison {
    std::size_t index_a{0}, index_b{0};
    // Median over trajectories of max_t sqrt(1 - |<psi_a|psi_b>|^2) on the
    // recorded grid (pure-state trace distance, global-phase invariant).
    double median_max_state_distance{0.0};
    MeanEstimate dyn_phase_difference;  // per-trajectory paired gamma_a - gamma_b
    // Paired residual (gamma_a - gamma_b) - (k_a I_a - k_b I_b) with
    // k = lambda^2 sin(phi) cos(phi) and I the trajectory's integral of <sz>^2 dt;
    // zero in the mean for the single-channel spin model.
    MeanEstimate dyn_phase_difference_minus_prediction;
    bool prediction_available{false};
};

struct GaugeComparison {
    std::vector<EnsembleStats> per_gauge;
    std::vector<GaugePairComparison> pairs;
};

namespace detail {

template <int D>
struct PairedBlock {
    std::vector<BlockAccumulator> per_gauge;
    std::vector<ScalarStat> pair_diff;
    std::vector<ScalarStat> pair_resid;
};

template <int D>
void run_paired_blocks(const EnsembleSpec& base, std::span<const UnravellingGauge> gauges,
                       long threads, std::vector<PairedBlock<D>>& partials,
                       std::vector<std::vector<double>>& pair_distances) {
    const std::size_t ng = gauges.size();
    const std::size_t n_pairs = ng * (ng - 1) / 2;
    const long steps = base.sde.n_steps();
    const long channels = static_cast<long>(base.model.n_channels());
    const Measure measure = base.equation == Equation::NonlinearP ? Measure::P : Measure::Q;
    const bool qubit = base.model.dim() == 2;
    const bool q_mode = base.equation == Equation::LinearQ;
    const bool want_phases = base.equation == Equation::NonlinearP && base.spin.has_value() &&
                             base.initial.is_single_pure() && qubit;
    const bool prediction = want_phases && base.model.n_channels() == 1;
    const std::size_t n_rec = recorded_count(base.sde);

    std::vector<GaugedKernel<D>> kernels;
    kernels.reserve(ng);
    for (const auto& g : gauges) kernels.push_back(make_kernel<D>(base.model, g));
    std::vector<double> shift_coeff(ng, 0.0);  // lambda^2 sin(phi) cos(phi), single channel
    for (std::size_t g = 0; g < ng; ++g)
        if (prediction)
            shift_coeff[g] = base.model.lambda * base.model.lambda *
                             std::sin(gauges[g].phases[0]) * std::cos(gauges[g].phases[0]);

    const VecD<D> start = VecD<D>(base.initial.members.front().state.amplitudes());

    const long n_blocks = static_cast<long>(partials.size());
    std::atomic<long> next_block{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    const auto worker = [&]() {
        try {
            // Reusable per-worker path buffers: one normalized snapshot per
            // recorded time per gauge.
            std::vector<std::vector<Vector>> paths(ng);
            std::vector<double> gamma(ng), integral(ng);
            long b;
            while ((b = next_block.fetch_add(1)) < n_blocks) {
                auto& block = partials[static_cast<std::size_t>(b)];
                block.per_gauge.resize(ng);
                for (auto& acc : block.per_gauge)
                    acc.init(base.model.dim(), n_rec, qubit, q_mode, false);
                block.pair_diff.assign(n_pairs, ScalarStat{});
                block.pair_resid.assign(n_pairs, ScalarStat{});
                const long begin = b * kBlockSize;
                const long end = std::min(base.n_traj, begin + kBlockSize);
                for (long i = begin; i < end; ++i) {
                    NoisePath noise = sample_noise(
                        channels, steps, base.sde.dt,
                        derive_stream_seed(base.master_seed, static_cast<std::uint64_t>(i)),
                        measure);
                    for (std::size_t g = 0; g < ng; ++g) {
                        paths[g].clear();
                        AccumulatingVisitor<D> vis;
                        vis.acc = &block.per_gauge[g];
                        vis.q_mode = q_mode;
                        vis.qubit = qubit;
                        vis.want_phases = want_phases;
                        if (want_phases) {
                            vis.mu_b = base.spin->mu_b;
                            vis.interaction_time = base.sde.t_final;
                        }
                        vis.path_out = &paths[g];
                        try {
                            integrate_trajectory<D>(kernels[g], start, base.sde, noise, vis);
                        } catch (const std::exception& e) {
                            throw std::runtime_error("trajectory " + std::to_string(i) +
                                                     ", gauge " + std::to_string(g) + ": " +
                                                     e.what());
                        }
                        gamma[g] = vis.last_dyn_phase;
                        integral[g] = vis.last_sz_sq_integral;
                    }
                    std::size_t p = 0;
                    for (std::size_t a = 0; a < ng; ++a) {
                        for (std::size_t c = a + 1; c < ng; ++c, ++p) {
                            double max_dist = 0.0;
                            for (std::size_t k = 0; k < paths[a].size(); ++k) {
                                const double overlap2 =
                                    std::norm(paths[a][k].dot(paths[c][k]));
                                max_dist = std::max(
                                    max_dist, std::sqrt(std::max(0.0, 1.0 - overlap2)));
                            }
                            pair_distances[p][static_cast<std::size_t>(i)] = max_dist;
                            if (want_phases) {
                                const double diff = gamma[a] - gamma[c];
                                block.pair_diff[p].add(diff);
                                if (prediction)
                                    block.pair_resid[p].add(diff - (shift_coeff[a] * integral[a] -
                                                                    shift_coeff[c] * integral[c]));
                            }
                        }
                    }
                }
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    long n_threads = threads > 0 ? threads
                                 : static_cast<long>(std::thread::hardware_concurrency());
    n_threads = std::max<long>(1, std::min(n_threads, n_blocks));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (long t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
}

template <int D>
GaugeComparison compare_gauges_impl(const EnsembleSpec& base,
                                    std::span<const UnravellingGauge> gauges, long threads) {
    const std::size_t ng = gauges.size();
    const std::size_t n_pairs = ng * (ng - 1) / 2;
    const long n_blocks = (base.n_traj + kBlockSize - 1) / kBlockSize;
    std::vector<PairedBlock<D>> partials(static_cast<std::size_t>(n_blocks));
    std::vector<std::vector<double>> pair_distances(
        n_pairs, std::vector<double>(static_cast<std::size_t>(base.n_traj), 0.0));
    run_paired_blocks<D>(base, gauges, threads, partials, pair_distances);

    GaugeComparison out;
    for (std::size_t g = 0; g < ng; ++g) {
        std::vector<BlockAccumulator> merged;
        merged.reserve(partials.size());
        for (auto& block : partials) merged.push_back(std::move(block.per_gauge[g]));
        EnsembleSpec spec_g = base;
        spec_g.gauge = gauges[g];
        out.per_gauge.push_back(finalize_stats(spec_g, merged, false));
    }
    std::size_t p = 0;
    for (std::size_t a = 0; a < ng; ++a) {
        for (std::size_t c = a + 1; c < ng; ++c, ++p) {
            GaugePairComparison pair;
            pair.index_a = a;
            pair.index_b = c;
            ScalarStat diff, resid;
            for (const auto& block : partials) {
                diff.merge(block.pair_diff[p]);
                resid.merge(block.pair_resid[p]);
            }
            pair.dyn_phase_difference = MeanEstimate{diff.mean(), diff.stderr_of_mean(), diff.n};
            pair.dyn_phase_difference_minus_prediction =
                MeanEstimate{resid.mean(), resid.stderr_of_mean(), resid.n};
            pair.prediction_available = resid.n > 0;
            auto& dists = pair_distances[p];
            const auto mid = dists.begin() + static_cast<long>(dists.size() / 2);
            std::nth_element(dists.begin(), mid, dists.end());
            pair.median_max_state_distance = dists.empty() ? 0.0 : *mid;
            out.pairs.push_back(pair);
        }
    }
    return out;
}

}  // namespace detail

inline GaugeComparison compare_gauges(const EnsembleSpec& base,
                                      std::span<const UnravellingGauge> gauges, long threads = 0) {
    if (gauges.size() < 2)
        throw std::invalid_argument("compare_gauges: at least two gauges required");
    if (base.model.dim() == 2) return detail::compare_gauges_impl<2>(base, gauges, threads);
    return detail::compare_gauges_impl<Eigen::Dynamic>(base, gauges, threads);
}

// ---------------------------------------------------------------------------
// Step-size study against the closed-form dephasing solution, with common
// random numbers across levels via Brownian refinement (fine increments are
// aggregated into the coarser grids).

struct ConvergencePoint {
    double dt{0.0};
    double max_deviation{0.0};  // max over recorded times and entries vs the oracle
};

inline std::vector<ConvergencePoint> convergence_report(const EnsembleSpec& spec,
                                                        std::span<const double> dt_list,
                                                        long threads = 0) {
    if (!spec.spin)
        throw std::invalid_argument("convergence_report: dephasing spin model required");
    if (dt_list.empty()) throw std::invalid_argument("convergence_report: empty dt list");
    for (std::size_t i = 1; i < dt_list.size(); ++i)
        if (!(dt_list[i] < dt_list[i - 1]))
            throw std::invalid_argument("convergence_report: dt list must decrease");

    const double dt_fine = dt_list.back();
    const long channels = static_cast<long>(spec.model.n_channels());
    const Measure measure = spec.equation == Equation::NonlinearP ? Measure::P : Measure::Q;

    std::vector<ConvergencePoint> report;
    for (double dt : dt_list) {
        const double ratio = dt / dt_fine;
        const long factor = std::lround(ratio);
        if (std::abs(ratio - static_cast<double>(factor)) > 1e-9 || factor < 1)
            throw std::invalid_argument(
                "convergence_report: every dt must be an integer multiple of the finest");

        EnsembleSpec level = spec;
        level.sde.dt = dt;
        const long fine_steps = level.sde.n_steps() * factor;

        NoiseProvider provider = [&](long index) {
            NoisePath fine = sample_noise(
                channels, fine_steps, dt_fine,
                derive_stream_seed(spec.master_seed, static_cast<std::uint64_t>(index)), measure);
            return factor == 1 ? fine : coarsen_noise(fine, factor);
        };
        const EnsembleStats stats = run_ensemble_with_noise(level, provider, threads);

        double dev = 0.0;
        for (std::size_t k = 0; k < stats.times.size(); ++k) {
            const Matrix exact = dephasing_exact(*spec.spin, stats.times[k]).entries();
            dev = std::max(dev, (stats.mean_density[k] - exact).cwiseAbs().maxCoeff());
        }
        report.push_back(ConvergencePoint{dt, dev});
    }
    return report;
}

// Exact equality of every stored statistic; the operational check behind the
// "identical results regardless of worker count" guarantee.
inline bool identical(const EnsembleStats& a, const EnsembleStats& b) {
    const auto vec_eq = [](const std::vector<double>& x, const std::vector<double>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] != y[i]) return false;
        return true;
    };
    const auto mat_eq = [](const std::vector<Matrix>& x, const std::vector<Matrix>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i].rows() != y[i].rows() || x[i].cols() != y[i].cols()) return false;
            if (!(x[i].array() == y[i].array()).all()) return false;
        }
        return true;
    };
    const auto opt_eq = [](const std::optional<double>& x, const std::optional<double>& y) {
        return x.has_value() == y.has_value() && (!x || *x == *y);
    };
    if (a.n_traj != b.n_traj || a.equation != b.equation) return false;
    if (!vec_eq(a.times, b.times) || !mat_eq(a.mean_density, b.mean_density) ||
        !mat_eq(a.stderr_density, b.stderr_density) || !vec_eq(a.mean_sz, b.mean_sz) ||
        !vec_eq(a.stderr_sz, b.stderr_sz) || !vec_eq(a.mean_sz2, b.mean_sz2) ||
        !vec_eq(a.stderr_sz2, b.stderr_sz2) || !vec_eq(a.mean_weight, b.mean_weight) ||
        !vec_eq(a.stderr_weight, b.stderr_weight) ||
        !vec_eq(a.mean_observable, b.mean_observable) ||
        !vec_eq(a.stderr_observable, b.stderr_observable) ||
        !vec_eq(a.mean_intensity, b.mean_intensity) ||
        !vec_eq(a.stderr_intensity, b.stderr_intensity) ||
        a.max_sz_initial_deviation != b.max_sz_initial_deviation)
        return false;
    if (a.phases.has_value() != b.phases.has_value()) return false;
    if (a.phases) {
        const auto& pa = *a.phases;
        const auto& pb = *b.phases;
        if (!opt_eq(pa.mean_total, pb.mean_total) || !opt_eq(pa.mean_dyn_factor_average,
                                                             pb.mean_dyn_factor_average) ||
            !opt_eq(pa.mean_geo_by_phase, pb.mean_geo_by_phase) ||
            !opt_eq(pa.mean_geo_by_factor, pb.mean_geo_by_factor) ||
            pa.visibility != pb.visibility || pa.visibility_stderr != pb.visibility_stderr ||
            pa.mean_total_stderr != pb.mean_total_stderr ||
            pa.mean_dyn_phase_average != pb.mean_dyn_phase_average ||
            pa.mean_dyn_phase_average_stderr != pb.mean_dyn_phase_average_stderr ||
            pa.mean_dyn_factor_average_stderr != pb.mean_dyn_factor_average_stderr ||
            pa.dyn_factor_modulus != pb.dyn_factor_modulus ||
            pa.dyn_factor_modulus_stderr != pb.dyn_factor_modulus_stderr ||
            pa.mean_geo_by_phase_stderr != pb.mean_geo_by_phase_stderr ||
            pa.mean_geo_by_factor_stderr != pb.mean_geo_by_factor_stderr ||
            pa.sz_sq_time_integral != pb.sz_sq_time_integral ||
            pa.sz_sq_time_integral_stderr != pb.sz_sq_time_integral_stderr ||
            pa.n_traj != pb.n_traj)
            return false;
    }
    return true;
}

}  // namespace unravel
