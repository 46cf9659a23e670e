// config.hpp — Experiment configuration: JSON file with nested sections
// model / gauge / sde / ensemble / output plus per-command sections.  Unknown
// keys are rejected by name; presets fill every default.

#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "unravel/lindblad.hpp"
#include "unravel/sse.hpp"

namespace unravel {

struct ExperimentConfig {
    std::string preset{"paper-dephasing"};
    // model
    double mu_b{1.0};
    double lambda{0.5};
    double theta{M_PI / 3.0};
    // gauge
    std::vector<double> phi{0.0, M_PI / 4.0, M_PI / 2.0};
    // sde
    double dt{1e-3};
    double t_final{2.0};
    bool renormalize_each_step{true};
    long record_stride{10};
    // ensemble
    long n_traj{10000};
    std::uint64_t master_seed{1905};
    // output
    std::string out_dir{"out"};
    bool write_csv{true};
    bool write_json{true};
    // interference command
    std::vector<double> chi_grid;  // empty: derive from chi_points
    long chi_points{25};
    std::vector<double> lambda_scan{0.25, 0.5, 1.0};
    // trajectories command
    long dump_count{0};
    long dump_stride{20};
    // CLI-only (not part of the file schema)
    long threads{0};

    DephasingSpinModel spin_model() const { return DephasingSpinModel(mu_b, lambda, theta); }

    SdeConfig sde() const {
        return SdeConfig{dt, t_final, SdeScheme::EulerMaruyama, renormalize_each_step,
                         record_stride};
    }

    std::vector<double> resolved_chi_grid() const {
        if (!chi_grid.empty()) return chi_grid;
        std::vector<double> grid;
        grid.reserve(static_cast<std::size_t>(chi_points));
        for (long j = 0; j < chi_points; ++j)
            grid.push_back(-M_PI + 2.0 * M_PI * static_cast<double>(j) /
                                       static_cast<double>(chi_points));
        return grid;
    }

    void validate() const {
        (void)spin_model();
        (void)sde().n_steps();
        if (phi.empty()) throw std::invalid_argument("config: gauge.phi must be non-empty");
        if (n_traj < 1) throw std::invalid_argument("config: ensemble.n_traj must be >= 1");
        if (!write_csv && !write_json)
            throw std::invalid_argument("config: output.formats must name csv and/or json");
        if (chi_grid.empty() && chi_points < 2)
            throw std::invalid_argument("config: interference.chi_points must be >= 2");
        for (double l : lambda_scan)
            if (!(l >= 0.0))
                throw std::invalid_argument("config: interference.lambda_scan entries must be >= 0");
        if (dump_count < 0 || dump_stride < 1)
            throw std::invalid_argument("config: trajectories dump options invalid");
    }
};

namespace detail {

inline void apply_preset(ExperimentConfig& cfg, const std::string& name) {
    if (name == "paper-dephasing") {
        cfg = ExperimentConfig{};  // the defaults are this preset
    } else if (name == "paper-pi-pulse") {
        cfg = ExperimentConfig{};
        cfg.t_final = M_PI / cfg.mu_b;
        cfg.dt = cfg.t_final / 3142.0;  // integer step count for the irrational horizon
    } else {
        throw std::invalid_argument("config: unknown preset '" + name + "'");
    }
    cfg.preset = name;
}

inline void reject_unknown(const nlohmann::json& j, const std::string& section,
                           std::initializer_list<const char*> known) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok)
            throw std::invalid_argument("config: unknown key '" +
                                        (section.empty() ? key : section + "." + key) + "'");
    }
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    detail::reject_unknown(j, "",
                           {"preset", "model", "gauge", "sde", "ensemble", "output",
                            "interference", "trajectories"});
    if (j.contains("preset")) detail::apply_preset(cfg, j.at("preset").get<std::string>());
    if (j.contains("model")) {
        const auto& m = j.at("model");
        detail::reject_unknown(m, "model", {"mu_b", "lambda", "theta"});
        if (m.contains("mu_b")) cfg.mu_b = m.at("mu_b").get<double>();
        if (m.contains("lambda")) cfg.lambda = m.at("lambda").get<double>();
        if (m.contains("theta")) cfg.theta = m.at("theta").get<double>();
    }
    if (j.contains("gauge")) {
        const auto& g = j.at("gauge");
        detail::reject_unknown(g, "gauge", {"phi"});
        if (g.contains("phi")) cfg.phi = g.at("phi").get<std::vector<double>>();
    }
    if (j.contains("sde")) {
        const auto& s = j.at("sde");
        detail::reject_unknown(s, "sde",
                               {"dt", "t_final", "renormalize_each_step", "record_stride"});
        if (s.contains("dt")) cfg.dt = s.at("dt").get<double>();
        if (s.contains("t_final")) cfg.t_final = s.at("t_final").get<double>();
        if (s.contains("renormalize_each_step"))
            cfg.renormalize_each_step = s.at("renormalize_each_step").get<bool>();
        if (s.contains("record_stride")) cfg.record_stride = s.at("record_stride").get<long>();
    }
    if (j.contains("ensemble")) {
        const auto& e = j.at("ensemble");
        detail::reject_unknown(e, "ensemble", {"n_traj", "master_seed"});
        if (e.contains("n_traj")) cfg.n_traj = e.at("n_traj").get<long>();
        if (e.contains("master_seed")) cfg.master_seed = e.at("master_seed").get<std::uint64_t>();
    }
    if (j.contains("output")) {
        const auto& o = j.at("output");
        detail::reject_unknown(o, "output", {"directory", "formats"});
        if (o.contains("directory")) cfg.out_dir = o.at("directory").get<std::string>();
        if (o.contains("formats")) {
            cfg.write_csv = false;
            cfg.write_json = false;
            for (const auto& f : o.at("formats")) {
                const auto name = f.get<std::string>();
                if (name == "csv")
                    cfg.write_csv = true;
                else if (name == "json")
                    cfg.write_json = true;
                else
                    throw std::invalid_argument("config: unknown format '" + name + "'");
            }
        }
    }
    if (j.contains("interference")) {
        const auto& i = j.at("interference");
        detail::reject_unknown(i, "interference", {"chi", "chi_points", "lambda_scan"});
        if (i.contains("chi")) cfg.chi_grid = i.at("chi").get<std::vector<double>>();
        if (i.contains("chi_points")) cfg.chi_points = i.at("chi_points").get<long>();
        if (i.contains("lambda_scan"))
            cfg.lambda_scan = i.at("lambda_scan").get<std::vector<double>>();
    }
    if (j.contains("trajectories")) {
        const auto& t = j.at("trajectories");
        detail::reject_unknown(t, "trajectories", {"dump_count", "dump_stride"});
        if (t.contains("dump_count")) cfg.dump_count = t.at("dump_count").get<long>();
        if (t.contains("dump_stride")) cfg.dump_stride = t.at("dump_stride").get<long>();
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot read " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config: " + path + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

// Fully-resolved echo (defaults expanded); reloadable through config_from_json.
inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["preset"] = cfg.preset;
    j["model"] = {{"mu_b", cfg.mu_b}, {"lambda", cfg.lambda}, {"theta", cfg.theta}};
    j["gauge"] = {{"phi", cfg.phi}};
    j["sde"] = {{"dt", cfg.dt},
                {"t_final", cfg.t_final},
                {"renormalize_each_step", cfg.renormalize_each_step},
                {"record_stride", cfg.record_stride}};
    j["ensemble"] = {{"n_traj", cfg.n_traj}, {"master_seed", cfg.master_seed}};
    std::vector<std::string> formats;
    if (cfg.write_csv) formats.push_back("csv");
    if (cfg.write_json) formats.push_back("json");
    j["output"] = {{"directory", cfg.out_dir}, {"formats", formats}};
    j["interference"] = {{"chi", cfg.resolved_chi_grid()},
                         {"chi_points", cfg.chi_points},
                         {"lambda_scan", cfg.lambda_scan}};
    j["trajectories"] = {{"dump_count", cfg.dump_count}, {"dump_stride", cfg.dump_stride}};
    return j;
}

}  // namespace unravel
