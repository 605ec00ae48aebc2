#pragma once

// JSON run configuration: one document carries every knob of the pipeline
// (simulation, window, sampling, noise, regression, ensemble). Parsing is
// strict: unknown keys are rejected so provenance files cannot silently
// drift. The sidecar written next to every simulation output is itself a
// valid input config.

#include "latpde/core.hpp"
#include "latpde/experiments.hpp"
#include "latpde/kolmogorov.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

namespace latpde {

struct RunConfig {
    ModelParams params = paper_params();
    SimConfig sim;
    WindowSpec window;
    SamplePlan plan;
    NoiseSpec noise;
    RegressionConfig reg;
    std::size_t n_realizations = 40;
    std::uint64_t ensemble_seed = 1;
    std::string input_path, output_path;

    EnsembleSpec ensemble() const {
        EnsembleSpec e;
        e.n_realizations = n_realizations;
        e.base_seed = ensemble_seed;
        e.window = window;
        e.plan = plan;
        e.reg = reg;
        return e;
    }
};

/// Named presets: "paper" (kappa = 2015) and "paper-kappa1".
inline RunConfig preset_config(const std::string& name) {
    RunConfig c;
    if (name == "paper") {
        c.params = paper_params();
    } else if (name == "paper-kappa1") {
        c.params = kappa1_params();
    } else {
        throw std::invalid_argument("unknown preset '" + name +
                                    "' (expected 'paper' or 'paper-kappa1')");
    }
    return c;
}

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
    if (!j.is_object())
        throw std::invalid_argument("config: '" + where + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw std::invalid_argument("config: unknown key '" + it.key() + "' in " +
                                        where);
}

template <class T>
void get_if(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

} // namespace detail

inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["params"] = {{"c1", c.params.c1}, {"c2", c.params.c2}, {"c3", c.params.c3},
                   {"c4", c.params.c4}, {"c5", c.params.c5}, {"c6", c.params.c6},
                   {"c7", c.params.c7}, {"c8", c.params.c8}, {"c9", c.params.c9},
                   {"kappa", c.params.kappa}};
    j["sim"] = {{"chi", c.sim.chi},
                {"amp", c.sim.amp},
                {"lx", c.sim.lx},
                {"ly", c.sim.ly},
                {"nxc", c.sim.nxc},
                {"nyc", c.sim.nyc},
                {"dtc", c.sim.dtc},
                {"spinup_time", c.sim.spinup_time},
                {"n_snapshots", c.sim.n_snapshots},
                {"store_stride", c.sim.store_stride},
                {"seed", c.sim.seed},
                {"theta", c.sim.theta},
                {"perturb_rel", c.sim.perturb_rel},
                {"store_nx", c.sim.store_nx},
                {"store_ny", c.sim.store_ny}};
    j["window"] = {{"hx", c.window.hx},       {"hy", c.window.hy},
                   {"ht", c.window.ht},       {"order_x", c.window.order_x},
                   {"order_y", c.window.order_y}, {"order_t", c.window.order_t},
                   {"lambda", c.window.lambda}};
    j["plan"] = {{"k", c.plan.k}, {"seed", c.plan.seed}};
    j["noise"] = {{"sigma", c.noise.sigma}, {"seed", c.noise.seed}};
    j["regression"] = {{"gamma", c.reg.gamma}, {"max_iter", c.reg.max_iter}};
    j["ensemble"] = {{"n_realizations", c.n_realizations}, {"base_seed", c.ensemble_seed}};
    j["paths"] = {{"input", c.input_path}, {"output", c.output_path}};
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    detail::check_keys(j, {"preset", "params", "sim", "window", "plan", "noise",
                           "regression", "ensemble", "paths"},
                       "top level");
    RunConfig c;
    if (j.contains("preset")) c = preset_config(j.at("preset").get<std::string>());
    using detail::check_keys;
    using detail::get_if;
    if (j.contains("params")) {
        const auto& p = j.at("params");
        check_keys(p, {"c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9", "kappa"},
                   "params");
        get_if(p, "c1", c.params.c1);
        get_if(p, "c2", c.params.c2);
        get_if(p, "c3", c.params.c3);
        get_if(p, "c4", c.params.c4);
        get_if(p, "c5", c.params.c5);
        get_if(p, "c6", c.params.c6);
        get_if(p, "c7", c.params.c7);
        get_if(p, "c8", c.params.c8);
        get_if(p, "c9", c.params.c9);
        get_if(p, "kappa", c.params.kappa);
    }
    if (j.contains("sim")) {
        const auto& s = j.at("sim");
        check_keys(s,
                   {"chi", "amp", "lx", "ly", "nxc", "nyc", "dtc", "spinup_time",
                    "n_snapshots", "store_stride", "seed", "theta", "perturb_rel",
                    "store_nx", "store_ny"},
                   "sim");
        get_if(s, "chi", c.sim.chi);
        get_if(s, "amp", c.sim.amp);
        get_if(s, "lx", c.sim.lx);
        get_if(s, "ly", c.sim.ly);
        get_if(s, "nxc", c.sim.nxc);
        get_if(s, "nyc", c.sim.nyc);
        get_if(s, "dtc", c.sim.dtc);
        get_if(s, "spinup_time", c.sim.spinup_time);
        get_if(s, "n_snapshots", c.sim.n_snapshots);
        get_if(s, "store_stride", c.sim.store_stride);
        get_if(s, "seed", c.sim.seed);
        get_if(s, "theta", c.sim.theta);
        get_if(s, "perturb_rel", c.sim.perturb_rel);
        get_if(s, "store_nx", c.sim.store_nx);
        get_if(s, "store_ny", c.sim.store_ny);
    }
    if (j.contains("window")) {
        const auto& w = j.at("window");
        check_keys(w, {"hx", "hy", "ht", "order_x", "order_y", "order_t", "lambda"},
                   "window");
        get_if(w, "hx", c.window.hx);
        get_if(w, "hy", c.window.hy);
        get_if(w, "ht", c.window.ht);
        get_if(w, "order_x", c.window.order_x);
        get_if(w, "order_y", c.window.order_y);
        get_if(w, "order_t", c.window.order_t);
        get_if(w, "lambda", c.window.lambda);
    }
    if (j.contains("plan")) {
        const auto& p = j.at("plan");
        check_keys(p, {"k", "seed"}, "plan");
        get_if(p, "k", c.plan.k);
        get_if(p, "seed", c.plan.seed);
    }
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        check_keys(n, {"sigma", "seed"}, "noise");
        get_if(n, "sigma", c.noise.sigma);
        get_if(n, "seed", c.noise.seed);
    }
    if (j.contains("regression")) {
        const auto& r = j.at("regression");
        check_keys(r, {"gamma", "max_iter"}, "regression");
        get_if(r, "gamma", c.reg.gamma);
        get_if(r, "max_iter", c.reg.max_iter);
    }
    if (j.contains("ensemble")) {
        const auto& e = j.at("ensemble");
        check_keys(e, {"n_realizations", "base_seed"}, "ensemble");
        get_if(e, "n_realizations", c.n_realizations);
        get_if(e, "base_seed", c.ensemble_seed);
    }
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        check_keys(p, {"input", "output"}, "paths");
        get_if(p, "input", c.input_path);
        get_if(p, "output", c.output_path);
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config: parse error in '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

inline void save_config(const RunConfig& c, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("config: cannot open '" + path + "' for writing");
    out << to_json(c).dump(2) << "\n";
}

} // namespace latpde
