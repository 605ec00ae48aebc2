// Command-line front end: simulate surrogate trajectories, discover models
// from trajectories, run the sweep studies, and probe false negatives.
//
// Exit codes: 0 success, 2 usage/config error, 3 I/O error, 4 numerical
// failure.

#include "latpde/latpde.hpp"

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <iostream>

using namespace latpde;

namespace {

std::vector<double> parse_values(const std::string& spec) {
    std::vector<double> out;
    auto range_pos = spec.find("..");
    if (range_pos != std::string::npos) {
        int lo = std::stoi(spec.substr(0, range_pos));
        int hi = std::stoi(spec.substr(range_pos + 2));
        for (int v = lo; v <= hi; ++v) out.push_back(v);
    } else {
        std::size_t start = 0;
        while (start <= spec.size()) {
            auto comma = spec.find(',', start);
            std::string tok = spec.substr(start, comma == std::string::npos
                                                     ? std::string::npos
                                                     : comma - start);
            if (!tok.empty()) out.push_back(std::stod(tok));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    if (out.empty()) throw CLI::ValidationError("--values", "empty value list");
    return out;
}

std::string sidecar_path(const std::string& output) { return output + ".json"; }

void print_model(const RegressionResult& res) {
    std::cout << "recovered model: d/dt u =";
    bool any = false;
    for (int t = 0; t < n_library_terms; ++t) {
        if (!res.active[t]) continue;
        std::printf(" %+.6g %s", res.c[t], term_names()[t]);
        any = true;
    }
    if (!any) std::cout << " 0  (all terms dropped)";
    std::cout << "\n  eta/eta0 = " << detail::fmt17(res.eta0 > 0 ? res.eta / res.eta0 : 0.0)
              << "\n";
    for (int t = 0; t < n_library_terms; ++t)
        if (res.active[t])
            std::cout << "  R" << (t + 1) << " = " << detail::fmt17(res.relevance[t])
                      << "\n";
}

int cmd_simulate(const RunConfig& cfg) {
    if (cfg.output_path.empty()) throw CLI::ValidationError("simulate", "missing --output");
    SimulationResult sim = simulate(cfg.params, cfg.sim);
    write_series(sim.series, cfg.output_path);
    RunConfig sidecar = cfg;
    sidecar.input_path = cfg.output_path;
    nlohmann::json j = to_json(sidecar);
    j["result"] = {{"max_abs_divergence", sim.max_abs_divergence}};
    std::ofstream out(sidecar_path(cfg.output_path), std::ios::trunc);
    if (!out) throw io_error("cannot write sidecar for '" + cfg.output_path + "'");
    out << j.dump(2) << "\n";
    std::cout << "wrote " << cfg.output_path << " (" << sim.series.grid.nx << "x"
              << sim.series.grid.ny << "x" << sim.series.grid.nt
              << "), max|div u| = " << detail::fmt17(sim.max_abs_divergence) << "\n";
    return 0;
}

int cmd_discover(const RunConfig& cfg, const std::string& library_csv) {
    if (cfg.input_path.empty()) throw CLI::ValidationError("discover", "missing --input");
    FlowSeries series = read_series(cfg.input_path);
    if (cfg.noise.sigma > 0.0) series = add_noise(series, cfg.noise);
    TermLibrary lib = build_library(series, cfg.window, cfg.plan);
    if (!library_csv.empty()) write_library_csv(lib, library_csv);
    RegressionResult res = threshold_iterate(lib, cfg.reg);
    print_model(res);
    if (!cfg.output_path.empty()) {
        std::ofstream out(cfg.output_path, std::ios::trunc);
        if (!out) throw io_error("cannot write '" + cfg.output_path + "'");
        nlohmann::json j = to_json(res);
        j["config"] = to_json(cfg);
        out << j.dump(2) << "\n";
    }
    return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& kind, const std::string& values,
              const std::string& prefix) {
    if (cfg.input_path.empty()) throw CLI::ValidationError("sweep", "missing --input");
    FlowSeries series = read_series(cfg.input_path);
    EnsembleSpec spec = cfg.ensemble();
    auto c_ref = cfg.params.library_coeffs();
    if (kind == "order") {
        std::vector<int> ls;
        for (double v : parse_values(values)) ls.push_back(static_cast<int>(v));
        SweepResult sweep =
            sweep_order(series, ls, cfg.window.order_t, spec, cfg.noise.sigma, c_ref);
        write_sweep_csv(sweep, prefix + "_raw.csv");
        write_sweep_summary_csv(sweep, prefix + "_summary.csv");
    } else if (kind == "noise") {
        SweepResult sweep = sweep_noise(series, parse_values(values), spec, c_ref);
        write_sweep_csv(sweep, prefix + "_raw.csv");
        write_sweep_summary_csv(sweep, prefix + "_summary.csv");
    } else if (kind == "xi") {
        auto xi = xi_analysis(series, parse_values(values), spec);
        write_xi_csv(xi, prefix + "_xi.csv");
    } else {
        throw CLI::ValidationError("--kind", "expected order, noise, or xi");
    }
    std::cout << "wrote " << prefix << "_*.csv\n";
    return 0;
}

int cmd_probe(const RunConfig& cfg, int term) {
    if (cfg.input_path.empty()) throw CLI::ValidationError("probe", "missing --input");
    if (term < 1 || term > n_library_terms)
        throw CLI::ValidationError("--term", "expected 1..7");
    FlowSeries series = read_series(cfg.input_path);
    if (cfg.noise.sigma > 0.0) series = add_noise(series, cfg.noise);
    TermLibrary lib = build_library(series, cfg.window, cfg.plan);
    RegressionResult res = threshold_iterate(lib, cfg.reg);
    print_model(res);
    double ratio = false_negative_probe(lib, res, term - 1);
    std::cout << "forcing q" << term << " active changes eta by "
              << detail::fmt17(ratio) << " (relative reduction)\n";
    if (!cfg.output_path.empty()) {
        std::ofstream out(cfg.output_path, std::ios::trunc);
        if (!out) throw io_error("cannot write '" + cfg.output_path + "'");
        nlohmann::json j = to_json(res);
        j["probe"] = {{"term", term}, {"residual_reduction", ratio}};
        out << j.dump(2) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"latent-variable PDE model discovery"};
    app.require_subcommand(1);

    std::string config_path, preset, output, input, library_csv;
    std::string kind, values, prefix = "sweep";
    int term = 3, jobs = 0;
    double kappa = -1.0, sigma = -1.0, gamma = -1.0;
    int order = -1;
    long long k_points = -1, seed = -1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--preset", preset, "named preset: paper | paper-kappa1");
        sub->add_option("--jobs", jobs, "max worker threads for ensembles/sweeps");
        sub->add_option("--sigma", sigma, "noise amplitude (std dev)");
        sub->add_option("--order", order, "polynomial order L = M = N");
        sub->add_option("--gamma", gamma, "threshold constant");
        sub->add_option("--k", k_points, "library sample count K");
        sub->add_option("--seed", seed, "seed override (sim / sampling)");
        sub->add_option("--output", output, "output path");
        sub->add_option("--input", input, "input KFLD trajectory");
    };

    CLI::App* sim = app.add_subcommand("simulate", "generate a surrogate trajectory");
    add_common(sim);
    sim->add_option("--kappa", kappa, "override kappa");

    CLI::App* disc = app.add_subcommand("discover", "discover a model from a trajectory");
    add_common(disc);
    disc->add_option("--library-csv", library_csv, "dump the term library as CSV");

    CLI::App* swp = app.add_subcommand("sweep", "order/noise/xi sweeps");
    add_common(swp);
    swp->add_option("--kind", kind, "order | noise | xi")->required();
    swp->add_option("--values", values, "axis values: lo..hi or comma list")->required();
    swp->add_option("--output-prefix", prefix, "CSV file prefix");

    CLI::App* prb = app.add_subcommand("probe", "false-negative probe for one term");
    add_common(prb);
    prb->add_option("--term", term, "term index 1..7 (default 3)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (!preset.empty()) {
            RunConfig p = preset_config(preset);
            cfg.params = p.params;  // preset sets model parameters only
        }
        if (kappa > 0.0) cfg.params.kappa = kappa;
        if (sigma >= 0.0) cfg.noise.sigma = sigma;
        if (gamma > 0.0) cfg.reg.gamma = gamma;
        if (order > 0) cfg.window.order_x = cfg.window.order_y = cfg.window.order_t = order;
        if (k_points > 0) cfg.plan.k = static_cast<std::size_t>(k_points);
        if (seed >= 0) {
            cfg.sim.seed = static_cast<std::uint64_t>(seed);
            cfg.plan.seed = static_cast<std::uint64_t>(seed);
            cfg.ensemble_seed = static_cast<std::uint64_t>(seed);
        }
        if (!output.empty()) cfg.output_path = output;
        if (!input.empty()) cfg.input_path = input;
#ifdef _OPENMP
        if (jobs > 0) omp_set_num_threads(jobs);
#endif
        if (sim->parsed()) return cmd_simulate(cfg);
        if (disc->parsed()) return cmd_discover(cfg, library_csv);
        if (swp->parsed()) return cmd_sweep(cfg, kind, values, prefix);
        if (prb->parsed()) return cmd_probe(cfg, term);
        return 2;
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const io_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 3;
    } catch (const numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
