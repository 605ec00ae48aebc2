#pragma once

// Ensemble and sweep machinery: statistics over sampling-operator
// realizations, residual-vs-order sweeps, parameter-error-vs-noise sweeps,
// and per-term noise-sensitivity analysis.
//
// Seeding discipline: within one sweep, realization r uses the same sampling
// seed at every axis value (isolating the axis variable); noise fields are
// seeded per (sigma index, realization) via mix_seed.

#include "latpde/core.hpp"
#include "latpde/flow_series.hpp"
#include "latpde/local_poly.hpp"
#include "latpde/term_library.hpp"
#include "latpde/sparse_regression.hpp"
#include "latpde/kolmogorov.hpp"

#include <cstdio>
#include <map>
#include <optional>

namespace latpde {

struct EnsembleSpec {
    std::size_t n_realizations = 40;
    std::uint64_t base_seed = 0;
    WindowSpec window;
    SamplePlan plan;
    RegressionConfig reg;

    void validate() const {
        if (n_realizations < 2)
            throw std::invalid_argument("EnsembleSpec: need n_realizations >= 2");
        window.validate();
        plan.validate();
        reg.validate();
    }

    std::uint64_t sampling_seed(std::size_t realization) const {
        return mix_seed(base_seed, 0x5a3cu, realization);
    }
    std::uint64_t noise_seed(std::size_t sigma_index, std::size_t realization) const {
        return mix_seed(base_seed, 0x401e + sigma_index, realization);
    }
};

/// Per-coefficient reconstruction error: |(c_i - c_est_i)/c_i| where the
/// reference is nonzero; the absolute estimate (a false-positive magnitude)
/// where the reference is zero.
struct RelError {
    double value = 0.0;
    bool false_positive = false;  // reference zero, estimate nonzero
};

inline std::array<RelError, n_library_terms> rel_error(
    const std::array<double, n_library_terms>& c_est,
    const std::array<double, n_library_terms>& c_ref) {
    std::array<RelError, n_library_terms> out;
    for (int t = 0; t < n_library_terms; ++t) {
        if (c_ref[t] != 0.0) {
            out[t].value = std::abs((c_ref[t] - c_est[t]) / c_ref[t]);
            out[t].false_positive = false;
        } else {
            out[t].value = std::abs(c_est[t]);
            out[t].false_positive = c_est[t] != 0.0;
        }
    }
    return out;
}

struct RealizationRecord {
    std::size_t realization = 0;
    std::uint64_t sampling_seed = 0;
    bool failed = false;
    std::string error;
    double eta = 0.0, eta0 = 0.0;
    std::array<double, n_library_terms> c{};
    std::array<bool, n_library_terms> active{};
    std::array<double, n_library_terms> relevance{};
    std::array<double, n_library_terms> delta_c{};
    std::array<bool, n_library_terms> false_negative{};  // reference-nonzero term dropped

    double eta_ratio() const { return eta0 > 0.0 ? eta / eta0 : 0.0; }
};

struct TermStats {
    double mean = 0.0, stddev = 0.0, min = 0.0, max = 0.0;
    std::size_t count = 0;
};

inline TermStats stats_of(const std::vector<double>& xs) {
    TermStats s;
    s.count = xs.size();
    if (xs.empty()) return s;
    double sum = 0.0;
    s.min = s.max = xs[0];
    for (double x : xs) {
        sum += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.mean = sum / static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - s.mean) * (x - s.mean);
    s.stddev = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
    return s;
}

/// One ensemble of sampling realizations against a fixed series.
struct EnsembleRecord {
    std::vector<RealizationRecord> records;
    std::array<double, n_library_terms> c_ref{};

    std::size_t n_ok() const {
        std::size_t n = 0;
        for (const auto& r : records) n += !r.failed;
        return n;
    }

    /// Number of realizations in which reference-nonzero term t was dropped.
    std::size_t false_negative_count(int t) const {
        std::size_t n = 0;
        for (const auto& r : records) n += (!r.failed && r.false_negative[t]);
        return n;
    }

    TermStats eta_ratio_stats() const {
        std::vector<double> xs;
        for (const auto& r : records)
            if (!r.failed) xs.push_back(r.eta_ratio());
        return stats_of(xs);
    }

    /// Delta-c statistics for one term. With filter_false_negatives, only
    /// realizations that retained the term contribute (the convention the
    /// noise-sweep figures use); without, dropped terms contribute
    /// delta_c = 1 (the estimate is zero).
    TermStats delta_c_stats(int t, bool filter_false_negatives) const {
        std::vector<double> xs;
        for (const auto& r : records) {
            if (r.failed) continue;
            if (filter_false_negatives && r.false_negative[t]) continue;
            xs.push_back(r.delta_c[t]);
        }
        return stats_of(xs);
    }

    TermStats relevance_stats(int t) const {
        std::vector<double> xs;
        for (const auto& r : records)
            if (!r.failed && std::isfinite(r.relevance[t])) xs.push_back(r.relevance[t]);
        return stats_of(xs);
    }

    /// Fraction of successful realizations whose active set is exactly the
    /// given support.
    double support_fraction(const std::array<bool, n_library_terms>& support) const {
        std::size_t n = 0, ok = 0;
        for (const auto& r : records) {
            if (r.failed) continue;
            ++ok;
            n += (r.active == support);
        }
        return ok ? static_cast<double>(n) / static_cast<double>(ok) : 0.0;
    }
};

/// n_realizations independent seeded sampling -> library -> regression runs.
/// A failed realization is recorded, not fatal.
inline EnsembleRecord run_ensemble(const FlowSeries& series, const EnsembleSpec& spec,
                                   const std::array<double, n_library_terms>& c_ref) {
    spec.validate();
    EnsembleRecord out;
    out.c_ref = c_ref;
    out.records.resize(spec.n_realizations);
    for (std::size_t r = 0; r < spec.n_realizations; ++r) {
        RealizationRecord& rec = out.records[r];
        rec.realization = r;
        rec.sampling_seed = spec.sampling_seed(r);
        try {
            SamplePlan plan = spec.plan;
            plan.seed = rec.sampling_seed;
            TermLibrary lib = build_library(series, spec.window, plan);
            RegressionResult res = threshold_iterate(lib, spec.reg);
            rec.eta = res.eta;
            rec.eta0 = res.eta0;
            rec.c = res.c;
            rec.active = res.active;
            rec.relevance = res.relevance;
            auto errs = rel_error(res.c, c_ref);
            for (int t = 0; t < n_library_terms; ++t) {
                rec.delta_c[t] = errs[t].value;
                rec.false_negative[t] = (c_ref[t] != 0.0) && !res.active[t];
            }
        } catch (const std::exception& e) {
            rec.failed = true;
            rec.error = e.what();
        }
    }
    return out;
}

/// Convenience: run_ensemble against the same series with per-realization
/// noise of amplitude sigma (one noise field per (sigma index, realization)).
inline EnsembleRecord run_ensemble_noisy(const FlowSeries& series, const EnsembleSpec& spec,
                                         const std::array<double, n_library_terms>& c_ref,
                                         double sigma, std::size_t sigma_index) {
    if (sigma == 0.0) return run_ensemble(series, spec, c_ref);
    spec.validate();
    EnsembleRecord out;
    out.c_ref = c_ref;
    out.records.resize(spec.n_realizations);
    for (std::size_t r = 0; r < spec.n_realizations; ++r) {
        RealizationRecord& rec = out.records[r];
        rec.realization = r;
        rec.sampling_seed = spec.sampling_seed(r);
        try {
            FlowSeries noisy =
                add_noise(series, {sigma, spec.noise_seed(sigma_index, r)});
            SamplePlan plan = spec.plan;
            plan.seed = rec.sampling_seed;
            TermLibrary lib = build_library(noisy, spec.window, plan);
            RegressionResult res = threshold_iterate(lib, spec.reg);
            rec.eta = res.eta;
            rec.eta0 = res.eta0;
            rec.c = res.c;
            rec.active = res.active;
            rec.relevance = res.relevance;
            auto errs = rel_error(res.c, c_ref);
            for (int t = 0; t < n_library_terms; ++t) {
                rec.delta_c[t] = errs[t].value;
                rec.false_negative[t] = (c_ref[t] != 0.0) && !res.active[t];
            }
        } catch (const std::exception& e) {
            rec.failed = true;
            rec.error = e.what();
        }
    }
    return out;
}

/// One sweep: an ensemble per axis value, plus the axis metadata.
struct SweepResult {
    enum class Axis { order, noise };
    Axis axis;
    std::vector<double> values;            // L values (as double) or sigma values
    std::vector<EnsembleRecord> ensembles; // one per value
};

/// Residual-vs-polynomial-order sweep at fixed N and fixed noise amplitude,
/// with M = L. Realization r reuses its sampling seed across L values and its
/// noise field across L values.
inline SweepResult sweep_order(const FlowSeries& series, const std::vector<int>& l_values,
                               int order_t, const EnsembleSpec& spec, double sigma,
                               const std::array<double, n_library_terms>& c_ref) {
    if (l_values.empty()) throw std::invalid_argument("sweep_order: empty value list");
    spec.validate();
    SweepResult out;
    out.axis = SweepResult::Axis::order;
    out.ensembles.resize(l_values.size());
    for (int l : l_values) out.values.push_back(static_cast<double>(l));
    for (auto& e : out.ensembles) {
        e.c_ref = c_ref;
        e.records.resize(spec.n_realizations);
    }
    // loop realizations outermost so one noisy copy serves every L
    for (std::size_t r = 0; r < spec.n_realizations; ++r) {
        std::optional<FlowSeries> noisy;
        if (sigma > 0.0)
            noisy = add_noise(series, {sigma, spec.noise_seed(0, r)});
        const FlowSeries& data = noisy ? *noisy : series;
        for (std::size_t li = 0; li < l_values.size(); ++li) {
            RealizationRecord& rec = out.ensembles[li].records[r];
            rec.realization = r;
            rec.sampling_seed = spec.sampling_seed(r);
            try {
                WindowSpec w = spec.window;
                w.order_x = l_values[li];
                w.order_y = l_values[li];  // M = L
                w.order_t = order_t;
                SamplePlan plan = spec.plan;
                plan.seed = rec.sampling_seed;
                TermLibrary lib = build_library(data, w, plan);
                RegressionResult res = threshold_iterate(lib, spec.reg);
                rec.eta = res.eta;
                rec.eta0 = res.eta0;
                rec.c = res.c;
                rec.active = res.active;
                rec.relevance = res.relevance;
                auto errs = rel_error(res.c, c_ref);
                for (int t = 0; t < n_library_terms; ++t) {
                    rec.delta_c[t] = errs[t].value;
                    rec.false_negative[t] = (c_ref[t] != 0.0) && !res.active[t];
                }
            } catch (const std::exception& e) {
                rec.failed = true;
                rec.error = e.what();
            }
        }
    }
    return out;
}

/// Parameter-error-vs-noise sweep: for each sigma, an ensemble with one noise
/// field per (sigma, realization).
inline SweepResult sweep_noise(const FlowSeries& series, const std::vector<double>& sigmas,
                               const EnsembleSpec& spec,
                               const std::array<double, n_library_terms>& c_ref) {
    if (sigmas.empty()) throw std::invalid_argument("sweep_noise: empty value list");
    for (double s : sigmas)
        if (s < 0.0) throw std::invalid_argument("sweep_noise: sigma must be >= 0");
    SweepResult out;
    out.axis = SweepResult::Axis::noise;
    out.values = sigmas;
    for (std::size_t si = 0; si < sigmas.size(); ++si)
        out.ensembles.push_back(run_ensemble_noisy(series, spec, c_ref, sigmas[si], si));
    return out;
}

/// Per-term noise sensitivity xi_i(sigma) = ||q_i(0) - q_i(sigma)||_inf /
/// ||q_i(0)||_inf, i = 0..7, computed with the same sample points at sigma = 0
/// and sigma > 0 (paired design). Index 0 is the target column.
struct XiRecord {
    double sigma = 0.0;
    // mean over realizations; entry 0 is q0, entries 1..7 the library columns
    std::array<double, n_library_terms + 1> xi_mean{};
    std::vector<std::array<double, n_library_terms + 1>> raw;  // per realization
};

inline std::vector<XiRecord> xi_analysis(const FlowSeries& series,
                                         const std::vector<double>& sigmas,
                                         const EnsembleSpec& spec) {
    spec.validate();
    // noiseless reference libraries, cached per sampling seed
    std::vector<TermLibrary> refs(spec.n_realizations);
    for (std::size_t r = 0; r < spec.n_realizations; ++r) {
        SamplePlan plan = spec.plan;
        plan.seed = spec.sampling_seed(r);
        refs[r] = build_library(series, spec.window, plan);
    }
    std::vector<XiRecord> out(sigmas.size());
    for (std::size_t si = 0; si < sigmas.size(); ++si) {
        XiRecord& xr = out[si];
        xr.sigma = sigmas[si];
        xr.raw.resize(spec.n_realizations);
        std::array<double, n_library_terms + 1> accum{};
        for (std::size_t r = 0; r < spec.n_realizations; ++r) {
            SamplePlan plan = spec.plan;
            plan.seed = spec.sampling_seed(r);
            TermLibrary lib;
            if (sigmas[si] == 0.0) {
                lib = refs[r];
            } else {
                FlowSeries noisy = add_noise(series, {sigmas[si], spec.noise_seed(si, r)});
                lib = build_library(noisy, spec.window, plan);
            }
            const TermLibrary& ref = refs[r];
            for (int t = 0; t <= n_library_terms; ++t) {
                double dmax = 0.0, rmax = 0.0;
                for (std::size_t row = 0; row < ref.rows(); ++row) {
                    double a = (t == 0) ? ref.q0[row] : ref.q(row, t - 1);
                    double b = (t == 0) ? lib.q0[row] : lib.q(row, t - 1);
                    dmax = std::max(dmax, std::abs(a - b));
                    rmax = std::max(rmax, std::abs(a));
                }
                double xi = rmax > 0.0 ? dmax / rmax
                                       : std::numeric_limits<double>::quiet_NaN();
                xr.raw[r][t] = xi;
                accum[t] += xi;
            }
        }
        for (int t = 0; t <= n_library_terms; ++t)
            xr.xi_mean[t] = accum[t] / static_cast<double>(spec.n_realizations);
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV output. All floating-point values are written with 17 significant
// digits so identical configs give byte-identical files.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace detail

/// Raw sweep CSV: one row per (axis value, realization, term).
inline void write_sweep_csv(const SweepResult& sweep, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("write_sweep_csv: cannot open '" + path + "'");
    out << "axis_value,realization,term,c_est,delta_c,eta_over_eta0,R,active,false_negative\n";
    for (std::size_t vi = 0; vi < sweep.values.size(); ++vi) {
        for (const auto& rec : sweep.ensembles[vi].records) {
            if (rec.failed) continue;
            for (int t = 0; t < n_library_terms; ++t) {
                out << detail::fmt17(sweep.values[vi]) << ',' << rec.realization << ','
                    << (t + 1) << ',' << detail::fmt17(rec.c[t]) << ','
                    << detail::fmt17(rec.delta_c[t]) << ','
                    << detail::fmt17(rec.eta_ratio()) << ','
                    << detail::fmt17(rec.relevance[t]) << ',' << (rec.active[t] ? 1 : 0)
                    << ',' << (rec.false_negative[t] ? 1 : 0) << "\n";
            }
        }
    }
}

/// Summary CSV: per (axis value, term) mean/std/min/max of delta_c (both
/// filtered and unfiltered) plus residual statistics and false-negative counts.
inline void write_sweep_summary_csv(const SweepResult& sweep, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("write_sweep_summary_csv: cannot open '" + path + "'");
    out << "axis_value,term,delta_c_mean,delta_c_std,delta_c_min,delta_c_max,"
           "delta_c_mean_unfiltered,false_negatives,n_ok,"
           "eta_ratio_mean,eta_ratio_std,R_mean\n";
    for (std::size_t vi = 0; vi < sweep.values.size(); ++vi) {
        const EnsembleRecord& e = sweep.ensembles[vi];
        TermStats eta = e.eta_ratio_stats();
        for (int t = 0; t < n_library_terms; ++t) {
            TermStats f = e.delta_c_stats(t, true);
            TermStats u = e.delta_c_stats(t, false);
            TermStats rel = e.relevance_stats(t);
            out << detail::fmt17(sweep.values[vi]) << ',' << (t + 1) << ','
                << detail::fmt17(f.mean) << ',' << detail::fmt17(f.stddev) << ','
                << detail::fmt17(f.min) << ',' << detail::fmt17(f.max) << ','
                << detail::fmt17(u.mean) << ',' << e.false_negative_count(t) << ','
                << e.n_ok() << ',' << detail::fmt17(eta.mean) << ','
                << detail::fmt17(eta.stddev) << ',' << detail::fmt17(rel.mean) << "\n";
        }
    }
}

/// xi CSV: one row per (sigma, term index 0..7).
inline void write_xi_csv(const std::vector<XiRecord>& xi, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("write_xi_csv: cannot open '" + path + "'");
    out << "sigma,term,xi_mean\n";
    for (const auto& rec : xi)
        for (int t = 0; t <= n_library_terms; ++t)
            out << detail::fmt17(rec.sigma) << ',' << t << ','
                << detail::fmt17(rec.xi_mean[t]) << "\n";
}

} // namespace latpde
