#pragma once

// Builds the regression target q0 and library Q by applying the elimination
// operator (curl then time derivative, sampled at random interior points) to
// every candidate term of the velocity model:
//
//   d/dt u = c1 (u.grad)u + c2 lap u + c3 u + c4 (div u) u + c5 (div u)^2 u
//          + c6 (curl u)^2 u + c7 |u|^2 u + c8 grad p + c9 f
//
// The curl annihilates grad p, the time derivative annihilates the static
// forcing f, so every row is a function of the velocity jets alone. Each
// column is the analytic product-rule expansion of z.curl(d/dt term) over
// JetTable entries, in physical units.

#include "latpde/core.hpp"
#include "latpde/flow_series.hpp"
#include "latpde/local_poly.hpp"

#include <array>
#include <random>
#include <unordered_set>

namespace latpde {

inline constexpr int n_library_terms = 7;

inline const std::array<const char*, n_library_terms>& term_names() {
    static const std::array<const char*, n_library_terms> names = {
        "(u.grad)u", "lap(u)", "u", "(div u)u", "(div u)^2 u", "(curl u)^2 u", "|u|^2 u"};
    return names;
}

/// Random sampling plan for the sparsification operator: K unique interior
/// grid points, reproducible from the seed. Margins are derived from the
/// window so no sampled window wraps the grid.
struct SamplePlan {
    std::size_t k = 250;
    std::uint64_t seed = 0;

    void validate() const {
        if (k < 8)
            throw std::invalid_argument("SamplePlan: need K >= 8 sample points");
    }
};

struct GridIndex {
    std::size_t i, j, k;
    bool operator==(const GridIndex&) const = default;
};

/// K unique uniformly random interior points (uniform without replacement;
/// overlapping windows are allowed). Deterministic given the seed.
inline std::vector<GridIndex> sample_points(const GridSpec& grid, const WindowSpec& window,
                                            const SamplePlan& plan) {
    plan.validate();
    window.validate_against(grid);
    auto m = window.half_points(grid);
    if (2 * m[0] + 1 > grid.nx || 2 * m[1] + 1 > grid.ny || 2 * m[2] + 1 > grid.nt)
        throw std::invalid_argument("sample_points: window larger than grid");
    const std::size_t ni = grid.nx - 2 * m[0];
    const std::size_t nj = grid.ny - 2 * m[1];
    const std::size_t nk = grid.nt - 2 * m[2];
    const std::size_t interior = ni * nj * nk;
    if (plan.k > interior)
        throw std::invalid_argument("sample_points: requested K = " + std::to_string(plan.k) +
                                    " but only " + std::to_string(interior) +
                                    " interior points are available");
    std::mt19937_64 rng(plan.seed);
    std::vector<GridIndex> out;
    out.reserve(plan.k);
    if (plan.k * 2 >= interior) {
        // dense regime: enumerate and partial-shuffle
        std::vector<std::size_t> all(interior);
        for (std::size_t n = 0; n < interior; ++n) all[n] = n;
        for (std::size_t n = 0; n < plan.k; ++n) {
            std::uniform_int_distribution<std::size_t> pick(n, interior - 1);
            std::swap(all[n], all[pick(rng)]);
            std::size_t flat = all[n];
            out.push_back({m[0] + flat % ni, m[1] + (flat / ni) % nj, m[2] + flat / (ni * nj)});
        }
    } else {
        std::unordered_set<std::size_t> seen;
        std::uniform_int_distribution<std::size_t> pick(0, interior - 1);
        while (out.size() < plan.k) {
            std::size_t flat = pick(rng);
            if (!seen.insert(flat).second) continue;
            out.push_back({m[0] + flat % ni, m[1] + (flat / ni) % nj, m[2] + flat / (ni * nj)});
        }
    }
    return out;
}

/// One row of the regression system: the target entry and the seven library
/// entries, all in physical units.
struct LibraryRow {
    double q0;
    std::array<double, n_library_terms> q;
};

/// Applies z.curl(d/dt .) to each candidate term, expanded analytically over
/// jet entries. q0 uses the second time derivatives; the library columns use
/// first time derivatives only.
inline LibraryRow eval_row(const JetTable& jet) {
    auto Du = [&](int a, int b, int c) { return jet.u(a, b, c); };
    auto Dv = [&](int a, int b, int c) { return jet.v(a, b, c); };

    const double u0 = Du(0, 0, 0), v0 = Dv(0, 0, 0);
    const double ut = Du(0, 0, 1), vt = Dv(0, 0, 1);
    const double ux = Du(1, 0, 0), uy = Du(0, 1, 0);
    const double vx = Dv(1, 0, 0), vy = Dv(0, 1, 0);
    const double uxt = Du(1, 0, 1), uyt = Du(0, 1, 1);
    const double vxt = Dv(1, 0, 1), vyt = Dv(0, 1, 1);

    // div u and its first derivatives
    const double d0 = ux + vy;
    const double dx = Du(2, 0, 0) + Dv(1, 1, 0);
    const double dy = Du(1, 1, 0) + Dv(0, 2, 0);
    const double dt = uxt + vyt;
    const double dxt = Du(2, 0, 1) + Dv(1, 1, 1);
    const double dyt = Du(1, 1, 1) + Dv(0, 2, 1);

    // vorticity (z-component) and derivatives
    const double w0 = vx - uy;
    const double wx = Dv(2, 0, 0) - Du(1, 1, 0);
    const double wy = Dv(1, 1, 0) - Du(0, 2, 0);
    const double wt = vxt - uyt;
    const double wxt = Dv(2, 0, 1) - Du(1, 1, 1);
    const double wyt = Dv(1, 1, 1) - Du(0, 2, 1);

    // speed squared and derivatives
    const double s0 = u0 * u0 + v0 * v0;
    const double sx = 2.0 * (u0 * ux + v0 * vx);
    const double sy = 2.0 * (u0 * uy + v0 * vy);
    const double st = 2.0 * (u0 * ut + v0 * vt);
    const double sxt = 2.0 * (ut * ux + u0 * uxt + vt * vx + v0 * vxt);
    const double syt = 2.0 * (ut * uy + u0 * uyt + vt * vy + v0 * vyt);

    LibraryRow row;
    // target: curl of the second time derivative of u
    row.q0 = Dv(1, 0, 2) - Du(0, 1, 2);

    // q1 = d/dt [ dx(u vx + v vy) - dy(u ux + v uy) ], fully distributed
    row.q[0] = (uxt * vx + ux * vxt) + (ut * Dv(2, 0, 0) + u0 * Dv(2, 0, 1)) +
               (vxt * vy + vx * vyt) + (vt * Dv(1, 1, 0) + v0 * Dv(1, 1, 1)) -
               (uxt * uy + ux * uyt) - (ut * Du(1, 1, 0) + u0 * Du(1, 1, 1)) -
               (uyt * vy + uy * vyt) - (vt * Du(0, 2, 0) + v0 * Du(0, 2, 1));
    // q2 = d/dt [ dx(lap v) - dy(lap u) ]
    row.q[1] = Dv(3, 0, 1) + Dv(1, 2, 1) - Du(2, 1, 1) - Du(0, 3, 1);
    // q3 = d/dt [ dx v - dy u ]
    row.q[2] = vxt - uyt;
    // q4 = d/dt [ dx(d v) - dy(d u) ]
    row.q[3] = dxt * v0 + dx * vt + dt * vx + d0 * vxt - dyt * u0 - dy * ut - dt * uy -
               d0 * uyt;
    // q5 = d/dt [ dx(d^2 v) - dy(d^2 u) ]
    row.q[4] = 2.0 * (dt * dx * v0 + d0 * dxt * v0 + d0 * dx * vt) + 2.0 * d0 * dt * vx +
               d0 * d0 * vxt -
               2.0 * (dt * dy * u0 + d0 * dyt * u0 + d0 * dy * ut) - 2.0 * d0 * dt * uy -
               d0 * d0 * uyt;
    // q6 = d/dt [ dx(w^2 v) - dy(w^2 u) ]
    row.q[5] = 2.0 * (wt * wx * v0 + w0 * wxt * v0 + w0 * wx * vt) + 2.0 * w0 * wt * vx +
               w0 * w0 * vxt -
               2.0 * (wt * wy * u0 + w0 * wyt * u0 + w0 * wy * ut) - 2.0 * w0 * wt * uy -
               w0 * w0 * uyt;
    // q7 = d/dt [ dx(s v) - dy(s u) ]
    row.q[6] = sxt * v0 + sx * vt + st * vx + s0 * vxt - syt * u0 - sy * ut - st * uy -
               s0 * uyt;
    return row;
}

/// The assembled regression system: K x 7 library matrix (row-major), the
/// K-vector target, and the sample points each row came from.
struct TermLibrary {
    std::vector<double> Q;  // K * 7, row-major
    std::vector<double> q0;
    std::vector<GridIndex> points;

    std::size_t rows() const { return q0.size(); }
    double q(std::size_t row, int term) const {
        return Q[row * n_library_terms + static_cast<std::size_t>(term)];
    }
};

/// For each sampled center: fit the window, extract the jet, evaluate the
/// row. Rows are assembled in sample order; row construction is independent
/// across points.
inline TermLibrary build_library(const FlowSeries& series, const WindowSpec& window,
                                 const SamplePlan& plan) {
    const WindowFitter fitter(window, series.grid);
    std::vector<GridIndex> pts = sample_points(series.grid, window, plan);
    TermLibrary lib;
    lib.points = pts;
    lib.Q.assign(pts.size() * n_library_terms, 0.0);
    lib.q0.assign(pts.size(), 0.0);
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(pts.size()); ++n) {
        try {
            const GridIndex& c = pts[static_cast<std::size_t>(n)];
            PolyFit fit = fitter.fit(series, c.i, c.j, c.k);
            LibraryRow row = eval_row(jet_at_center(fit, window));
            lib.q0[static_cast<std::size_t>(n)] = row.q0;
            for (int t = 0; t < n_library_terms; ++t)
                lib.Q[static_cast<std::size_t>(n) * n_library_terms +
                      static_cast<std::size_t>(t)] = row.q[t];
        } catch (const std::exception& e) {
#pragma omp critical
            if (!failure) {
                const GridIndex& c = pts[static_cast<std::size_t>(n)];
                failure = std::make_exception_ptr(numeric_error(
                    "build_library: row at (" + std::to_string(c.i) + "," +
                    std::to_string(c.j) + "," + std::to_string(c.k) + ") failed: " +
                    e.what()));
            }
        }
    }
    if (failure) std::rethrow_exception(failure);
    return lib;
}

/// Debug CSV: one row per sample point with the target and all columns.
inline void write_library_csv(const TermLibrary& lib, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("write_library_csv: cannot open '" + path + "'");
    out << "i,j,k,q0";
    for (int t = 0; t < n_library_terms; ++t) out << ",q" << (t + 1);
    out << "\n";
    char buf[32];
    auto emit = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out << ',' << buf;
    };
    for (std::size_t r = 0; r < lib.rows(); ++r) {
        out << lib.points[r].i << ',' << lib.points[r].j << ',' << lib.points[r].k;
        emit(lib.q0[r]);
        for (int t = 0; t < n_library_terms; ++t) emit(lib.q(r, t));
        out << "\n";
    }
}

} // namespace latpde
