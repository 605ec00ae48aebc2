#pragma once

// Weighted local polynomial fits on rectangular space-time windows and
// extraction of mixed partial derivatives at the window center.
//
// The fit minimizes  sum_w w_ijk (u_ijk - sum U^{lmn} xb^l yb^m tb^n)^2  over
// the window, where (xb, yb, tb) are the window coordinates rescaled to
// [-1, 1] and w = exp(-(xb^2+yb^2+tb^2)/lambda^2). Because the weight
// factorizes over axes and the window is a tensor grid, the Gram matrix of
// the normal equations is a Kronecker product of three per-axis Hankel
// moment matrices; one factorization per (window, grid) pair serves every
// window center.

#include "latpde/core.hpp"
#include "latpde/flow_series.hpp"

#include <Eigen/Dense>

#include <array>
#include <algorithm>
#include <optional>

namespace latpde {

/// Rectangular fit window: physical half-widths, per-axis polynomial orders,
/// and the Gaussian weight width (in rescaled units).
struct WindowSpec {
    double hx = 0.5, hy = 0.5, ht = 8.415;  // half-widths, physical units
    int order_x = 10, order_y = 10, order_t = 10;
    double lambda = 0.5;

    void validate() const {
        if (order_x < 3 || order_y < 3 || order_t < 2)
            throw std::invalid_argument(
                "WindowSpec: orders must satisfy L >= 3, M >= 3, N >= 2");
        if (!(lambda > 0.0)) throw std::invalid_argument("WindowSpec: lambda must be > 0");
        if (!(hx > 0.0) || !(hy > 0.0) || !(ht > 0.0))
            throw std::invalid_argument("WindowSpec: half-widths must be > 0");
    }

    /// Window half-extents in grid points: floor(H/d) per axis.
    std::array<std::size_t, 3> half_points(const GridSpec& g) const {
        return {static_cast<std::size_t>(std::floor(hx / g.dx + 1e-12)),
                static_cast<std::size_t>(std::floor(hy / g.dy + 1e-12)),
                static_cast<std::size_t>(std::floor(ht / g.dt + 1e-12))};
    }

    /// Checks the per-axis point counts 2*floor(H/d)+1 against the orders.
    void validate_against(const GridSpec& g) const {
        validate();
        auto h = half_points(g);
        const char* names[3] = {"x", "y", "t"};
        int orders[3] = {order_x, order_y, order_t};
        for (int a = 0; a < 3; ++a) {
            std::size_t npts = 2 * h[a] + 1;
            if (npts < static_cast<std::size_t>(orders[a]) + 1)
                throw std::invalid_argument(
                    std::string("WindowSpec: window too small for order along ") +
                    names[a] + " (" + std::to_string(npts) + " points, order " +
                    std::to_string(orders[a]) + ")");
        }
    }
};

/// Per-axis weighted moments S(a) = sum_i w_i xb_i^a for a = 0..2*order.
/// Odd moments vanish exactly on the symmetric window; computed pairwise so
/// the zeros are exact in floating point.
struct AxisMoments {
    std::vector<double> s;  // length 2*order+1

    static AxisMoments compute(std::size_t half, double step, double lambda, int order) {
        AxisMoments m;
        m.s.assign(2 * static_cast<std::size_t>(order) + 1, 0.0);
        auto weight = [&](double xb) { return std::exp(-xb * xb / (lambda * lambda)); };
        // center point: xb = 0 contributes w=1 to a=0 only
        m.s[0] = 1.0;
        for (std::size_t i = 1; i <= half; ++i) {
            double xb = static_cast<double>(i) * step;
            double w = weight(xb);
            double pw = 1.0;
            for (std::size_t a = 0; a < m.s.size(); ++a) {
                double neg = (a % 2 == 0) ? pw : -pw;
                m.s[a] += w * (pw + neg);  // pairs (+i, -i); odd powers cancel exactly
                pw *= xb;
            }
        }
        return m;
    }
};

/// moment_tables: per-axis weighted moment vectors (S_x, S_y, S_t). The Gram
/// matrix entry <w xb^{l+q} yb^{m+r} tb^{n+s}> equals
/// S_x(l+q) * S_y(m+r) * S_t(n+s).
inline std::array<AxisMoments, 3> moment_tables(const WindowSpec& w, const GridSpec& g) {
    w.validate_against(g);
    auto h = w.half_points(g);
    // rescaled step per axis: xb_i = i*d/H
    return {AxisMoments::compute(h[0], g.dx / w.hx, w.lambda, w.order_x),
            AxisMoments::compute(h[1], g.dy / w.hy, w.lambda, w.order_y),
            AxisMoments::compute(h[2], g.dt / w.ht, w.lambda, w.order_t)};
}

/// Local polynomial coefficients for both velocity components, in rescaled
/// window coordinates. Layout: coefficient (l, m, n) at l + (L+1)*(m + (M+1)*n).
struct PolyFit {
    int order_x = 0, order_y = 0, order_t = 0;
    std::vector<double> u, v;

    double U(int l, int m, int n) const {
        return u[static_cast<std::size_t>(l) +
                 static_cast<std::size_t>(order_x + 1) *
                     (static_cast<std::size_t>(m) +
                      static_cast<std::size_t>(order_y + 1) * static_cast<std::size_t>(n))];
    }
    double V(int l, int m, int n) const {
        return v[static_cast<std::size_t>(l) +
                 static_cast<std::size_t>(order_x + 1) *
                     (static_cast<std::size_t>(m) +
                      static_cast<std::size_t>(order_y + 1) * static_cast<std::size_t>(n))];
    }
};

/// Partial derivatives of u and v at a window center, physical units.
/// Holds every (a, b, c) with a+b <= 3, c <= 1 plus a+b <= 1, c = 2.
struct JetTable {
    static bool supported(int a, int b, int c) {
        if (a < 0 || b < 0 || c < 0) return false;
        if (c <= 1) return a + b <= 3;
        if (c == 2) return a + b <= 1;
        return false;
    }

    double u(int a, int b, int c) const { return get(du_, a, b, c); }
    double v(int a, int b, int c) const { return get(dv_, a, b, c); }
    void set_u(int a, int b, int c, double val) { at(du_, a, b, c) = val; }
    void set_v(int a, int b, int c, double val) { at(dv_, a, b, c) = val; }

private:
    using Store = std::array<double, 4 * 4 * 3>;
    static double& at(Store& s, int a, int b, int c) { return s[a + 4 * (b + 4 * c)]; }
    static double get(const Store& s, int a, int b, int c) {
        if (!supported(a, b, c))
            throw std::invalid_argument("JetTable: derivative order (" + std::to_string(a) +
                                        "," + std::to_string(b) + "," + std::to_string(c) +
                                        ") not stored");
        return s[a + 4 * (b + 4 * c)];
    }
    Store du_{}, dv_{};
};

namespace detail {

inline double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

/// One axis of the factorized least-squares solve. Builds the Hankel Gram
/// matrix from the weighted moments and exposes the (order+1) x npts operator
/// that maps data values along the axis to polynomial coefficients.
struct AxisSolve {
    Eigen::MatrixXd op;   // (order+1) x npts
    double condition = 0.0;
    bool used_qr = false;

    // The Cholesky route loses ~cond * eps of coefficient accuracy, so the
    // QR fallback engages well before the matrix is anywhere near singular;
    // 1e7 keeps the forward error at high orders below 1e-9.
    static AxisSolve build(std::size_t half, double step, double lambda, int order,
                           const AxisMoments& moments, const char* axis_name,
                           double cond_fallback = 1e7) {
        const std::size_t npts = 2 * half + 1;
        const int nc = order + 1;
        Eigen::VectorXd xb(npts), w(npts);
        for (std::size_t i = 0; i < npts; ++i) {
            double x = (static_cast<double>(i) - static_cast<double>(half)) * step;
            xb[static_cast<Eigen::Index>(i)] = x;
            w[static_cast<Eigen::Index>(i)] = std::exp(-x * x / (lambda * lambda));
        }
        Eigen::MatrixXd V(npts, nc);
        for (std::size_t i = 0; i < npts; ++i) {
            double p = 1.0;
            for (int a = 0; a < nc; ++a) {
                V(static_cast<Eigen::Index>(i), a) = p;
                p *= xb[static_cast<Eigen::Index>(i)];
            }
        }
        Eigen::MatrixXd G(nc, nc);
        for (int l = 0; l < nc; ++l)
            for (int q = 0; q < nc; ++q) G(l, q) = moments.s[static_cast<std::size_t>(l + q)];

        AxisSolve out;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
        const double emin = es.eigenvalues().minCoeff();
        const double emax = es.eigenvalues().maxCoeff();
        out.condition = (emin > 0.0) ? emax / emin : std::numeric_limits<double>::infinity();

        Eigen::MatrixXd Wt = V.transpose() * w.asDiagonal();  // (nc x npts)
        if (emin > 0.0 && out.condition <= cond_fallback) {
            Eigen::LLT<Eigen::MatrixXd> llt(G);
            if (llt.info() == Eigen::Success) {
                out.op = llt.solve(Wt);
                return out;
            }
        }
        // orthogonalization fallback: QR of the sqrt-weighted Vandermonde
        Eigen::MatrixXd A = w.array().sqrt().matrix().asDiagonal() * V;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        if (qr.rank() < nc)
            throw numeric_error(std::string("fit_window: singular Gram matrix along ") +
                                axis_name + " axis (window too small for order)");
        Eigen::MatrixXd Ws = w.array().sqrt().matrix().asDiagonal();
        out.op = qr.solve(Eigen::MatrixXd(Ws));  // maps raw data -> coefficients
        out.used_qr = true;
        return out;
    }
};

} // namespace detail

/// Reusable fit apparatus for one (window, grid) pair. The per-axis Gram
/// factorizations are computed once; per-center work is three small matrix
/// contractions per velocity component. Immutable after construction, so a
/// single instance can serve parallel per-center fits.
class WindowFitter {
public:
    WindowFitter(const WindowSpec& window, const GridSpec& grid)
        : window_(window), grid_(grid) {
        window.validate_against(grid);
        half_ = window.half_points(grid);
        auto m = moment_tables(window, grid);
        ax_ = detail::AxisSolve::build(half_[0], grid.dx / window.hx, window.lambda,
                                       window.order_x, m[0], "x");
        ay_ = detail::AxisSolve::build(half_[1], grid.dy / window.hy, window.lambda,
                                       window.order_y, m[1], "y");
        at_ = detail::AxisSolve::build(half_[2], grid.dt / window.ht, window.lambda,
                                       window.order_t, m[2], "t");
    }

    const WindowSpec& window() const { return window_; }
    const GridSpec& grid() const { return grid_; }
    std::array<std::size_t, 3> half_points() const { return half_; }

    /// Minimum index distance from the grid edges so the window never wraps.
    std::array<std::size_t, 3> margins() const { return half_; }

    bool center_interior(std::size_t ci, std::size_t cj, std::size_t ck) const {
        return ci >= half_[0] && ci + half_[0] < grid_.nx && cj >= half_[1] &&
               cj + half_[1] < grid_.ny && ck >= half_[2] && ck + half_[2] < grid_.nt;
    }

    /// Weighted least-squares fit of both velocity components on the window
    /// centered at grid index (ci, cj, ck). The window must lie fully inside
    /// the grid (windows never wrap periodic boundaries).
    PolyFit fit(const FlowSeries& series, std::size_t ci, std::size_t cj,
                std::size_t ck) const {
        if (!center_interior(ci, cj, ck))
            throw std::invalid_argument(
                "fit_window: window around (" + std::to_string(ci) + "," +
                std::to_string(cj) + "," + std::to_string(ck) + ") leaves the grid");
        PolyFit out;
        out.order_x = window_.order_x;
        out.order_y = window_.order_y;
        out.order_t = window_.order_t;
        out.u = fit_component(series.u, ci, cj, ck);
        out.v = fit_component(series.v, ci, cj, ck);
        return out;
    }

    double worst_condition() const {
        return std::max({ax_.condition, ay_.condition, at_.condition});
    }

private:
    std::vector<double> fit_component(const Field3& f, std::size_t ci, std::size_t cj,
                                      std::size_t ck) const {
        const std::size_t npx = 2 * half_[0] + 1, npy = 2 * half_[1] + 1,
                          npt = 2 * half_[2] + 1;
        const int ncx = window_.order_x + 1, ncy = window_.order_y + 1,
                  nct = window_.order_t + 1;
        // stage 0: copy the window block (x-fastest) into a contiguous buffer
        Eigen::MatrixXd block(npx, npy * npt);
        const std::size_t i0 = ci - half_[0], j0 = cj - half_[1], k0 = ck - half_[2];
        for (std::size_t k = 0; k < npt; ++k)
            for (std::size_t j = 0; j < npy; ++j) {
                const double* src = &f(i0, j0 + j, k0 + k);
                std::memcpy(block.data() + (k * npy + j) * npx, src, npx * sizeof(double));
            }
        // stage 1: contract x -> T1 (ncx x (npy*npt))
        Eigen::MatrixXd t1 = ax_.op * block;
        // stage 2: contract y per time slab -> T2 ((ncx*ncy) x npt)
        Eigen::MatrixXd t2(ncx * ncy, npt);
        for (std::size_t k = 0; k < npt; ++k) {
            Eigen::Map<Eigen::MatrixXd> slab(t1.data() + k * npy * ncx, ncx, npy);
            Eigen::Map<Eigen::MatrixXd> dst(t2.data() + k * ncx * ncy, ncx, ncy);
            dst.noalias() = slab * ay_.op.transpose();
        }
        // stage 3: contract t -> coefficients ((ncx*ncy) x nct)
        Eigen::MatrixXd coef = t2 * at_.op.transpose();
        return std::vector<double>(coef.data(), coef.data() + coef.size());
    }

    WindowSpec window_;
    GridSpec grid_;
    std::array<std::size_t, 3> half_;
    detail::AxisSolve ax_, ay_, at_;
};

/// Convenience single-center fit; builds the factorization afresh. Prefer a
/// shared WindowFitter when fitting many centers on the same grid.
inline PolyFit fit_window(const FlowSeries& series, std::size_t ci, std::size_t cj,
                          std::size_t ck, const WindowSpec& window) {
    WindowFitter fitter(window, series.grid);
    return fitter.fit(series, ci, cj, ck);
}

/// Converts fit coefficients to physical derivatives at the window center:
/// only the monomial (a, b, c) survives at the origin, so
/// D^{(a,b,c)} = a! b! c! * coeff / (Hx^a Hy^b Ht^c).
inline JetTable jet_at_center(const PolyFit& fit, const WindowSpec& window) {
    if (fit.order_x < 3 || fit.order_y < 3 || fit.order_t < 2)
        throw std::invalid_argument("jet_at_center: fit orders below (3, 3, 2)");
    JetTable jet;
    for (int c = 0; c <= 2; ++c)
        for (int b = 0; b <= 3; ++b)
            for (int a = 0; a + b <= 3; ++a) {
                if (!JetTable::supported(a, b, c)) continue;
                const double scale = detail::factorial(a) * detail::factorial(b) *
                                     detail::factorial(c) /
                                     (std::pow(window.hx, a) * std::pow(window.hy, b) *
                                      std::pow(window.ht, c));
                jet.set_u(a, b, c, scale * fit.U(a, b, c));
                jet.set_v(a, b, c, scale * fit.V(a, b, c));
            }
    return jet;
}

} // namespace latpde
