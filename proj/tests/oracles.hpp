#pragma once

// Test-only oracles, independent of the library's own evaluation paths:
//  - Poly3: exact trivariate polynomials with symbolic differentiation
//  - nested central finite differences for the curl-of-time-derivative of
//    candidate terms, evaluated straight from pointwise field samples
//  - the manufactured exact solution of the velocity model used by the
//    identity tests (u = e^{ry} h(t), v = e^{my} g(t) with parameter ties
//    that make the x-momentum equation close with a static forcing)

#include "latpde/core.hpp"
#include "latpde/flow_series.hpp"
#include "latpde/local_poly.hpp"

#include <array>
#include <functional>
#include <map>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------------------
// Trivariate polynomials: exact evaluation and differentiation.
// ---------------------------------------------------------------------------
struct Poly3 {
    // exponents (a, b, c) -> coefficient
    std::map<std::array<int, 3>, double> terms;

    double eval(double x, double y, double t) const {
        double s = 0.0;
        for (const auto& [e, c] : terms)
            s += c * std::pow(x, e[0]) * std::pow(y, e[1]) * std::pow(t, e[2]);
        return s;
    }

    Poly3 diff(int axis) const {
        Poly3 out;
        for (const auto& [e, c] : terms) {
            if (e[axis] == 0) continue;
            auto ne = e;
            ne[axis] -= 1;
            out.terms[ne] += c * e[axis];
        }
        return out;
    }

    Poly3 diff(int a, int b, int c) const {
        Poly3 p = *this;
        for (int i = 0; i < a; ++i) p = p.diff(0);
        for (int i = 0; i < b; ++i) p = p.diff(1);
        for (int i = 0; i < c; ++i) p = p.diff(2);
        return p;
    }

    friend Poly3 operator*(const Poly3& a, const Poly3& b) {
        Poly3 out;
        for (const auto& [ea, ca] : a.terms)
            for (const auto& [eb, cb] : b.terms)
                out.terms[{ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]}] += ca * cb;
        return out;
    }
    friend Poly3 operator+(const Poly3& a, const Poly3& b) {
        Poly3 out = a;
        for (const auto& [e, c] : b.terms) out.terms[e] += c;
        return out;
    }
    friend Poly3 operator-(const Poly3& a, const Poly3& b) {
        Poly3 out = a;
        for (const auto& [e, c] : b.terms) out.terms[e] -= c;
        return out;
    }
};

/// Symbolic elimination-operator images of all eight candidate terms for a
/// polynomial field: exact polynomial algebra end to end.
inline std::array<Poly3, 8> symbolic_row(const Poly3& u, const Poly3& v) {
    const Poly3 ux = u.diff(0), uy = u.diff(1), ut = u.diff(2);
    const Poly3 vx = v.diff(0), vy = v.diff(1), vt = v.diff(2);
    const Poly3 d = ux + vy;
    const Poly3 w = vx - uy;
    const Poly3 s = u * u + v * v;
    const std::array<std::pair<Poly3, Poly3>, 8> terms = {{
        {ut, vt},
        {u * ux + v * uy, u * vx + v * vy},
        {u.diff(2, 0, 0) + u.diff(0, 2, 0), v.diff(2, 0, 0) + v.diff(0, 2, 0)},
        {u, v},
        {d * u, d * v},
        {d * d * u, d * d * v},
        {w * w * u, w * w * v},
        {s * u, s * v},
    }};
    std::array<Poly3, 8> out;
    for (int i = 0; i < 8; ++i)
        out[i] = (terms[i].second.diff(0) - terms[i].first.diff(1)).diff(2);
    return out;
}

/// Exact JetTable of a polynomial pair at a point.
inline latpde::JetTable exact_jet(const Poly3& u, const Poly3& v, double x, double y,
                                  double t) {
    latpde::JetTable jet;
    for (int c = 0; c <= 2; ++c)
        for (int b = 0; b <= 3; ++b)
            for (int a = 0; a + b <= 3; ++a) {
                if (!latpde::JetTable::supported(a, b, c)) continue;
                jet.set_u(a, b, c, u.diff(a, b, c).eval(x, y, t));
                jet.set_v(a, b, c, v.diff(a, b, c).eval(x, y, t));
            }
    return jet;
}

// ---------------------------------------------------------------------------
// Nested finite differences. 5-point central stencils; exact for polynomials
// of degree <= 4 per direction, O(h^4) otherwise.
// ---------------------------------------------------------------------------
inline double fd1(const std::function<double(double)>& f, double x, double h) {
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

using Field = std::function<double(double, double, double)>;

/// z . curl of a vector field, by finite differences.
inline double fd_curl(const Field& wx, const Field& wy, double x, double y, double t,
                      double h) {
    double dwy_dx = fd1([&](double s) { return wy(s, y, t); }, x, h);
    double dwx_dy = fd1([&](double s) { return wx(x, s, t); }, y, h);
    return dwy_dx - dwx_dy;
}

/// d/dt of z.curl(w) -- the elimination operator applied to one term.
inline double fd_curl_dt(const Field& wx, const Field& wy, double x, double y, double t,
                         double h) {
    return fd1([&](double s) { return fd_curl(wx, wy, x, y, s, h); }, t, h);
}

/// All eight elimination-operator images (q0 plus the seven candidate terms)
/// evaluated from pointwise samples of (u, v) alone.
inline std::array<double, 8> fd_row(const Field& u, const Field& v, double x, double y,
                                    double t, double h) {
    auto ux = [&](double a, double b, double c) {
        return fd1([&](double s) { return u(s, b, c); }, a, h);
    };
    auto uy = [&](double a, double b, double c) {
        return fd1([&](double s) { return u(a, s, c); }, b, h);
    };
    auto vx = [&](double a, double b, double c) {
        return fd1([&](double s) { return v(s, b, c); }, a, h);
    };
    auto vy = [&](double a, double b, double c) {
        return fd1([&](double s) { return v(a, s, c); }, b, h);
    };
    auto ut = [&](double a, double b, double c) {
        return fd1([&](double s) { return u(a, b, s); }, c, h);
    };
    auto vt = [&](double a, double b, double c) {
        return fd1([&](double s) { return v(a, b, s); }, c, h);
    };
    auto lap_u = [&](double a, double b, double c) {
        auto uxx = fd1([&](double s) { return ux(s, b, c); }, a, h);
        auto uyy = fd1([&](double s) { return uy(a, s, c); }, b, h);
        return uxx + uyy;
    };
    auto lap_v = [&](double a, double b, double c) {
        auto vxx = fd1([&](double s) { return vx(s, b, c); }, a, h);
        auto vyy = fd1([&](double s) { return vy(a, s, c); }, b, h);
        return vxx + vyy;
    };
    auto div = [&](double a, double b, double c) { return ux(a, b, c) + vy(a, b, c); };
    auto curl = [&](double a, double b, double c) { return vx(a, b, c) - uy(a, b, c); };
    auto speed2 = [&](double a, double b, double c) {
        double uu = u(a, b, c), vv = v(a, b, c);
        return uu * uu + vv * vv;
    };

    std::array<std::pair<Field, Field>, 8> terms = {{
        {[&](double a, double b, double c) { return ut(a, b, c); },
         [&](double a, double b, double c) { return vt(a, b, c); }},
        {[&](double a, double b, double c) {
             return u(a, b, c) * ux(a, b, c) + v(a, b, c) * uy(a, b, c);
         },
         [&](double a, double b, double c) {
             return u(a, b, c) * vx(a, b, c) + v(a, b, c) * vy(a, b, c);
         }},
        {lap_u, lap_v},
        {u, v},
        {[&](double a, double b, double c) { return div(a, b, c) * u(a, b, c); },
         [&](double a, double b, double c) { return div(a, b, c) * v(a, b, c); }},
        {[&](double a, double b, double c) {
             double d = div(a, b, c);
             return d * d * u(a, b, c);
         },
         [&](double a, double b, double c) {
             double d = div(a, b, c);
             return d * d * v(a, b, c);
         }},
        {[&](double a, double b, double c) {
             double w = curl(a, b, c);
             return w * w * u(a, b, c);
         },
         [&](double a, double b, double c) {
             double w = curl(a, b, c);
             return w * w * v(a, b, c);
         }},
        {[&](double a, double b, double c) { return speed2(a, b, c) * u(a, b, c); },
         [&](double a, double b, double c) { return speed2(a, b, c) * v(a, b, c); }},
    }};

    std::array<double, 8> out;
    for (int i = 0; i < 8; ++i)
        out[i] = fd_curl_dt(terms[i].first, terms[i].second, x, y, t, h);
    return out;
}

// ---------------------------------------------------------------------------
// Manufactured exact solution of the full velocity model:
//   u = e^{r y} h(t),  v = e^{m y} g(t)
// with c1 r + c4 m = 0, c7 = -c5 m^2, c6 = -c7 / r^2 and
// h' = (c2 r^2 + c3) h + beta. The x-momentum equation then closes with the
// static forcing f = (beta e^{r y} / c9, 0) and a y-only pressure
//   p = [ (g' - (c2 m^2 + c3) g) e^{m y} / m - (c1 + c4) g^2 e^{2 m y} / 2 ] / c8.
// All eight elimination-operator columns are nonzero on this data and the
// identity q0 = sum_i c_i q_i holds exactly.
// ---------------------------------------------------------------------------
struct Manufactured {
    double m = 1.0;
    double c1 = -0.8, c4 = 0.2;
    double r = -c4 * m / c1;  // 0.25
    double c5 = 0.3;
    double c7 = -c5 * m * m;
    double c6 = -c7 / (r * r);
    double c2 = 0.05, c3 = -0.4;
    double c8 = -1.0, c9 = 1.0;
    double beta = 0.7;
    double mu = c2 * r * r + c3;
    double h0 = 1.5;
    double omega = 0.9;

    std::array<double, 7> coeffs() const { return {c1, c2, c3, c4, c5, c6, c7}; }

    double h(double t) const { return (h0 + beta / mu) * std::exp(mu * t) - beta / mu; }
    double hdot(double t) const { return mu * (h0 + beta / mu) * std::exp(mu * t); }
    double g(double t) const { return 2.0 + std::sin(omega * t); }
    double gdot(double t) const { return omega * std::cos(omega * t); }

    double u(double, double y, double t) const { return std::exp(r * y) * h(t); }
    double v(double, double y, double t) const { return std::exp(m * y) * g(t); }

    // pair 1: y-only pressure, x-directed static forcing
    double p1(double, double y, double t) const {
        return ((gdot(t) - (c2 * m * m + c3) * g(t)) * std::exp(m * y) / m -
                (c1 + c4) * g(t) * g(t) * std::exp(2.0 * m * y) / 2.0) /
               c8;
    }
    double f1x(double, double y) const { return beta * std::exp(r * y) / c9; }
    double f1y(double, double) const { return 0.0; }

    // pair 2: shifts a static potential from the forcing into the pressure
    static double phi(double x, double y) {
        return 0.37 * std::sin(1.3 * x) * std::cos(0.7 * y);
    }
    double p2(double x, double y, double t) const { return p1(x, y, t) + phi(x, y); }
    double f2x(double x, double y) const {
        double phix = 0.37 * 1.3 * std::cos(1.3 * x) * std::cos(0.7 * y);
        return f1x(x, y) - (c8 / c9) * phix;
    }
    double f2y(double x, double y) const {
        double phiy = -0.37 * 0.7 * std::sin(1.3 * x) * std::sin(0.7 * y);
        return f1y(x, y) - (c8 / c9) * phiy;
    }

    /// Pointwise residual of the velocity equation for one (p, f) pair,
    /// evaluated by finite differences from the closed forms.
    std::array<double, 2> model_residual(double x, double y, double t, int pair,
                                         double h_fd = 1e-3) const {
        auto uf = [&](double a, double b, double c) { return u(a, b, c); };
        auto vf = [&](double a, double b, double c) { return v(a, b, c); };
        auto pf = [&](double a, double b, double c) {
            return pair == 1 ? p1(a, b, c) : p2(a, b, c);
        };
        auto fx = [&](double a, double b) { return pair == 1 ? f1x(a, b) : f2x(a, b); };
        auto fy = [&](double a, double b) { return pair == 1 ? f1y(a, b) : f2y(a, b); };

        auto dx = [&](auto f, double a, double b, double c) {
            return fd1([&](double s) { return f(s, b, c); }, a, h_fd);
        };
        auto dy = [&](auto f, double a, double b, double c) {
            return fd1([&](double s) { return f(a, s, c); }, b, h_fd);
        };
        auto dt = [&](auto f, double a, double b, double c) {
            return fd1([&](double s) { return f(a, b, s); }, c, h_fd);
        };
        double uu = u(x, y, t), vv = v(x, y, t);
        double ux = dx(uf, x, y, t), uy = dy(uf, x, y, t);
        double vx = dx(vf, x, y, t), vy = dy(vf, x, y, t);
        double uxx = fd1([&](double s) { return dx(uf, s, y, t); }, x, h_fd);
        double uyy = fd1([&](double s) { return dy(uf, x, s, t); }, y, h_fd);
        double vxx = fd1([&](double s) { return dx(vf, s, y, t); }, x, h_fd);
        double vyy = fd1([&](double s) { return dy(vf, x, s, t); }, y, h_fd);
        double d = ux + vy, w = vx - uy, s2 = uu * uu + vv * vv;
        double rx = dt(uf, x, y, t) -
                    (c1 * (uu * ux + vv * uy) + c2 * (uxx + uyy) + c3 * uu + c4 * d * uu +
                     c5 * d * d * uu + c6 * w * w * uu + c7 * s2 * uu +
                     c8 * dx(pf, x, y, t) + c9 * fx(x, y));
        double ry = dt(vf, x, y, t) -
                    (c1 * (uu * vx + vv * vy) + c2 * (vxx + vyy) + c3 * vv + c4 * d * vv +
                     c5 * d * d * vv + c6 * w * w * vv + c7 * s2 * vv +
                     c8 * dy(pf, x, y, t) + c9 * fy(x, y));
        return {rx, ry};
    }

    /// Samples (u, v) onto a grid.
    latpde::FlowSeries sample(const latpde::GridSpec& grid) const {
        latpde::FlowSeries s;
        s.grid = grid;
        s.u = latpde::Field3(grid.nx, grid.ny, grid.nt);
        s.v = latpde::Field3(grid.nx, grid.ny, grid.nt);
        for (std::size_t k = 0; k < grid.nt; ++k)
            for (std::size_t j = 0; j < grid.ny; ++j)
                for (std::size_t i = 0; i < grid.nx; ++i) {
                    double x = i * grid.dx, y = j * grid.dy, t = k * grid.dt;
                    s.u(i, j, k) = u(x, y, t);
                    s.v(i, j, k) = v(x, y, t);
                }
        return s;
    }
};

} // namespace oracle
