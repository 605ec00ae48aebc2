#pragma once

// Pseudo-spectral solver for the nine-term velocity model with artificial
// compressibility on a doubly periodic rectangle:
//
//   d/dt u = c1 (u.grad)u + c2 lap u + c3 u + c4 (div u) u + c5 (div u)^2 u
//          + c6 (curl u)^2 u + c7 |u|^2 u + c8 grad p + c9 f
//   d/dt p = -kappa div u
//
// driven by a steady Kolmogorov forcing f = (amp sin(pi y / chi), 0).
//
// Operator splitting: the linear subsystem (c2 lap, c3, c8 grad p,
// -kappa div, c9 f) is advanced implicitly per wavenumber with a
// theta-weighted trapezoidal rule; the nonlinear terms are advanced with
// 2nd-order Adams-Bashforth (forward Euler on the first step) and evaluated
// pseudo-spectrally with 2/3-rule dealiasing. theta = 1/2 is the trapezoidal
// rule but leaves the fast pressure waves undamped, which the explicit
// nonlinear coupling destabilizes at the default time step; the default
// theta = 0.55 adds just enough damping at the unresolved frequencies.

#include "latpde/core.hpp"
#include "latpde/flow_series.hpp"

#include <fftw3.h>

#include <complex>
#include <memory>

namespace latpde {

/// Model coefficients. c8 and c9 are fixed by the scaling freedom of the
/// latent fields (|c8| = 1, c9 = 1 for reference data).
struct ModelParams {
    double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0, c5 = 0.0, c6 = 0.0, c7 = 0.0;
    double c8 = -1.0;
    double c9 = 1.0;
    double kappa = 2015.0;

    std::array<double, 7> library_coeffs() const { return {c1, c2, c3, c4, c5, c6, c7}; }

    void validate() const {
        for (double c : {c1, c2, c3, c4, c5, c6, c7, c8, c9, kappa})
            if (!std::isfinite(c)) throw std::invalid_argument("ModelParams: non-finite");
        if (!(kappa > 0.0)) throw std::invalid_argument("ModelParams: kappa must be > 0");
    }
};

/// The parameter set the surrogate data is generated with (nearly
/// incompressible weakly turbulent regime).
inline ModelParams paper_params() {
    ModelParams p;
    p.c1 = -0.826;
    p.c2 = 0.0487;
    p.c3 = -0.157;
    p.c4 = 0.164;
    p.c5 = p.c6 = p.c7 = 0.0;
    p.c8 = -1.0;
    p.c9 = 1.0;
    p.kappa = 2015.0;
    return p;
}

/// Same model with kappa = 1 to amplify compressibility effects.
inline ModelParams kappa1_params() {
    ModelParams p = paper_params();
    p.kappa = 1.0;
    return p;
}

struct SimConfig {
    double chi = 1.0;          // forcing half-period
    double amp = 1.0649;       // forcing amplitude
    double lx = 16.0, ly = 16.0;
    std::size_t nxc = 640, nyc = 640;
    double dtc = 0.02;
    double spinup_time = 200.0;
    std::size_t n_snapshots = 600;
    std::size_t store_stride = 25;
    std::uint64_t seed = 1;
    // artifact knobs
    double theta = 0.55;       // implicit weight for the linear subsystem
    double perturb_rel = 1e-2; // initial perturbation amplitude, relative
    std::size_t store_nx = 0, store_ny = 0;  // stored spatial crop; 0 = full grid

    double dxc() const { return lx / static_cast<double>(nxc); }
    double dyc() const { return ly / static_cast<double>(nyc); }

    void validate() const {
        if (nxc < 4 || nyc < 4) throw std::invalid_argument("SimConfig: grid too small");
        if (!(chi > 0.0)) throw std::invalid_argument("SimConfig: chi must be > 0");
        if (!(dtc > 0.0)) throw std::invalid_argument("SimConfig: dtc must be > 0");
        if (!(lx > 0.0) || !(ly > 0.0))
            throw std::invalid_argument("SimConfig: domain extents must be > 0");
        if (std::abs(dxc() - dyc()) > 1e-12 * dxc())
            throw std::invalid_argument("SimConfig: cells must be square (lx/nxc = ly/nyc)");
        const double periods = ly / (2.0 * chi);
        if (std::abs(periods - std::round(periods)) > 1e-9)
            throw std::invalid_argument(
                "SimConfig: ly must be an integer multiple of the forcing period 2*chi");
        if (n_snapshots < 1 || store_stride < 1)
            throw std::invalid_argument("SimConfig: need n_snapshots, store_stride >= 1");
        if (store_nx > nxc || store_ny > nyc)
            throw std::invalid_argument("SimConfig: stored crop exceeds grid");
        if (!(theta >= 0.5 && theta <= 1.0))
            throw std::invalid_argument("SimConfig: theta must lie in [0.5, 1]");
    }
};

/// Steady forcing field on the computational grid: f = (amp sin(pi y / chi), 0).
struct ForcingField {
    std::size_t nx, ny;
    std::vector<double> fx, fy;
};

inline ForcingField forcing_field(const SimConfig& config) {
    config.validate();
    ForcingField f;
    f.nx = config.nxc;
    f.ny = config.nyc;
    f.fx.assign(f.nx * f.ny, 0.0);
    f.fy.assign(f.nx * f.ny, 0.0);
    for (std::size_t j = 0; j < f.ny; ++j) {
        const double y = static_cast<double>(j) * config.dyc();
        const double val = config.amp * std::sin(M_PI * y / config.chi);
        for (std::size_t i = 0; i < f.nx; ++i) f.fx[i + f.nx * j] = val;
    }
    return f;
}

/// Laminar balance velocity: 0 = c2 lap u + c3 u + f for u = U sin(pi y/chi).
inline double laminar_velocity(const ModelParams& p, const SimConfig& c) {
    return c.amp / (p.c2 * M_PI * M_PI / (c.chi * c.chi) - p.c3);
}

namespace detail {

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};
template <class T>
using fftw_buffer = std::unique_ptr<T[], FftwDeleter>;

template <class T>
fftw_buffer<T> fftw_alloc_buffer(std::size_t n) {
    return fftw_buffer<T>(static_cast<T*>(fftw_malloc(n * sizeof(T))));
}

} // namespace detail

struct SimulationResult {
    FlowSeries series;
    double max_abs_divergence = 0.0;  // over post-spinup stored snapshots
};

/// Time stepper. Owns the spectral state exclusively; snapshots are copied
/// out. The time loop is sequential.
class KolmogorovSolver {
public:
    using cplx = std::complex<double>;

    KolmogorovSolver(const ModelParams& params, const SimConfig& config)
        : p_(params), cfg_(config), nx_(config.nxc), ny_(config.nyc),
          nxh_(config.nxc / 2 + 1), nmodes_(nxh_ * config.nyc) {
        params.validate();
        config.validate();
        alloc();
        build_operators();
        plan();
        // start from rest
        std::fill(uh_.get(), uh_.get() + nmodes_, cplx(0.0));
        std::fill(vh_.get(), vh_.get() + nmodes_, cplx(0.0));
        std::fill(ph_.get(), ph_.get() + nmodes_, cplx(0.0));
    }

    ~KolmogorovSolver() {
        fftw_destroy_plan(plan_r2c_);
        fftw_destroy_plan(plan_c2r_);
    }

    KolmogorovSolver(const KolmogorovSolver&) = delete;
    KolmogorovSolver& operator=(const KolmogorovSolver&) = delete;

    const ModelParams& params() const { return p_; }
    const SimConfig& config() const { return cfg_; }
    double time() const { return time_; }
    std::size_t step_index() const { return step_; }

    /// Overwrites the state with physical-space fields (sizes nxc x nyc,
    /// x-fastest). Resets the multistep history.
    void set_state(const std::vector<double>& u, const std::vector<double>& v,
                   const std::vector<double>& p) {
        if (u.size() != nx_ * ny_ || v.size() != nx_ * ny_ || p.size() != nx_ * ny_)
            throw std::invalid_argument("set_state: wrong field size");
        forward(u.data(), uh_.get());
        forward(v.data(), vh_.get());
        forward(p.data(), ph_.get());
        dealias(uh_.get());
        dealias(vh_.get());
        dealias(ph_.get());
        ph_[0] = 0.0;
        have_prev_ = false;
    }

    /// Laminar profile plus a small divergence-free random perturbation from
    /// a low-mode streamfunction; p = 0.
    void init_laminar_perturbed() {
        const double u0 = laminar_velocity(p_, cfg_);
        std::vector<double> u(nx_ * ny_), v(nx_ * ny_, 0.0), p(nx_ * ny_, 0.0);
        for (std::size_t j = 0; j < ny_; ++j) {
            const double val = u0 * std::sin(M_PI * static_cast<double>(j) * cfg_.dyc() / cfg_.chi);
            for (std::size_t i = 0; i < nx_; ++i) u[i + nx_ * j] = val;
        }
        if (cfg_.perturb_rel > 0.0) {
            auto [pu, pv] = perturbation();
            double pmax = 0.0;
            for (std::size_t n = 0; n < pu.size(); ++n)
                pmax = std::max({pmax, std::abs(pu[n]), std::abs(pv[n])});
            const double scale = cfg_.perturb_rel * std::abs(u0) / pmax;
            for (std::size_t n = 0; n < pu.size(); ++n) {
                u[n] += scale * pu[n];
                v[n] += scale * pv[n];
            }
        }
        set_state(u, v, p);
    }

    /// Advances one time step. The first step after (re)initialization uses
    /// forward Euler for the nonlinear part.
    void step() {
        nonlinear_term();
        // Adams-Bashforth combination (written into nxh_/nyh_ in place)
        if (have_prev_) {
            for (std::size_t n = 0; n < nmodes_; ++n) {
                cplx nu = 1.5 * nxt_[n] - 0.5 * nxp_[n];
                cplx nv = 1.5 * nyt_[n] - 0.5 * nyp_[n];
                nxp_[n] = nxt_[n];
                nyp_[n] = nyt_[n];
                nxt_[n] = nu;
                nyt_[n] = nv;
            }
        } else {
            std::copy(nxt_.get(), nxt_.get() + nmodes_, nxp_.get());
            std::copy(nyt_.get(), nyt_.get() + nmodes_, nyp_.get());
            have_prev_ = true;
        }
        const double dt = cfg_.dtc;
        for (std::size_t n = 0; n < nmodes_; ++n) {
            const cplx ru = dt * (nxt_[n] + p_.c9 * fxh_[n]);
            const cplx rv = dt * (nyt_[n] + p_.c9 * fyh_[n]);
            const cplx* P = &prop_[9 * n];
            const cplx* R = &rhs_[9 * n];
            const cplx u = uh_[n], v = vh_[n], q = ph_[n];
            uh_[n] = P[0] * u + P[1] * v + P[2] * q + R[0] * ru + R[1] * rv;
            vh_[n] = P[3] * u + P[4] * v + P[5] * q + R[3] * ru + R[4] * rv;
            ph_[n] = P[6] * u + P[7] * v + P[8] * q + R[6] * ru + R[7] * rv;
        }
        ph_[0] = 0.0;  // pressure defined up to a constant; pin its mean
        time_ += dt;
        ++step_;
        if (!std::isfinite(uh_[0].real()) || !std::isfinite(ph_[1].real()) ||
            (step_ % 100 == 0 && !state_finite()))
            throw numeric_error("kolmogorov: solution blew up at step " +
                                std::to_string(step_));
    }

    /// Physical-space views of the current state.
    std::vector<double> u_physical() const { return to_physical(uh_.get()); }
    std::vector<double> v_physical() const { return to_physical(vh_.get()); }
    std::vector<double> p_physical() const { return to_physical(ph_.get()); }

    /// max |div u| of the current state.
    double max_divergence() const {
        for (std::size_t n = 0; n < nmodes_; ++n)
            scr1_[n] = cplx(0.0, 1.0) * (kx_[n] * uh_[n] + ky_[n] * vh_[n]);
        auto d = to_physical(scr1_.get());
        double m = 0.0;
        for (double x : d) m = std::max(m, std::abs(x));
        return m;
    }

    /// Volume-averaged kinetic plus pressure energy (the quantity the linear
    /// terms dissipate).
    double total_energy() const {
        auto u = u_physical();
        auto v = v_physical();
        auto p = p_physical();
        double e = 0.0;
        for (std::size_t n = 0; n < u.size(); ++n)
            e += 0.5 * (u[n] * u[n] + v[n] * v[n]) + p[n] * p[n] / (2.0 * p_.kappa);
        return e / static_cast<double>(u.size());
    }

    double kinetic_energy() const {
        auto u = u_physical();
        auto v = v_physical();
        double e = 0.0;
        for (std::size_t n = 0; n < u.size(); ++n)
            e += 0.5 * (u[n] * u[n] + v[n] * v[n]);
        return e / static_cast<double>(u.size());
    }

private:
    /// Divergence-free random field u' = (d/dy psi, -d/dx psi) from a
    /// low-mode streamfunction with seeded Gaussian amplitudes.
    std::pair<std::vector<double>, std::vector<double>> perturbation() const {
        GaussianStream gs(cfg_.seed);
        std::vector<cplx> psih(nmodes_, cplx(0.0));
        const std::size_t kp = 5;  // perturbed mode range per axis
        for (std::size_t i = 0; i <= std::min(kp, nxh_ - 1); ++i) {
            for (std::size_t jm = 0; jm <= std::min(kp, ny_ / 2 - 1); ++jm) {
                for (int sign = 0; sign < 2; ++sign) {
                    if (jm == 0 && sign == 1) continue;
                    if (i == 0 && jm == 0) continue;
                    const std::size_t j = sign ? ny_ - jm : jm;
                    const cplx amp(gs.next(), gs.next());
                    if (i == 0) {
                        // kx = 0 column must stay Hermitian for a real field
                        if (sign == 0) {
                            psih[i + nxh_ * j] = amp;
                            if (jm > 0) psih[i + nxh_ * (ny_ - jm)] = std::conj(amp);
                        }
                    } else {
                        psih[i + nxh_ * j] = amp;
                    }
                }
            }
        }
        std::vector<double> pu(nx_ * ny_), pv(nx_ * ny_);
        for (std::size_t n = 0; n < nmodes_; ++n) scr1_[n] = cplx(0.0, 1.0) * ky_[n] * psih[n];
        inverse(scr1_.get(), pu.data());
        for (std::size_t n = 0; n < nmodes_; ++n) scr1_[n] = cplx(0.0, -1.0) * kx_[n] * psih[n];
        inverse(scr1_.get(), pv.data());
        return {std::move(pu), std::move(pv)};
    }

    void alloc() {
        uh_ = detail::fftw_alloc_buffer<cplx>(nmodes_);
        vh_ = detail::fftw_alloc_buffer<cplx>(nmodes_);
        ph_ = detail::fftw_alloc_buffer<cplx>(nmodes_);
        nxt_ = detail::fftw_alloc_buffer<cplx>(nmodes_);
        nyt_ = detail::fftw_alloc_buffer<cplx>(nmodes_);
        nxp_ = detail::fftw_alloc_buffer<cplx>(nmodes_);
        nyp_ = detail::fftw_alloc_buffer<cplx>(nmodes_);
        fxh_ = detail::fftw_alloc_buffer<cplx>(nmodes_);
        fyh_ = detail::fftw_alloc_buffer<cplx>(nmodes_);
        scr1_ = detail::fftw_alloc_buffer<cplx>(nmodes_);
        scrr_ = detail::fftw_alloc_buffer<double>(nx_ * ny_);
        scrc_ = detail::fftw_alloc_buffer<cplx>(nmodes_);
        for (auto* b : {&pu_, &pv_, &pux_, &puy_, &pvx_, &pvy_})
            *b = detail::fftw_alloc_buffer<double>(nx_ * ny_);
        kx_.resize(nmodes_);
        ky_.resize(nmodes_);
        keep_.resize(nmodes_);
        prop_.resize(9 * nmodes_);
        rhs_.resize(9 * nmodes_);
    }

    void plan() {
        plan_r2c_ = fftw_plan_dft_r2c_2d(static_cast<int>(ny_), static_cast<int>(nx_),
                                         scrr_.get(),
                                         reinterpret_cast<fftw_complex*>(scrc_.get()),
                                         FFTW_ESTIMATE);
        plan_c2r_ = fftw_plan_dft_c2r_2d(static_cast<int>(ny_), static_cast<int>(nx_),
                                         reinterpret_cast<fftw_complex*>(scrc_.get()),
                                         scrr_.get(), FFTW_ESTIMATE);
        if (!plan_r2c_ || !plan_c2r_) throw numeric_error("kolmogorov: FFTW planning failed");
        // forcing spectrum
        ForcingField f = forcing_field(cfg_);
        forward(f.fx.data(), fxh_.get());
        forward(f.fy.data(), fyh_.get());
    }

    void build_operators() {
        const double theta = cfg_.theta;
        const double dt = cfg_.dtc;
        const std::size_t kcx = nx_ / 3, kcy = ny_ / 3;
        for (std::size_t j = 0; j < ny_; ++j) {
            const double kyv = 2.0 * M_PI *
                               (j <= ny_ / 2 ? static_cast<double>(j)
                                             : static_cast<double>(j) - static_cast<double>(ny_)) /
                               cfg_.ly;
            const std::size_t jmode = std::min(j, ny_ - j);
            for (std::size_t i = 0; i < nxh_; ++i) {
                const double kxv = 2.0 * M_PI * static_cast<double>(i) / cfg_.lx;
                const std::size_t n = i + nxh_ * j;
                kx_[n] = kxv;
                ky_[n] = kyv;
                keep_[n] = (i <= kcx && jmode <= kcy) ? 1.0 : 0.0;
                const double k2 = kxv * kxv + kyv * kyv;
                const double a = -p_.c2 * k2 + p_.c3;
                const cplx I(0.0, 1.0);
                // A = [[a, 0, i kx c8], [0, a, i ky c8], [-i K kx, -i K ky, 0]]
                cplx A[9] = {cplx(a), 0.0, I * kxv * p_.c8,
                             0.0, cplx(a), I * kyv * p_.c8,
                             -I * p_.kappa * kxv, -I * p_.kappa * kyv, 0.0};
                cplx M[9], B[9];
                // M = inv(I3 - theta dt A)
                cplx S[9];
                for (int e = 0; e < 9; ++e) S[e] = -theta * dt * A[e];
                S[0] += 1.0;
                S[4] += 1.0;
                S[8] += 1.0;
                invert3(S, M);
                // B = I3 + (1-theta) dt A
                for (int e = 0; e < 9; ++e) B[e] = (1.0 - theta) * dt * A[e];
                B[0] += 1.0;
                B[4] += 1.0;
                B[8] += 1.0;
                // prop = M*B, rhs = M
                matmul3(M, B, &prop_[9 * n]);
                std::copy(M, M + 9, &rhs_[9 * n]);
            }
        }
    }

    static void invert3(const cplx* m, cplx* out) {
        const cplx a = m[0], b = m[1], c = m[2], d = m[3], e = m[4], f = m[5], g = m[6],
                   h = m[7], i = m[8];
        const cplx A = e * i - f * h, B = -(d * i - f * g), C = d * h - e * g;
        const cplx det = a * A + b * B + c * C;
        const cplx D = -(b * i - c * h), E = a * i - c * g, F = -(a * h - b * g);
        const cplx G = b * f - c * e, H = -(a * f - c * d), I2 = a * e - b * d;
        out[0] = A / det;
        out[1] = D / det;
        out[2] = G / det;
        out[3] = B / det;
        out[4] = E / det;
        out[5] = H / det;
        out[6] = C / det;
        out[7] = F / det;
        out[8] = I2 / det;
    }

    static void matmul3(const cplx* a, const cplx* b, cplx* out) {
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                out[3 * r + c] =
                    a[3 * r] * b[c] + a[3 * r + 1] * b[3 + c] + a[3 * r + 2] * b[6 + c];
    }

    void forward(const double* phys, cplx* spec) const {
        std::copy(phys, phys + nx_ * ny_, scrr_.get());
        fftw_execute(plan_r2c_);
        const double inv = 1.0 / (static_cast<double>(nx_) * static_cast<double>(ny_));
        for (std::size_t n = 0; n < nmodes_; ++n) spec[n] = scrc_[n] * inv;
    }

    void inverse(const cplx* spec, double* phys) const {
        std::copy(spec, spec + nmodes_, scrc_.get());
        fftw_execute(plan_c2r_);
        std::copy(scrr_.get(), scrr_.get() + nx_ * ny_, phys);
    }

    std::vector<double> to_physical(const cplx* spec) const {
        std::vector<double> out(nx_ * ny_);
        inverse(spec, out.data());
        return out;
    }

    void dealias(cplx* spec) const {
        for (std::size_t n = 0; n < nmodes_; ++n) spec[n] *= keep_[n];
    }

    bool state_finite() const {
        for (std::size_t n = 0; n < nmodes_; ++n)
            if (!std::isfinite(uh_[n].real()) || !std::isfinite(vh_[n].real()) ||
                !std::isfinite(ph_[n].real()))
                return false;
        return true;
    }

    /// Nonlinear tendency in spectral space (dealiased), written to nxt_/nyt_.
    void nonlinear_term() {
        const cplx I(0.0, 1.0);
        inverse(uh_.get(), pu_.get());
        inverse(vh_.get(), pv_.get());
        for (std::size_t n = 0; n < nmodes_; ++n) scr1_[n] = I * kx_[n] * uh_[n];
        inverse(scr1_.get(), pux_.get());
        for (std::size_t n = 0; n < nmodes_; ++n) scr1_[n] = I * ky_[n] * uh_[n];
        inverse(scr1_.get(), puy_.get());
        for (std::size_t n = 0; n < nmodes_; ++n) scr1_[n] = I * kx_[n] * vh_[n];
        inverse(scr1_.get(), pvx_.get());
        for (std::size_t n = 0; n < nmodes_; ++n) scr1_[n] = I * ky_[n] * vh_[n];
        inverse(scr1_.get(), pvy_.get());
        const double c1 = p_.c1, c4 = p_.c4, c5 = p_.c5, c6 = p_.c6, c7 = p_.c7;
        const std::size_t np = nx_ * ny_;
        for (std::size_t n = 0; n < np; ++n) {
            const double u = pu_[n], v = pv_[n];
            const double ux = pux_[n], uy = puy_[n], vx = pvx_[n], vy = pvy_[n];
            const double d = ux + vy;
            const double w = vx - uy;
            const double s = u * u + v * v;
            const double coef = c4 * d + c5 * d * d + c6 * w * w + c7 * s;
            pux_[n] = c1 * (u * ux + v * uy) + coef * u;  // reuse as N_x
            pvx_[n] = c1 * (u * vx + v * vy) + coef * v;  // reuse as N_y
        }
        forward(pux_.get(), nxt_.get());
        forward(pvx_.get(), nyt_.get());
        dealias(nxt_.get());
        dealias(nyt_.get());
    }

    ModelParams p_;
    SimConfig cfg_;
    std::size_t nx_, ny_, nxh_, nmodes_;
    double time_ = 0.0;
    std::size_t step_ = 0;
    bool have_prev_ = false;

    detail::fftw_buffer<cplx> uh_, vh_, ph_, nxt_, nyt_, nxp_, nyp_, fxh_, fyh_, scr1_, scrc_;
    detail::fftw_buffer<double> scrr_, pu_, pv_, pux_, puy_, pvx_, pvy_;
    std::vector<double> kx_, ky_, keep_;
    std::vector<cplx> prop_, rhs_;
    fftw_plan plan_r2c_ = nullptr, plan_c2r_ = nullptr;
};

/// Runs spinup (discarded), then stores n_snapshots every store_stride steps.
/// The stored grid is the (optionally cropped) computational grid with
/// dx = dxc and dt = store_stride * dtc. Deterministic given the seed.
inline SimulationResult simulate(const ModelParams& params, const SimConfig& config) {
    params.validate();
    config.validate();
    if (std::abs(std::abs(params.c8) - 1.0) > 1e-12 || std::abs(params.c9 - 1.0) > 1e-12)
        throw std::invalid_argument(
            "simulate: reference data requires |c8| = 1 and c9 = 1");
    KolmogorovSolver solver(params, config);
    solver.init_laminar_perturbed();

    const std::size_t n_spin = static_cast<std::size_t>(std::llround(config.spinup_time / config.dtc));
    for (std::size_t s = 0; s < n_spin; ++s) solver.step();

    const std::size_t snx = config.store_nx ? config.store_nx : config.nxc;
    const std::size_t sny = config.store_ny ? config.store_ny : config.nyc;
    SimulationResult result;
    result.series.grid = {snx, sny, config.n_snapshots, config.dxc(), config.dyc(),
                          config.dtc * static_cast<double>(config.store_stride)};
    result.series.u = Field3(snx, sny, config.n_snapshots);
    result.series.v = Field3(snx, sny, config.n_snapshots);

    for (std::size_t snap = 0; snap < config.n_snapshots; ++snap) {
        for (std::size_t s = 0; s < config.store_stride; ++s) solver.step();
        auto u = solver.u_physical();
        auto v = solver.v_physical();
        for (std::size_t j = 0; j < sny; ++j) {
            std::memcpy(&result.series.u(0, j, snap), &u[config.nxc * j], snx * sizeof(double));
            std::memcpy(&result.series.v(0, j, snap), &v[config.nxc * j], snx * sizeof(double));
        }
        result.max_abs_divergence = std::max(result.max_abs_divergence, solver.max_divergence());
    }
    return result;
}

/// First time lag at which the normalized, spatially averaged temporal
/// autocorrelation of u (about its temporal mean) drops below 1/e, linearly
/// interpolated between snapshots.
inline double autocorrelation_time(const FlowSeries& series) {
    const GridSpec& g = series.grid;
    if (g.nt < 3) throw std::invalid_argument("autocorrelation_time: series too short");
    const std::size_t plane = g.nx * g.ny;
    std::vector<double> mean(plane, 0.0);
    for (std::size_t k = 0; k < g.nt; ++k)
        for (std::size_t n = 0; n < plane; ++n) mean[n] += series.u.data()[k * plane + n];
    for (double& m : mean) m /= static_cast<double>(g.nt);

    auto corr = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t k = 0; k + lag < g.nt; ++k) {
            const double* a = series.u.data() + k * plane;
            const double* b = series.u.data() + (k + lag) * plane;
            for (std::size_t n = 0; n < plane; ++n)
                s += (a[n] - mean[n]) * (b[n] - mean[n]);
        }
        return s / static_cast<double>(g.nt - lag);
    };

    const double c0 = corr(0);
    if (!(c0 > 0.0) || c0 < 1e-300)
        throw numeric_error("autocorrelation_time: field is time-independent (no decay)");
    const double target = 1.0 / M_E;
    double prev = 1.0;
    for (std::size_t lag = 1; lag < g.nt; ++lag) {
        const double c = corr(lag) / c0;
        if (c < target) {
            const double frac = (prev - target) / (prev - c);
            return (static_cast<double>(lag - 1) + frac) * g.dt;
        }
        prev = c;
    }
    throw numeric_error(
        "autocorrelation_time: no 1/e crossing found; use a longer trajectory");
}

} // namespace latpde
