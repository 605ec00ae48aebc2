#pragma once

// Gridded velocity trajectories: the sole observable input to model
// discovery. Provides Gaussian noise injection, temporal subsampling, and
// bit-exact binary I/O (KFLD format).

#include "latpde/core.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <utility>

namespace latpde {

/// Additive measurement noise: i.i.d. zero-mean Gaussian with standard
/// deviation sigma per grid point and per velocity component.
struct NoiseSpec {
    double sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (sigma < 0.0) throw std::invalid_argument("NoiseSpec: sigma must be >= 0");
    }
};

/// Velocity trajectory on a uniform (x, y, t) grid. Immutable by convention:
/// operations return new values, so instances can be shared across workers.
struct FlowSeries {
    GridSpec grid;
    Field3 u, v;

    void validate() const {
        grid.validate();
        if (u.nx() != grid.nx || u.ny() != grid.ny || u.nt() != grid.nt ||
            v.nx() != grid.nx || v.ny() != grid.ny || v.nt() != grid.nt)
            throw std::invalid_argument("FlowSeries: array shapes do not match grid");
        if (!u.all_finite() || !v.all_finite())
            throw std::invalid_argument("FlowSeries: non-finite entries");
    }
};

/// The noise field that add_noise(series, noise) adds: u-component stream
/// first, then v, in storage order. Exposed so tests can subtract the same
/// seeded stream.
inline FlowSeries noise_field(const GridSpec& grid, const NoiseSpec& noise) {
    FlowSeries out;
    out.grid = grid;
    out.u = Field3(grid.nx, grid.ny, grid.nt);
    out.v = Field3(grid.nx, grid.ny, grid.nt);
    GaussianStream gs(noise.seed);
    double* pu = out.u.data();
    double* pv = out.v.data();
    const std::size_t n = out.u.size();
    for (std::size_t i = 0; i < n; ++i) pu[i] = noise.sigma * gs.next();
    for (std::size_t i = 0; i < n; ++i) pv[i] = noise.sigma * gs.next();
    return out;
}

/// Returns a new series with independent N(0, sigma^2) samples added to every
/// entry of u and v. Deterministic given the seed; sigma = 0 returns an
/// identical copy.
inline FlowSeries add_noise(const FlowSeries& series, const NoiseSpec& noise) {
    noise.validate();
    FlowSeries out = series;
    if (noise.sigma == 0.0) return out;
    GaussianStream gs(noise.seed);
    double* pu = out.u.data();
    double* pv = out.v.data();
    const std::size_t n = out.u.size();
    for (std::size_t i = 0; i < n; ++i) pu[i] += noise.sigma * gs.next();
    for (std::size_t i = 0; i < n; ++i) pv[i] += noise.sigma * gs.next();
    return out;
}

/// Keeps snapshots 0, stride, 2*stride, ...; output dt is scaled by stride.
inline FlowSeries subsample_time(const FlowSeries& series, std::size_t stride) {
    if (stride < 1) throw std::invalid_argument("subsample_time: stride must be >= 1");
    const GridSpec& g = series.grid;
    if (stride > g.nt)
        throw std::invalid_argument("subsample_time: stride " + std::to_string(stride) +
                                    " exceeds nt " + std::to_string(g.nt));
    if (stride == 1) return series;
    const std::size_t nt_out = (g.nt - 1) / stride + 1;
    FlowSeries out;
    out.grid = g;
    out.grid.nt = nt_out;
    out.grid.dt = g.dt * static_cast<double>(stride);
    out.u = Field3(g.nx, g.ny, nt_out);
    out.v = Field3(g.nx, g.ny, nt_out);
    const std::size_t plane = g.nx * g.ny;
    for (std::size_t k = 0; k < nt_out; ++k) {
        std::memcpy(out.u.data() + k * plane, series.u.data() + k * stride * plane,
                    plane * sizeof(double));
        std::memcpy(out.v.data() + k * plane, series.v.data() + k * stride * plane,
                    plane * sizeof(double));
    }
    return out;
}

// ---------------------------------------------------------------------------
// KFLD binary format, version 1:
//   bytes 0-3   magic "KFLD"
//   u32 LE      version = 1
//   u64 LE      nx, ny, nt
//   f64 LE      dx, dy, dt
//   f64 LE      nx*ny*nt values of u (x-fastest, then y, then t), then v
// No padding anywhere.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::string& buf, std::uint32_t x) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& buf, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}
inline void put_f64(std::string& buf, double d) {
    std::uint64_t x;
    std::memcpy(&x, &d, 8);
    put_u64(buf, x);
}

class Reader {
public:
    Reader(std::istream& in, const std::string& path) : in_(in), path_(path) {}

    void bytes(void* dst, std::size_t n) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw io_error("KFLD: truncated payload in '" + path_ + "'");
    }
    std::uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
               std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
    }
    std::uint64_t u64() {
        unsigned char b[8];
        bytes(b, 8);
        std::uint64_t x = 0;
        for (int i = 7; i >= 0; --i) x = (x << 8) | b[i];
        return x;
    }
    double f64() {
        std::uint64_t x = u64();
        double d;
        std::memcpy(&d, &x, 8);
        return d;
    }
    void f64_block(double* dst, std::size_t count) {
        // fast path on little-endian hosts: payload layout equals memory layout
        if constexpr (std::endian::native == std::endian::little) {
            bytes(dst, count * sizeof(double));
        } else {
            for (std::size_t i = 0; i < count; ++i) dst[i] = f64();
        }
    }

private:
    std::istream& in_;
    std::string path_;
};

} // namespace detail

inline constexpr std::uint32_t kfld_version = 1;

inline void write_series(const FlowSeries& series, const std::string& path) {
    series.grid.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("KFLD: cannot open '" + path + "' for writing");
    std::string header;
    header.append("KFLD");
    detail::put_u32(header, kfld_version);
    detail::put_u64(header, series.grid.nx);
    detail::put_u64(header, series.grid.ny);
    detail::put_u64(header, series.grid.nt);
    detail::put_f64(header, series.grid.dx);
    detail::put_f64(header, series.grid.dy);
    detail::put_f64(header, series.grid.dt);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    auto write_field = [&](const Field3& f) {
        if constexpr (std::endian::native == std::endian::little) {
            out.write(reinterpret_cast<const char*>(f.data()),
                      static_cast<std::streamsize>(f.size() * sizeof(double)));
        } else {
            std::string buf;
            buf.reserve(f.size() * 8);
            for (std::size_t i = 0; i < f.size(); ++i) detail::put_f64(buf, f.data()[i]);
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        }
    };
    write_field(series.u);
    write_field(series.v);
    if (!out) throw io_error("KFLD: write failed for '" + path + "'");
}

inline FlowSeries read_series(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("KFLD: cannot open '" + path + "'");
    detail::Reader r(in, path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "KFLD", 4) != 0)
        throw io_error("KFLD: bad magic in '" + path + "'");
    std::uint32_t version = r.u32();
    if (version != kfld_version)
        throw io_error("KFLD: version mismatch in '" + path + "': got " +
                       std::to_string(version) + ", expected " +
                       std::to_string(kfld_version));
    FlowSeries s;
    s.grid.nx = r.u64();
    s.grid.ny = r.u64();
    s.grid.nt = r.u64();
    s.grid.dx = r.f64();
    s.grid.dy = r.f64();
    s.grid.dt = r.f64();
    s.grid.validate();
    s.u = Field3(s.grid.nx, s.grid.ny, s.grid.nt);
    s.v = Field3(s.grid.nx, s.grid.ny, s.grid.nt);
    r.f64_block(s.u.data(), s.u.size());
    r.f64_block(s.v.data(), s.v.size());
    return s;
}

} // namespace latpde
