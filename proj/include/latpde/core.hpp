#pragma once

// Basic grid/field types, deterministic RNG helpers, and error types shared
// by every other header.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace latpde {

/// I/O failures (bad files, unreadable paths). CLI maps these to exit code 3.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failures (blow-up, singular systems). CLI maps these to exit code 4.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Uniform space-time grid. Extents Lx = nx*dx, Ly = ny*dy are derived,
/// never stored.
struct GridSpec {
    std::size_t nx = 0, ny = 0, nt = 0;
    double dx = 0.0, dy = 0.0, dt = 0.0;

    double lx() const { return static_cast<double>(nx) * dx; }
    double ly() const { return static_cast<double>(ny) * dy; }

    void validate() const {
        if (nx < 1 || ny < 1 || nt < 1)
            throw std::invalid_argument("GridSpec: nx, ny, nt must be >= 1");
        if (!(dx > 0.0) || !(dy > 0.0) || !(dt > 0.0))
            throw std::invalid_argument("GridSpec: dx, dy, dt must be > 0");
    }

    bool operator==(const GridSpec&) const = default;
};

/// Dense 3-D array with x-fastest layout: index = i + nx*(j + ny*k).
/// The layout is part of the KFLD file contract.
class Field3 {
public:
    Field3() = default;
    Field3(std::size_t nx, std::size_t ny, std::size_t nt, double value = 0.0)
        : nx_(nx), ny_(ny), nt_(nt), data_(nx * ny * nt, value) {}

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    std::size_t nt() const { return nt_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[i + nx_ * (j + ny_ * k)];
    }
    const double& operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[i + nx_ * (j + ny_ * k)];
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool all_finite() const {
        for (double x : data_)
            if (!std::isfinite(x)) return false;
        return true;
    }

private:
    std::size_t nx_ = 0, ny_ = 0, nt_ = 0;
    std::vector<double> data_;
};

/// splitmix64 step; used both as a standalone generator and to mix seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic seed derivation: hash of (base, a, b). Used to give every
/// (sweep value, realization) pair an independent, reproducible stream.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = base;
    std::uint64_t h = splitmix64(s);
    s ^= a + 0x9e3779b97f4a7c15ULL;
    h ^= splitmix64(s);
    s ^= b + 0x7f4a7c159e3779b9ULL;
    h ^= splitmix64(s);
    return h;
}

/// Gaussian stream with a fully specified algorithm (xoshiro-free: splitmix64
/// + Box-Muller), so identical seeds give identical fields on any platform.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : state_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // Box-Muller on two uniforms in (0,1]
        double u1 = to_unit(splitmix64(state_));
        double u2 = to_unit(splitmix64(state_));
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static double to_unit(std::uint64_t x) {
        // (0,1]: never 0, so log() is safe
        return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53;
    }
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace latpde
