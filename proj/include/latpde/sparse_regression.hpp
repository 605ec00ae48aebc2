#pragma once

// Sequential thresholded least squares over the term library. Coefficients
// are found by least squares on the active columns; relevance is measured in
// the L1 norm against the residual eta = ||q0 - Q c||_1, and every term with
// ||c_i q_i||_1 < gamma * eta is removed until a fixed point.

#include "latpde/core.hpp"
#include "latpde/term_library.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <array>
#include <optional>

namespace latpde {

struct RegressionConfig {
    double gamma = 1.0;
    int max_iter = 10;

    void validate() const {
        if (!(gamma > 0.0)) throw std::invalid_argument("RegressionConfig: gamma must be > 0");
        if (max_iter < 1) throw std::invalid_argument("RegressionConfig: max_iter must be >= 1");
    }
};

struct RegressionIteration {
    std::array<bool, n_library_terms> active;
    std::array<double, n_library_terms> c;
    double eta;
};

struct RegressionResult {
    std::array<double, n_library_terms> c{};       // inactive entries exactly zero
    std::array<bool, n_library_terms> active{};
    double eta = 0.0;                              // L1 residual with the final c
    double eta0 = 0.0;                             // ||q0||_1
    bool all_dropped = false;                      // empty model outcome
    std::vector<RegressionIteration> history;
    // relevance R_i = ||c_i q_i||_1 / eta; for inactive terms uses the c_i from
    // the last iteration in which the term was present (diagnostics only)
    std::array<double, n_library_terms> relevance{};

    int n_active() const {
        int n = 0;
        for (bool a : active) n += a;
        return n;
    }
};

/// Least-squares minimizer of ||q0 - Q_active c||_2 for the selected columns.
/// Throws if the active columns are rank deficient, listing the dependent ones.
inline Eigen::VectorXd solve_coeffs(const Eigen::MatrixXd& q_active,
                                    const Eigen::VectorXd& q0) {
    if (q_active.rows() < q_active.cols())
        throw std::invalid_argument("solve_coeffs: fewer rows than active columns");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(q_active);
    // column scales differ by orders of magnitude; judge rank against the
    // per-column norms rather than the largest pivot
    if (qr.rank() < q_active.cols()) {
        std::string cols;
        auto perm = qr.colsPermutation().indices();
        for (Eigen::Index n = qr.rank(); n < q_active.cols(); ++n)
            cols += (cols.empty() ? "" : ", ") + std::to_string(perm[n]);
        throw numeric_error("solve_coeffs: rank-deficient library; dependent columns: " +
                            cols);
    }
    return qr.solve(q0);
}

/// Exact L1 norm of q0 - Q c over the full library (all seven columns,
/// inactive coefficients zero).
inline double residual_l1(const TermLibrary& lib,
                          const std::array<double, n_library_terms>& c) {
    double eta = 0.0;
    for (std::size_t r = 0; r < lib.rows(); ++r) {
        double pred = 0.0;
        for (int t = 0; t < n_library_terms; ++t) pred += c[t] * lib.q(r, t);
        eta += std::abs(lib.q0[r] - pred);
    }
    return eta;
}

inline double column_l1(const TermLibrary& lib, int term) {
    double s = 0.0;
    for (std::size_t r = 0; r < lib.rows(); ++r) s += std::abs(lib.q(r, term));
    return s;
}

namespace detail {

inline Eigen::MatrixXd active_matrix(const TermLibrary& lib,
                                     const std::array<bool, n_library_terms>& active) {
    int na = 0;
    for (bool a : active) na += a;
    Eigen::MatrixXd m(lib.rows(), na);
    int col = 0;
    for (int t = 0; t < n_library_terms; ++t) {
        if (!active[t]) continue;
        for (std::size_t r = 0; r < lib.rows(); ++r)
            m(static_cast<Eigen::Index>(r), col) = lib.q(r, t);
        ++col;
    }
    return m;
}

inline std::array<double, n_library_terms> scatter(
    const Eigen::VectorXd& cx, const std::array<bool, n_library_terms>& active) {
    std::array<double, n_library_terms> c{};
    int col = 0;
    for (int t = 0; t < n_library_terms; ++t) c[t] = active[t] ? cx[col++] : 0.0;
    return c;
}

} // namespace detail

/// Iterative thresholding: solve on the active set, compute eta, drop every
/// term with ||c_i q_i||_1 strictly below gamma*eta, repeat until fixed point
/// or max_iter. Terms at exact equality are retained. An all-dropped outcome
/// is a legal flagged result with eta = eta0, never an error.
inline RegressionResult threshold_iterate(const TermLibrary& lib,
                                          const RegressionConfig& config) {
    config.validate();
    if (lib.rows() <= n_library_terms)
        throw std::invalid_argument("threshold_iterate: need K > 7 sample points");
    Eigen::Map<const Eigen::VectorXd> q0(lib.q0.data(),
                                         static_cast<Eigen::Index>(lib.rows()));

    RegressionResult res;
    res.eta0 = q0.cwiseAbs().sum();
    res.active.fill(true);
    std::array<double, n_library_terms> last_seen_c{};  // diagnostics for dropped terms

    for (int iter = 0; iter < config.max_iter; ++iter) {
        Eigen::MatrixXd qa = detail::active_matrix(lib, res.active);
        Eigen::VectorXd cx;
        try {
            cx = solve_coeffs(qa, q0);
        } catch (const numeric_error& e) {
            throw numeric_error(std::string(e.what()) + " (iteration " +
                                std::to_string(iter) + ")");
        }
        res.c = detail::scatter(cx, res.active);
        for (int t = 0; t < n_library_terms; ++t)
            if (res.active[t]) last_seen_c[t] = res.c[t];
        res.eta = residual_l1(lib, res.c);
        res.history.push_back({res.active, res.c, res.eta});

        bool changed = false;
        for (int t = 0; t < n_library_terms; ++t) {
            if (!res.active[t]) continue;
            double weight = std::abs(res.c[t]) * column_l1(lib, t);
            if (weight < config.gamma * res.eta) {
                res.active[t] = false;
                changed = true;
            }
        }
        if (!changed) break;
        int still = 0;
        for (bool a : res.active) still += a;
        if (still == 0) {
            res.all_dropped = true;
            res.c.fill(0.0);
            res.eta = res.eta0;
            res.history.push_back({res.active, res.c, res.eta});
            break;
        }
    }
    // recompute coefficients for the final active set if the last solve used a
    // larger set (loop capped by max_iter after a drop)
    if (!res.all_dropped && res.history.back().active != res.active) {
        Eigen::MatrixXd qa = detail::active_matrix(lib, res.active);
        res.c = detail::scatter(solve_coeffs(qa, q0), res.active);
        res.eta = residual_l1(lib, res.c);
        res.history.push_back({res.active, res.c, res.eta});
    }
    // relevance with the final residual; dropped terms use their last-seen c
    for (int t = 0; t < n_library_terms; ++t) {
        double ci = res.active[t] ? res.c[t] : last_seen_c[t];
        double weight = std::abs(ci) * column_l1(lib, t);
        res.relevance[t] = (res.eta > 0.0)
                               ? weight / res.eta
                               : std::numeric_limits<double>::infinity();
    }
    return res;
}

/// Relevance vector of a finalized result (R_i = ||c_i q_i||_1 / eta).
inline std::array<double, n_library_terms> relevance(const TermLibrary& lib,
                                                     const RegressionResult& result) {
    (void)lib;
    return result.relevance;
}

/// Residual change from forcing an inactive term back into the model:
/// (eta_without - eta_with) / eta_without. Returns 0 for already-active terms.
inline double false_negative_probe(const TermLibrary& lib, const RegressionResult& result,
                                   int term) {
    if (term < 0 || term >= n_library_terms)
        throw std::invalid_argument("false_negative_probe: term index out of range");
    if (result.active[term]) return 0.0;
    std::array<bool, n_library_terms> forced = result.active;
    forced[term] = true;
    Eigen::Map<const Eigen::VectorXd> q0(lib.q0.data(),
                                         static_cast<Eigen::Index>(lib.rows()));
    Eigen::MatrixXd qa = detail::active_matrix(lib, forced);
    auto c_with = detail::scatter(solve_coeffs(qa, q0), forced);
    double eta_with = residual_l1(lib, c_with);
    double eta_without = result.eta;
    if (eta_without <= 0.0) return 0.0;
    return (eta_without - eta_with) / eta_without;
}

inline nlohmann::json to_json(const RegressionResult& r) {
    nlohmann::json j;
    j["coefficients"] = r.c;
    j["active"] = r.active;
    j["eta"] = r.eta;
    j["eta0"] = r.eta0;
    j["all_dropped"] = r.all_dropped;
    j["relevance"] = r.relevance;
    j["term_names"] = term_names();
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& it : r.history)
        hist.push_back({{"active", it.active}, {"c", it.c}, {"eta", it.eta}});
    j["history"] = hist;
    return j;
}

} // namespace latpde
