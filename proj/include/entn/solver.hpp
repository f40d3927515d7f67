#pragma once

// Proximal alternating minimization of
//     1/2 || X - F3TN(G_i, G_j, G_n) ||_F^2
// over the three factors and the target tensor X, with an elastic-net
// proximal term on each factor increment.
//
// Each factor update solves, for the mode-m matricization G of G_m,
//     G (H H^T + l2 Id) = X_m H^T + l2 G_old + l1 Q
// where H = partial_contract(factors, m) and Q is the rectangular
// quasi-identity (ones where row == column). X then moves to
//     (F3TN(G) + l2 X_old) / (1 + l2).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "entn/errors.hpp"
#include "entn/f3tn.hpp"
#include "entn/rng.hpp"
#include "entn/tensor.hpp"

namespace entn {

struct SolverConfig {
    std::size_t f_max = 6;
    double lambda1 = 0.1;
    double lambda2 = 0.1;
    std::size_t s_max = 1000;
    double grow_tol = 1e-2;
    double conv_tol = 1e-3;
    std::uint64_t seed = 0;
    double init_scale = 0.1;
    /// Scale of expanded-rank entries relative to init_scale.
    double grow_scale = 0.01;
    bool clamp_x = false;

    void validate() const {
        if (f_max < 1) throw ArgumentError("f_max must be >= 1");
        if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) throw ArgumentError("lambda1 must be >= 0");
        if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) throw ArgumentError("lambda2 must be >= 0");
        if (!(grow_tol > 0.0) || !(conv_tol > 0.0)) throw ArgumentError("tolerances must be > 0");
        if (!(grow_tol > conv_tol)) throw ArgumentError("grow_tol must exceed conv_tol");
        if (!(init_scale > 0.0)) throw ArgumentError("init_scale must be > 0");
        if (!(grow_scale >= 0.0)) throw ArgumentError("grow_scale must be >= 0");
    }

    /// Rank the solver starts from.
    std::size_t initial_rank() const noexcept { return f_max > 5 ? f_max - 5 : 1; }
};

struct TraceRecord {
    std::size_t s = 0;       // 0-based iteration index
    std::size_t f = 0;       // rank used during the iteration
    double objective = 0.0;  // after the X update
    double rel_change = 0.0; // ||X_new - X_old||_F / ||X_old||_F
};

struct SolverState {
    Tensor3 observed;  // E, kept for clamp_x
    Tensor3 x;
    FactorTriple factors;
    std::size_t s = 0;
    std::vector<TraceRecord> trace;
    bool converged = false;
    Rng grow_rng;

    std::size_t rank() const noexcept { return factors.rank(); }
};

/// Outcome of one factor solve, for residual monitoring.
struct FactorUpdate {
    Mode mode = Mode::I;
    double residual = 0.0;  // ||G A - rhs||_F
    double rhs_norm = 0.0;  // ||rhs||_F
    bool jittered = false;
};

/// Rectangular matrix with ones where row == column.
inline Matrix quasi_identity(Eigen::Index rows, Eigen::Index cols) {
    return Matrix::Identity(rows, cols);
}

inline SolverState init_state(const Tensor3& e, const SolverConfig& cfg) {
    cfg.validate();
    const auto [I, J, N] = e.dims();
    if (I == 0 || J == 0 || N == 0) throw ShapeError("empty input tensor " + dims_string(e.dims()));
    if (!e.all_finite()) throw ArgumentError("input tensor has non-finite entries");
    SolverState st;
    st.observed = e;
    st.x = e;
    const std::size_t f = cfg.initial_rank();
    st.factors = FactorTriple(I, J, N, f);
    Rng rng = make_rng(cfg.seed, "solver.init");
    for (Mode m : {Mode::I, Mode::J, Mode::N})
        for (double& v : st.factors.factor(m).values()) v = cfg.init_scale * uniform01(rng);
    st.grow_rng = make_rng(cfg.seed, "solver.grow");
    return st;
}

/// Gauss-Seidel update of one factor in place, using the current state of
/// the other two.
inline FactorUpdate update_factor(SolverState& st, Mode mode, const SolverConfig& cfg) {
    Tensor3& g = st.factors.factor(mode);
    const Matrix h = partial_contract(st.factors, mode);
    const Matrix xm = unfold(st.x, mode);
    const Matrix g_old = unfold(g, mode);
    const Eigen::Index r = h.rows();

    const Matrix hht = h * h.transpose();
    Matrix a = hht;
    a.diagonal().array() += cfg.lambda2;
    Matrix rhs = xm * h.transpose() + cfg.lambda2 * g_old;
    if (cfg.lambda1 != 0.0) rhs += cfg.lambda1 * quasi_identity(rhs.rows(), rhs.cols());
    if (!a.allFinite() || !rhs.allFinite())
        throw NumericalError(st.s, std::string("non-finite system for mode ") + mode_name(mode));

    FactorUpdate out;
    out.mode = mode;
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) {
        a.diagonal().array() += 1e-12 * a.trace() / double(r);
        llt.compute(a);
        out.jittered = true;
        if (llt.info() != Eigen::Success)
            throw NumericalError(st.s, std::string("SPD factorization failed for mode ") + mode_name(mode));
    }
    // Solve for the increment D = G - G_old, which satisfies
    //   D A = rhs - G_old A = X_m H^T + l1 Q - G_old H H^T,
    // so a vanishing H with l1 = 0 leaves G_old untouched bit for bit.
    // A is symmetric: D A = B  <=>  A D^T = B^T.
    Matrix b = xm * h.transpose() - g_old * hht;
    if (cfg.lambda1 != 0.0) b += cfg.lambda1 * quasi_identity(b.rows(), b.cols());
    const Matrix g_new = g_old + llt.solve(b.transpose()).transpose();
    if (!g_new.allFinite())
        throw NumericalError(st.s, std::string("non-finite factor for mode ") + mode_name(mode));
    out.residual = (g_new * a - rhs).norm();
    out.rhs_norm = rhs.norm();
    g = fold(g_new, g.dims(), mode);
    return out;
}

/// Blend of the fresh reconstruction with the previous X.
inline Tensor3 update_x(const Tensor3& reconstruction, const Tensor3& x_old, const SolverConfig& cfg,
                        const Tensor3* observed = nullptr) {
    if (reconstruction.dims() != x_old.dims())
        throw ShapeError("update_x: " + dims_string(reconstruction.dims()) + " vs " +
                         dims_string(x_old.dims()));
    Tensor3 x(x_old.dims());
    const double denom = 1.0 + cfg.lambda2;
    for (std::size_t k = 0; k < x.size(); ++k)
        x.values()[k] = (reconstruction.values()[k] + cfg.lambda2 * x_old.values()[k]) / denom;
    if (cfg.clamp_x && observed != nullptr)
        for (std::size_t k = 0; k < x.size(); ++k)
            if (observed->values()[k] == 1.0) x.values()[k] = 1.0;
    return x;
}

inline Tensor3 update_x(const SolverState& st, const SolverConfig& cfg) {
    return update_x(f3tn_contract(st.factors), st.x, cfg, &st.observed);
}

inline double objective(const Tensor3& x, const FactorTriple& g) {
    const double d = frob_dist(x, f3tn_contract(g));
    return 0.5 * d * d;
}

inline double objective(const SolverState& st) { return objective(st.x, st.factors); }

/// ||b - a|| / ||a||, with 0/0 read as 0 and c/0 as +inf.
inline double relative_change(const Tensor3& a, const Tensor3& b) {
    const double num = frob_dist(a, b);
    const double den = frob_norm(a);
    if (num == 0.0) return 0.0;
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    return num / den;
}

/// Expand every factor by one slice along each latent mode. Existing
/// entries are kept; new entries are small seeded noise.
inline void grow_rank(SolverState& st, const SolverConfig& cfg) {
    const std::size_t f = st.factors.rank();
    if (f >= cfg.f_max) return;
    const std::size_t g = f + 1;
    const double scale = cfg.init_scale * cfg.grow_scale;
    const auto [I, J, N] = st.factors.output_dims();
    auto draw = [&] { return scale * uniform01(st.grow_rng); };

    FactorTriple out(I, J, N, g);
    for (std::size_t y = 0; y < g; ++y)
        for (std::size_t x = 0; x < g; ++x)
            for (std::size_t i = 0; i < I; ++i)
                out.gi(i, x, y) = (x < f && y < f) ? st.factors.gi(i, x, y) : draw();
    for (std::size_t z = 0; z < g; ++z)
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t x = 0; x < g; ++x)
                out.gj(x, j, z) = (x < f && z < f) ? st.factors.gj(x, j, z) : draw();
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t z = 0; z < g; ++z)
            for (std::size_t y = 0; y < g; ++y)
                out.gn(y, z, n) = (y < f && z < f) ? st.factors.gn(y, z, n) : draw();
    st.factors = std::move(out);
}

/// Optional observer of every factor solve; `s` is the iteration index.
using FactorHook = std::function<void(std::size_t s, const FactorUpdate&)>;

/// One full sweep: G_i, G_j, G_n, then X. Appends a trace record and
/// returns it; does not grow the rank or test convergence.
inline TraceRecord sweep(SolverState& st, const SolverConfig& cfg, const FactorHook& hook = {}) {
    const std::size_t f_used = st.factors.rank();
    for (Mode m : {Mode::I, Mode::J, Mode::N}) {
        const FactorUpdate u = update_factor(st, m, cfg);
        if (hook) hook(st.s, u);
    }
    const Tensor3 recon = f3tn_contract(st.factors);
    Tensor3 x_new = update_x(recon, st.x, cfg, &st.observed);
    if (!x_new.all_finite()) throw NumericalError(st.s, "non-finite target tensor");
    TraceRecord rec;
    rec.s = st.s;
    rec.f = f_used;
    rec.rel_change = relative_change(st.x, x_new);
    const double d = frob_dist(x_new, recon);
    rec.objective = 0.5 * d * d;
    st.x = std::move(x_new);
    st.trace.push_back(rec);
    ++st.s;
    return rec;
}

/// Runs the full schedule: sweep, grow the rank when the relative change
/// drops below grow_tol, stop when it drops below conv_tol or at s_max.
/// An iteration that grows the rank skips that iteration's convergence
/// test; once f == f_max the test always runs.
inline SolverState solve(const Tensor3& e, const SolverConfig& cfg, const FactorHook& hook = {}) {
    SolverState st = init_state(e, cfg);
    while (st.s < cfg.s_max) {
        const TraceRecord rec = sweep(st, cfg, hook);
        if (rec.rel_change < cfg.grow_tol && st.factors.rank() < cfg.f_max) {
            grow_rank(st, cfg);
            continue;
        }
        if (rec.rel_change < cfg.conv_tol) {
            st.converged = true;
            break;
        }
    }
    return st;
}

}  // namespace entn
