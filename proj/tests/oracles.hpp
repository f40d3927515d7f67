#pragma once

// Brute-force reference implementations shared by the unit and acceptance
// tests. Each is written straight from the defining formula with no reuse
// of library internals.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "entn/entn.hpp"

namespace oracle {

/// Six nested loops over (i, j, n, x, y, z).
inline entn::Tensor3 contract(const entn::FactorTriple& g) {
    const std::size_t I = g.gi.dim(0), J = g.gj.dim(1), N = g.gn.dim(2), f = g.gi.dim(1);
    entn::Tensor3 out(I, J, N);
    for (std::size_t i = 0; i < I; ++i)
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t n = 0; n < N; ++n) {
                double s = 0.0;
                for (std::size_t x = 0; x < f; ++x)
                    for (std::size_t y = 0; y < f; ++y)
                        for (std::size_t z = 0; z < f; ++z) s += g.gi(i, x, y) * g.gj(x, j, z) * g.gn(y, z, n);
                out(i, j, n) = s;
            }
    return out;
}

/// Fraction of (positive, negative) pairs won by the positive, ties 1/2.
inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    long long twice = 0, pairs = 0;
    for (std::size_t p = 0; p < scores.size(); ++p) {
        if (labels[p] != 1) continue;
        for (std::size_t q = 0; q < scores.size(); ++q) {
            if (labels[q] != 0) continue;
            ++pairs;
            if (scores[p] > scores[q]) twice += 2;
            else if (scores[p] == scores[q]) twice += 1;
        }
    }
    return double(twice) / double(2 * pairs);
}

inline double objective(const entn::Tensor3& x, const entn::FactorTriple& g) {
    const entn::Tensor3 r = contract(g);
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = x.values()[k] - r.values()[k];
        s += d * d;
    }
    return 0.5 * s;
}

inline entn::FactorTriple random_factors(std::mt19937_64& rng, std::size_t I, std::size_t J, std::size_t N,
                                         std::size_t f, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    entn::FactorTriple g(I, J, N, f);
    for (double& v : g.gi.values()) v = u(rng);
    for (double& v : g.gj.values()) v = u(rng);
    for (double& v : g.gn.values()) v = u(rng);
    return g;
}

inline entn::Tensor3 random_tensor(std::mt19937_64& rng, std::size_t a, std::size_t b, std::size_t c,
                                   double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    entn::Tensor3 t(a, b, c);
    for (double& v : t.values()) v = u(rng);
    return t;
}

/// Random 0/1 tensor with the given fraction of ones.
inline entn::Tensor3 random_binary(std::mt19937_64& rng, std::size_t a, std::size_t b, std::size_t c,
                                   double density) {
    std::bernoulli_distribution on(density);
    entn::Tensor3 t(a, b, c);
    for (double& v : t.values()) v = on(rng) ? 1.0 : 0.0;
    return t;
}

/// f = 1 factor update, written per entry. With scalar latent indices the
/// SPD system is 1x1: for mode I, row i solves
///   g_i (sum_jn h_jn^2 + l2) = sum_jn x_ijn h_jn + l2 g_i_old + l1 [i == 0]
/// where h_jn = G_j(0,j,0) G_n(0,0,n).
inline entn::FactorTriple scalar_update(const entn::FactorTriple& g, const entn::Tensor3& x, entn::Mode mode,
                                        double l1, double l2) {
    const std::size_t I = g.gi.dim(0), J = g.gj.dim(1), N = g.gn.dim(2);
    entn::FactorTriple out = g;
    auto a = [&](std::size_t i) { return g.gi(i, 0, 0); };
    auto b = [&](std::size_t j) { return g.gj(0, j, 0); };
    auto c = [&](std::size_t n) { return g.gn(0, 0, n); };
    if (mode == entn::Mode::I) {
        for (std::size_t i = 0; i < I; ++i) {
            double hh = 0.0, xh = 0.0;
            for (std::size_t j = 0; j < J; ++j)
                for (std::size_t n = 0; n < N; ++n) {
                    const double h = b(j) * c(n);
                    hh += h * h;
                    xh += x(i, j, n) * h;
                }
            out.gi(i, 0, 0) = (xh + l2 * a(i) + (i == 0 ? l1 : 0.0)) / (hh + l2);
        }
    } else if (mode == entn::Mode::J) {
        for (std::size_t j = 0; j < J; ++j) {
            double hh = 0.0, xh = 0.0;
            for (std::size_t i = 0; i < I; ++i)
                for (std::size_t n = 0; n < N; ++n) {
                    const double h = a(i) * c(n);
                    hh += h * h;
                    xh += x(i, j, n) * h;
                }
            out.gj(0, j, 0) = (xh + l2 * b(j) + (j == 0 ? l1 : 0.0)) / (hh + l2);
        }
    } else {
        for (std::size_t n = 0; n < N; ++n) {
            double hh = 0.0, xh = 0.0;
            for (std::size_t i = 0; i < I; ++i)
                for (std::size_t j = 0; j < J; ++j) {
                    const double h = a(i) * b(j);
                    hh += h * h;
                    xh += x(i, j, n) * h;
                }
            out.gn(0, 0, n) = (xh + l2 * c(n) + (n == 0 ? l1 : 0.0)) / (hh + l2);
        }
    }
    return out;
}

inline double max_abs_diff(const entn::Tensor3& a, const entn::Tensor3& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
    return m;
}

}  // namespace oracle
