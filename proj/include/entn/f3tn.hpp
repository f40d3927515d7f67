#pragma once

// Fully-connected 3rd-order tensor network: three factors
//   G_i (I, f, f),  G_j (f, J, f),  G_n (f, f, N)
// with every pair sharing one latent index of size f:
//   e(i, j, n) = sum_{x,y,z} G_i(i,x,y) * G_j(x,j,z) * G_n(y,z,n).
//
// Latent pairs are flattened first-index-fastest, matching unfold():
//   mode I pairs (x, y) -> x + f*y
//   mode J pairs (x, z) -> x + f*z
//   mode N pairs (y, z) -> y + f*z

#include <cstddef>
#include <string>

#include "entn/errors.hpp"
#include "entn/tensor.hpp"

namespace entn {

struct FactorTriple {
    Tensor3 gi;  // (I, f, f)
    Tensor3 gj;  // (f, J, f)
    Tensor3 gn;  // (f, f, N)

    FactorTriple() = default;
    FactorTriple(Tensor3 gi_, Tensor3 gj_, Tensor3 gn_)
        : gi(std::move(gi_)), gj(std::move(gj_)), gn(std::move(gn_)) {
        validate();
    }
    /// Zero-filled factors of the given shape.
    FactorTriple(std::size_t I, std::size_t J, std::size_t N, std::size_t f)
        : gi(I, f, f), gj(f, J, f), gn(f, f, N) {}

    std::size_t rank() const noexcept { return gi.dim(1); }
    Dims output_dims() const noexcept { return {gi.dim(0), gj.dim(1), gn.dim(2)}; }

    Tensor3& factor(Mode m) noexcept {
        return m == Mode::I ? gi : (m == Mode::J ? gj : gn);
    }
    const Tensor3& factor(Mode m) const noexcept {
        return m == Mode::I ? gi : (m == Mode::J ? gj : gn);
    }

    void validate() const {
        const std::size_t f = gi.dim(1);
        if (f == 0) throw ShapeError("factor rank must be >= 1");
        const bool ok = gi.dim(2) == f && gj.dim(0) == f && gj.dim(2) == f && gn.dim(0) == f &&
                        gn.dim(1) == f;
        if (!ok)
            throw ShapeError("rank mismatch between factors: G_i " + dims_string(gi.dims()) +
                             ", G_j " + dims_string(gj.dims()) + ", G_n " +
                             dims_string(gn.dims()));
    }

    bool all_finite() const noexcept { return gi.all_finite() && gj.all_finite() && gn.all_finite(); }

    friend bool operator==(const FactorTriple&, const FactorTriple&) = default;
};

/// Matricized contraction of the two factors other than `omitted`, over
/// their shared latent index. Result is f^2 x (product of the two remaining
/// data dims) so that unfold(E, m) == unfold(G_m, m) * H_m.
///
/// Argument order follows the triple: omitted I takes (G_j, G_n), omitted J
/// takes (G_i, G_n), omitted N takes (G_i, G_j).
inline Matrix partial_contract_pair(const Tensor3& a, const Tensor3& b, Mode omitted) {
    switch (omitted) {
        case Mode::I: {
            // a = G_j (f,J,f), b = G_n (f,f,N); contract over z.
            const std::size_t f = a.dim(0), J = a.dim(1), N = b.dim(2);
            if (a.dim(2) != f || b.dim(0) != f || b.dim(1) != f)
                throw ShapeError("partial_contract_pair(i): G_j " + dims_string(a.dims()) +
                                 " vs G_n " + dims_string(b.dims()));
            Matrix h = Matrix::Zero(Eigen::Index(f * f), Eigen::Index(J * N));
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t j = 0; j < J; ++j) {
                    double* col = h.col(Eigen::Index(j + J * n)).data();
                    for (std::size_t z = 0; z < f; ++z) {
                        const double* gj = a.data() + a.offset(0, j, z);
                        for (std::size_t y = 0; y < f; ++y) {
                            const double w = b(y, z, n);
                            double* out = col + f * y;
                            for (std::size_t x = 0; x < f; ++x) out[x] += gj[x] * w;
                        }
                    }
                }
            return h;
        }
        case Mode::J: {
            // a = G_i (I,f,f), b = G_n (f,f,N); contract over y.
            const std::size_t I = a.dim(0), f = a.dim(1), N = b.dim(2);
            if (a.dim(2) != f || b.dim(0) != f || b.dim(1) != f)
                throw ShapeError("partial_contract_pair(j): G_i " + dims_string(a.dims()) +
                                 " vs G_n " + dims_string(b.dims()));
            Matrix ht = Matrix::Zero(Eigen::Index(I * N), Eigen::Index(f * f));
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t z = 0; z < f; ++z)
                    for (std::size_t y = 0; y < f; ++y) {
                        const double w = b(y, z, n);
                        for (std::size_t x = 0; x < f; ++x) {
                            const double* gi = a.data() + a.offset(0, x, y);
                            double* out = ht.col(Eigen::Index(x + f * z)).data() + I * n;
                            for (std::size_t i = 0; i < I; ++i) out[i] += gi[i] * w;
                        }
                    }
            return ht.transpose();
        }
        case Mode::N: {
            // a = G_i (I,f,f), b = G_j (f,J,f); contract over x.
            const std::size_t I = a.dim(0), f = a.dim(1), J = b.dim(1);
            if (a.dim(2) != f || b.dim(0) != f || b.dim(2) != f)
                throw ShapeError("partial_contract_pair(n): G_i " + dims_string(a.dims()) +
                                 " vs G_j " + dims_string(b.dims()));
            Matrix ht = Matrix::Zero(Eigen::Index(I * J), Eigen::Index(f * f));
            for (std::size_t j = 0; j < J; ++j)
                for (std::size_t z = 0; z < f; ++z)
                    for (std::size_t x = 0; x < f; ++x) {
                        const double w = b(x, j, z);
                        for (std::size_t y = 0; y < f; ++y) {
                            const double* gi = a.data() + a.offset(0, x, y);
                            double* out = ht.col(Eigen::Index(y + f * z)).data() + I * j;
                            for (std::size_t i = 0; i < I; ++i) out[i] += gi[i] * w;
                        }
                    }
            return ht.transpose();
        }
    }
    throw ArgumentError("partial_contract_pair: bad mode");
}

/// H_m for the factor triple, built from the two factors other than m.
inline Matrix partial_contract(const FactorTriple& g, Mode m) {
    switch (m) {
        case Mode::I: return partial_contract_pair(g.gj, g.gn, Mode::I);
        case Mode::J: return partial_contract_pair(g.gi, g.gn, Mode::J);
        case Mode::N: return partial_contract_pair(g.gi, g.gj, Mode::N);
    }
    throw ArgumentError("partial_contract: bad mode");
}

/// Full reconstruction. G_j and G_n are contracted over z first, then the
/// result is multiplied against the mode-I unfolding of G_i.
inline Tensor3 f3tn_contract(const FactorTriple& g) {
    g.validate();
    const Dims out = g.output_dims();
    const Matrix h = partial_contract(g, Mode::I);
    Tensor3 e(out);
    Eigen::Map<Matrix>(e.data(), Eigen::Index(out[0]), Eigen::Index(out[1] * out[2])).noalias() =
        unfold(g.gi, Mode::I) * h;
    return e;
}

/// One reconstructed entry without materializing the full tensor.
inline double f3tn_entry(const FactorTriple& g, std::size_t i, std::size_t j, std::size_t n) {
    const Dims d = g.output_dims();
    if (i >= d[0] || j >= d[1] || n >= d[2])
        throw ConsistencyError("coordinate (" + std::to_string(i) + "," + std::to_string(j) + "," +
                               std::to_string(n) + ") outside factor dims " + dims_string(d));
    const std::size_t f = g.rank();
    double s = 0.0;
    for (std::size_t y = 0; y < f; ++y)
        for (std::size_t z = 0; z < f; ++z) {
            const double gn = g.gn(y, z, n);
            double acc = 0.0;
            for (std::size_t x = 0; x < f; ++x) acc += g.gi(i, x, y) * g.gj(x, j, z);
            s += acc * gn;
        }
    return s;
}

}  // namespace entn
