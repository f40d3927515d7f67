#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "entn/errors.hpp"

namespace entn {

using Matrix = Eigen::MatrixXd;

/// Tensor mode. `I` and `J` are the spatial modes, `N` the temporal one.
enum class Mode { I = 0, J = 1, N = 2 };

inline const char* mode_name(Mode m) {
    switch (m) {
        case Mode::I: return "i";
        case Mode::J: return "j";
        case Mode::N: return "n";
    }
    return "?";
}

using Dims = std::array<std::size_t, 3>;

inline std::string dims_string(const Dims& d) {
    return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

/// Dense real 3rd-order tensor, first index fastest: (a, b, c) lives at
/// a + d1 * (b + d2 * c).
class Tensor3 {
public:
    Tensor3() = default;
    explicit Tensor3(Dims dims, double fill = 0.0)
        : dims_(dims), values_(dims[0] * dims[1] * dims[2], fill) {}
    Tensor3(std::size_t d1, std::size_t d2, std::size_t d3, double fill = 0.0)
        : Tensor3(Dims{d1, d2, d3}, fill) {}
    Tensor3(Dims dims, std::vector<double> values) : dims_(dims), values_(std::move(values)) {
        if (values_.size() != dims_[0] * dims_[1] * dims_[2])
            throw ShapeError("tensor of dims " + dims_string(dims_) + " given " +
                             std::to_string(values_.size()) + " values");
    }

    const Dims& dims() const noexcept { return dims_; }
    std::size_t dim(std::size_t k) const noexcept { return dims_[k]; }
    std::size_t size() const noexcept { return values_.size(); }

    std::size_t offset(std::size_t a, std::size_t b, std::size_t c) const noexcept {
        return a + dims_[0] * (b + dims_[1] * c);
    }
    double& operator()(std::size_t a, std::size_t b, std::size_t c) noexcept {
        return values_[offset(a, b, c)];
    }
    double operator()(std::size_t a, std::size_t b, std::size_t c) const noexcept {
        return values_[offset(a, b, c)];
    }

    std::vector<double>& values() noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double* data() noexcept { return values_.data(); }
    const double* data() const noexcept { return values_.data(); }

    bool all_finite() const noexcept {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
    Dims dims_{0, 0, 0};
    std::vector<double> values_;
};

inline double frob_norm(const Tensor3& t) {
    double s = 0.0;
    for (double v : t.values()) s += v * v;
    return std::sqrt(s);
}

inline double frob_dist(const Tensor3& a, const Tensor3& b) {
    if (a.dims() != b.dims())
        throw ShapeError("frob_dist: " + dims_string(a.dims()) + " vs " + dims_string(b.dims()));
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a.values()[k] - b.values()[k];
        s += d * d;
    }
    return std::sqrt(s);
}

/// Mode unfolding. Rows enumerate the chosen mode; columns enumerate the
/// remaining two modes with the lower-numbered one fastest:
///   I -> d1 x (d2*d3), column b + d2*c
///   J -> d2 x (d1*d3), column a + d1*c
///   N -> d3 x (d1*d2), column a + d1*b
inline Matrix unfold(const Tensor3& t, Mode mode) {
    const auto [d1, d2, d3] = t.dims();
    switch (mode) {
        case Mode::I:
            // Storage order already is the mode-I unfolding.
            return Eigen::Map<const Matrix>(t.data(), Eigen::Index(d1), Eigen::Index(d2 * d3));
        case Mode::J: {
            Matrix m(d2, d1 * d3);
            for (std::size_t c = 0; c < d3; ++c)
                for (std::size_t b = 0; b < d2; ++b)
                    for (std::size_t a = 0; a < d1; ++a) m(b, a + d1 * c) = t(a, b, c);
            return m;
        }
        case Mode::N:
            return Eigen::Map<const Matrix>(t.data(), Eigen::Index(d1 * d2), Eigen::Index(d3))
                .transpose();
    }
    throw ArgumentError("unfold: bad mode");
}

/// Exact inverse of unfold.
inline Tensor3 fold(const Matrix& m, const Dims& dims, Mode mode) {
    const auto [d1, d2, d3] = dims;
    const auto mi = static_cast<std::size_t>(m.rows());
    const auto mj = static_cast<std::size_t>(m.cols());
    const std::size_t want_rows = dims[static_cast<std::size_t>(mode)];
    if (mi != want_rows || mi * mj != d1 * d2 * d3)
        throw ShapeError("fold: " + std::to_string(mi) + "x" + std::to_string(mj) +
                         " matrix does not unfold a " + dims_string(dims) + " tensor along mode " +
                         mode_name(mode));
    Tensor3 t(dims);
    switch (mode) {
        case Mode::I:
            Eigen::Map<Matrix>(t.data(), Eigen::Index(d1), Eigen::Index(d2 * d3)) = m;
            break;
        case Mode::J:
            for (std::size_t c = 0; c < d3; ++c)
                for (std::size_t b = 0; b < d2; ++b)
                    for (std::size_t a = 0; a < d1; ++a) t(a, b, c) = m(b, a + d1 * c);
            break;
        case Mode::N:
            Eigen::Map<Matrix>(t.data(), Eigen::Index(d1 * d2), Eigen::Index(d3)) = m.transpose();
            break;
    }
    return t;
}

}  // namespace entn
