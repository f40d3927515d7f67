#pragma once

// Linear SVM with hinge loss and L2 penalty, trained by dual coordinate
// descent over a seeded permutation per epoch. Inputs are standardized per
// dimension with the training set's mean and standard deviation; the bias
// is learned as the weight of a constant feature.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "entn/checkpoint.hpp"
#include "entn/errors.hpp"
#include "entn/rng.hpp"
#include "entn/tensor.hpp"

namespace entn {

struct SvmParams {
    double c = 1.0;
    std::size_t epochs = 200;
    /// Stop once the projected-gradient spread in an epoch falls below this.
    double tol = 1e-4;
    std::uint64_t seed = 0;
};

struct SvmModel {
    Eigen::VectorXd weights;  // in standardized space
    double bias = 0.0;
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
    SvmParams params;
    std::size_t epochs_run = 0;

    std::size_t dim() const noexcept { return std::size_t(weights.size()); }

    /// Signed margin of one raw (unstandardized) feature row.
    double decision(const Eigen::VectorXd& x) const {
        return (x - mean).cwiseQuotient(scale).dot(weights) + bias;
    }

    /// Margins of every row.
    std::vector<double> decisions(const Matrix& rows) const {
        std::vector<double> out(std::size_t(rows.rows()));
        for (Eigen::Index r = 0; r < rows.rows(); ++r)
            out[std::size_t(r)] = decision(Eigen::VectorXd(rows.row(r).transpose()));
        return out;
    }
};

/// `labels` holds 1 for the positive class and 0 for the negative one.
inline SvmModel train_svm(const Matrix& x, const std::vector<int>& labels, const SvmParams& params = {}) {
    const auto n = std::size_t(x.rows());
    const auto d = x.cols();
    if (labels.size() != n) throw ArgumentError("train_svm: " + std::to_string(n) + " rows but " +
                                                std::to_string(labels.size()) + " labels");
    const auto npos = std::size_t(std::count_if(labels.begin(), labels.end(), [](int l) { return l != 0; }));
    if (npos == 0 || npos == n) throw ProtocolError("train_svm: training set has a single class");
    if (!(params.c > 0.0)) throw ArgumentError("train_svm: C must be > 0");

    SvmModel m;
    m.params = params;
    m.mean = x.colwise().mean().transpose();
    m.scale.resize(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        const double var = (x.col(k).array() - m.mean(k)).square().mean();
        const double sd = std::sqrt(var);
        m.scale(k) = sd > 1e-12 ? sd : 1.0;
    }
    Matrix z(x.rows(), d + 1);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        z.row(r).head(d) = (x.row(r).transpose() - m.mean).cwiseQuotient(m.scale).transpose();
        z(r, d) = 1.0;
    }

    std::vector<double> y(n), qd(n), alpha(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        y[r] = labels[r] != 0 ? 1.0 : -1.0;
        qd[r] = z.row(Eigen::Index(r)).squaredNorm();
    }
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(params.seed, "svm.order");

    for (m.epochs_run = 0; m.epochs_run < params.epochs;) {
        for (std::size_t k = n; k > 1; --k) std::swap(order[k - 1], order[rng() % k]);
        double pg_max = -INFINITY, pg_min = INFINITY;
        for (std::size_t r : order) {
            const auto row = z.row(Eigen::Index(r));
            const double g = y[r] * row.dot(w) - 1.0;
            double pg = g;
            if (alpha[r] == 0.0) pg = std::min(g, 0.0);
            else if (alpha[r] == params.c) pg = std::max(g, 0.0);
            pg_max = std::max(pg_max, pg);
            pg_min = std::min(pg_min, pg);
            if (pg != 0.0) {
                const double old = alpha[r];
                alpha[r] = std::clamp(old - g / qd[r], 0.0, params.c);
                w += ((alpha[r] - old) * y[r]) * row.transpose();
            }
        }
        ++m.epochs_run;
        if (pg_max - pg_min < params.tol) break;
    }
    if (!w.allFinite()) throw NumericalError(m.epochs_run, "svm weights not finite");
    m.weights = w.head(d);
    m.bias = w(d);
    return m;
}

/// Plain text: `dim d`, `bias b`, then `weights`, `mean`, `scale` lines.
inline void write_svm_model(std::ostream& out, const SvmModel& m) {
    auto vec = [&](const char* name, const Eigen::VectorXd& v) {
        out << name;
        for (Eigen::Index k = 0; k < v.size(); ++k) out << ' ' << format_double(v(k));
        out << '\n';
    };
    out << "dim " << m.dim() << '\n' << "bias " << format_double(m.bias) << '\n';
    vec("weights", m.weights);
    vec("mean", m.mean);
    vec("scale", m.scale);
}

inline SvmModel read_svm_model(std::istream& in) {
    SvmModel m;
    std::string key;
    std::size_t d = 0;
    if (!(in >> key >> d) || key != "dim") throw ParseError(1, "svm model: expected 'dim'");
    if (!(in >> key >> m.bias) || key != "bias") throw ParseError(2, "svm model: expected 'bias'");
    std::size_t lineno = 2;
    for (Eigen::VectorXd* v : {&m.weights, &m.mean, &m.scale}) {
        ++lineno;
        in >> key;
        v->resize(Eigen::Index(d));
        for (std::size_t k = 0; k < d; ++k)
            if (!(in >> (*v)(Eigen::Index(k)))) throw ParseError(lineno, "svm model: short vector '" + key + "'");
    }
    return m;
}

}  // namespace entn
