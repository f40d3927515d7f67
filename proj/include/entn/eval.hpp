#pragma once

// Classification-based evaluation of learned factors: every labeled event
// is described by the latent slices of its (i, j, n) coordinate, the first
// share of frames trains a linear SVM, and the remaining frames are scored
// by AUC.

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "entn/auc.hpp"
#include "entn/errors.hpp"
#include "entn/event.hpp"
#include "entn/f3tn.hpp"
#include "entn/solver.hpp"
#include "entn/svm.hpp"

namespace entn {

/// Which labels form the two classes.
enum class Task {
    Objects,         // object 0 (positive) vs object 1 (negative)
    SignalVsNoise,   // any object (positive) vs noise (negative)
};

inline const char* task_name(Task t) { return t == Task::Objects ? "objects" : "noise"; }

/// 1 = positive, 0 = negative, -1 = not part of the task.
inline int task_class(Task task, int label) {
    switch (task) {
        case Task::Objects: return label == 0 ? 1 : (label == 1 ? 0 : -1);
        case Task::SignalVsNoise: return label == kNoiseLabel ? 0 : (label >= 0 ? 1 : -1);
    }
    return -1;
}

enum class Split : unsigned char { Train, Test };

struct FeatureMatrix {
    Matrix x;                          // rows x 3 f^2
    std::vector<int> label;            // binary class
    std::vector<std::size_t> frame;    // n
    std::vector<std::size_t> event;    // index into the source stream
    std::vector<Split> split;

    std::size_t rows() const noexcept { return label.size(); }
};

/// Concatenated latent slices [G_i(i,.,.), G_j(.,j,.), G_n(.,.,n)], each
/// flattened with the pair order used by the unfoldings.
inline Eigen::RowVectorXd feature_row(const FactorTriple& g, std::size_t i, std::size_t j, std::size_t n) {
    const std::size_t f = g.rank(), ff = f * f;
    Eigen::RowVectorXd out(Eigen::Index(3 * ff));
    for (std::size_t y = 0; y < f; ++y)
        for (std::size_t x = 0; x < f; ++x) out(Eigen::Index(x + f * y)) = g.gi(i, x, y);
    for (std::size_t z = 0; z < f; ++z)
        for (std::size_t x = 0; x < f; ++x) out(Eigen::Index(ff + x + f * z)) = g.gj(x, j, z);
    for (std::size_t z = 0; z < f; ++z)
        for (std::size_t y = 0; y < f; ++y) out(Eigen::Index(2 * ff + y + f * z)) = g.gn(y, z, n);
    return out;
}

/// One row per event that belongs to `task`. Split tags start as Train.
inline FeatureMatrix extract_features(const EventStream& events, const EventTensor& tensor,
                                      const FactorTriple& g, Task task) {
    const Dims fd = g.output_dims();
    if (fd != tensor.dims())
        throw ConsistencyError("factors cover " + dims_string(fd) + " but the tensor is " +
                               dims_string(tensor.dims()));
    if (!events.labeled()) throw ProtocolError("feature extraction needs a label on every event");
    FeatureMatrix fm;
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < events.size(); ++k)
        if (task_class(task, *events.events[k].label) >= 0) keep.push_back(k);
    const std::size_t f = g.rank();
    fm.x.resize(Eigen::Index(keep.size()), Eigen::Index(3 * f * f));
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const Event& e = events.events[keep[r]];
        const std::size_t n = bin_index(tensor.bin_edges, e.t);
        if (e.i >= fd[0] || e.j >= fd[1] || n >= fd[2])
            throw ConsistencyError("event " + std::to_string(keep[r]) + " outside factor range");
        fm.x.row(Eigen::Index(r)) = feature_row(g, e.i, e.j, n);
        fm.label.push_back(task_class(task, *e.label));
        fm.frame.push_back(n);
        fm.event.push_back(keep[r]);
    }
    fm.split.assign(keep.size(), Split::Train);
    return fm;
}

/// First frame index of the test partition: ceil(train_fraction * N).
inline std::size_t split_frame(std::size_t N, double train_fraction = 0.6) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ArgumentError("train_fraction must lie in (0, 1)");
    // The epsilon keeps products like 0.6 * 100 from rounding up past 60.
    return std::size_t(std::ceil(train_fraction * double(N) - 1e-9));
}

/// Frames n < ceil(train_fraction * N) train, the rest test.
inline void temporal_split(FeatureMatrix& fm, std::size_t N, double train_fraction = 0.6) {
    const std::size_t cut = split_frame(N, train_fraction);
    std::size_t train = 0;
    for (std::size_t r = 0; r < fm.rows(); ++r) {
        fm.split[r] = fm.frame[r] < cut ? Split::Train : Split::Test;
        train += fm.split[r] == Split::Train;
    }
    if (train == 0) throw ProtocolError("temporal split left the training partition empty");
    if (train == fm.rows()) throw ProtocolError("temporal split left the test partition empty");
}

struct ClassifyResult {
    double auc = 0.0;
    std::size_t train_rows = 0, test_rows = 0;
    std::size_t train_positive = 0, test_positive = 0;
    SvmModel model;
    std::vector<double> test_scores;
    std::vector<int> test_labels;
};

/// Split, train on the training partition, score the test partition.
inline ClassifyResult classify(FeatureMatrix fm, std::size_t N, const SvmParams& svm = {},
                               double train_fraction = 0.6) {
    temporal_split(fm, N, train_fraction);
    ClassifyResult out;
    std::vector<Eigen::Index> tr, te;
    for (std::size_t r = 0; r < fm.rows(); ++r) (fm.split[r] == Split::Train ? tr : te).push_back(Eigen::Index(r));
    Matrix xtr(Eigen::Index(tr.size()), fm.x.cols()), xte(Eigen::Index(te.size()), fm.x.cols());
    std::vector<int> ytr;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        xtr.row(Eigen::Index(k)) = fm.x.row(tr[k]);
        ytr.push_back(fm.label[std::size_t(tr[k])]);
    }
    for (std::size_t k = 0; k < te.size(); ++k) {
        xte.row(Eigen::Index(k)) = fm.x.row(te[k]);
        out.test_labels.push_back(fm.label[std::size_t(te[k])]);
    }
    out.train_rows = tr.size();
    out.test_rows = te.size();
    for (int y : ytr) out.train_positive += y;
    for (int y : out.test_labels) out.test_positive += y;
    out.model = train_svm(xtr, ytr, svm);
    out.test_scores = out.model.decisions(xte);
    out.auc = auc(out.test_scores, out.test_labels);
    return out;
}

struct PipelineResult {
    ClassifyResult classification;
    SolverState solver;
};

/// Bin, decompose, extract features, and classify.
inline PipelineResult run_pipeline(const EventStream& events, std::size_t N, const SolverConfig& cfg, Task task,
                                   const SvmParams& svm = {}) {
    const EventTensor tensor = bin_to_tensor(events, N);
    PipelineResult out;
    out.solver = solve(tensor.to_real(), cfg);
    out.classification = classify(extract_features(events, tensor, out.solver.factors, task), N, svm);
    return out;
}

struct SweepCell {
    double lambda1 = 0.0, lambda2 = 0.0;
    double auc = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    std::size_t iters = 0;
    double seconds = 0.0;
    std::string error;  // empty on success

    bool ok() const noexcept { return error.empty(); }
};

struct AxisGap {
    std::string axis;     // "lambda1", "lambda2" or "all"
    double fixed = 0.0;   // value of the other parameter (NaN for "all")
    double auc_max = 0.0, auc_min = 0.0, gap = 0.0;
};

struct SweepResult {
    std::vector<SweepCell> cells;  // lambda1-major, lambda2 fastest
    std::vector<AxisGap> gaps;
};

namespace detail {

inline AxisGap make_gap(std::string axis, double fixed, const std::vector<double>& aucs) {
    AxisGap g{std::move(axis), fixed, 0.0, 0.0, 0.0};
    if (!aucs.empty()) {
        g.auc_max = *std::max_element(aucs.begin(), aucs.end());
        g.auc_min = *std::min_element(aucs.begin(), aucs.end());
        g.gap = auc_gap(aucs);
    }
    return g;
}

}  // namespace detail

/// AUC gaps of a finished grid: along lambda1 for each lambda2 value, along
/// lambda2 for each lambda1 value, and over the whole grid. Failed cells
/// are left out.
inline std::vector<AxisGap> sweep_gaps(const std::vector<double>& l1, const std::vector<double>& l2,
                                       const std::vector<SweepCell>& cells) {
    std::vector<AxisGap> out;
    auto cell = [&](std::size_t a, std::size_t b) -> const SweepCell& { return cells[a * l2.size() + b]; };
    for (std::size_t b = 0; b < l2.size(); ++b) {
        std::vector<double> v;
        for (std::size_t a = 0; a < l1.size(); ++a)
            if (cell(a, b).ok()) v.push_back(cell(a, b).auc);
        out.push_back(detail::make_gap("lambda1", l2[b], v));
    }
    for (std::size_t a = 0; a < l1.size(); ++a) {
        std::vector<double> v;
        for (std::size_t b = 0; b < l2.size(); ++b)
            if (cell(a, b).ok()) v.push_back(cell(a, b).auc);
        out.push_back(detail::make_gap("lambda2", l1[a], v));
    }
    std::vector<double> all;
    for (const auto& c : cells)
        if (c.ok()) all.push_back(c.auc);
    out.push_back(detail::make_gap("all", std::numeric_limits<double>::quiet_NaN(), all));
    return out;
}

/// Full pipeline at every (lambda1, lambda2) grid point with identical
/// seeds. Cells run on up to `threads` workers; a failing cell records its
/// error and the sweep carries on.
inline SweepResult sweep_lambdas(const EventStream& events, std::size_t N, const std::vector<double>& l1,
                                 const std::vector<double>& l2, const SolverConfig& base, Task task,
                                 const SvmParams& svm = {}, std::size_t threads = 1) {
    if (l1.empty() || l2.empty()) throw ArgumentError("sweep grid must be non-empty");
    const EventTensor tensor = bin_to_tensor(events, N);
    const Tensor3 e = tensor.to_real();
    SweepResult out;
    out.cells.resize(l1.size() * l2.size());
    for (std::size_t a = 0; a < l1.size(); ++a)
        for (std::size_t b = 0; b < l2.size(); ++b) {
            out.cells[a * l2.size() + b].lambda1 = l1[a];
            out.cells[a * l2.size() + b].lambda2 = l2[b];
        }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < out.cells.size();) {
            SweepCell& c = out.cells[k];
            SolverConfig cfg = base;
            cfg.lambda1 = c.lambda1;
            cfg.lambda2 = c.lambda2;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                const SolverState st = solve(e, cfg);
                c.converged = st.converged;
                c.iters = st.s;
                c.auc = classify(extract_features(events, tensor, st.factors, task), N, svm).auc;
            } catch (const std::exception& ex) {
                c.error = ex.what();
                c.auc = std::numeric_limits<double>::quiet_NaN();
            }
            c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    };
    const std::size_t nthreads = std::max<std::size_t>(1, std::min(threads, out.cells.size()));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    out.gaps = sweep_gaps(l1, l2, out.cells);
    return out;
}

}  // namespace entn
