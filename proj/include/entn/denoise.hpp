#pragma once

// Reconstruction-threshold denoising: an event's score is the network's
// reconstructed value at its (i, j, n) cell; events scoring below the
// threshold are dropped as noise.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include "entn/checkpoint.hpp"
#include "entn/errors.hpp"
#include "entn/event.hpp"
#include "entn/f3tn.hpp"

namespace entn {

inline std::vector<double> score_events(const EventStream& events, const EventTensor& tensor,
                                        const FactorTriple& g) {
    if (g.output_dims() != tensor.dims())
        throw ConsistencyError("factors cover " + dims_string(g.output_dims()) + " but the tensor is " +
                               dims_string(tensor.dims()));
    std::vector<double> scores;
    scores.reserve(events.size());
    for (const Event& e : events.events) scores.push_back(f3tn_entry(g, e.i, e.j, bin_index(tensor.bin_edges, e.t)));
    return scores;
}

/// Lower q-quantile by nearest rank: the value at sorted index floor(q (n-1)).
inline double score_quantile(std::vector<double> scores, double q) {
    if (scores.empty()) throw ArgumentError("quantile of an empty score set");
    if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("quantile must lie in [0, 1]");
    const auto k = std::size_t(std::floor(q * double(scores.size() - 1)));
    std::nth_element(scores.begin(), scores.begin() + std::ptrdiff_t(k), scores.end());
    return scores[k];
}

struct DenoiseReport {
    double threshold = 0.0;
    std::vector<double> scores;
    std::vector<bool> kept;
    std::size_t kept_count = 0, removed_count = 0;
    bool empty_kept = false;

    bool has_labels = false;
    std::size_t signal_total = 0, signal_kept = 0, noise_kept = 0;
    double precision = 0.0;  // signal share of the kept set; 0 when nothing kept
    double recall = 0.0;     // kept share of the signal events
    double f1 = 0.0;
    double base_rate = 0.0;  // signal share of the whole stream
};

struct DenoiseResult {
    EventStream kept;
    DenoiseReport report;
};

/// Keeps events with score >= threshold. With labels, object events count
/// as signal and noise-labelled events as noise.
inline DenoiseResult filter(const EventStream& events, const std::vector<double>& scores, double threshold) {
    if (scores.size() != events.size())
        throw ArgumentError("filter: " + std::to_string(scores.size()) + " scores for " +
                            std::to_string(events.size()) + " events");
    DenoiseResult out;
    DenoiseReport& r = out.report;
    r.threshold = threshold;
    r.scores = scores;
    r.kept.resize(events.size());
    r.has_labels = events.labeled();
    out.kept.geometry = events.geometry;
    for (std::size_t k = 0; k < events.size(); ++k) {
        const Event& e = events.events[k];
        const bool keep = scores[k] >= threshold;
        r.kept[k] = keep;
        if (keep) out.kept.events.push_back(e);
        if (r.has_labels && *e.label != kNoiseLabel) {
            ++r.signal_total;
            r.signal_kept += keep;
        } else if (r.has_labels && keep) {
            ++r.noise_kept;
        }
    }
    r.kept_count = out.kept.events.size();
    r.removed_count = events.size() - r.kept_count;
    r.empty_kept = r.kept_count == 0;
    if (!out.kept.events.empty()) {
        out.kept.t_min = out.kept.events.front().t;
        out.kept.t_max = out.kept.events.back().t;
    }
    if (r.has_labels) {
        r.base_rate = events.empty() ? 0.0 : double(r.signal_total) / double(events.size());
        r.precision = r.kept_count == 0 ? 0.0 : double(r.signal_kept) / double(r.kept_count);
        r.recall = r.signal_total == 0 ? 0.0 : double(r.signal_kept) / double(r.signal_total);
        r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    }
    return out;
}

/// Per-event CSV: `index,t,i,j,score,kept[,label]`.
inline void write_denoise_scores(std::ostream& out, const EventStream& events, const DenoiseReport& r) {
    out << "index,t,i,j,score,kept" << (r.has_labels ? ",label\n" : "\n");
    for (std::size_t k = 0; k < events.size(); ++k) {
        const Event& e = events.events[k];
        out << k << ',' << e.t << ',' << e.i << ',' << e.j << ',' << format_double(r.scores[k]) << ','
            << (r.kept[k] ? 1 : 0);
        if (r.has_labels) out << ',' << *e.label;
        out << '\n';
    }
}

inline void write_denoise_summary(std::ostream& out, const DenoiseReport& r) {
    out << "threshold " << format_double(r.threshold) << '\n'
        << "events " << (r.kept_count + r.removed_count) << '\n'
        << "kept " << r.kept_count << '\n'
        << "removed " << r.removed_count << '\n'
        << "empty_kept " << (r.empty_kept ? 1 : 0) << '\n';
    if (r.has_labels) {
        out << "signal_events " << r.signal_total << '\n'
            << "base_rate " << format_double(r.base_rate) << '\n'
            << "precision " << format_double(r.precision) << '\n'
            << "recall " << format_double(r.recall) << '\n'
            << "f1 " << format_double(r.f1) << '\n';
    }
}

}  // namespace entn
