#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "entn/errors.hpp"

namespace entn {

/// Area under the ROC curve in its Mann-Whitney form: the probability that
/// a random positive (label != 0) outscores a random negative, ties
/// counting one half. Sort-based, O(n log n).
///
/// The statistic is accumulated as the integer 2U, so the result is exact
/// up to the final division.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ArgumentError("auc: scores and labels differ in length");
    for (double s : scores)
        if (std::isnan(s)) throw ArgumentError("auc: NaN score");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    std::uint64_t pos = 0, neg = 0, twice_u = 0;
    for (std::size_t k = 0; k < order.size();) {
        std::size_t end = k;
        std::uint64_t gp = 0, gn = 0;
        while (end < order.size() && scores[order[end]] == scores[order[k]]) {
            (labels[order[end]] != 0 ? gp : gn) += 1;
            ++end;
        }
        // Positives in this tie group beat every lower negative and tie the
        // negatives alongside them.
        twice_u += 2 * gp * neg + gp * gn;
        pos += gp;
        neg += gn;
        k = end;
    }
    if (pos == 0 || neg == 0) throw ProtocolError("auc: both classes must be present");
    return (0.5 * double(twice_u)) / (double(pos) * double(neg));
}

inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    return auc(std::span<const double>(scores), std::span<const int>(labels));
}

/// 100 * (max - min) / max over the given AUC values; 0 for fewer than two.
inline double auc_gap(std::span<const double> values) {
    if (values.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*hi <= 0.0) return 0.0;
    return 100.0 * (*hi - *lo) / *hi;
}

}  // namespace entn
