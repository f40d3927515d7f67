#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "entn/errors.hpp"
#include "entn/tensor.hpp"

namespace entn {

/// Label used for background-noise events. Object events carry their
/// object id (0, 1, ...).
inline constexpr int kNoiseLabel = -1;

struct Geometry {
    std::size_t rows = 0;  // I
    std::size_t cols = 0;  // J
    friend bool operator==(const Geometry&, const Geometry&) = default;
};

struct Event {
    std::int64_t t = 0;  // microseconds
    std::size_t i = 0;   // row
    std::size_t j = 0;   // column
    std::optional<int> label;
    friend bool operator==(const Event&, const Event&) = default;
};

struct EventStream {
    std::vector<Event> events;
    Geometry geometry;
    std::int64_t t_min = 0;
    std::int64_t t_max = 0;

    bool empty() const noexcept { return events.empty(); }
    std::size_t size() const noexcept { return events.size(); }
    bool labeled() const noexcept {
        return !events.empty() &&
               std::all_of(events.begin(), events.end(), [](const Event& e) { return e.label.has_value(); });
    }
};

/// Sorts by time (stable, so equal timestamps keep input order), validates
/// coordinates against the geometry, and sets t_min/t_max from the data.
inline EventStream make_stream(std::vector<Event> events, Geometry geometry) {
    if (events.empty()) throw ValidationError("event stream is empty");
    for (std::size_t k = 0; k < events.size(); ++k) {
        const Event& e = events[k];
        if (e.t < 0) throw ValidationError("event " + std::to_string(k) + ": negative timestamp");
        if (e.i >= geometry.rows)
            throw ValidationError("event " + std::to_string(k) + ": i=" + std::to_string(e.i) +
                                  " >= " + std::to_string(geometry.rows));
        if (e.j >= geometry.cols)
            throw ValidationError("event " + std::to_string(k) + ": j=" + std::to_string(e.j) +
                                  " >= " + std::to_string(geometry.cols));
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    EventStream s;
    s.t_min = events.front().t;
    s.t_max = events.back().t;
    s.events = std::move(events);
    s.geometry = geometry;
    return s;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <typename T>
bool parse_int(std::string_view s, T& out) {
    if (s.empty()) return false;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && p == end;
}

}  // namespace detail

/// Reads the event CSV: an optional header naming the columns
/// (`t,i,j[,label][,polarity]`, any order), then one event per line.
/// Without a header the columns are t,i,j[,label]. Blank lines are skipped.
inline EventStream parse_events(std::istream& in, Geometry geometry) {
    int col_t = 0, col_i = 1, col_j = 2, col_label = 3;
    std::size_t min_cols = 3;
    bool header_seen = false;
    std::vector<Event> events;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view body = detail::trim(line);
        if (body.empty()) continue;
        auto fields = detail::split_csv(body);
        if (!header_seen && events.empty() && !fields.empty() && !fields[0].empty() &&
            !(std::isdigit(static_cast<unsigned char>(fields[0][0])) || fields[0][0] == '-')) {
            header_seen = true;
            col_t = col_i = col_j = col_label = -1;
            for (std::size_t c = 0; c < fields.size(); ++c) {
                const auto& name = fields[c];
                if (name == "t") col_t = int(c);
                else if (name == "i") col_i = int(c);
                else if (name == "j") col_j = int(c);
                else if (name == "label") col_label = int(c);
                else if (name != "polarity")
                    throw ParseError(lineno, "unknown column '" + std::string(name) + "'");
            }
            if (col_t < 0 || col_i < 0 || col_j < 0)
                throw ParseError(lineno, "header must name columns t, i and j");
            min_cols = fields.size();
            continue;
        }
        header_seen = true;
        if (fields.size() < min_cols)
            throw ParseError(lineno, "expected " + std::to_string(min_cols) + " fields, got " +
                                         std::to_string(fields.size()));
        Event e;
        long long i = 0, j = 0;
        if (!detail::parse_int(fields[std::size_t(col_t)], e.t))
            throw ParseError(lineno, "bad timestamp '" + std::string(fields[std::size_t(col_t)]) + "'");
        if (!detail::parse_int(fields[std::size_t(col_i)], i))
            throw ParseError(lineno, "bad i '" + std::string(fields[std::size_t(col_i)]) + "'");
        if (!detail::parse_int(fields[std::size_t(col_j)], j))
            throw ParseError(lineno, "bad j '" + std::string(fields[std::size_t(col_j)]) + "'");
        if (col_label >= 0 && std::size_t(col_label) < fields.size()) {
            int label = 0;
            if (!detail::parse_int(fields[std::size_t(col_label)], label))
                throw ParseError(lineno, "bad label '" + std::string(fields[std::size_t(col_label)]) + "'");
            e.label = label;
        }
        if (e.t < 0) throw ValidationError("line " + std::to_string(lineno) + ": negative timestamp");
        if (i < 0 || std::size_t(i) >= geometry.rows)
            throw ValidationError("line " + std::to_string(lineno) + ": i=" + std::to_string(i) +
                                  " outside [0, " + std::to_string(geometry.rows) + ")");
        if (j < 0 || std::size_t(j) >= geometry.cols)
            throw ValidationError("line " + std::to_string(lineno) + ": j=" + std::to_string(j) +
                                  " outside [0, " + std::to_string(geometry.cols) + ")");
        e.i = std::size_t(i);
        e.j = std::size_t(j);
        events.push_back(e);
    }
    if (events.empty()) throw ValidationError("event stream is empty");
    return make_stream(std::move(events), geometry);
}

inline EventStream parse_events(std::string_view text, Geometry geometry) {
    std::istringstream in{std::string(text)};
    return parse_events(in, geometry);
}

/// Canonical CSV. The label column is written iff every event carries one.
inline void write_events(std::ostream& out, const EventStream& s) {
    const bool with_label = s.labeled();
    out << (with_label ? "t,i,j,label\n" : "t,i,j\n");
    for (const Event& e : s.events) {
        out << e.t << ',' << e.i << ',' << e.j;
        if (with_label) out << ',' << *e.label;
        out << '\n';
    }
}

/// Binary event tensor with the time binning that produced it.
struct EventTensor {
    std::size_t I = 0, J = 0, N = 0;
    std::vector<std::uint8_t> data;  // (i, j, n) at i + I*(j + J*n)
    std::vector<std::int64_t> bin_edges;  // N + 1 entries

    Dims dims() const noexcept { return {I, J, N}; }
    std::uint8_t operator()(std::size_t i, std::size_t j, std::size_t n) const noexcept {
        return data[i + I * (j + J * n)];
    }
    std::uint8_t& at(std::size_t i, std::size_t j, std::size_t n) noexcept {
        return data[i + I * (j + J * n)];
    }
    std::size_t ones() const noexcept {
        return std::size_t(std::count(data.begin(), data.end(), std::uint8_t{1}));
    }
    Tensor3 to_real() const {
        std::vector<double> v(data.begin(), data.end());
        return Tensor3(dims(), std::move(v));
    }
    friend bool operator==(const EventTensor&, const EventTensor&) = default;
};

/// N equal-width edges over [t_min, t_max] in integer microseconds; the
/// remainder of the span is spread one unit each over the leading bins.
inline std::vector<std::int64_t> bin_edges(std::int64_t t_min, std::int64_t t_max, std::size_t N) {
    if (N == 0) throw ArgumentError("segment count N must be >= 1");
    const std::int64_t span = t_max - t_min;
    if (span < std::int64_t(N))
        throw ArgumentError("time span " + std::to_string(span) + "us is shorter than N=" +
                            std::to_string(N) + " segments");
    const std::int64_t base = span / std::int64_t(N);
    const std::int64_t rem = span % std::int64_t(N);
    std::vector<std::int64_t> edges(N + 1);
    for (std::size_t k = 0; k <= N; ++k)
        edges[k] = t_min + std::int64_t(k) * base + std::min<std::int64_t>(std::int64_t(k), rem);
    return edges;
}

/// Bin of timestamp t: half-open [edge_k, edge_k+1) except the last, closed.
inline std::size_t bin_index(const std::vector<std::int64_t>& edges, std::int64_t t) {
    const std::size_t N = edges.size() - 1;
    if (t < edges.front() || t > edges.back())
        throw ConsistencyError("timestamp " + std::to_string(t) + " outside binned range");
    const auto it = std::upper_bound(edges.begin(), edges.end(), t);
    const auto k = std::size_t(it - edges.begin()) - 1;
    return std::min(k, N - 1);
}

inline EventTensor bin_to_tensor(const EventStream& s, std::size_t N) {
    if (N == 0) throw ArgumentError("segment count N must be >= 1");
    if (s.empty()) throw ValidationError("cannot bin an empty event stream");
    EventTensor e;
    e.I = s.geometry.rows;
    e.J = s.geometry.cols;
    e.N = N;
    e.bin_edges = bin_edges(s.t_min, s.t_max, N);
    e.data.assign(e.I * e.J * N, 0);
    for (const Event& ev : s.events) e.at(ev.i, ev.j, bin_index(e.bin_edges, ev.t)) = 1;
    return e;
}

inline double tensor_density(const EventTensor& e) {
    const std::size_t total = e.I * e.J * e.N;
    return total == 0 ? 0.0 : double(e.ones()) / double(total);
}

/// Debug dump: `I J N` then the 0/1 values, n outer, i middle, j inner.
inline void write_tensor_dump(std::ostream& out, const EventTensor& e) {
    out << e.I << ' ' << e.J << ' ' << e.N << '\n';
    for (std::size_t n = 0; n < e.N; ++n)
        for (std::size_t i = 0; i < e.I; ++i) {
            for (std::size_t j = 0; j < e.J; ++j) out << (j ? " " : "") << int(e(i, j, n));
            out << '\n';
        }
}

inline EventTensor read_tensor_dump(std::istream& in) {
    EventTensor e;
    if (!(in >> e.I >> e.J >> e.N)) throw ParseError(1, "tensor dump: expected 'I J N' header");
    e.data.assign(e.I * e.J * e.N, 0);
    for (std::size_t n = 0; n < e.N; ++n)
        for (std::size_t i = 0; i < e.I; ++i)
            for (std::size_t j = 0; j < e.J; ++j) {
                int v = 0;
                if (!(in >> v) || (v != 0 && v != 1))
                    throw ParseError(2 + n * e.I + i, "tensor dump: expected 0 or 1");
                e.at(i, j, n) = std::uint8_t(v);
            }
    return e;
}

}  // namespace entn
