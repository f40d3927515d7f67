#pragma once

// Factor checkpoints and solver traces.
//
// Text checkpoint:   line 1 `I J N f`, then G_i, G_j, G_n one per line,
//                    values in storage order (first index fastest), %.17g.
// Binary checkpoint: magic "ENTNFAC1", u64 I J N f, then for each factor
//                    u64 count followed by count little-endian doubles.

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "entn/errors.hpp"
#include "entn/f3tn.hpp"
#include "entn/solver.hpp"

namespace entn {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_checkpoint_text(std::ostream& out, const FactorTriple& g) {
    const auto [I, J, N] = g.output_dims();
    out << I << ' ' << J << ' ' << N << ' ' << g.rank() << '\n';
    for (Mode m : {Mode::I, Mode::J, Mode::N}) {
        const auto& v = g.factor(m).values();
        for (std::size_t k = 0; k < v.size(); ++k) out << (k ? " " : "") << format_double(v[k]);
        out << '\n';
    }
}

inline constexpr char kCheckpointMagic[8] = {'E', 'N', 'T', 'N', 'F', 'A', 'C', '1'};

inline void write_checkpoint_binary(std::ostream& out, const FactorTriple& g) {
    const auto [I, J, N] = g.output_dims();
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    auto put_u64 = [&](std::uint64_t v) {
        unsigned char b[8];
        for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
        out.write(reinterpret_cast<const char*>(b), 8);
    };
    for (std::uint64_t v : {std::uint64_t(I), std::uint64_t(J), std::uint64_t(N), std::uint64_t(g.rank())})
        put_u64(v);
    for (Mode m : {Mode::I, Mode::J, Mode::N}) {
        const auto& v = g.factor(m).values();
        put_u64(v.size());
        for (double d : v) {
            std::uint64_t bits;
            std::memcpy(&bits, &d, sizeof bits);
            put_u64(bits);
        }
    }
}

namespace detail {

inline FactorTriple read_checkpoint_binary(std::istream& in) {
    auto get_u64 = [&] {
        unsigned char b[8];
        if (!in.read(reinterpret_cast<char*>(b), 8)) throw ParseError(0, "checkpoint: truncated");
        std::uint64_t v = 0;
        for (int k = 0; k < 8; ++k) v |= std::uint64_t(b[k]) << (8 * k);
        return v;
    };
    const std::size_t I = get_u64(), J = get_u64(), N = get_u64(), f = get_u64();
    FactorTriple g(I, J, N, f);
    for (Mode m : {Mode::I, Mode::J, Mode::N}) {
        auto& v = g.factor(m).values();
        if (get_u64() != v.size()) throw ParseError(0, "checkpoint: factor length mismatch");
        for (double& d : v) {
            const std::uint64_t bits = get_u64();
            std::memcpy(&d, &bits, sizeof d);
        }
    }
    return g;
}

inline FactorTriple read_checkpoint_text(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, "checkpoint: missing header");
    std::istringstream hdr(line);
    std::size_t I = 0, J = 0, N = 0, f = 0;
    if (!(hdr >> I >> J >> N >> f) || f == 0) throw ParseError(1, "checkpoint: expected 'I J N f'");
    FactorTriple g(I, J, N, f);
    std::size_t lineno = 1;
    for (Mode m : {Mode::I, Mode::J, Mode::N}) {
        ++lineno;
        if (!std::getline(in, line)) throw ParseError(lineno, "checkpoint: missing factor line");
        auto& v = g.factor(m).values();
        const char* p = line.c_str();
        for (double& d : v) {
            char* end = nullptr;
            d = std::strtod(p, &end);
            if (end == p) throw ParseError(lineno, "checkpoint: too few values");
            p = end;
        }
        while (*p == ' ' || *p == '\r') ++p;
        if (*p != '\0') throw ParseError(lineno, "checkpoint: too many values");
    }
    return g;
}

}  // namespace detail

/// Reads either checkpoint variant, detected from the leading bytes.
inline FactorTriple read_checkpoint(std::istream& in) {
    char head[8] = {};
    in.read(head, 8);
    const auto got = in.gcount();
    if (got == 8 && std::memcmp(head, kCheckpointMagic, 8) == 0) return detail::read_checkpoint_binary(in);
    in.clear();
    in.seekg(0);
    return detail::read_checkpoint_text(in);
}

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
    out << "s,f,objective,rel_change\n";
    for (const auto& r : trace)
        out << r.s << ',' << r.f << ',' << format_double(r.objective) << ',' << format_double(r.rel_change)
            << '\n';
}

}  // namespace entn
