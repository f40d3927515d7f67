#pragma once

// Synthetic DVS-like scenes: objects moving along parameterized paths emit
// events at the pixels of a square footprint, plus uniform background noise.
//
// Scene file format (`#` starts a comment):
//
//   rows = 64
//   cols = 48
//   frames = 60
//   duration_us = 600000
//   noise_per_frame = 3.7
//   seed = 7
//
//   [object]
//   trajectory = circular     # linear | circular | sinusoidal
//   start_row = 32            # centre for circular paths
//   start_col = 14
//   ...
//
// Positions are in pixels and evaluated at frame midpoints t = n + 0.5
// (t in frames):
//   linear      p(t) = start + velocity * t
//   circular    p(t) = start + radius * (sin(w t + phase), cos(w t + phase))
//   sinusoidal  p(t) = start + velocity * t + amplitude * sin(w t + phase)

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "entn/checkpoint.hpp"
#include "entn/errors.hpp"
#include "entn/event.hpp"
#include "entn/rng.hpp"

namespace entn {

enum class Trajectory { Linear, Circular, Sinusoidal };

inline const char* trajectory_name(Trajectory t) {
    switch (t) {
        case Trajectory::Linear: return "linear";
        case Trajectory::Circular: return "circular";
        case Trajectory::Sinusoidal: return "sinusoidal";
    }
    return "?";
}

struct ObjectSpec {
    Trajectory trajectory = Trajectory::Linear;
    double start_row = 0.0, start_col = 0.0;
    double velocity_row = 0.0, velocity_col = 0.0;  // pixels per frame
    double radius = 0.0;                            // circular path radius
    double amplitude_row = 0.0, amplitude_col = 0.0;
    double angular_speed = 0.0;                     // radians per frame
    double phase = 0.0;
    int footprint = 0;          // L-inf radius in pixels
    double probability = 1.0;   // per footprint pixel per frame

    struct Position {
        double row, col;
    };
    Position position(double t) const {
        switch (trajectory) {
            case Trajectory::Linear:
                return {start_row + velocity_row * t, start_col + velocity_col * t};
            case Trajectory::Circular:
                return {start_row + radius * std::sin(angular_speed * t + phase),
                        start_col + radius * std::cos(angular_speed * t + phase)};
            case Trajectory::Sinusoidal: {
                const double s = std::sin(angular_speed * t + phase);
                return {start_row + velocity_row * t + amplitude_row * s,
                        start_col + velocity_col * t + amplitude_col * s};
            }
        }
        return {start_row, start_col};
    }
};

struct SceneSpec {
    std::size_t rows = 64;
    std::size_t cols = 48;
    std::size_t frames = 60;
    std::int64_t duration_us = 600000;
    double noise_per_frame = 0.0;
    std::uint64_t seed = 0;
    std::vector<ObjectSpec> objects;

    Geometry geometry() const { return {rows, cols}; }

    void validate() const {
        if (rows == 0) throw ValidationError("rows: must be >= 1");
        if (cols == 0) throw ValidationError("cols: must be >= 1");
        if (frames == 0) throw ValidationError("frames: must be >= 1");
        if (duration_us < std::int64_t(frames))
            throw ValidationError("duration_us: must be at least one microsecond per frame");
        if (!(noise_per_frame >= 0.0) || !std::isfinite(noise_per_frame))
            throw ValidationError("noise_per_frame: must be a finite value >= 0");
        for (std::size_t k = 0; k < objects.size(); ++k) {
            const auto& o = objects[k];
            const std::string where = "object " + std::to_string(k) + ": ";
            if (!(o.probability >= 0.0 && o.probability <= 1.0))
                throw ValidationError(where + "probability must lie in [0, 1]");
            if (o.footprint < 0) throw ValidationError(where + "footprint must be >= 0");
            if (std::size_t(2 * o.footprint + 1) > rows || std::size_t(2 * o.footprint + 1) > cols)
                throw ValidationError(where + "footprint larger than the sensor");
        }
    }

    /// Frame n covers [frame_start(n), frame_start(n + 1)).
    std::int64_t frame_start(std::size_t n) const {
        return std::int64_t(n) * duration_us / std::int64_t(frames);
    }
};

namespace detail {

inline std::string trim_copy(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v, std::size_t line) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) throw ParseError(line, key + ": expected a number, got '" + v + "'");
    return out;
}

inline long long parse_integer(const std::string& key, const std::string& v, std::size_t line) {
    long long out = 0;
    if (!parse_int(std::string_view(v), out))
        throw ParseError(line, key + ": expected an integer, got '" + v + "'");
    return out;
}

/// Poisson draw by inversion; fine for the small per-frame rates used here.
inline std::size_t poisson(Rng& rng, double mean) {
    if (mean <= 0.0) return 0;
    const double u = uniform01(rng);
    double p = std::exp(-mean), cdf = p;
    std::size_t k = 0;
    while (u >= cdf && k < 100000) {
        ++k;
        p *= mean / double(k);
        cdf += p;
        if (p == 0.0) break;
    }
    return k;
}

}  // namespace detail

inline SceneSpec parse_scene(std::istream& in) {
    SceneSpec spec;
    ObjectSpec* obj = nullptr;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string s = detail::trim_copy(raw);
        if (s.empty()) continue;
        if (s == "[object]") {
            spec.objects.emplace_back();
            obj = &spec.objects.back();
            continue;
        }
        if (s == "[scene]") {
            obj = nullptr;
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ParseError(line, "expected 'key = value', got '" + s + "'");
        const std::string key = detail::trim_copy(s.substr(0, eq));
        const std::string val = detail::trim_copy(s.substr(eq + 1));
        auto real = [&] { return detail::parse_real(key, val, line); };
        auto integer = [&] { return detail::parse_integer(key, val, line); };
        auto positive = [&] {
            const long long v = integer();
            if (v < 0) throw ParseError(line, key + ": must be >= 0");
            return std::size_t(v);
        };
        if (obj == nullptr) {
            if (key == "rows") spec.rows = positive();
            else if (key == "cols") spec.cols = positive();
            else if (key == "frames") spec.frames = positive();
            else if (key == "duration_us") spec.duration_us = integer();
            else if (key == "noise_per_frame") spec.noise_per_frame = real();
            else if (key == "seed") spec.seed = std::uint64_t(positive());
            else throw ParseError(line, "unknown scene field '" + key + "'");
        } else {
            if (key == "trajectory") {
                if (val == "linear") obj->trajectory = Trajectory::Linear;
                else if (val == "circular") obj->trajectory = Trajectory::Circular;
                else if (val == "sinusoidal") obj->trajectory = Trajectory::Sinusoidal;
                else throw ParseError(line, "trajectory: unknown kind '" + val + "'");
            } else if (key == "start_row") obj->start_row = real();
            else if (key == "start_col") obj->start_col = real();
            else if (key == "velocity_row") obj->velocity_row = real();
            else if (key == "velocity_col") obj->velocity_col = real();
            else if (key == "radius") obj->radius = real();
            else if (key == "amplitude_row") obj->amplitude_row = real();
            else if (key == "amplitude_col") obj->amplitude_col = real();
            else if (key == "angular_speed") obj->angular_speed = real();
            else if (key == "phase") obj->phase = real();
            else if (key == "footprint") obj->footprint = int(integer());
            else if (key == "probability") obj->probability = real();
            else throw ParseError(line, "unknown object field '" + key + "'");
        }
    }
    spec.validate();
    return spec;
}

inline SceneSpec load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open scene spec '" + path + "'");
    return parse_scene(in);
}

inline void write_scene(std::ostream& out, const SceneSpec& s) {
    auto d = [](double v) { return format_double(v); };
    out << "rows = " << s.rows << "\ncols = " << s.cols << "\nframes = " << s.frames
        << "\nduration_us = " << s.duration_us << "\nnoise_per_frame = " << d(s.noise_per_frame)
        << "\nseed = " << s.seed << '\n';
    for (const auto& o : s.objects) {
        out << "\n[object]\ntrajectory = " << trajectory_name(o.trajectory) << "\nstart_row = " << d(o.start_row)
            << "\nstart_col = " << d(o.start_col) << "\nvelocity_row = " << d(o.velocity_row)
            << "\nvelocity_col = " << d(o.velocity_col) << "\nradius = " << d(o.radius)
            << "\namplitude_row = " << d(o.amplitude_row) << "\namplitude_col = " << d(o.amplitude_col)
            << "\nangular_speed = " << d(o.angular_speed) << "\nphase = " << d(o.phase)
            << "\nfootprint = " << o.footprint << "\nprobability = " << d(o.probability) << '\n';
    }
}

/// Footprint centre of an object at frame n, clipped so the footprint
/// stays on the sensor. `clipped` reports whether clipping was needed.
struct FootprintCentre {
    std::size_t row, col;
    bool clipped;
};

inline FootprintCentre footprint_centre(const SceneSpec& s, const ObjectSpec& o, std::size_t n) {
    const auto p = o.position(double(n) + 0.5);
    const double r = o.footprint;
    const double lo_r = r, hi_r = double(s.rows) - 1.0 - r;
    const double lo_c = r, hi_c = double(s.cols) - 1.0 - r;
    double row = std::round(p.row), col = std::round(p.col);
    bool clipped = false;
    if (!(row >= lo_r)) row = lo_r, clipped = true;
    if (row > hi_r) row = hi_r, clipped = true;
    if (!(col >= lo_c)) col = lo_c, clipped = true;
    if (col > hi_c) col = hi_c, clipped = true;
    return {std::size_t(row), std::size_t(col), clipped};
}

struct GeneratedScene {
    EventStream stream;
    std::vector<std::string> warnings;
};

inline GeneratedScene generate(const SceneSpec& spec) {
    spec.validate();
    GeneratedScene out;
    std::vector<bool> warned(spec.objects.size(), false);
    std::vector<Event> events;
    for (std::size_t n = 0; n < spec.frames; ++n) {
        Rng rng = make_rng(spec.seed, "synth.frame", n);
        const std::int64_t t0 = spec.frame_start(n);
        const std::int64_t width = spec.frame_start(n + 1) - t0;
        auto stamp = [&] { return t0 + std::int64_t(uniform01(rng) * double(width)); };
        for (std::size_t k = 0; k < spec.objects.size(); ++k) {
            const auto& o = spec.objects[k];
            const auto c = footprint_centre(spec, o, n);
            if (c.clipped && !warned[k]) {
                warned[k] = true;
                out.warnings.push_back("object " + std::to_string(k) + " leaves the sensor at frame " +
                                       std::to_string(n) + "; footprint clipped to the border");
            }
            for (int di = -o.footprint; di <= o.footprint; ++di)
                for (int dj = -o.footprint; dj <= o.footprint; ++dj) {
                    const double u = uniform01(rng);
                    const std::int64_t t = stamp();
                    if (u < o.probability)
                        events.push_back({t, std::size_t(std::int64_t(c.row) + di),
                                          std::size_t(std::int64_t(c.col) + dj), int(k)});
                }
        }
        const std::size_t noise = detail::poisson(rng, spec.noise_per_frame);
        for (std::size_t k = 0; k < noise; ++k) {
            const auto i = std::min(spec.rows - 1, std::size_t(uniform01(rng) * double(spec.rows)));
            const auto j = std::min(spec.cols - 1, std::size_t(uniform01(rng) * double(spec.cols)));
            events.push_back({stamp(), i, j, kNoiseLabel});
        }
    }
    if (events.empty()) throw ValidationError("scene produced no events (no objects emit and no noise)");
    out.stream = make_stream(std::move(events), spec.geometry());
    return out;
}

struct SceneSummary {
    double expected_object_events = 0.0;
    double expected_noise_events = 0.0;
    double expected_events = 0.0;
    /// Expected fraction of active (pixel, frame) cells.
    double expected_density = 0.0;
};

/// Closed-form expectations of the generator's output.
inline SceneSummary describe(const SceneSpec& spec) {
    spec.validate();
    SceneSummary s;
    const double pixels = double(spec.rows * spec.cols);
    const double p_quiet_noise = std::exp(-spec.noise_per_frame / pixels);
    double active = 0.0;
    std::vector<double> quiet(spec.rows * spec.cols);
    for (std::size_t n = 0; n < spec.frames; ++n) {
        std::fill(quiet.begin(), quiet.end(), 1.0);
        for (const auto& o : spec.objects) {
            const auto c = footprint_centre(spec, o, n);
            for (int di = -o.footprint; di <= o.footprint; ++di)
                for (int dj = -o.footprint; dj <= o.footprint; ++dj) {
                    const auto i = std::size_t(std::int64_t(c.row) + di);
                    const auto j = std::size_t(std::int64_t(c.col) + dj);
                    quiet[i + spec.rows * j] *= 1.0 - o.probability;
                }
            const double side = 2.0 * o.footprint + 1.0;
            s.expected_object_events += side * side * o.probability;
        }
        for (double q : quiet) active += 1.0 - q * p_quiet_noise;
    }
    s.expected_noise_events = spec.noise_per_frame * double(spec.frames);
    s.expected_events = s.expected_object_events + s.expected_noise_events;
    s.expected_density = active / (pixels * double(spec.frames));
    return s;
}

}  // namespace entn
