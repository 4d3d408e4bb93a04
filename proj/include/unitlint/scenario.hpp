#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "unitlint/result.hpp"

namespace unitlint {

/// Declared unit and frame for a quantity of interest.
struct QoiDecl {
    std::string name;
    std::string unit;   // vocabulary string; empty = dimensionless
    std::string frame;  // empty = Any
};

/// The stock QOI vocabulary: 15 vehicle-state quantities plus the two
/// obstacle-relative ones.
inline const std::vector<QoiDecl>& default_qoi_decls() {
    static const std::vector<QoiDecl> kDecls = {
        {"time_boot", "us", ""},     {"q_w", "", ""},
        {"q_x", "", ""},             {"q_y", "", ""},
        {"q_z", "", ""},             {"roll_rate", "rad/s", ""},
        {"pitch_rate", "rad/s", ""}, {"yaw_rate", "rad/s", ""},
        {"lat", "deg", "GLOBAL"},    {"lon", "deg", "GLOBAL"},
        {"alt", "m", "GLOBAL"},      {"vx", "m/s", "GLOBAL"},
        {"vy", "m/s", "GLOBAL"},     {"vz", "m/s", "GLOBAL"},
        {"time_unix", "us", ""},     {"obstacle_distance", "m", "BODY_FRD"},
        {"heading_to_obstacle", "deg", "BODY_FRD"},
    };
    return kDecls;
}

inline const QoiDecl* default_qoi_decl(const std::string& name) {
    for (const auto& d : default_qoi_decls())
        if (d.name == name) return &d;
    return nullptr;
}

/// Time series for one QOI: either sampled points (piecewise linear, held
/// after the last point) or a closed-form generator.
struct QoiSeries {
    enum class Kind { Points, Constant, Linear, Ramp };
    Kind kind = Kind::Constant;
    std::vector<std::pair<std::int64_t, double>> points;  // (t_ms, value), sorted
    double a = 0.0;  // Constant: value; Linear: slope per second; Ramp: start
    double b = 0.0;  // Linear: intercept; Ramp: end

    double value_at(std::int64_t t_ms, std::int64_t duration_ms) const {
        double t_s = static_cast<double>(t_ms) / 1000.0;
        switch (kind) {
            case Kind::Constant: return a;
            case Kind::Linear: return a * t_s + b;
            case Kind::Ramp: {
                if (duration_ms <= 0) return a;
                double f = static_cast<double>(t_ms) / static_cast<double>(duration_ms);
                if (f < 0) f = 0;
                if (f > 1) f = 1;
                return a + (b - a) * f;
            }
            case Kind::Points: {
                if (points.empty()) return 0.0;
                if (t_ms <= points.front().first) return points.front().second;
                if (t_ms >= points.back().first) return points.back().second;
                for (std::size_t i = 1; i < points.size(); ++i) {
                    if (t_ms <= points[i].first) {
                        auto [t0, v0] = points[i - 1];
                        auto [t1, v1] = points[i];
                        double f = static_cast<double>(t_ms - t0) / static_cast<double>(t1 - t0);
                        return v0 + (v1 - v0) * f;
                    }
                }
                return points.back().second;
            }
        }
        return 0.0;
    }
};

struct QoiSpec {
    QoiDecl decl;
    QoiSeries series;
};

/// A scripted input: call `call` at virtual time `t_ms` with the given
/// argument values. Keys are parameter names, or "param.field" for
/// struct-typed parameters. String values name enum constants.
struct Event {
    std::int64_t t_ms = 0;
    std::string call;
    std::map<std::string, std::variant<double, std::string>> args;
};

struct Scenario {
    std::int64_t duration_ms = 10000;
    std::int64_t tick_ms = 100;
    double sample_rate_hz = 1.0;
    std::map<std::string, QoiSpec> qois;
    std::vector<Event> events;
};

struct ScenarioError {
    int line = 0;
    std::string message;
};

namespace detail {

inline bool parse_number(const std::string& s, double& out) {
    auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

inline std::optional<QoiSeries> parse_series_expr(const std::string& text) {
    auto open = text.find('(');
    auto close = text.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
        return std::nullopt;
    std::string fn = text.substr(0, open);
    std::vector<double> args;
    std::string body = text.substr(open + 1, close - open - 1);
    std::size_t start = 0;
    while (start <= body.size() && !body.empty()) {
        auto comma = body.find(',', start);
        std::string piece = body.substr(start, comma == std::string::npos ? comma : comma - start);
        auto b = piece.find_first_not_of(" \t");
        auto e = piece.find_last_not_of(" \t");
        if (b == std::string::npos) return std::nullopt;
        double v;
        if (!parse_number(piece.substr(b, e - b + 1), v)) return std::nullopt;
        args.push_back(v);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    QoiSeries s;
    if (fn == "constant" && args.size() == 1) {
        s.kind = QoiSeries::Kind::Constant;
        s.a = args[0];
    } else if (fn == "linear" && args.size() == 2) {
        s.kind = QoiSeries::Kind::Linear;
        s.a = args[0];
        s.b = args[1];
    } else if (fn == "ramp" && args.size() == 2) {
        s.kind = QoiSeries::Kind::Ramp;
        s.a = args[0];
        s.b = args[1];
    } else {
        return std::nullopt;
    }
    return s;
}

inline std::optional<QoiSeries> parse_series_csv(const std::string& text) {
    QoiSeries s;
    s.kind = QoiSeries::Kind::Points;
    std::size_t start = 0;
    while (start < text.size()) {
        auto semi = text.find(';', start);
        std::string pair = text.substr(start, semi == std::string::npos ? semi : semi - start);
        auto comma = pair.find(',');
        if (comma == std::string::npos) return std::nullopt;
        auto trim = [](std::string v) {
            auto b = v.find_first_not_of(" \t");
            if (b == std::string::npos) return std::string();
            auto e = v.find_last_not_of(" \t");
            return v.substr(b, e - b + 1);
        };
        double t, v;
        if (!parse_number(trim(pair.substr(0, comma)), t) ||
            !parse_number(trim(pair.substr(comma + 1)), v))
            return std::nullopt;
        s.points.emplace_back(static_cast<std::int64_t>(t), v);
        if (semi == std::string::npos) break;
        start = semi + 1;
    }
    if (s.points.empty()) return std::nullopt;
    for (std::size_t i = 1; i < s.points.size(); ++i)
        if (s.points[i].first <= s.points[i - 1].first) return std::nullopt;
    return s;
}

}  // namespace detail

/// Parses the scenario dialect: top-level keys, [qoi.<name>] sections, and
/// [[event]] sections, with `key = value` lines (numbers or quoted strings;
/// event arg keys may be dotted).
inline Result<Scenario, ScenarioError> parse_scenario(const std::string& text) {
    Scenario sc;
    enum class Section { Top, Qoi, Event };
    Section section = Section::Top;
    std::string qoi_name;
    Event* event = nullptr;

    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++lineno;

        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);

        if (line == "[[event]]") {
            sc.events.emplace_back();
            event = &sc.events.back();
            section = Section::Event;
            continue;
        }
        if (line.size() > 2 && line.front() == '[' && line.back() == ']') {
            std::string name = line.substr(1, line.size() - 2);
            if (name.rfind("qoi.", 0) != 0)
                return ScenarioError{lineno, "unknown section [" + name + "]"};
            qoi_name = name.substr(4);
            if (qoi_name.empty()) return ScenarioError{lineno, "empty qoi name"};
            auto& spec = sc.qois[qoi_name];
            spec.decl.name = qoi_name;
            if (const QoiDecl* d = default_qoi_decl(qoi_name)) spec.decl = *d;
            section = Section::Qoi;
            continue;
        }

        auto eq = line.find('=');
        if (eq == std::string::npos) return ScenarioError{lineno, "expected key = value: " + line};
        auto trim = [](std::string v) {
            auto bb = v.find_first_not_of(" \t");
            if (bb == std::string::npos) return std::string();
            auto ee = v.find_last_not_of(" \t");
            return v.substr(bb, ee - bb + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string raw = trim(line.substr(eq + 1));
        bool is_string = raw.size() >= 2 && raw.front() == '"' && raw.back() == '"';
        std::string str_val = is_string ? raw.substr(1, raw.size() - 2) : "";
        double num_val = 0;
        bool is_number = !is_string && detail::parse_number(raw, num_val);
        if (!is_string && !is_number)
            return ScenarioError{lineno, "bad value for " + key + ": " + raw};

        switch (section) {
            case Section::Top:
                if (key == "duration_s" && is_number)
                    sc.duration_ms = static_cast<std::int64_t>(num_val * 1000.0);
                else if (key == "tick_ms" && is_number)
                    sc.tick_ms = static_cast<std::int64_t>(num_val);
                else if (key == "sample_rate_hz" && is_number)
                    sc.sample_rate_hz = num_val;
                else
                    return ScenarioError{lineno, "unknown top-level key " + key};
                break;
            case Section::Qoi: {
                auto& spec = sc.qois[qoi_name];
                if (key == "unit" && is_string) {
                    spec.decl.unit = str_val;
                } else if (key == "frame" && is_string) {
                    spec.decl.frame = str_val;
                } else if (key == "expr" && is_string) {
                    auto s = detail::parse_series_expr(str_val);
                    if (!s) return ScenarioError{lineno, "bad expr: " + str_val};
                    spec.series = *s;
                } else if (key == "csv" && is_string) {
                    auto s = detail::parse_series_csv(str_val);
                    if (!s) return ScenarioError{lineno, "bad csv points: " + str_val};
                    spec.series = *s;
                } else {
                    return ScenarioError{lineno, "unknown qoi key " + key};
                }
                break;
            }
            case Section::Event:
                if (key == "t_ms" && is_number) {
                    event->t_ms = static_cast<std::int64_t>(num_val);
                } else if (key == "call" && is_string) {
                    event->call = str_val;
                } else if (key.rfind("args.", 0) == 0) {
                    std::string arg = key.substr(5);
                    if (arg.empty()) return ScenarioError{lineno, "empty arg name"};
                    if (is_string)
                        event->args[arg] = str_val;
                    else
                        event->args[arg] = num_val;
                } else {
                    return ScenarioError{lineno, "unknown event key " + key};
                }
                break;
        }
    }

    for (const auto& ev : sc.events)
        if (ev.call.empty()) return ScenarioError{0, "event missing call"};
    std::stable_sort(sc.events.begin(), sc.events.end(),
                     [](const Event& a, const Event& b) { return a.t_ms < b.t_ms; });
    return sc;
}

}  // namespace unitlint
