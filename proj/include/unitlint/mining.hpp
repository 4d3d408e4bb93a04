#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "unitlint/trace.hpp"
#include "unitlint/scenario.hpp"
#include "unitlint/vocab.hpp"

namespace unitlint {

struct MiningConfig {
    double eps_approx = 0.05;
    double linear_min_abs_pearson = 0.975;
    double eventually_min_confidence = 0.975;
    std::int64_t pair_window_ms = 500;
    double small_const_threshold = 10.0;
};

using Series = std::vector<std::pair<std::int64_t, double>>;

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double pearson_r = 0.0;
    Rational snapped_scale;  // log10 of the matched conversion entry
    std::string snapped_label;
};

struct DbEntry {
    std::string canonical_name;
    int var_id = -1;
    UnitType type;
    std::string rule;  // approximate | linear | eventually
    std::string qoi;
    Rational scale_log10 = rat(0);  // log10 of the var/qoi scale factor
};

/// DB: var id -> deduced type plus provenance.
using TypeDatabase = std::map<int, DbEntry>;

inline std::map<int, Series> var_series(const Trace& trace) {
    std::map<int, Series> out;
    for (const auto& o : trace)
        if (o.kind == Observation::Kind::Var) out[o.var_id].emplace_back(o.timestamp_ms, o.value);
    return out;
}

inline std::map<std::string, Series> qoi_series(const Trace& trace) {
    std::map<std::string, Series> out;
    for (const auto& o : trace)
        if (o.kind == Observation::Kind::Qoi) out[o.qoi].emplace_back(o.timestamp_ms, o.value);
    return out;
}

/// Drops enum-typed variables, single-observation variables, and variables
/// stuck at one small constant.
inline std::set<int> filter_candidates(const Trace& trace, const std::set<int>& enum_typed_ids,
                                       const MiningConfig& cfg = {}) {
    std::set<int> out;
    for (const auto& [id, series] : var_series(trace)) {
        if (enum_typed_ids.count(id)) continue;
        if (series.size() < 2) continue;
        bool constant = true;
        for (const auto& [t, v] : series)
            if (v != series.front().second) constant = false;
        if (constant && std::fabs(series.front().second) < cfg.small_const_threshold) continue;
        out.insert(id);
    }
    return out;
}

/// Greedy nearest-timestamp matching; each observation pairs at most once.
inline std::vector<std::pair<double, double>> align_pairs(const Series& a, const Series& b,
                                                          std::int64_t window_ms) {
    std::vector<std::pair<double, double>> pairs;
    std::size_t j = 0;
    for (const auto& [ta, va] : a) {
        while (j + 1 < b.size() &&
               std::llabs(b[j + 1].first - ta) <= std::llabs(b[j].first - ta))
            ++j;
        if (j < b.size() && std::llabs(b[j].first - ta) <= window_ms) {
            pairs.emplace_back(va, b[j].second);
            ++j;
        }
        if (j >= b.size()) break;
    }
    return pairs;
}

namespace detail {

inline double rel_error(double v, double q, double /*eps*/) {
    if (std::fabs(q) < 1e-9) return std::fabs(v - q);
    return std::fabs(v - q) / std::fabs(q);
}

}  // namespace detail

struct RuleMatch {
    bool matched = false;
    double mean_error = 0.0;
};

/// Rule 1: always approximately equal values share a type.
inline RuleMatch mine_approximate(const std::vector<std::pair<double, double>>& pairs,
                                  const MiningConfig& cfg = {}) {
    if (pairs.size() < 2) return {};
    double sum = 0.0;
    for (const auto& [v, q] : pairs) {
        double e = detail::rel_error(v, q, cfg.eps_approx);
        if (e >= cfg.eps_approx) return {};
        sum += e;
    }
    return {true, sum / static_cast<double>(pairs.size())};
}

/// Rule 2: a linear relation with a recognizable positive scale factor.
inline std::optional<LinearFit> mine_linear(const std::vector<std::pair<double, double>>& pairs,
                                            const MiningConfig& cfg = {}) {
    if (pairs.size() < 3) return std::nullopt;
    double n = static_cast<double>(pairs.size());
    double sv = 0, sq = 0, svv = 0, sqq = 0, svq = 0, sabs = 0;
    for (const auto& [v, q] : pairs) {
        sv += v;
        sq += q;
        svv += v * v;
        sqq += q * q;
        svq += v * q;
        sabs += std::fabs(v);
    }
    double var_q = sqq - sq * sq / n;
    double var_v = svv - sv * sv / n;
    if (var_q <= 0 || var_v <= 0) return std::nullopt;
    double cov = svq - sv * sq / n;
    LinearFit fit;
    fit.slope = cov / var_q;
    fit.intercept = (sv - fit.slope * sq) / n;
    fit.pearson_r = cov / std::sqrt(var_q * var_v);
    if (std::fabs(fit.pearson_r) < cfg.linear_min_abs_pearson) return std::nullopt;
    if (std::fabs(fit.intercept) > cfg.eps_approx * (sabs / n)) return std::nullopt;
    if (fit.slope <= 0) return std::nullopt;
    for (const auto& entry : conversion_table()) {
        if (std::fabs(fit.slope - entry.factor) / entry.factor < cfg.eps_approx) {
            fit.snapped_scale = entry.log10_value;
            fit.snapped_label = entry.label;
            return fit;
        }
    }
    return std::nullopt;
}

/// Maximal runs whose members stay within eps (relative) of the running
/// mean; returns (value, start time) per plateau.
inline std::vector<std::pair<double, std::int64_t>> plateaus(const Series& s, double eps) {
    std::vector<std::pair<double, std::int64_t>> out;
    std::size_t i = 0;
    while (i < s.size()) {
        double mean = s[i].second;
        std::int64_t start = s[i].first;
        std::size_t n = 1;
        std::size_t j = i + 1;
        while (j < s.size()) {
            double next_mean = (mean * static_cast<double>(n) + s[j].second) /
                               static_cast<double>(n + 1);
            if (detail::rel_error(s[j].second, next_mean, eps) >= eps) break;
            mean = next_mean;
            ++n;
            ++j;
        }
        out.emplace_back(mean, start);
        i = j;
    }
    return out;
}

namespace detail {

inline RuleMatch eventually_one_way(const Series& holder, const Series& attainer,
                                    const MiningConfig& cfg) {
    auto ps = plateaus(holder, cfg.eps_approx);
    // Need at least two distinct plateau values for the rule to say anything.
    bool distinct = false;
    for (std::size_t i = 1; i < ps.size(); ++i)
        if (rel_error(ps[i].first, ps[0].first, cfg.eps_approx) >= cfg.eps_approx) distinct = true;
    if (ps.size() < 2 || !distinct) return {};
    int hit = 0;
    double err_sum = 0.0;
    for (const auto& [value, start] : ps) {
        double best = -1.0;
        for (const auto& [t, q] : attainer) {
            if (t < start) continue;
            double e = std::fabs(value) < 1e-9 ? std::fabs(q - value)
                                               : std::fabs(q - value) / std::fabs(value);
            if (best < 0 || e < best) best = e;
        }
        if (best >= 0 && best < cfg.eps_approx) {
            ++hit;
            err_sum += best;
        }
    }
    double confidence = static_cast<double>(hit) / static_cast<double>(ps.size());
    if (confidence < cfg.eventually_min_confidence) return {};
    return {true, hit ? err_sum / hit : 0.0};
}

}  // namespace detail

/// Rule 3: every value the variable holds is eventually attained by the QOI
/// (or the reverse); either direction suffices.
inline RuleMatch mine_eventually(const Series& var, const Series& qoi,
                                 const MiningConfig& cfg = {}) {
    auto fwd = detail::eventually_one_way(var, qoi, cfg);
    if (fwd.matched) return fwd;
    return detail::eventually_one_way(qoi, var, cfg);
}

inline Result<UnitType, UnitError> qoi_unit_type(const QoiDecl& decl) {
    UnitType t;
    if (!decl.unit.empty()) {
        auto u = parse_unit_string(decl.unit);
        if (!u.ok()) return u.error();
        t = u.value();
    }
    if (!decl.frame.empty()) t.frame = FrameSpec::concrete(decl.frame);
    return t;
}

/// Applies the rules in order (approximate, linear, eventually) per
/// candidate variable; among QOIs matched under the same rule the smallest
/// mean relative error wins, ties broken by QOI name.
inline TypeDatabase build_type_db(const Trace& trace, const VarRegistry& registry,
                                  const std::set<int>& enum_typed_ids,
                                  const std::vector<QoiDecl>& qoi_decls,
                                  const MiningConfig& cfg = {}) {
    TypeDatabase db;
    auto vars = var_series(trace);
    auto qois = qoi_series(trace);
    auto candidates = filter_candidates(trace, enum_typed_ids, cfg);

    for (int id : candidates) {
        const Series& vs = vars.at(id);
        DbEntry best;
        double best_err = 0.0;
        auto consider = [&](const QoiDecl& decl, const std::string& rule, double err,
                            const Rational& scale) {
            auto qt = qoi_unit_type(decl);
            if (!qt.ok()) return;
            if (!best.rule.empty() && (err > best_err || (err == best_err && decl.name >= best.qoi)))
                return;
            best.canonical_name = registry.name_of(id);
            best.var_id = id;
            best.type = qt.value();
            best.type.scalar_log10 = best.type.scalar_log10 - scale;
            best.rule = rule;
            best.qoi = decl.name;
            best.scale_log10 = scale;
            best_err = err;
        };

        for (const char* rule : {"approximate", "linear", "eventually"}) {
            for (const auto& decl : qoi_decls) {
                auto qit = qois.find(decl.name);
                if (qit == qois.end()) continue;
                auto pairs = align_pairs(vs, qit->second, cfg.pair_window_ms);
                if (std::string_view(rule) == "approximate") {
                    auto m = mine_approximate(pairs, cfg);
                    if (m.matched) consider(decl, rule, m.mean_error, rat(0));
                } else if (std::string_view(rule) == "linear") {
                    if (auto fit = mine_linear(pairs, cfg)) {
                        double snapped = std::pow(
                            10.0, static_cast<double>(to_double(fit->snapped_scale)));
                        double err = std::fabs(fit->slope - snapped) / snapped;
                        consider(decl, rule, err, fit->snapped_scale);
                    }
                } else {
                    auto m = mine_eventually(vs, qit->second, cfg);
                    if (m.matched) consider(decl, rule, m.mean_error, rat(0));
                }
            }
            if (!best.rule.empty()) break;  // first matching rule wins
        }
        if (!best.rule.empty()) db.emplace(id, std::move(best));
    }
    return db;
}

inline void write_type_db(const TypeDatabase& db, std::ostream& out) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [id, e] : db) {
        nlohmann::json j;
        j["canonical_name"] = e.canonical_name;
        j["var_id"] = e.var_id;
        j["unit"] = format_unit(e.type);
        j["frame"] = e.type.frame.to_string();
        j["rule"] = e.rule;
        j["qoi"] = e.qoi;
        j["scale_log10"] = format_fraction(e.scale_log10);
        arr.push_back(std::move(j));
    }
    out << arr.dump(2) << '\n';
}

struct DbFormatError {
    std::string message;
};

inline Result<TypeDatabase, DbFormatError> read_type_db(std::istream& in) {
    nlohmann::json arr = nlohmann::json::parse(in, nullptr, false);
    if (arr.is_discarded() || !arr.is_array())
        return DbFormatError{"type database must be a JSON array"};
    TypeDatabase db;
    for (const auto& j : arr) {
        DbEntry e;
        try {
            e.canonical_name = j.at("canonical_name").get<std::string>();
            e.var_id = j.at("var_id").get<int>();
            auto unit = parse_unit_string(j.at("unit").get<std::string>());
            if (!unit.ok()) return DbFormatError{"unknown unit in entry " + e.canonical_name};
            e.type = unit.value();
            std::string frame = j.at("frame").get<std::string>();
            if (frame != "Any") {
                if (frame.size() > 1 && frame.front() == '{') {
                    std::set<std::string> ids;
                    std::string body = frame.substr(1, frame.size() - 2);
                    std::size_t start = 0;
                    while (start < body.size()) {
                        auto comma = body.find(',', start);
                        std::string piece =
                            body.substr(start, comma == std::string::npos ? comma : comma - start);
                        auto b = piece.find_first_not_of(' ');
                        auto en = piece.find_last_not_of(' ');
                        if (b != std::string::npos) ids.insert(piece.substr(b, en - b + 1));
                        if (comma == std::string::npos) break;
                        start = comma + 1;
                    }
                    e.type.frame = FrameSpec::one_of(ids);
                } else {
                    e.type.frame = FrameSpec::concrete(frame);
                }
            }
            e.rule = j.value("rule", "declared");
            e.qoi = j.value("qoi", "");
            auto scale = rational_from_fraction(j.value("scale_log10", "0"));
            if (!scale) return DbFormatError{"bad scale_log10 in entry " + e.canonical_name};
            e.scale_log10 = *scale;
        } catch (const nlohmann::json::exception& ex) {
            return DbFormatError{std::string("bad type database entry: ") + ex.what()};
        }
        db[e.var_id] = std::move(e);
    }
    return db;
}

}  // namespace unitlint
