#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "unitlint/mining.hpp"

using namespace unitlint;

namespace {

Series make_series(std::int64_t t0, std::int64_t step, const std::vector<double>& vals) {
    Series s;
    for (std::size_t i = 0; i < vals.size(); ++i)
        s.emplace_back(t0 + static_cast<std::int64_t>(i) * step, vals[i]);
    return s;
}

Trace trace_of(const std::map<int, Series>& vars, const std::map<std::string, Series>& qois) {
    Trace t;
    for (const auto& [id, s] : vars)
        for (const auto& [ts, v] : s) t.push_back({ts, Observation::Kind::Var, id, "", v});
    for (const auto& [name, s] : qois)
        for (const auto& [ts, v] : s) t.push_back({ts, Observation::Kind::Qoi, -1, name, v});
    std::stable_sort(t.begin(), t.end(), [](const Observation& a, const Observation& b) {
        return a.timestamp_ms < b.timestamp_ms;
    });
    return t;
}

}  // namespace

TEST_CASE("candidate filter drops enums, small constants, and singletons") {
    std::map<int, Series> vars;
    vars[0] = make_series(0, 1000, {3, 3, 3});         // constant < 10
    vars[1] = make_series(0, 1000, {500, 500, 500});   // constant but large
    vars[2] = make_series(0, 1000, {123.4});           // single observation
    vars[3] = make_series(0, 1000, {1.0, 2.0});        // varies
    vars[4] = make_series(0, 1000, {7.0, 7.0});        // enum-typed
    auto t = trace_of(vars, {});
    auto c = filter_candidates(t, {4});
    REQUIRE(c == std::set<int>{1, 3});

    // Brute-force the predicate over every var in the fixture.
    for (const auto& [id, s] : vars) {
        bool constant = true;
        for (const auto& [ts, v] : s) constant = constant && v == s.front().second;
        bool keep = id != 4 && s.size() >= 2 && !(constant && std::fabs(s.front().second) < 10.0);
        REQUIRE(c.count(id) == (keep ? 1u : 0u));
    }
}

TEST_CASE("align_pairs on identical timestamps is a full zip") {
    auto a = make_series(0, 1000, {1, 2, 3, 4});
    auto b = make_series(0, 1000, {10, 20, 30, 40});
    auto p = align_pairs(a, b, 500);
    REQUIRE(p.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) REQUIRE(p[i].second == p[i].first * 10);
}

TEST_CASE("align_pairs across disjoint time ranges is empty") {
    auto a = make_series(0, 100, {1, 2, 3});
    auto b = make_series(10000, 100, {1, 2, 3});
    REQUIRE(align_pairs(a, b, 500).empty());
}

TEST_CASE("align_pairs pairs fully at a 200ms offset with a 500ms window") {
    auto a = make_series(0, 1000, {1, 2, 3, 4, 5});
    auto b = make_series(200, 1000, {1, 2, 3, 4, 5});
    auto p = align_pairs(a, b, 500);
    REQUIRE(p.size() == 5);
    for (const auto& [x, y] : p) REQUIRE(x == y);
}

TEST_CASE("approximate accepts small perturbations and rejects one bad sample") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> jitter(-0.01, 0.01);
    std::vector<double> alt, var;
    for (int i = 0; i < 20; ++i) {
        double q = 50.0 + 2.0 * i;
        alt.push_back(q);
        var.push_back(q * (1.0 + jitter(rng)));
    }
    auto qs = make_series(0, 1000, alt);
    auto vs = make_series(0, 1000, var);
    auto pairs = align_pairs(vs, qs, 500);
    REQUIRE(mine_approximate(pairs).matched);

    // Exact equality matches with zero error.
    auto exact = align_pairs(qs, qs, 500);
    auto m = mine_approximate(exact);
    REQUIRE(m.matched);
    REQUIRE(m.mean_error == 0.0);

    // One sample off by 50% sinks the whole match.
    var[10] = alt[10] * 1.5;
    auto bad = align_pairs(make_series(0, 1000, var), qs, 500);
    REQUIRE_FALSE(mine_approximate(bad).matched);

    REQUIRE_FALSE(mine_approximate({{1.0, 1.0}}).matched);  // < 2 pairs
}

TEST_CASE("approximate match set is monotone in eps") {
    std::mt19937 rng(20286);
    std::uniform_real_distribution<double> noise(-0.1, 0.1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> q, v;
        for (int i = 0; i < 10; ++i) {
            double base = 20.0 + i;
            q.push_back(base);
            v.push_back(base * (1.0 + noise(rng)));
        }
        auto pairs = align_pairs(make_series(0, 1000, v), make_series(0, 1000, q), 500);
        bool prev = false;
        for (double eps : {0.01, 0.02, 0.05, 0.11}) {
            MiningConfig cfg;
            cfg.eps_approx = eps;
            bool now = mine_approximate(pairs, cfg).matched;
            if (prev) REQUIRE(now);  // growing eps never loses a match
            prev = now;
        }
    }
}

TEST_CASE("linear fit snaps a 100x relation to scale 2") {
    std::vector<double> q, v;
    for (int i = 0; i < 10; ++i) {
        q.push_back(10.0 + 3.0 * i);
        v.push_back(100.0 * q.back());
    }
    auto pairs = align_pairs(make_series(0, 1000, v), make_series(0, 1000, q), 500);
    auto fit = mine_linear(pairs);
    REQUIRE(fit.has_value());
    REQUIRE(fit->slope == Catch::Approx(100.0));
    REQUIRE(fit->intercept == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(fit->snapped_scale == rat(2));

    // Independent least-squares oracle.
    double n = static_cast<double>(pairs.size());
    double sv = 0, sq = 0, sqq = 0, svq = 0;
    for (auto [vv, qq] : pairs) {
        sv += vv;
        sq += qq;
        sqq += qq * qq;
        svq += vv * qq;
    }
    double slope_oracle = (n * svq - sv * sq) / (n * sqq - sq * sq);
    REQUIRE(fit->slope == Catch::Approx(slope_oracle));
}

TEST_CASE("linear rejects non-table slopes, negative slopes, and offsets") {
    std::vector<double> q, v37, vneg, voff;
    for (int i = 0; i < 10; ++i) {
        q.push_back(10.0 + i);
        v37.push_back(3.7 * q.back());
        vneg.push_back(-10.0 * q.back());
        voff.push_back(10.0 * q.back() + 50.0);
    }
    auto qs = make_series(0, 1000, q);
    REQUIRE_FALSE(mine_linear(align_pairs(make_series(0, 1000, v37), qs, 500)).has_value());
    REQUIRE_FALSE(mine_linear(align_pairs(make_series(0, 1000, vneg), qs, 500)).has_value());
    REQUIRE_FALSE(mine_linear(align_pairs(make_series(0, 1000, voff), qs, 500)).has_value());
    REQUIRE_FALSE(mine_linear({{1.0, 1.0}, {2.0, 2.0}}).has_value());  // < 3 pairs
    // Zero variance on either side.
    REQUIRE_FALSE(mine_linear({{1.0, 1.0}, {1.0, 2.0}, {1.0, 3.0}}).has_value());
}

TEST_CASE("linear recovers table constants under 0.1% noise") {
    std::mt19937 rng(17354);
    std::normal_distribution<double> noise(0.0, 0.001);
    struct Case {
        double k;
        Rational scale;
    };
    auto pin = [](const char* s) { return *rational_from_decimal(s); };
    for (const auto& c : std::vector<Case>{{1000.0, rat(3)},
                                           {0.001, rat(-3)},
                                           {60.0, pin("1.7781512503836436325")},
                                           {0.3048, pin("-0.51598503733243711282")},
                                           {1609.344, pin("3.2066488852013751461")}}) {
        std::vector<double> q, v;
        for (int i = 0; i < 30; ++i) {
            q.push_back(5.0 + 1.5 * i);
            v.push_back(c.k * q.back() * (1.0 + noise(rng)));
        }
        auto fit = mine_linear(align_pairs(make_series(0, 1000, v), make_series(0, 1000, q), 500));
        REQUIRE(fit.has_value());
        REQUIRE(fit->snapped_scale == c.scale);
    }
}

TEST_CASE("eventually matches stepped targets against a ramping QOI") {
    // target steps 10 -> 30 -> 50; alt ramps 0..50 over 10s and attains each.
    auto target = make_series(0, 1000, {10, 10, 10, 30, 30, 30, 50, 50, 50});
    std::vector<double> altv;
    for (int i = 0; i <= 10; ++i) altv.push_back(5.0 * i);
    auto alt = make_series(0, 1000, altv);
    REQUIRE(mine_eventually(target, alt).matched);

    // Plateau values the QOI never reaches.
    auto wild = make_series(0, 1000, {1000, 1000, 2000, 2000});
    REQUIRE_FALSE(mine_eventually(wild, alt).matched);

    // A single plateau is not evidence.
    auto flat = make_series(0, 1000, {10, 10, 10, 10});
    REQUIRE_FALSE(mine_eventually(flat, alt).matched);
}

TEST_CASE("eventually confidence threshold sits at 39 of 40 plateaus") {
    auto build = [](int attained) {
        Series var, qoi;
        std::int64_t t = 0;
        for (int p = 0; p < 40; ++p) {
            double value = 1000.0 * std::pow(1.2, p);  // 20% gaps stay distinct
            var.emplace_back(t, value);
            var.emplace_back(t + 100, value);
            if (p < attained) qoi.emplace_back(t + 200, value);
            t += 1000;
        }
        return std::make_pair(var, qoi);
    };
    auto [v39, q39] = build(39);
    REQUIRE(mine_eventually(v39, q39).matched);
    auto [v38, q38] = build(38);
    REQUIRE_FALSE(mine_eventually(v38, q38).matched);
}

TEST_CASE("plateau splitting") {
    auto s = make_series(0, 1000, {10, 10.1, 9.9, 30, 30.2, 50});
    auto ps = plateaus(s, 0.05);
    REQUIRE(ps.size() == 3);
    REQUIRE(ps[0].first == Catch::Approx(10.0).epsilon(0.01));
    REQUIRE(ps[1].first == Catch::Approx(30.1).epsilon(0.01));
    REQUIRE(ps[2].second == 5000);
}

TEST_CASE("build_type_db deduces an angle tracker as (deg, BODY_FRD)") {
    VarRegistry reg;
    int id = reg.intern("_angle");
    std::vector<double> heading = {12, 18, 25, 33, 40, 47};
    auto t = trace_of({{id, make_series(0, 1000, heading)}},
                      {{"heading_to_obstacle", make_series(0, 1000, heading)}});
    auto db = build_type_db(t, reg, {}, default_qoi_decls());
    REQUIRE(db.count(id) == 1);
    const auto& e = db.at(id);
    REQUIRE(e.rule == "approximate");
    REQUIRE(e.qoi == "heading_to_obstacle");
    REQUIRE(format_unit(e.type) == "deg");
    REQUIRE(e.type.frame == FrameSpec::concrete("BODY_FRD"));
    REQUIRE(e.canonical_name == "_angle");
}

TEST_CASE("build_type_db on an empty trace is empty") {
    VarRegistry reg;
    REQUIRE(build_type_db({}, reg, {}, default_qoi_decls()).empty());
}

TEST_CASE("smaller mean relative error wins among rule-1 matches") {
    VarRegistry reg;
    int id = reg.intern("_v");
    std::vector<double> base = {100, 110, 120, 130};
    std::vector<double> var, dist;
    for (double b : base) {
        var.push_back(b * 1.003);   // 0.3% from alt
        dist.push_back(b * 0.963);  // ~4% from var
    }
    auto t = trace_of({{id, make_series(0, 1000, var)}},
                      {{"alt", make_series(0, 1000, base)},
                       {"obstacle_distance", make_series(0, 1000, dist)}});
    auto db = build_type_db(t, reg, {}, default_qoi_decls());
    REQUIRE(db.at(id).qoi == "alt");
}

TEST_CASE("linear deduction rescales the QOI type to the stored unit") {
    VarRegistry reg;
    int id = reg.intern("_alt_cm");
    std::vector<double> alt = {10, 20, 30, 40, 50};
    std::vector<double> var;
    for (double a : alt) var.push_back(100.0 * a);
    auto t = trace_of({{id, make_series(0, 1000, var)}},
                      {{"alt", make_series(0, 1000, alt)}});
    auto db = build_type_db(t, reg, {}, default_qoi_decls());
    REQUIRE(db.at(id).rule == "linear");
    REQUIRE(db.at(id).scale_log10 == rat(2));
    // Stored values are 100x the meter QOI, so the stored unit is cm.
    REQUIRE(format_unit(db.at(id).type) == "cm");
    REQUIRE(db.at(id).type.frame == FrameSpec::concrete("GLOBAL"));
}

TEST_CASE("rule precedence: an approximate match never lands on rules 2 or 3") {
    VarRegistry reg;
    int id = reg.intern("_x");
    std::vector<double> q = {20, 30, 40, 50};
    auto t = trace_of({{id, make_series(0, 1000, q)}}, {{"alt", make_series(0, 1000, q)}});
    auto db = build_type_db(t, reg, {}, default_qoi_decls());
    REQUIRE(db.at(id).rule == "approximate");
}

TEST_CASE("db determinism and JSON round-trip") {
    VarRegistry reg;
    int a = reg.intern("_angle");
    int b = reg.intern("_alt_cm");
    std::vector<double> heading = {12, 18, 25, 33};
    std::vector<double> alt = {10, 20, 30, 40};
    std::vector<double> alt_cm;
    for (double x : alt) alt_cm.push_back(100.0 * x);
    auto t = trace_of({{a, make_series(0, 1000, heading)}, {b, make_series(0, 1000, alt_cm)}},
                      {{"heading_to_obstacle", make_series(0, 1000, heading)},
                       {"alt", make_series(0, 1000, alt)}});
    auto db1 = build_type_db(t, reg, {}, default_qoi_decls());
    auto db2 = build_type_db(t, reg, {}, default_qoi_decls());
    std::ostringstream o1, o2;
    write_type_db(db1, o1);
    write_type_db(db2, o2);
    REQUIRE(o1.str() == o2.str());

    std::istringstream in(o1.str());
    auto rt = read_type_db(in);
    REQUIRE(rt.ok());
    REQUIRE(rt.value().size() == db1.size());
    for (const auto& [id, e] : rt.value()) {
        REQUIRE(e.canonical_name == db1.at(id).canonical_name);
        REQUIRE(e.type.scalar_log10 == db1.at(id).type.scalar_log10);
        REQUIRE(e.type.frame == db1.at(id).type.frame);
        REQUIRE(e.scale_log10 == db1.at(id).scale_log10);
    }

    std::istringstream bad("{\"not\": \"array\"}");
    REQUIRE_FALSE(read_type_db(bad).ok());
}
