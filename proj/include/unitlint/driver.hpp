#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "unitlint/interp.hpp"
#include "unitlint/mining.hpp"
#include "unitlint/parser.hpp"
#include "unitlint/scenario.hpp"
#include "unitlint/solver.hpp"
#include "unitlint/trace.hpp"

namespace unitlint {

/// Exit-code contract: 0 = success / Sat, 1 = diagnostics reported,
/// 2 = input or configuration error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDiagnostics = 1;
inline constexpr int kExitInputError = 2;

struct CliConfig {
    std::string protocol;
    std::string qoi;
    std::string db;
    std::string scenario;
    std::string out;
    std::string format = "human";  // human | json
    bool dedup = true;
    MiningConfig mining;
    std::set<std::string> extra_ignore_fns;
    std::map<std::string, UnitType> conversion_fns;
    std::string program;                // run: the single program file
    std::string trace;                  // deduce: the trace file
    std::vector<std::string> programs;  // check / dump-constraints
};

namespace detail {

inline std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

inline std::optional<std::string> read_file(const std::string& path, std::string& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "cannot open " + path;
    std::ostringstream buf;
    buf << in.rdbuf();
    out = buf.str();
    return std::nullopt;
}

/// Parses "name=unit" or "name=unit@FRAME" conversion-function declarations.
inline std::optional<std::string> parse_conversion_decl(const std::string& text,
                                                        std::map<std::string, UnitType>& into) {
    std::size_t eq = text.find('=');
    if (eq == std::string::npos) return "conversion_fn must be name=unit[@FRAME]: " + text;
    std::string name = strip(text.substr(0, eq));
    std::string rest = strip(text.substr(eq + 1));
    std::string frame;
    std::size_t at = rest.find('@');
    if (at != std::string::npos) {
        frame = strip(rest.substr(at + 1));
        rest = strip(rest.substr(0, at));
    }
    auto unit = parse_unit_string(rest);
    if (!unit.ok()) return "bad unit in conversion_fn " + name + ": " + unit.error().detail;
    UnitType t = unit.value();
    if (!frame.empty()) t.frame = FrameSpec::concrete(frame);
    into[name] = t;
    return std::nullopt;
}

}  // namespace detail

/// Applies `key = value` lines from a config file. Unknown keys are an error.
inline std::optional<std::string> apply_config_text(const std::string& text, CliConfig& cfg) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = detail::strip(line);
        if (s.empty() || s[0] == '#') continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            return "config line " + std::to_string(lineno) + ": expected key = value";
        std::string key = detail::strip(s.substr(0, eq));
        std::string val = detail::unquote(detail::strip(s.substr(eq + 1)));
        auto bad = [&](const std::string& why) {
            return "config line " + std::to_string(lineno) + ": " + why;
        };
        if (key == "protocol") cfg.protocol = val;
        else if (key == "qoi") cfg.qoi = val;
        else if (key == "db") cfg.db = val;
        else if (key == "scenario") cfg.scenario = val;
        else if (key == "out") cfg.out = val;
        else if (key == "format") {
            if (val != "human" && val != "json") return bad("format must be human or json");
            cfg.format = val;
        } else if (key == "dedup") {
            if (val != "true" && val != "false") return bad("dedup must be true or false");
            cfg.dedup = val == "true";
        } else if (key == "eps_approx") {
            try {
                cfg.mining.eps_approx = std::stod(val);
            } catch (...) {
                return bad("eps_approx must be a number");
            }
        } else if (key == "linear_min_abs_pearson") {
            try {
                cfg.mining.linear_min_abs_pearson = std::stod(val);
            } catch (...) {
                return bad("linear_min_abs_pearson must be a number");
            }
        } else if (key == "eventually_min_confidence") {
            try {
                cfg.mining.eventually_min_confidence = std::stod(val);
            } catch (...) {
                return bad("eventually_min_confidence must be a number");
            }
        } else if (key == "pair_window_ms") {
            try {
                cfg.mining.pair_window_ms = std::stoll(val);
            } catch (...) {
                return bad("pair_window_ms must be an integer");
            }
        } else if (key == "ignore_fn") {
            cfg.extra_ignore_fns.insert(val);
        } else if (key == "conversion_fn") {
            if (auto err = detail::parse_conversion_decl(val, cfg.conversion_fns))
                return bad(*err);
        } else {
            return bad("unknown key '" + key + "'");
        }
    }
    return std::nullopt;
}

/// QOI declaration file: `[qoi.NAME]` sections with `unit` / `frame` keys.
/// Names absent from the file fall back to the stock table when consulted.
inline Result<std::vector<QoiDecl>, std::string> parse_qoi_decls(const std::string& text) {
    std::vector<QoiDecl> decls;
    QoiDecl* cur = nullptr;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = detail::strip(line);
        if (s.empty() || s[0] == '#') continue;
        if (s.front() == '[') {
            if (s.rfind("[qoi.", 0) != 0 || s.back() != ']')
                return "qoi file line " + std::to_string(lineno) + ": expected [qoi.NAME]";
            decls.push_back({s.substr(5, s.size() - 6), "", ""});
            cur = &decls.back();
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos || !cur)
            return "qoi file line " + std::to_string(lineno) + ": expected key = value";
        std::string key = detail::strip(s.substr(0, eq));
        std::string val = detail::unquote(detail::strip(s.substr(eq + 1)));
        if (key == "unit") cur->unit = val;
        else if (key == "frame") cur->frame = val;
        else return "qoi file line " + std::to_string(lineno) + ": unknown key '" + key + "'";
    }
    return decls;
}

namespace detail {

struct LoadedProgram {
    Program program;
    CanonicalResult canon;
};

inline Result<LoadedProgram, std::string> load_program(const std::string& path) {
    std::string src;
    if (auto err = read_file(path, src)) return *err;
    std::filesystem::path dir = std::filesystem::path(path).parent_path();
    FileLoader loader = [dir](const std::string& inc) -> std::optional<std::string> {
        std::string text;
        if (read_file((dir / inc).string(), text)) return std::nullopt;
        return text;
    };
    auto p = parse_source(src, path, loader);
    if (!p.ok())
        return p.error().pos.to_string() + ": " + p.error().message;
    LoadedProgram out{std::move(p).value(), {}};
    auto c = canonicalize(out.program);
    if (!c.ok())
        return c.error().pos.to_string() + ": " + c.error().message;
    out.canon = std::move(c).value();
    return out;
}

inline std::set<int> enum_typed_ids(const Program& program, const CanonicalResult& canon) {
    std::set<int> ids;
    auto add = [&](const std::string& name) {
        if (auto id = canon.registry.lookup(name)) ids.insert(*id);
    };
    for (const auto& g : program.globals)
        if (g.type.name == "enum") add(g.name);
    for (const auto& s : program.structs)
        for (const auto& f : s.fields)
            if (f.type.name == "enum") add(s.name + "." + f.name);
    return ids;
}

inline Result<ProtocolModel, std::string> load_protocol(const std::string& path) {
    if (path.empty()) return ProtocolModel{};
    std::string xml;
    if (auto err = read_file(path, xml)) return *err;
    auto model = parse_protocol(xml);
    if (!model.ok()) return path + ": " + model.error().message;
    return model.value();
}

inline Result<TypeDatabase, std::string> load_db(const std::string& path) {
    if (path.empty()) return TypeDatabase{};
    std::ifstream in(path);
    if (!in) return "cannot open " + path;
    auto db = read_type_db(in);
    if (!db.ok()) return path + ": " + db.error().message;
    return db.value();
}

inline nlohmann::json diag_to_json(const Diagnostic& d) {
    nlohmann::json j;
    j["file"] = d.file;
    j["line"] = d.line;
    j["col"] = d.col;
    j["severity"] = d.severity;
    j["code"] = d.code;
    j["message"] = d.message;
    j["left_type"] = d.left_type;
    j["right_type"] = d.right_type;
    j["chain"] = d.chain;
    return j;
}

inline void print_diagnostics(const std::vector<Diagnostic>& diags, const std::string& format,
                              std::ostream& out) {
    if (format == "json") {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& d : diags) arr.push_back(diag_to_json(d));
        out << arr.dump(2) << '\n';
        return;
    }
    for (const auto& d : diags) {
        out << d.file << ':' << d.line << ':' << d.col << ": " << d.severity << ' ' << d.code
            << ": " << d.message << '\n';
        for (const auto& hop : d.chain) out << "    " << hop << '\n';
    }
}

inline InferOptions infer_options(const CliConfig& cfg) {
    InferOptions opts;
    for (const auto& fn : cfg.extra_ignore_fns) opts.ignore_fns.insert(fn);
    opts.conversion_fns = cfg.conversion_fns;
    return opts;
}

}  // namespace detail

inline int cmd_run(const CliConfig& cfg, std::ostream&, std::ostream& err) {
    if (cfg.program.empty() || cfg.scenario.empty() || cfg.out.empty()) {
        err << "run requires a program file, --scenario, and --out\n";
        return kExitInputError;
    }
    auto loaded = detail::load_program(cfg.program);
    if (!loaded.ok()) {
        err << loaded.error() << '\n';
        return kExitInputError;
    }
    std::string sc_text;
    if (auto e = detail::read_file(cfg.scenario, sc_text)) {
        err << *e << '\n';
        return kExitInputError;
    }
    auto sc = parse_scenario(sc_text);
    if (!sc.ok()) {
        err << cfg.scenario << ": " << sc.error().message << '\n';
        return kExitInputError;
    }
    auto trace = interpret(loaded.value().program, loaded.value().canon, sc.value());
    if (!trace.ok()) {
        err << "runtime fault: " << trace.error().message << '\n';
        return kExitInputError;
    }
    std::ofstream out_file(cfg.out, std::ios::binary);
    if (!out_file) {
        err << "cannot write " << cfg.out << '\n';
        return kExitInputError;
    }
    write_trace(trace.value(), out_file);
    std::ofstream sidecar(cfg.out + ".registry.json", std::ios::binary);
    if (!sidecar) {
        err << "cannot write " << cfg.out << ".registry.json\n";
        return kExitInputError;
    }
    write_registry_sidecar(loaded.value().canon.registry, loaded.value().canon.enum_consts,
                           detail::enum_typed_ids(loaded.value().program, loaded.value().canon),
                           sidecar);
    return kExitOk;
}

inline int cmd_deduce(const CliConfig& cfg, std::ostream&, std::ostream& err) {
    if (cfg.trace.empty() || cfg.out.empty()) {
        err << "deduce requires a trace file and --out\n";
        return kExitInputError;
    }
    std::ifstream trace_in(cfg.trace, std::ios::binary);
    if (!trace_in) {
        err << "cannot open " << cfg.trace << '\n';
        return kExitInputError;
    }
    auto trace = read_trace(trace_in);
    if (!trace.ok()) {
        err << cfg.trace << ':' << trace.error().line << ": " << trace.error().message << '\n';
        return kExitInputError;
    }
    std::ifstream side_in(cfg.trace + ".registry.json", std::ios::binary);
    if (!side_in) {
        err << "cannot open " << cfg.trace << ".registry.json\n";
        return kExitInputError;
    }
    auto sidecar = read_registry_sidecar(side_in);
    if (!sidecar.ok()) {
        err << cfg.trace << ".registry.json: " << sidecar.error().message << '\n';
        return kExitInputError;
    }
    std::vector<QoiDecl> decls;
    if (cfg.qoi.empty()) {
        decls = default_qoi_decls();
    } else {
        std::string text;
        if (auto e = detail::read_file(cfg.qoi, text)) {
            err << *e << '\n';
            return kExitInputError;
        }
        auto parsed = parse_qoi_decls(text);
        if (!parsed.ok()) {
            err << parsed.error() << '\n';
            return kExitInputError;
        }
        decls = parsed.value();
    }
    TypeDatabase db = build_type_db(trace.value(), sidecar.value().registry,
                                    sidecar.value().enum_typed, decls, cfg.mining);
    std::ofstream out_file(cfg.out, std::ios::binary);
    if (!out_file) {
        err << "cannot write " << cfg.out << '\n';
        return kExitInputError;
    }
    write_type_db(db, out_file);
    return kExitOk;
}

namespace detail {

/// Shared front half of check / dump-constraints: every program file becomes
/// one translation unit with its own constraint stream.
inline Result<std::vector<ConstraintSet>, std::string> generate_all(const CliConfig& cfg) {
    auto model = load_protocol(cfg.protocol);
    if (!model.ok()) return model.error();
    auto db = load_db(cfg.db);
    if (!db.ok()) return db.error();
    InferOptions opts = infer_options(cfg);
    std::vector<ConstraintSet> sets;
    for (const auto& path : cfg.programs) {
        auto loaded = load_program(path);
        if (!loaded.ok()) return loaded.error();
        sets.push_back(
            generate_constraints(loaded.value().program, model.value(), db.value(), opts));
    }
    return sets;
}

}  // namespace detail

inline int cmd_check(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.programs.empty()) {
        err << "check requires at least one program file\n";
        return kExitInputError;
    }
    auto sets = detail::generate_all(cfg);
    if (!sets.ok()) {
        err << sets.error() << '\n';
        return kExitInputError;
    }
    // Solve each translation unit separately, then deduplicate across the
    // concatenated findings so a shared include reports once.
    std::vector<Diagnostic> all;
    for (const auto& cs : sets.value()) {
        auto r = solve(cs, SolveOptions{false});
        for (auto& d : r.diagnostics) all.push_back(std::move(d));
    }
    if (cfg.dedup) {
        std::set<std::string> seen;
        std::vector<Diagnostic> kept;
        for (auto& d : all) {
            std::string key = d.file + ":" + std::to_string(d.line) + ":" + d.code + ":" +
                              d.left_type + ":" + d.right_type;
            if (seen.insert(key).second) kept.push_back(std::move(d));
        }
        all = std::move(kept);
    }
    detail::print_diagnostics(all, cfg.format, out);
    return all.empty() ? kExitOk : kExitDiagnostics;
}

inline int cmd_dump_constraints(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.programs.empty()) {
        err << "dump-constraints requires at least one program file\n";
        return kExitInputError;
    }
    auto sets = detail::generate_all(cfg);
    if (!sets.ok()) {
        err << sets.error() << '\n';
        return kExitInputError;
    }
    for (const auto& cs : sets.value()) out << dump_constraints(cs);
    return kExitOk;
}

}  // namespace unitlint
