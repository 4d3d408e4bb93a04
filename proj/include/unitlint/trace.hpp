#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <string>
#include <vector>

#include "unitlint/canonical.hpp"
#include "unitlint/result.hpp"

namespace unitlint {

/// One trace row: a non-local variable store or a sampled quantity of
/// interest, stamped with virtual time.
struct Observation {
    enum class Kind { Var, Qoi };

    std::int64_t timestamp_ms = 0;
    Kind kind = Kind::Var;
    int var_id = -1;      // Kind::Var
    std::string qoi;      // Kind::Qoi
    double value = 0.0;

    bool operator==(const Observation&) const = default;
};

using Trace = std::vector<Observation>;

struct TraceFormatError {
    int line = 0;
    std::string message;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

}  // namespace detail

inline void write_trace(const Trace& trace, std::ostream& out) {
    out << "timestamp_ms,kind,id,value\n";
    for (const auto& o : trace) {
        out << o.timestamp_ms << ',';
        if (o.kind == Observation::Kind::Var)
            out << "var," << o.var_id;
        else
            out << "qoi," << o.qoi;
        out << ',' << detail::format_double(o.value) << '\n';
    }
}

inline Result<Trace, TraceFormatError> read_trace(std::istream& in) {
    Trace trace;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1) {
            if (line != "timestamp_ms,kind,id,value")
                return TraceFormatError{1, "bad header: " + line};
            continue;
        }
        if (line.empty()) continue;
        std::size_t c1 = line.find(',');
        std::size_t c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        std::size_t c3 = c2 == std::string::npos ? c2 : line.find(',', c2 + 1);
        if (c3 == std::string::npos)
            return TraceFormatError{lineno, "expected 4 fields: " + line};
        Observation o;
        auto ts = line.substr(0, c1);
        auto kind = line.substr(c1 + 1, c2 - c1 - 1);
        auto id = line.substr(c2 + 1, c3 - c2 - 1);
        auto val = line.substr(c3 + 1);
        if (std::from_chars(ts.data(), ts.data() + ts.size(), o.timestamp_ms).ptr !=
            ts.data() + ts.size())
            return TraceFormatError{lineno, "bad timestamp: " + ts};
        if (kind == "var") {
            o.kind = Observation::Kind::Var;
            if (std::from_chars(id.data(), id.data() + id.size(), o.var_id).ptr !=
                id.data() + id.size())
                return TraceFormatError{lineno, "bad var id: " + id};
        } else if (kind == "qoi") {
            o.kind = Observation::Kind::Qoi;
            o.qoi = id;
        } else {
            return TraceFormatError{lineno, "bad kind: " + kind};
        }
        if (std::from_chars(val.data(), val.data() + val.size(), o.value).ptr !=
            val.data() + val.size())
            return TraceFormatError{lineno, "bad value: " + val};
        trace.push_back(std::move(o));
    }
    return trace;
}

/// Registry sidecar: id -> canonical name, plus the enum constants seen
/// during canonicalization (the "enums" key extends the id map so consumers
/// can recognize enum-valued observations).
inline void write_registry_sidecar(const VarRegistry& registry,
                                   const std::set<std::string>& enum_consts,
                                   const std::set<int>& enum_typed_ids, std::ostream& out) {
    nlohmann::json j;
    j["vars"] = nlohmann::json::object();
    for (std::size_t i = 0; i < registry.size(); ++i)
        j["vars"][std::to_string(i)] = registry.name_of(static_cast<int>(i));
    j["enums"] = enum_consts;
    if (!enum_typed_ids.empty()) j["enum_typed"] = enum_typed_ids;
    out << j.dump(2) << '\n';
}

inline void write_registry_sidecar(const VarRegistry& registry,
                                   const std::set<std::string>& enum_consts, std::ostream& out) {
    write_registry_sidecar(registry, enum_consts, {}, out);
}

struct RegistrySidecar {
    VarRegistry registry;
    std::set<std::string> enum_consts;
    std::set<int> enum_typed;  // ids of enum-typed variables, excluded from mining
};

inline Result<RegistrySidecar, TraceFormatError> read_registry_sidecar(std::istream& in) {
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) return TraceFormatError{0, "malformed registry JSON"};
    RegistrySidecar out;
    if (!j.contains("vars") || !j["vars"].is_object())
        return TraceFormatError{0, "registry JSON missing \"vars\""};
    std::vector<std::string> names(j["vars"].size());
    for (auto& [key, val] : j["vars"].items()) {
        std::size_t id = 0;
        auto r = std::from_chars(key.data(), key.data() + key.size(), id);
        if (r.ptr != key.data() + key.size() || id >= names.size())
            return TraceFormatError{0, "registry ids must be dense integers"};
        names[id] = val.get<std::string>();
    }
    for (const auto& n : names) out.registry.intern(n);
    if (j.contains("enums"))
        for (const auto& e : j["enums"]) out.enum_consts.insert(e.get<std::string>());
    if (j.contains("enum_typed"))
        for (const auto& e : j["enum_typed"]) {
            if (!e.is_number_integer()) return TraceFormatError{0, "enum_typed ids must be ints"};
            out.enum_typed.insert(e.get<int>());
        }
    return out;
}

}  // namespace unitlint
