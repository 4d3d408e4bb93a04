#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "unitlint/canonical.hpp"
#include "unitlint/scenario.hpp"
#include "unitlint/trace.hpp"

namespace unitlint {

struct RuntimeFault {
    SrcPos pos;
    std::string message;
};

/// Stable numeric stand-in for an enum constant, so comparisons against
/// scripted enum-valued inputs work inside the interpreter. FNV-1a, folded
/// to a positive integer representable in a double.
inline double enum_const_value(const std::string& name) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : name) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return static_cast<double>(h & 0x7fffffffull);
}

namespace detail {

struct StructVal {
    std::string type;
    std::map<std::string, double> fields;
};
using ArrayVal = std::map<long long, double>;
using Value = std::variant<double, StructVal, ArrayVal>;

class Interp {
public:
    Interp(const Program& program, const CanonicalResult& canon, const Scenario& scenario)
        : prog_(program), canon_(canon), sc_(scenario) {
        window_ms_ = static_cast<std::int64_t>(1000.0 / sc_.sample_rate_hz);
        if (window_ms_ <= 0) window_ms_ = 1;
        for (const auto& g : prog_.globals) {
            if (g.type.is_array)
                globals_[g.name] = ArrayVal{};
            else if (is_struct(g.type.name))
                globals_[g.name] = StructVal{g.type.name, {}};
            else
                globals_[g.name] = 0.0;
        }
    }

    Result<Trace, RuntimeFault> run() {
        // Merge QOI sample instants with scripted events; samples fire first
        // at equal timestamps.
        std::size_t ev = 0;
        for (std::int64_t t = 0; t <= sc_.duration_ms; t += window_ms_) {
            while (ev < sc_.events.size() && sc_.events[ev].t_ms < t) {
                if (auto f = fire(sc_.events[ev++])) return *f;
            }
            for (const auto& [name, spec] : sc_.qois) {
                Observation o;
                o.timestamp_ms = t;
                o.kind = Observation::Kind::Qoi;
                o.qoi = name;
                o.value = spec.series.value_at(t, sc_.duration_ms);
                trace_.push_back(std::move(o));
            }
        }
        while (ev < sc_.events.size() && sc_.events[ev].t_ms <= sc_.duration_ms) {
            if (auto f = fire(sc_.events[ev++])) return *f;
        }
        std::stable_sort(trace_.begin(), trace_.end(),
                         [](const Observation& a, const Observation& b) {
                             return a.timestamp_ms < b.timestamp_ms;
                         });
        return std::move(trace_);
    }

private:
    const Program& prog_;
    const CanonicalResult& canon_;
    const Scenario& sc_;
    std::int64_t window_ms_ = 1000;
    std::int64_t now_ = 0;
    std::map<std::string, Value> globals_;
    std::map<int, std::int64_t> last_record_;
    Trace trace_;
    int depth_ = 0;
    std::optional<RuntimeFault> fault_;

    struct Frame {
        std::map<std::string, Value> locals;
        bool returned = false;
        double ret = 0.0;
    };

    bool is_struct(const std::string& name) const {
        for (const auto& s : prog_.structs)
            if (s.name == name) return true;
        return false;
    }

    const FunctionDef* find_fn(const std::string& name) const {
        for (const auto& f : prog_.functions)
            if (f.name == name) return &f;
        return nullptr;
    }

    std::optional<RuntimeFault> fire(const Event& e) {
        now_ = e.t_ms;
        const FunctionDef* fn = find_fn(e.call);
        if (!fn) return RuntimeFault{{}, "event calls unknown function '" + e.call + "'"};
        std::vector<Value> args;
        for (const auto& p : fn->params) {
            if (is_struct(p.type.name)) {
                StructVal sv{p.type.name, {}};
                std::string prefix = p.name + ".";
                for (const auto& [key, val] : e.args) {
                    if (key.rfind(prefix, 0) != 0) continue;
                    std::string field = key.substr(prefix.size());
                    sv.fields[field] = std::holds_alternative<double>(val)
                                           ? std::get<double>(val)
                                           : enum_const_value(std::get<std::string>(val));
                }
                args.push_back(std::move(sv));
            } else {
                auto it = e.args.find(p.name);
                double v = 0.0;
                if (it != e.args.end())
                    v = std::holds_alternative<double>(it->second)
                            ? std::get<double>(it->second)
                            : enum_const_value(std::get<std::string>(it->second));
                args.push_back(v);
            }
        }
        call(*fn, std::move(args));
        if (fault_) return fault_;
        return std::nullopt;
    }

    double call(const FunctionDef& fn, std::vector<Value> args) {
        if (++depth_ > 256) {
            fault_ = RuntimeFault{fn.pos, "call depth exceeded in '" + fn.name + "'"};
            --depth_;
            return 0.0;
        }
        Frame frame;
        for (std::size_t i = 0; i < fn.params.size() && i < args.size(); ++i)
            frame.locals.emplace(fn.params[i].name, std::move(args[i]));
        exec_block(fn.body, frame);
        --depth_;
        return frame.ret;
    }

    void exec_block(const std::vector<Stmt>& stmts, Frame& f) {
        for (const auto& s : stmts) {
            if (fault_ || f.returned) return;
            exec_stmt(s, f);
        }
    }

    void exec_stmt(const Stmt& s, Frame& f) {
        switch (s.kind) {
            case Stmt::Kind::VarDecl: {
                Value init;
                if (s.type.is_array)
                    init = ArrayVal{};
                else if (is_struct(s.type.name))
                    init = StructVal{s.type.name, {}};
                else
                    init = s.expr ? Value{eval(*s.expr, f)} : Value{0.0};
                f.locals[s.name] = std::move(init);
                return;
            }
            case Stmt::Kind::Assign: {
                double v = eval(*s.expr, f);
                if (fault_) return;
                store(*s.lvalue, v, f);
                return;
            }
            case Stmt::Kind::If: {
                double c = eval(*s.cond, f);
                if (fault_) return;
                exec_block(c != 0.0 ? s.then_block : s.else_block, f);
                return;
            }
            case Stmt::Kind::Switch: {
                double scrut = eval(*s.cond, f);
                if (fault_) return;
                const Stmt::Case* chosen = nullptr;
                for (const auto& c : s.cases) {
                    if (c.is_default) continue;
                    double v = eval(*c.value, f);
                    if (fault_) return;
                    if (v == scrut) {
                        chosen = &c;
                        break;
                    }
                }
                if (!chosen)
                    for (const auto& c : s.cases)
                        if (c.is_default) chosen = &c;
                if (chosen) exec_block(chosen->stmts, f);
                return;
            }
            case Stmt::Kind::While: {
                long iters = 0;
                while (!fault_ && !f.returned) {
                    double c = eval(*s.cond, f);
                    if (fault_ || c == 0.0) return;
                    if (++iters > 1000000) {
                        fault_ = RuntimeFault{s.pos, "loop iteration limit exceeded"};
                        return;
                    }
                    exec_block(s.body, f);
                }
                return;
            }
            case Stmt::Kind::Return:
                if (s.expr) f.ret = eval(*s.expr, f);
                f.returned = true;
                return;
            case Stmt::Kind::ExprStmt:
                eval(*s.expr, f);
                return;
        }
    }

    /// Records a store to non-local storage, subject to the per-variable
    /// rate limit (first write in each window wins).
    void record(const std::string& canonical, double v) {
        auto id = canon_.registry.lookup(canonical);
        if (!id) return;
        auto it = last_record_.find(*id);
        if (it != last_record_.end() && now_ < it->second + window_ms_) return;
        last_record_[*id] = now_;
        Observation o;
        o.timestamp_ms = now_;
        o.kind = Observation::Kind::Var;
        o.var_id = *id;
        o.value = v;
        trace_.push_back(std::move(o));
    }

    Value* lvalue_slot(const Expr& e, Frame& f) {
        auto it = f.locals.find(e.text);
        if (it != f.locals.end()) return &it->second;
        auto git = globals_.find(e.text);
        if (git != globals_.end()) return &git->second;
        return nullptr;
    }

    void store(const Expr& lv, double v, Frame& f) {
        switch (lv.kind) {
            case Expr::Kind::Var: {
                if (Value* slot = lvalue_slot(lv, f)) *slot = v;
                if (lv.ref == RefKind::NonLocal) record(lv.canonical, v);
                return;
            }
            case Expr::Kind::Member: {
                if (lv.lhs->kind == Expr::Kind::Var) {
                    if (Value* slot = lvalue_slot(*lv.lhs, f)) {
                        if (auto* sv = std::get_if<StructVal>(slot)) sv->fields[lv.text] = v;
                    }
                }
                record(lv.canonical, v);
                return;
            }
            case Expr::Kind::Index: {
                double idx = eval(*lv.rhs, f);
                if (fault_) return;
                if (lv.lhs->kind == Expr::Kind::Var) {
                    if (Value* slot = lvalue_slot(*lv.lhs, f)) {
                        if (auto* av = std::get_if<ArrayVal>(slot))
                            (*av)[static_cast<long long>(idx)] = v;
                    }
                }
                if (lv.ref == RefKind::NonLocal) record(lv.canonical, v);
                return;
            }
            default:
                fault_ = RuntimeFault{lv.pos, "unsupported assignment target"};
        }
    }

    double scalar_of(const Value& v, const SrcPos& pos) {
        if (auto* d = std::get_if<double>(&v)) return *d;
        fault_ = RuntimeFault{pos, "expected a scalar value"};
        return 0.0;
    }

    double eval(const Expr& e, Frame& f) {
        if (fault_) return 0.0;
        switch (e.kind) {
            case Expr::Kind::Number: return std::strtod(e.text.c_str(), nullptr);
            case Expr::Kind::String:
                fault_ = RuntimeFault{e.pos, "string used as a value"};
                return 0.0;
            case Expr::Kind::Var: {
                if (e.ref == RefKind::EnumConst) return enum_const_value(e.text);
                auto it = f.locals.find(e.text);
                if (it != f.locals.end()) return scalar_of(it->second, e.pos);
                auto git = globals_.find(e.text);
                if (git != globals_.end()) return scalar_of(git->second, e.pos);
                fault_ = RuntimeFault{e.pos, "unbound variable '" + e.text + "'"};
                return 0.0;
            }
            case Expr::Kind::Member: {
                if (e.lhs->kind == Expr::Kind::Var) {
                    if (Value* slot = lvalue_slot(*e.lhs, f)) {
                        if (auto* sv = std::get_if<StructVal>(slot)) {
                            auto fit = sv->fields.find(e.text);
                            return fit == sv->fields.end() ? 0.0 : fit->second;
                        }
                    }
                }
                fault_ = RuntimeFault{e.pos, "member access on non-struct value"};
                return 0.0;
            }
            case Expr::Kind::Index: {
                double idx = eval(*e.rhs, f);
                if (fault_) return 0.0;
                if (e.lhs->kind == Expr::Kind::Var) {
                    if (Value* slot = lvalue_slot(*e.lhs, f)) {
                        if (auto* av = std::get_if<ArrayVal>(slot)) {
                            auto ait = av->find(static_cast<long long>(idx));
                            return ait == av->end() ? 0.0 : ait->second;
                        }
                    }
                }
                fault_ = RuntimeFault{e.pos, "index access on non-array value"};
                return 0.0;
            }
            case Expr::Kind::Neg: return -eval(*e.lhs, f);
            case Expr::Kind::Not: return eval(*e.lhs, f) == 0.0 ? 1.0 : 0.0;
            case Expr::Kind::Binary: {
                double l = eval(*e.lhs, f);
                if (fault_) return 0.0;
                if (e.op == BinOp::And) return l != 0.0 && eval(*e.rhs, f) != 0.0 ? 1.0 : 0.0;
                if (e.op == BinOp::Or) return l != 0.0 || eval(*e.rhs, f) != 0.0 ? 1.0 : 0.0;
                double r = eval(*e.rhs, f);
                if (fault_) return 0.0;
                switch (e.op) {
                    case BinOp::Add: return l + r;
                    case BinOp::Sub: return l - r;
                    case BinOp::Mul: return l * r;
                    case BinOp::Div:
                        if (r == 0.0) {
                            fault_ = RuntimeFault{e.pos, "division by zero"};
                            return 0.0;
                        }
                        return l / r;
                    case BinOp::Eq: return l == r ? 1.0 : 0.0;
                    case BinOp::Ne: return l != r ? 1.0 : 0.0;
                    case BinOp::Lt: return l < r ? 1.0 : 0.0;
                    case BinOp::Gt: return l > r ? 1.0 : 0.0;
                    case BinOp::Le: return l <= r ? 1.0 : 0.0;
                    case BinOp::Ge: return l >= r ? 1.0 : 0.0;
                    default: return 0.0;
                }
            }
            case Expr::Kind::Call: {
                std::vector<Value> args;
                for (const auto& a : e.args) {
                    // Struct arguments are passed through by value.
                    if (a->kind == Expr::Kind::Var) {
                        if (Value* slot = lvalue_slot(*a, f)) {
                            if (std::holds_alternative<StructVal>(*slot) ||
                                std::holds_alternative<ArrayVal>(*slot)) {
                                args.push_back(*slot);
                                continue;
                            }
                        }
                    }
                    args.push_back(eval(*a, f));
                    if (fault_) return 0.0;
                }
                if (const FunctionDef* fn = find_fn(e.text)) return call(*fn, std::move(args));
                if (e.text == "fabsf" && args.size() == 1)
                    return std::fabs(scalar_of(args[0], e.pos));
                if (e.text == "log" && args.size() == 1)
                    return std::log(scalar_of(args[0], e.pos));
                fault_ = RuntimeFault{e.pos, "call to unknown function '" + e.text + "'"};
                return 0.0;
            }
        }
        return 0.0;
    }
};

}  // namespace detail

/// Runs the scenario's events against the program in virtual time, sampling
/// QOI series and rate-limiting non-local stores to one observation per
/// variable per sample window.
inline Result<Trace, RuntimeFault> interpret(const Program& program, const CanonicalResult& canon,
                                             const Scenario& scenario) {
    detail::Interp interp(program, canon, scenario);
    return interp.run();
}

}  // namespace unitlint
