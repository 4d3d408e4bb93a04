#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "unitlint/canonical.hpp"
#include "unitlint/format_ast.hpp"
#include "unitlint/mining.hpp"
#include "unitlint/proto.hpp"

namespace unitlint {

struct Term;
using TermPtr = std::shared_ptr<const Term>;

/// A type term: a known unit type, a symbolic atom (variable, argument,
/// return slot, fresh), or a product/quotient tree over terms.
struct Term {
    enum class Kind { Known, Var, ArgType, ArgField, Ret, Fresh, Product, Quotient };

    Kind kind = Kind::Fresh;
    UnitType known;     // Known
    std::string name;   // Var: canonical name; ArgType/ArgField/Ret: function
    std::string scope;  // Var: enclosing function for locals, empty for globals
    int index = 0;      // ArgType/ArgField: 1-based param index; Fresh: id
    std::string field;  // ArgField
    TermPtr lhs, rhs;   // Product/Quotient

    bool is_atom() const { return kind != Kind::Product && kind != Kind::Quotient; }
};

inline TermPtr t_known(UnitType u) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::Known;
    t->known = std::move(u);
    return t;
}
inline TermPtr t_var(std::string name, std::string scope = "") {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::Var;
    t->name = std::move(name);
    t->scope = std::move(scope);
    return t;
}
inline TermPtr t_argtype(std::string fn, int index) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::ArgType;
    t->name = std::move(fn);
    t->index = index;
    return t;
}
inline TermPtr t_argfield(std::string fn, int index, std::string field) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::ArgField;
    t->name = std::move(fn);
    t->index = index;
    t->field = std::move(field);
    return t;
}
inline TermPtr t_ret(std::string fn) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::Ret;
    t->name = std::move(fn);
    return t;
}
inline TermPtr t_fresh(int id) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::Fresh;
    t->index = id;
    return t;
}
inline TermPtr t_product(TermPtr l, TermPtr r) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::Product;
    t->lhs = std::move(l);
    t->rhs = std::move(r);
    return t;
}
inline TermPtr t_quotient(TermPtr l, TermPtr r) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::Quotient;
    t->lhs = std::move(l);
    t->rhs = std::move(r);
    return t;
}

inline std::string term_to_string(const Term& t) {
    switch (t.kind) {
        case Term::Kind::Known: return format_unit_type(t.known);
        case Term::Kind::Var: return t.name;
        case Term::Kind::ArgType:
            return "ArgType(" + t.name + ", " + std::to_string(t.index) + ")";
        case Term::Kind::ArgField:
            return "ArgField(" + t.name + ", " + std::to_string(t.index) + ", " + t.field + ")";
        case Term::Kind::Ret: return "ReturnType(" + t.name + ")";
        case Term::Kind::Fresh: return "τ" + std::to_string(t.index);
        case Term::Kind::Product:
            return "(" + term_to_string(*t.lhs) + " × " + term_to_string(*t.rhs) + ")";
        case Term::Kind::Quotient:
            return "(" + term_to_string(*t.lhs) + " / " + term_to_string(*t.rhs) + ")";
    }
    return "?";
}

inline std::string term_to_sexpr(const Term& t) {
    switch (t.kind) {
        case Term::Kind::Known:
            return "(known \"" + format_unit(t.known) + "\" \"" + t.known.frame.to_string() + "\")";
        case Term::Kind::Var:
            return "(var \"" + (t.scope.empty() ? t.name : t.scope + "#" + t.name) + "\")";
        case Term::Kind::ArgType:
            return "(argtype \"" + t.name + "\" " + std::to_string(t.index) + ")";
        case Term::Kind::ArgField:
            return "(argfield \"" + t.name + "\" " + std::to_string(t.index) + " \"" + t.field +
                   "\")";
        case Term::Kind::Ret: return "(rettype \"" + t.name + "\")";
        case Term::Kind::Fresh: return "(fresh " + std::to_string(t.index) + ")";
        case Term::Kind::Product:
            return "(* " + term_to_sexpr(*t.lhs) + " " + term_to_sexpr(*t.rhs) + ")";
        case Term::Kind::Quotient:
            return "(/ " + term_to_sexpr(*t.lhs) + " " + term_to_sexpr(*t.rhs) + ")";
    }
    return "?";
}

struct Constraint {
    enum class Kind { Equal, Subtype, SameDim };
    Kind kind;
    TermPtr lhs, rhs;
    SrcPos pos;
    std::string reason;
};

struct ConstraintSet {
    std::vector<Constraint> items;
    int fresh_count = 0;
};

inline std::string constraint_to_sexpr(const Constraint& c) {
    const char* head = c.kind == Constraint::Kind::Equal      ? "eq"
                       : c.kind == Constraint::Kind::Subtype ? "sub"
                                                              : "samedim";
    return "(" + std::string(head) + " " + term_to_sexpr(*c.lhs) + " " + term_to_sexpr(*c.rhs) +
           " \"" + c.pos.file + ":" + std::to_string(c.pos.line) + "\")";
}

struct InferOptions {
    std::set<std::string> ignore_fns = {"fabsf", "log", "min", "max", "abs"};
    std::map<std::string, UnitType> conversion_fns;  // trusted fn -> pinned return type
};

namespace detail {

inline bool is_power_of_ten(const Rational& r, long& k) {
    if (r <= 0) return false;
    auto num = boost::multiprecision::numerator(r);
    auto den = boost::multiprecision::denominator(r);
    auto log_pow10 = [](const boost::multiprecision::cpp_int& v, long& out) {
        boost::multiprecision::cpp_int x = v;
        long n = 0;
        while (x % 10 == 0) {
            x /= 10;
            ++n;
        }
        if (x != 1) return false;
        out = n;
        return true;
    };
    long a = 0, b = 0;
    if (!log_pow10(num, a) || !log_pow10(den, b)) return false;
    k = a - b;
    return true;
}

class ConstraintGen {
public:
    ConstraintGen(const Program& program, const ProtocolModel& model, const TypeDatabase& db,
                  const InferOptions& opts)
        : prog_(program), model_(model), db_(db), opts_(opts) {
        for (const auto& s : prog_.structs) structs_.emplace(s.name, &s);
        collect_called();
    }

    ConstraintSet run() {
        // Seeds first: deduced/declared variable types, then pinned
        // conversion-function returns, then per-function constraints.
        for (const auto& [id, e] : db_) {
            std::string reason = e.rule == "declared"
                                     ? "declared type of " + e.canonical_name
                                     : "deduced type of " + e.canonical_name + " (" + e.rule +
                                           " vs " + e.qoi + ")";
            emit(Constraint::Kind::Equal, t_var(e.canonical_name), t_known(e.type), {}, reason);
        }
        for (const auto& [fn, type] : opts_.conversion_fns)
            emit(Constraint::Kind::Equal, t_ret(fn), t_known(type), {},
                 "conversion function " + fn);
        for (const auto& fn : prog_.functions) {
            cur_fn_ = &fn;
            if (!called_.count(fn.name)) bind_entry_defaults(fn);
            Refinements ctx;
            walk_block(fn.body, ctx);
        }
        return std::move(out_);
    }

private:
    using Refinements = std::map<std::string, FrameSpec>;

    const Program& prog_;
    const ProtocolModel& model_;
    const TypeDatabase& db_;
    const InferOptions& opts_;
    std::map<std::string, const StructDecl*> structs_;
    std::set<std::string> called_;
    ConstraintSet out_;
    const FunctionDef* cur_fn_ = nullptr;

    void emit(Constraint::Kind kind, TermPtr l, TermPtr r, SrcPos pos, std::string reason) {
        out_.items.push_back({kind, std::move(l), std::move(r), std::move(pos), std::move(reason)});
    }

    TermPtr fresh() { return t_fresh(out_.fresh_count++); }

    void collect_called() {
        struct V {
            std::set<std::string>& names;
            void expr(const Expr& e) {
                if (e.kind == Expr::Kind::Call) names.insert(e.text);
                if (e.lhs) expr(*e.lhs);
                if (e.rhs) expr(*e.rhs);
                for (const auto& a : e.args) expr(*a);
            }
            void block(const std::vector<Stmt>& b) {
                for (const auto& s : b) stmt(s);
            }
            void stmt(const Stmt& s) {
                if (s.lvalue) expr(*s.lvalue);
                if (s.expr) expr(*s.expr);
                if (s.cond) expr(*s.cond);
                block(s.then_block);
                block(s.else_block);
                block(s.body);
                for (const auto& c : s.cases) {
                    if (c.value) expr(*c.value);
                    block(c.stmts);
                }
            }
        } v{called_};
        for (const auto& fn : prog_.functions) v.block(fn.body);
    }

    const FunctionDef* find_fn(const std::string& name) const {
        for (const auto& f : prog_.functions)
            if (f.name == name) return &f;
        return nullptr;
    }

    bool is_struct(const std::string& name) const { return structs_.count(name) > 0; }

    /// Default frame for a protocol field: the set of control values scoping
    /// it per the protocol's relations, else the field's own (Any) frame.
    FrameSpec default_field_frame(const std::string& struct_name, const std::string& field) const {
        if (auto frames = controlled_frames(model_, struct_name, field))
            return FrameSpec::one_of(*frames);
        return FrameSpec::any();
    }

    FrameSpec refined_frame(const Refinements& ctx, const std::string& struct_name,
                            const std::string& field) const {
        auto it = ctx.find(struct_name + "." + field);
        if (it != ctx.end()) return it->second;
        return default_field_frame(struct_name, field);
    }

    std::optional<UnitType> member_known(const Refinements& ctx, const std::string& struct_name,
                                         const std::string& field) const {
        auto unit = lookup_field_unit(model_, struct_name, field);
        if (!unit) return std::nullopt;
        return unit->with_frame(refined_frame(ctx, struct_name, field));
    }

    void bind_entry_defaults(const FunctionDef& fn) {
        Refinements none;
        for (std::size_t i = 0; i < fn.params.size(); ++i) {
            const MessageDef* msg = model_.message_for_struct(fn.params[i].type.name);
            if (!msg) continue;
            for (const auto& [field, unit] : msg->field_units) {
                emit(Constraint::Kind::Equal,
                     t_argfield(fn.name, static_cast<int>(i) + 1, field),
                     t_known(*member_known(none, fn.params[i].type.name, field)), fn.pos,
                     "protocol field " + qualified_field(msg->name, field));
            }
        }
    }

    bool is_enumish(const Expr& e) const {
        if (e.kind == Expr::Kind::Var && e.ref == RefKind::EnumConst) return true;
        if (e.static_type.name == "enum") return true;
        if (e.kind == Expr::Kind::Member && model_.message_for_struct(e.struct_type) &&
            is_control_field(model_, e.struct_type, e.text))
            return true;
        return false;
    }

    TermPtr gen_member(const Expr& e, const Refinements& ctx) {
        const std::string& S = e.struct_type;
        const MessageDef* msg = model_.message_for_struct(S);
        bool enumish = e.static_type.name == "enum" || (msg && is_control_field(model_, S, e.text));
        if (enumish) return fresh();
        if (e.lhs->kind == Expr::Kind::Var && e.lhs->ref == RefKind::Param) {
            // An active refinement narrows the read below the parameter's
            // declared field type, so bind the refined type directly.
            if (msg && ctx.count(S + "." + e.text))
                if (auto known = member_known(ctx, S, e.text)) return t_known(*known);
            return t_argfield(cur_fn_->name, e.lhs->param_index, e.text);
        }
        if (msg) {
            if (auto known = member_known(ctx, S, e.text)) return t_known(*known);
            return t_var(e.canonical);  // untyped protocol field: shared symbolic slot
        }
        return t_var(e.canonical);
    }

    TermPtr gen_call(const Expr& e, const Refinements& ctx) {
        if (opts_.conversion_fns.count(e.text)) {
            for (const auto& a : e.args) gen(*a, ctx);
            return t_ret(e.text);
        }
        const FunctionDef* callee = find_fn(e.text);
        if (opts_.ignore_fns.count(e.text) || !callee) {
            for (const auto& a : e.args) gen(*a, ctx);
            return fresh();
        }
        for (std::size_t i = 0; i < e.args.size(); ++i) {
            const Expr& a = *e.args[i];
            int idx = static_cast<int>(i) + 1;
            const std::string& S = a.static_type.name;
            if (is_struct(S)) {
                if (const MessageDef* msg = model_.message_for_struct(S)) {
                    // Protocol structs bind field-wise with the current frame
                    // refinements applied.
                    for (const auto& [field, unit] : msg->field_units)
                        emit(Constraint::Kind::Equal, t_argfield(e.text, idx, field),
                             t_known(*member_known(ctx, S, field)), a.pos,
                             "argument " + std::to_string(idx) + " of " + e.text + ", field " +
                                 field);
                } else {
                    for (const auto& f : structs_.at(S)->fields) {
                        TermPtr src = a.kind == Expr::Kind::Var && a.ref == RefKind::Param
                                          ? t_argfield(cur_fn_->name, a.param_index, f.name)
                                          : t_var(S + "." + f.name);
                        emit(Constraint::Kind::Equal, t_argfield(e.text, idx, f.name),
                             std::move(src), a.pos,
                             "argument " + std::to_string(idx) + " of " + e.text + ", field " +
                                 f.name);
                    }
                }
            } else {
                emit(Constraint::Kind::Equal, t_argtype(e.text, idx), gen(a, ctx), a.pos,
                     "argument " + std::to_string(idx) + " of " + e.text);
            }
        }
        return t_ret(e.text);
    }

    TermPtr gen(const Expr& e, const Refinements& ctx) {
        switch (e.kind) {
            case Expr::Kind::Number: {
                long k = 0;
                auto r = rational_from_decimal(e.text);
                if (r && is_power_of_ten(*r, k)) {
                    // A 10^k factor acts as a pure scale conversion: dividing
                    // centimeter data by 100 must land on meters.
                    UnitType u;
                    u.scalar_log10 = rat(-k);
                    return t_known(u);
                }
                return fresh();
            }
            case Expr::Kind::String: return fresh();
            case Expr::Kind::Var:
                switch (e.ref) {
                    case RefKind::Param:
                        if (is_struct(e.static_type.name)) return fresh();  // bound field-wise
                        return t_argtype(cur_fn_->name, e.param_index);
                    case RefKind::Local:
                        if (is_struct(e.static_type.name)) return fresh();
                        return t_var(e.text, cur_fn_->name);
                    case RefKind::NonLocal:
                        if (is_struct(e.static_type.name)) return fresh();
                        return t_var(e.canonical);
                    case RefKind::EnumConst: return fresh();
                    case RefKind::None: return fresh();
                }
                return fresh();
            case Expr::Kind::Member: return gen_member(e, ctx);
            case Expr::Kind::Index: return gen(*e.lhs, ctx);
            case Expr::Kind::Neg: return gen(*e.lhs, ctx);
            case Expr::Kind::Not:
                gen(*e.lhs, ctx);
                return fresh();
            case Expr::Kind::Binary: {
                switch (e.op) {
                    case BinOp::Mul: return t_product(gen(*e.lhs, ctx), gen(*e.rhs, ctx));
                    case BinOp::Div: return t_quotient(gen(*e.lhs, ctx), gen(*e.rhs, ctx));
                    case BinOp::Add:
                    case BinOp::Sub: {
                        TermPtr l = gen(*e.lhs, ctx);
                        TermPtr r = gen(*e.rhs, ctx);
                        emit(Constraint::Kind::SameDim, l, r, e.pos,
                             std::string("operands of ") + binop_text(e.op));
                        return l;
                    }
                    case BinOp::And:
                    case BinOp::Or:
                        gen(*e.lhs, ctx);
                        gen(*e.rhs, ctx);
                        return fresh();
                    default: {  // comparisons
                        if (is_enumish(*e.lhs) || is_enumish(*e.rhs)) return fresh();
                        TermPtr l = gen(*e.lhs, ctx);
                        TermPtr r = gen(*e.rhs, ctx);
                        emit(Constraint::Kind::SameDim, l, r, e.pos, "comparison operands");
                        return fresh();
                    }
                }
            }
            case Expr::Kind::Call: return gen_call(e, ctx);
        }
        return fresh();
    }

    /// A control-field comparison suitable for refinement: member of a
    /// protocol struct typed "frame", compared to a known frame identifier.
    struct Guard {
        std::string struct_name;
        const MessageDef* msg;
        std::string value;
        bool negated;
    };

    std::optional<Guard> match_guard(const Expr& cond) const {
        if (cond.kind != Expr::Kind::Binary || (cond.op != BinOp::Eq && cond.op != BinOp::Ne))
            return std::nullopt;
        const Expr* member = nullptr;
        const Expr* constant = nullptr;
        for (const Expr* side : {cond.lhs.get(), cond.rhs.get()}) {
            if (side->kind == Expr::Kind::Member) member = side;
            if (side->kind == Expr::Kind::Var && side->ref == RefKind::EnumConst) constant = side;
        }
        if (!member || !constant) return std::nullopt;
        const MessageDef* msg = model_.message_for_struct(member->struct_type);
        if (!msg || !is_control_field(model_, member->struct_type, member->text))
            return std::nullopt;
        if (!model_.frame_universe.count(constant->text)) return std::nullopt;
        return Guard{member->struct_type, msg, constant->text, cond.op == BinOp::Ne};
    }

    /// Meets the current refinement of every measurement field in the guarded
    /// message with `with`; refinements that would be contradictory keep the
    /// current frame.
    Refinements refine_all(const Refinements& ctx, const Guard& g, const FrameSpec& with) const {
        Refinements out = ctx;
        for (const auto& [field, unit] : g.msg->field_units) {
            std::string key = g.struct_name + "." + field;
            FrameSpec cur = refined_frame(ctx, g.struct_name, field);
            auto met = frame_meet(cur, with);
            out[key] = met.ok() ? met.value() : cur;
        }
        return out;
    }

    static bool ends_in_return(const std::vector<Stmt>& block) {
        return !block.empty() && block.back().kind == Stmt::Kind::Return;
    }

    void walk_block(const std::vector<Stmt>& stmts, Refinements& ctx) {
        for (const auto& s : stmts) walk_stmt(s, ctx);
    }

    void walk_stmt(const Stmt& s, Refinements& ctx) {
        switch (s.kind) {
            case Stmt::Kind::VarDecl:
                if (s.expr && !is_struct(s.type.name))
                    emit(Constraint::Kind::Subtype, gen(*s.expr, ctx),
                         t_var(s.name, cur_fn_->name), s.pos, "initialization of " + s.name);
                else if (s.expr)
                    gen(*s.expr, ctx);
                return;
            case Stmt::Kind::Assign: {
                TermPtr rhs = gen(*s.expr, ctx);
                TermPtr lhs = gen(*s.lvalue, ctx);
                emit(Constraint::Kind::Subtype, std::move(rhs), std::move(lhs), s.pos,
                     "assignment to " + format_expr(*s.lvalue));
                return;
            }
            case Stmt::Kind::If: {
                auto guard = match_guard(*s.cond);
                if (!guard) {
                    gen(*s.cond, ctx);
                    Refinements then_ctx = ctx, else_ctx = ctx;
                    walk_block(s.then_block, then_ctx);
                    walk_block(s.else_block, else_ctx);
                    return;
                }
                FrameSpec eq_frame = FrameSpec::concrete(guard->value);
                auto comp = frame_complement(eq_frame, model_.frame_universe);
                FrameSpec ne_frame = comp.ok() ? comp.value() : FrameSpec::any();
                Refinements then_ctx =
                    refine_all(ctx, *guard, guard->negated ? ne_frame : eq_frame);
                Refinements else_ctx =
                    refine_all(ctx, *guard, guard->negated ? eq_frame : ne_frame);
                walk_block(s.then_block, then_ctx);
                walk_block(s.else_block, else_ctx);
                // A guard branch that always returns scopes its complement
                // over the rest of the enclosing block.
                if (ends_in_return(s.then_block) && s.else_block.empty())
                    ctx = else_ctx;
                else if (ends_in_return(s.else_block) && !s.then_block.empty() &&
                         !ends_in_return(s.then_block))
                    ctx = then_ctx;
                return;
            }
            case Stmt::Kind::Switch: {
                const Expr& scrut = *s.cond;
                bool is_guard_switch =
                    scrut.kind == Expr::Kind::Member &&
                    model_.message_for_struct(scrut.struct_type) &&
                    is_control_field(model_, scrut.struct_type, scrut.text);
                if (!is_guard_switch) {
                    gen(scrut, ctx);
                    for (const auto& c : s.cases) {
                        Refinements cctx = ctx;
                        walk_block(c.stmts, cctx);
                    }
                    return;
                }
                const MessageDef* msg = model_.message_for_struct(scrut.struct_type);
                Guard g{scrut.struct_type, msg, "", false};
                std::set<std::string> covered;
                for (const auto& c : s.cases) {
                    Refinements cctx;
                    if (c.is_default) {
                        auto comp = frame_complement(FrameSpec::one_of(covered),
                                                     model_.frame_universe);
                        cctx = refine_all(ctx, g, comp.ok() ? comp.value() : FrameSpec::any());
                    } else if (c.value->kind == Expr::Kind::Var &&
                               model_.frame_universe.count(c.value->text)) {
                        covered.insert(c.value->text);
                        cctx = refine_all(ctx, g, FrameSpec::concrete(c.value->text));
                    } else {
                        cctx = ctx;
                    }
                    walk_block(c.stmts, cctx);
                }
                return;
            }
            case Stmt::Kind::While: {
                if (!is_enumish(*s.cond)) gen(*s.cond, ctx);
                Refinements body_ctx = ctx;
                walk_block(s.body, body_ctx);
                return;
            }
            case Stmt::Kind::Return:
                if (s.expr)
                    emit(Constraint::Kind::Subtype, gen(*s.expr, ctx), t_ret(cur_fn_->name),
                         s.pos, "return value of " + cur_fn_->name);
                return;
            case Stmt::Kind::ExprStmt:
                gen(*s.expr, ctx);
                return;
        }
    }
};

}  // namespace detail

/// Emits the constraint stream for a canonicalized program: DB and
/// conversion-function seeds first, then entry-point protocol bindings and
/// per-statement constraints in source order.
inline ConstraintSet generate_constraints(const Program& program, const ProtocolModel& model,
                                          const TypeDatabase& db, const InferOptions& opts = {}) {
    detail::ConstraintGen gen(program, model, db, opts);
    return gen.run();
}

}  // namespace unitlint
