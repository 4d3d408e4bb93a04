#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "unitlint/ast.hpp"
#include "unitlint/result.hpp"

namespace unitlint {

/// Dense bijection between canonical names and integer ids, assigned in
/// first-encounter order.
class VarRegistry {
public:
    int intern(const std::string& name) {
        auto it = ids_.find(name);
        if (it != ids_.end()) return it->second;
        int id = static_cast<int>(names_.size());
        ids_.emplace(name, id);
        names_.push_back(name);
        return id;
    }

    std::optional<int> lookup(const std::string& name) const {
        auto it = ids_.find(name);
        return it == ids_.end() ? std::nullopt : std::optional<int>(it->second);
    }

    const std::string& name_of(int id) const { return names_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

private:
    std::map<std::string, int> ids_;
    std::vector<std::string> names_;
};

struct CanonicalResult {
    VarRegistry registry;
    std::set<std::string> non_locals;   // canonical names with non-local lifetime
    std::set<std::string> enum_consts;  // ALL_CAPS identifiers with no declaration
};

namespace detail {

inline bool looks_like_enum_const(const std::string& name) {
    bool has_alpha = false;
    for (char c : name) {
        if (c >= 'a' && c <= 'z') return false;
        if (c >= 'A' && c <= 'Z') has_alpha = true;
    }
    return has_alpha;
}

class Canonicalizer {
public:
    Canonicalizer(Program& p, CanonicalResult& out) : prog_(p), out_(out) {
        for (const auto& s : p.structs) structs_.emplace(s.name, &s);
        for (const auto& g : p.globals) globals_.emplace(g.name, g.type);
    }

    std::optional<FrontError> run() {
        for (const auto& g : prog_.globals) {
            out_.non_locals.insert(g.name);
            out_.registry.intern(g.name);
        }
        for (auto& fn : prog_.functions) {
            fn_ = &fn;
            locals_.clear();
            for (std::size_t i = 0; i < fn.params.size(); ++i)
                locals_.emplace(fn.params[i].name, fn.params[i].type);
            if (auto e = visit_block(fn.body)) return e;
        }
        return std::nullopt;
    }

private:
    Program& prog_;
    CanonicalResult& out_;
    std::map<std::string, const StructDecl*> structs_;
    std::map<std::string, TypeName> globals_;
    std::map<std::string, TypeName> locals_;
    FunctionDef* fn_ = nullptr;

    std::optional<TypeName> field_type(const std::string& struct_name, const std::string& field) {
        auto it = structs_.find(struct_name);
        if (it == structs_.end()) return std::nullopt;
        for (const auto& f : it->second->fields)
            if (f.name == field) return f.type;
        return std::nullopt;
    }

    std::optional<FrontError> visit_block(std::vector<Stmt>& stmts) {
        for (auto& s : stmts)
            if (auto e = visit_stmt(s)) return e;
        return std::nullopt;
    }

    std::optional<FrontError> visit_stmt(Stmt& s) {
        switch (s.kind) {
            case Stmt::Kind::VarDecl:
                if (s.expr)
                    if (auto e = visit_expr(*s.expr)) return e;
                locals_.emplace(s.name, s.type);
                return std::nullopt;
            case Stmt::Kind::Assign:
                if (auto e = visit_expr(*s.lvalue)) return e;
                return visit_expr(*s.expr);
            case Stmt::Kind::If:
                if (auto e = visit_expr(*s.cond)) return e;
                if (auto e = visit_block(s.then_block)) return e;
                return visit_block(s.else_block);
            case Stmt::Kind::Switch:
                if (auto e = visit_expr(*s.cond)) return e;
                for (auto& c : s.cases) {
                    if (c.value)
                        if (auto e = visit_expr(*c.value)) return e;
                    if (auto e = visit_block(c.stmts)) return e;
                }
                return std::nullopt;
            case Stmt::Kind::While:
                if (auto e = visit_expr(*s.cond)) return e;
                return visit_block(s.body);
            case Stmt::Kind::Return:
                return s.expr ? visit_expr(*s.expr) : std::nullopt;
            case Stmt::Kind::ExprStmt:
                return visit_expr(*s.expr);
        }
        return std::nullopt;
    }

    std::optional<FrontError> visit_expr(Expr& e) {
        switch (e.kind) {
            case Expr::Kind::Number:
            case Expr::Kind::String:
                return std::nullopt;
            case Expr::Kind::Var: {
                auto lit = locals_.find(e.text);
                if (lit != locals_.end()) {
                    bool is_param = false;
                    for (std::size_t i = 0; i < fn_->params.size(); ++i) {
                        if (fn_->params[i].name == e.text) {
                            is_param = true;
                            e.param_index = static_cast<int>(i) + 1;
                            break;
                        }
                    }
                    e.ref = is_param ? RefKind::Param : RefKind::Local;
                    e.canonical = e.text;
                    e.static_type = lit->second;
                    return std::nullopt;
                }
                auto git = globals_.find(e.text);
                if (git != globals_.end()) {
                    e.ref = RefKind::NonLocal;
                    e.canonical = e.text;
                    e.static_type = git->second;
                    out_.registry.intern(e.canonical);
                    return std::nullopt;
                }
                if (looks_like_enum_const(e.text)) {
                    e.ref = RefKind::EnumConst;
                    e.canonical = e.text;
                    e.static_type = TypeName{"enum", false};
                    out_.enum_consts.insert(e.text);
                    return std::nullopt;
                }
                return FrontError{e.pos, "unresolved name '" + e.text + "'"};
            }
            case Expr::Kind::Member: {
                if (auto err = visit_expr(*e.lhs)) return err;
                const std::string& base_type = e.lhs->static_type.name;
                auto ft = field_type(base_type, e.text);
                if (structs_.count(base_type) && !ft)
                    return FrontError{e.pos, "struct '" + base_type + "' has no field '" + e.text + "'"};
                if (!ft)
                    return FrontError{e.pos,
                                      "member access on non-struct value '" + e.lhs->text + "'"};
                // Member identity is keyed by static struct type, so all
                // instances of a struct share one canonical slot per field.
                e.struct_type = base_type;
                e.canonical = base_type + "." + e.text;
                e.ref = RefKind::NonLocal;
                e.static_type = *ft;
                out_.non_locals.insert(e.canonical);
                out_.registry.intern(e.canonical);
                return std::nullopt;
            }
            case Expr::Kind::Index: {
                if (auto err = visit_expr(*e.lhs)) return err;
                if (auto err = visit_expr(*e.rhs)) return err;
                // array[i] shares the identity (and type) of array.
                e.ref = e.lhs->ref;
                e.canonical = e.lhs->canonical;
                e.param_index = e.lhs->param_index;
                e.static_type = TypeName{e.lhs->static_type.name, false};
                return std::nullopt;
            }
            case Expr::Kind::Neg:
            case Expr::Kind::Not:
                if (auto err = visit_expr(*e.lhs)) return err;
                e.static_type = e.lhs->static_type;
                return std::nullopt;
            case Expr::Kind::Binary:
                if (auto err = visit_expr(*e.lhs)) return err;
                if (auto err = visit_expr(*e.rhs)) return err;
                e.static_type = e.lhs->static_type;
                return std::nullopt;
            case Expr::Kind::Call: {
                for (auto& a : e.args)
                    if (auto err = visit_expr(*a)) return err;
                for (const auto& fn : prog_.functions) {
                    if (fn.name == e.text) {
                        e.static_type = fn.return_type;
                        break;
                    }
                }
                return std::nullopt;
            }
        }
        return std::nullopt;
    }
};

}  // namespace detail

/// Resolves every variable reference in place, assigns canonical names and
/// registry ids to non-local storage, and classifies references.
/// ALL_CAPS names with no declaration are accepted as enum constants.
inline Result<CanonicalResult, FrontError> canonicalize(Program& program) {
    CanonicalResult out;
    detail::Canonicalizer c(program, out);
    if (auto e = c.run()) return *e;
    return out;
}

}  // namespace unitlint
