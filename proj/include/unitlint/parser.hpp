#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>

#include "unitlint/lexer.hpp"

namespace unitlint {

/// Loads the text of an include target; returns nullopt when unreadable.
using FileLoader = std::function<std::optional<std::string>(const std::string& path)>;

namespace detail {

class Parser {
public:
    Parser(std::vector<Token> tokens, Program& out, FileLoader loader)
        : toks_(std::move(tokens)), out_(out), loader_(std::move(loader)) {
        for (const auto& s : out_.structs) struct_names_.insert(s.name);
    }

    std::optional<FrontError> run() {
        while (!at_end()) {
            if (peek().is_ident("include")) {
                if (auto e = parse_include()) return e;
            } else if (peek().is_ident("struct")) {
                if (auto e = parse_struct()) return e;
            } else {
                if (auto e = parse_global_or_function()) return e;
            }
            if (err_) return err_;
        }
        return std::nullopt;
    }

private:
    std::vector<Token> toks_;
    std::size_t i_ = 0;
    Program& out_;
    FileLoader loader_;
    std::set<std::string> struct_names_;
    std::optional<FrontError> err_;

    const Token& peek(int ahead = 0) const {
        std::size_t k = i_ + ahead;
        return k < toks_.size() ? toks_[k] : toks_.back();
    }
    const Token& take() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }
    bool at_end() const { return peek().kind == Token::Kind::End; }

    FrontError fail(const std::string& expected) {
        const Token& t = peek();
        std::string found = t.kind == Token::Kind::End ? "end of input" : "'" + t.text + "'";
        return FrontError{t.pos, "expected " + expected + ", found " + found};
    }

    bool expect(std::string_view punct, const char* what) {
        if (peek().is(punct)) {
            take();
            return true;
        }
        err_ = fail(std::string("'") + std::string(punct) + "' (" + what + ")");
        return false;
    }

    bool is_type_start() const {
        const Token& t = peek();
        if (t.kind != Token::Kind::Ident) return false;
        return t.text == "int" || t.text == "float" || t.text == "u32" || t.text == "void" ||
               t.text == "enum" || struct_names_.count(t.text) > 0;
    }

    std::optional<TypeName> parse_type() {
        if (!is_type_start()) {
            err_ = fail("a type name");
            return std::nullopt;
        }
        TypeName t{take().text, false};
        if (peek().is("[")) {
            take();
            if (!expect("]", "array type")) return std::nullopt;
            t.is_array = true;
        }
        return t;
    }

    std::optional<std::string> parse_qualified_name() {
        if (peek().kind != Token::Kind::Ident) {
            err_ = fail("an identifier");
            return std::nullopt;
        }
        std::string name = take().text;
        while (peek().is("::")) {
            take();
            if (peek().kind != Token::Kind::Ident) {
                err_ = fail("an identifier after '::'");
                return std::nullopt;
            }
            name += "::" + take().text;
        }
        return name;
    }

    std::optional<FrontError> parse_include() {
        take();  // include
        if (peek().kind != Token::Kind::String) return fail("a string path after include");
        std::string path = take().text;
        SrcPos at = peek().pos;
        if (!expect(";", "include")) return err_;
        if (!loader_) return FrontError{at, "includes are not supported here"};
        auto text = loader_(path);
        if (!text) return FrontError{at, "cannot read include '" + path + "'"};
        auto sub = tokenize(*text, path);
        if (!sub) return sub.error();
        Parser inner(std::move(sub.value()), out_, loader_);
        auto e = inner.run();
        struct_names_ = inner.struct_names_;
        return e;
    }

    std::optional<FrontError> parse_struct() {
        StructDecl decl;
        decl.pos = take().pos;  // struct
        if (peek().kind != Token::Kind::Ident) return fail("a struct name");
        decl.name = take().text;
        struct_names_.insert(decl.name);
        if (!expect("{", "struct body")) return err_;
        while (!peek().is("}")) {
            auto t = parse_type();
            if (!t) return err_;
            if (peek().kind != Token::Kind::Ident) return fail("a field name");
            std::string fname = take().text;
            if (!expect(";", "struct field")) return err_;
            decl.fields.push_back({*t, fname});
        }
        take();  // }
        if (peek().is(";")) take();
        out_.structs.push_back(std::move(decl));
        return std::nullopt;
    }

    std::optional<FrontError> parse_global_or_function() {
        SrcPos at = peek().pos;
        auto type = parse_type();
        if (!type) return err_;
        auto name = parse_qualified_name();
        if (!name) return err_;
        if (peek().is("(")) return parse_function(at, *type, *name);
        GlobalDecl g{at, *type, *name};
        if (!expect(";", "global declaration")) return err_;
        out_.globals.push_back(std::move(g));
        return std::nullopt;
    }

    std::optional<FrontError> parse_function(SrcPos at, TypeName ret, std::string name) {
        FunctionDef fn;
        fn.pos = at;
        fn.return_type = std::move(ret);
        fn.name = std::move(name);
        take();  // (
        if (!peek().is(")")) {
            while (true) {
                auto t = parse_type();
                if (!t) return err_;
                if (peek().kind != Token::Kind::Ident) return fail("a parameter name");
                std::string pname = take().text;
                for (const auto& p : fn.params)
                    if (p.name == pname)
                        return FrontError{peek().pos, "duplicate parameter '" + pname + "'"};
                fn.params.push_back({*t, pname});
                if (peek().is(",")) {
                    take();
                    continue;
                }
                break;
            }
        }
        if (!expect(")", "parameter list")) return err_;
        auto body = parse_block();
        if (!body) return err_;
        fn.body = std::move(*body);
        for (const auto& f : out_.functions)
            if (f.name == fn.name) return FrontError{fn.pos, "duplicate function '" + fn.name + "'"};
        out_.functions.push_back(std::move(fn));
        return std::nullopt;
    }

    std::optional<std::vector<Stmt>> parse_block() {
        if (!expect("{", "block")) return std::nullopt;
        std::vector<Stmt> stmts;
        while (!peek().is("}")) {
            if (at_end()) {
                err_ = fail("'}'");
                return std::nullopt;
            }
            auto s = parse_stmt();
            if (!s) return std::nullopt;
            stmts.push_back(std::move(*s));
        }
        take();  // }
        return stmts;
    }

    std::optional<Stmt> parse_stmt() {
        const Token& t = peek();
        if (t.is_ident("if")) return parse_if();
        if (t.is_ident("switch")) return parse_switch();
        if (t.is_ident("while")) return parse_while();
        if (t.is_ident("return")) return parse_return();
        if (t.is_ident("break")) {  // tolerated and ignored inside switch cases
            err_ = fail("a statement ('break' is only allowed in switch cases)");
            return std::nullopt;
        }
        if (is_type_start() && peek(1).kind == Token::Kind::Ident && !peek(1).is("(")) {
            return parse_vardecl();
        }
        // Assignment or expression statement.
        Stmt s;
        s.pos = t.pos;
        auto e = parse_expr();
        if (!e) return std::nullopt;
        if (peek().is("=")) {
            take();
            auto rhs = parse_expr();
            if (!rhs) return std::nullopt;
            if ((*e)->kind != Expr::Kind::Var && (*e)->kind != Expr::Kind::Member &&
                (*e)->kind != Expr::Kind::Index) {
                err_ = FrontError{s.pos, "assignment target must be a variable, member, or index"};
                return std::nullopt;
            }
            s.kind = Stmt::Kind::Assign;
            s.lvalue = std::move(*e);
            s.expr = std::move(*rhs);
        } else {
            if ((*e)->kind != Expr::Kind::Call) {
                err_ = FrontError{s.pos, "expression statements must be calls"};
                return std::nullopt;
            }
            s.kind = Stmt::Kind::ExprStmt;
            s.expr = std::move(*e);
        }
        if (!expect(";", "statement")) return std::nullopt;
        return s;
    }

    std::optional<Stmt> parse_vardecl() {
        Stmt s;
        s.kind = Stmt::Kind::VarDecl;
        s.pos = peek().pos;
        auto t = parse_type();
        if (!t) return std::nullopt;
        s.type = *t;
        s.name = take().text;
        if (peek().is("=")) {
            take();
            auto e = parse_expr();
            if (!e) return std::nullopt;
            s.expr = std::move(*e);
        }
        if (!expect(";", "variable declaration")) return std::nullopt;
        return s;
    }

    std::optional<Stmt> parse_if() {
        Stmt s;
        s.kind = Stmt::Kind::If;
        s.pos = take().pos;  // if
        if (!expect("(", "if condition")) return std::nullopt;
        auto c = parse_expr();
        if (!c) return std::nullopt;
        s.cond = std::move(*c);
        if (!expect(")", "if condition")) return std::nullopt;
        auto then = parse_block();
        if (!then) return std::nullopt;
        s.then_block = std::move(*then);
        if (peek().is_ident("else")) {
            take();
            if (peek().is_ident("if")) {
                auto nested = parse_if();
                if (!nested) return std::nullopt;
                s.else_block.push_back(std::move(*nested));
            } else {
                auto eb = parse_block();
                if (!eb) return std::nullopt;
                s.else_block = std::move(*eb);
            }
        }
        return s;
    }

    std::optional<Stmt> parse_switch() {
        Stmt s;
        s.kind = Stmt::Kind::Switch;
        s.pos = take().pos;  // switch
        if (!expect("(", "switch scrutinee")) return std::nullopt;
        auto c = parse_expr();
        if (!c) return std::nullopt;
        s.cond = std::move(*c);
        if (!expect(")", "switch scrutinee")) return std::nullopt;
        if (!expect("{", "switch body")) return std::nullopt;
        while (!peek().is("}")) {
            Stmt::Case cs;
            if (peek().is_ident("case")) {
                take();
                auto v = parse_expr();
                if (!v) return std::nullopt;
                cs.value = std::move(*v);
            } else if (peek().is_ident("default")) {
                take();
                cs.is_default = true;
            } else {
                err_ = fail("'case' or 'default'");
                return std::nullopt;
            }
            if (!expect(":", "switch case")) return std::nullopt;
            while (!peek().is("}") && !peek().is_ident("case") && !peek().is_ident("default")) {
                if (peek().is_ident("break")) {
                    take();
                    if (!expect(";", "break")) return std::nullopt;
                    break;
                }
                auto st = parse_stmt();
                if (!st) return std::nullopt;
                cs.stmts.push_back(std::move(*st));
            }
            s.cases.push_back(std::move(cs));
        }
        take();  // }
        return s;
    }

    std::optional<Stmt> parse_while() {
        Stmt s;
        s.kind = Stmt::Kind::While;
        s.pos = take().pos;  // while
        if (!expect("(", "while condition")) return std::nullopt;
        auto c = parse_expr();
        if (!c) return std::nullopt;
        s.cond = std::move(*c);
        if (!expect(")", "while condition")) return std::nullopt;
        auto b = parse_block();
        if (!b) return std::nullopt;
        s.body = std::move(*b);
        return s;
    }

    std::optional<Stmt> parse_return() {
        Stmt s;
        s.kind = Stmt::Kind::Return;
        s.pos = take().pos;  // return
        if (!peek().is(";")) {
            auto e = parse_expr();
            if (!e) return std::nullopt;
            s.expr = std::move(*e);
        }
        if (!expect(";", "return")) return std::nullopt;
        return s;
    }

    // Precedence: || < && < ==,!= < <,>,<=,>= < +,- < *,/ < unary < postfix.
    std::optional<ExprPtr> parse_expr() { return parse_or(); }

    ExprPtr make_binary(BinOp op, ExprPtr l, ExprPtr r) {
        auto e = std::make_unique<Expr>();
        e->kind = Expr::Kind::Binary;
        e->pos = l->pos;
        e->op = op;
        e->lhs = std::move(l);
        e->rhs = std::move(r);
        return e;
    }

    std::optional<ExprPtr> parse_or() {
        auto l = parse_and();
        if (!l) return std::nullopt;
        while (peek().is("||")) {
            take();
            auto r = parse_and();
            if (!r) return std::nullopt;
            l = make_binary(BinOp::Or, std::move(*l), std::move(*r));
        }
        return l;
    }

    std::optional<ExprPtr> parse_and() {
        auto l = parse_equality();
        if (!l) return std::nullopt;
        while (peek().is("&&")) {
            take();
            auto r = parse_equality();
            if (!r) return std::nullopt;
            l = make_binary(BinOp::And, std::move(*l), std::move(*r));
        }
        return l;
    }

    std::optional<ExprPtr> parse_equality() {
        auto l = parse_relational();
        if (!l) return std::nullopt;
        while (peek().is("==") || peek().is("!=")) {
            BinOp op = take().text == "==" ? BinOp::Eq : BinOp::Ne;
            auto r = parse_relational();
            if (!r) return std::nullopt;
            l = make_binary(op, std::move(*l), std::move(*r));
        }
        return l;
    }

    std::optional<ExprPtr> parse_relational() {
        auto l = parse_additive();
        if (!l) return std::nullopt;
        while (peek().is("<") || peek().is(">") || peek().is("<=") || peek().is(">=")) {
            std::string t = take().text;
            BinOp op = t == "<" ? BinOp::Lt : t == ">" ? BinOp::Gt : t == "<=" ? BinOp::Le : BinOp::Ge;
            auto r = parse_additive();
            if (!r) return std::nullopt;
            l = make_binary(op, std::move(*l), std::move(*r));
        }
        return l;
    }

    std::optional<ExprPtr> parse_additive() {
        auto l = parse_multiplicative();
        if (!l) return std::nullopt;
        while (peek().is("+") || peek().is("-")) {
            BinOp op = take().text == "+" ? BinOp::Add : BinOp::Sub;
            auto r = parse_multiplicative();
            if (!r) return std::nullopt;
            l = make_binary(op, std::move(*l), std::move(*r));
        }
        return l;
    }

    std::optional<ExprPtr> parse_multiplicative() {
        auto l = parse_unary();
        if (!l) return std::nullopt;
        while (peek().is("*") || peek().is("/")) {
            BinOp op = take().text == "*" ? BinOp::Mul : BinOp::Div;
            auto r = parse_unary();
            if (!r) return std::nullopt;
            l = make_binary(op, std::move(*l), std::move(*r));
        }
        return l;
    }

    std::optional<ExprPtr> parse_unary() {
        if (peek().is("-") || peek().is("!")) {
            auto e = std::make_unique<Expr>();
            e->pos = peek().pos;
            e->kind = take().text == "-" ? Expr::Kind::Neg : Expr::Kind::Not;
            auto operand = parse_unary();
            if (!operand) return std::nullopt;
            e->lhs = std::move(*operand);
            return e;
        }
        return parse_postfix();
    }

    std::optional<ExprPtr> parse_postfix() {
        auto e = parse_primary();
        if (!e) return std::nullopt;
        while (true) {
            if (peek().is(".")) {
                SrcPos at = take().pos;
                if (peek().kind != Token::Kind::Ident) {
                    err_ = fail("a member name");
                    return std::nullopt;
                }
                auto m = std::make_unique<Expr>();
                m->kind = Expr::Kind::Member;
                m->pos = at;
                m->text = take().text;
                m->lhs = std::move(*e);
                e = std::move(m);
            } else if (peek().is("[")) {
                SrcPos at = take().pos;
                auto idx = parse_expr();
                if (!idx) return std::nullopt;
                if (!expect("]", "index access")) return std::nullopt;
                auto x = std::make_unique<Expr>();
                x->kind = Expr::Kind::Index;
                x->pos = at;
                x->lhs = std::move(*e);
                x->rhs = std::move(*idx);
                e = std::move(x);
            } else {
                break;
            }
        }
        return e;
    }

    std::optional<ExprPtr> parse_primary() {
        const Token& t = peek();
        if (t.is("(")) {
            take();
            auto e = parse_expr();
            if (!e) return std::nullopt;
            if (!expect(")", "parenthesized expression")) return std::nullopt;
            return e;
        }
        if (t.kind == Token::Kind::Number) {
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Number;
            e->pos = t.pos;
            e->text = take().text;
            return e;
        }
        if (t.kind == Token::Kind::String) {
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::String;
            e->pos = t.pos;
            e->text = take().text;
            return e;
        }
        if (t.kind == Token::Kind::Ident) {
            SrcPos at = t.pos;
            auto name = parse_qualified_name();
            if (!name) return std::nullopt;
            if (peek().is("(")) {
                take();
                auto call = std::make_unique<Expr>();
                call->kind = Expr::Kind::Call;
                call->pos = at;
                call->text = *name;
                if (!peek().is(")")) {
                    while (true) {
                        auto a = parse_expr();
                        if (!a) return std::nullopt;
                        call->args.push_back(std::move(*a));
                        if (peek().is(",")) {
                            take();
                            continue;
                        }
                        break;
                    }
                }
                if (!expect(")", "call arguments")) return std::nullopt;
                return call;
            }
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Var;
            e->pos = at;
            e->text = *name;
            return e;
        }
        err_ = fail("an expression");
        return std::nullopt;
    }
};

}  // namespace detail

/// Parses a token stream into a Program. The loader services include
/// directives; pass nullptr to reject them.
inline FrontResult<Program> parse_program(std::vector<Token> tokens, FileLoader loader = nullptr) {
    Program program;
    detail::Parser p(std::move(tokens), program, std::move(loader));
    if (auto e = p.run()) return *e;
    return program;
}

inline FrontResult<Program> parse_source(std::string_view source,
                                         const std::string& filename = "<input>",
                                         FileLoader loader = nullptr) {
    auto toks = tokenize(source, filename);
    if (!toks) return toks.error();
    return parse_program(std::move(toks.value()), std::move(loader));
}

}  // namespace unitlint
