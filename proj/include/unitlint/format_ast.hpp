#pragma once

#include <string>

#include "unitlint/ast.hpp"

namespace unitlint {

namespace detail {

inline int binop_prec(BinOp op) {
    switch (op) {
        case BinOp::Or: return 1;
        case BinOp::And: return 2;
        case BinOp::Eq:
        case BinOp::Ne: return 3;
        case BinOp::Lt:
        case BinOp::Gt:
        case BinOp::Le:
        case BinOp::Ge: return 4;
        case BinOp::Add:
        case BinOp::Sub: return 5;
        case BinOp::Mul:
        case BinOp::Div: return 6;
    }
    return 0;
}

inline void format_expr(const Expr& e, std::string& out, int parent_prec = 0) {
    switch (e.kind) {
        case Expr::Kind::Number: out += e.text; break;
        case Expr::Kind::String: out += '"' + e.text + '"'; break;
        case Expr::Kind::Var: out += e.text; break;
        case Expr::Kind::Member:
            format_expr(*e.lhs, out, 7);
            out += "." + e.text;
            break;
        case Expr::Kind::Index:
            format_expr(*e.lhs, out, 7);
            out += "[";
            format_expr(*e.rhs, out);
            out += "]";
            break;
        case Expr::Kind::Neg:
        case Expr::Kind::Not: {
            bool paren = parent_prec > 6;
            if (paren) out += "(";
            out += e.kind == Expr::Kind::Neg ? "-" : "!";
            format_expr(*e.lhs, out, 7);
            if (paren) out += ")";
            break;
        }
        case Expr::Kind::Binary: {
            int prec = binop_prec(e.op);
            bool paren = prec < parent_prec;
            if (paren) out += "(";
            format_expr(*e.lhs, out, prec);
            out += std::string(" ") + binop_text(e.op) + " ";
            // Right operand needs parens at equal precedence (left-assoc).
            format_expr(*e.rhs, out, prec + 1);
            if (paren) out += ")";
            break;
        }
        case Expr::Kind::Call:
            out += e.text + "(";
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += ", ";
                format_expr(*e.args[i], out);
            }
            out += ")";
            break;
    }
}

inline void format_block(const std::vector<Stmt>& stmts, std::string& out, int indent);

inline void format_stmt(const Stmt& s, std::string& out, int indent) {
    std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    out += pad;
    switch (s.kind) {
        case Stmt::Kind::VarDecl:
            out += s.type.to_string() + " " + s.name;
            if (s.expr) {
                out += " = ";
                format_expr(*s.expr, out);
            }
            out += ";\n";
            break;
        case Stmt::Kind::Assign:
            format_expr(*s.lvalue, out);
            out += " = ";
            format_expr(*s.expr, out);
            out += ";\n";
            break;
        case Stmt::Kind::If:
            out += "if (";
            format_expr(*s.cond, out);
            out += ") {\n";
            format_block(s.then_block, out, indent + 1);
            out += pad + "}";
            if (!s.else_block.empty()) {
                if (s.else_block.size() == 1 && s.else_block[0].kind == Stmt::Kind::If) {
                    out += " else ";
                    std::string nested;
                    format_stmt(s.else_block[0], nested, indent);
                    // Drop the nested statement's leading indent to join "else if".
                    out += nested.substr(pad.size());
                    return;
                }
                out += " else {\n";
                format_block(s.else_block, out, indent + 1);
                out += pad + "}";
            }
            out += "\n";
            break;
        case Stmt::Kind::Switch:
            out += "switch (";
            format_expr(*s.cond, out);
            out += ") {\n";
            for (const auto& c : s.cases) {
                if (c.is_default) {
                    out += pad + "  default:\n";
                } else {
                    out += pad + "  case ";
                    format_expr(*c.value, out);
                    out += ":\n";
                }
                format_block(c.stmts, out, indent + 2);
                out += pad + "    break;\n";
            }
            out += pad + "}\n";
            break;
        case Stmt::Kind::While:
            out += "while (";
            format_expr(*s.cond, out);
            out += ") {\n";
            format_block(s.body, out, indent + 1);
            out += pad + "}\n";
            break;
        case Stmt::Kind::Return:
            out += "return";
            if (s.expr) {
                out += " ";
                format_expr(*s.expr, out);
            }
            out += ";\n";
            break;
        case Stmt::Kind::ExprStmt:
            format_expr(*s.expr, out);
            out += ";\n";
            break;
    }
}

inline void format_block(const std::vector<Stmt>& stmts, std::string& out, int indent) {
    for (const auto& s : stmts) format_stmt(s, out, indent);
}

}  // namespace detail

inline std::string format_expr(const Expr& e) {
    std::string out;
    detail::format_expr(e, out);
    return out;
}

/// Pretty-prints a Program so that reparsing the output yields an equal AST.
inline std::string format_program(const Program& p) {
    std::string out;
    for (const auto& s : p.structs) {
        out += "struct " + s.name + " {\n";
        for (const auto& f : s.fields) out += "  " + f.type.to_string() + " " + f.name + ";\n";
        out += "};\n\n";
    }
    for (const auto& g : p.globals) out += g.type.to_string() + " " + g.name + ";\n";
    if (!p.globals.empty()) out += "\n";
    for (const auto& f : p.functions) {
        out += f.return_type.to_string() + " " + f.name + "(";
        for (std::size_t i = 0; i < f.params.size(); ++i) {
            if (i) out += ", ";
            out += f.params[i].type.to_string() + " " + f.params[i].name;
        }
        out += ") {\n";
        detail::format_block(f.body, out, 1);
        out += "}\n\n";
    }
    return out;
}

}  // namespace unitlint
