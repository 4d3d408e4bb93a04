#pragma once

#include <memory>
#include <string>
#include <vector>

namespace unitlint {

struct SrcPos {
    std::string file;
    int line = 0;
    int col = 0;

    std::string to_string() const {
        return file + ":" + std::to_string(line) + ":" + std::to_string(col);
    }
};

struct FrontError {
    SrcPos pos;
    std::string message;
};

enum class BinOp { Add, Sub, Mul, Div, Eq, Ne, Lt, Gt, Le, Ge, And, Or };

inline const char* binop_text(BinOp op) {
    switch (op) {
        case BinOp::Add: return "+";
        case BinOp::Sub: return "-";
        case BinOp::Mul: return "*";
        case BinOp::Div: return "/";
        case BinOp::Eq: return "==";
        case BinOp::Ne: return "!=";
        case BinOp::Lt: return "<";
        case BinOp::Gt: return ">";
        case BinOp::Le: return "<=";
        case BinOp::Ge: return ">=";
        case BinOp::And: return "&&";
        case BinOp::Or: return "||";
    }
    return "?";
}

struct TypeName {
    std::string name;  // int, float, u32, void, enum, or a declared struct
    bool is_array = false;

    bool operator==(const TypeName&) const = default;
    std::string to_string() const { return is_array ? name + "[]" : name; }
};

/// How a variable reference resolved during canonicalization.
enum class RefKind { None, Local, Param, NonLocal, EnumConst };

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
    enum class Kind { Number, String, Var, Member, Index, Neg, Not, Binary, Call };

    Kind kind;
    SrcPos pos;
    std::string text;  // literal text / var name / member field / callee name
    BinOp op = BinOp::Add;
    ExprPtr lhs;  // Member/Index/Neg/Not operand, Binary lhs
    ExprPtr rhs;  // Binary rhs, Index subscript
    std::vector<ExprPtr> args;

    // Filled in by canonicalize.
    RefKind ref = RefKind::None;
    std::string canonical;    // canonical name for Var/Member/Index references
    int param_index = 0;      // 1-based, for Param references
    std::string struct_type;  // static struct type of a Member access base
    TypeName static_type;     // static type of this expression
};

struct Stmt {
    enum class Kind { VarDecl, Assign, If, Switch, While, Return, ExprStmt };

    Kind kind;
    SrcPos pos;
    TypeName type;     // VarDecl
    std::string name;  // VarDecl
    ExprPtr lvalue;    // Assign target
    ExprPtr expr;      // VarDecl init / Assign rhs / Return value / ExprStmt call
    ExprPtr cond;      // If/Switch/While scrutinee
    std::vector<Stmt> then_block;
    std::vector<Stmt> else_block;
    std::vector<Stmt> body;  // While

    struct Case {
        bool is_default = false;
        ExprPtr value;
        std::vector<Stmt> stmts;
    };
    std::vector<Case> cases;  // Switch
};

struct StructField {
    TypeName type;
    std::string name;
};

struct StructDecl {
    SrcPos pos;
    std::string name;
    std::vector<StructField> fields;
};

struct GlobalDecl {
    SrcPos pos;
    TypeName type;
    std::string name;  // may be qualified, e.g. "Corr::link_offset"
};

struct Param {
    TypeName type;
    std::string name;
};

struct FunctionDef {
    SrcPos pos;
    TypeName return_type;
    std::string name;  // may be qualified, e.g. "Corr::correct_time"
    std::vector<Param> params;
    std::vector<Stmt> body;
};

struct Program {
    std::vector<StructDecl> structs;
    std::vector<GlobalDecl> globals;
    std::vector<FunctionDef> functions;
};

}  // namespace unitlint
