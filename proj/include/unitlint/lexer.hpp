#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "unitlint/ast.hpp"
#include "unitlint/result.hpp"

namespace unitlint {

struct Token {
    enum class Kind { Ident, Number, String, Punct, End };
    Kind kind;
    std::string text;
    SrcPos pos;

    bool is(std::string_view t) const { return kind == Kind::Punct && text == t; }
    bool is_ident(std::string_view t) const { return kind == Kind::Ident && text == t; }
};

template <typename T>
using FrontResult = Result<T, FrontError>;

/// Tokenizes mini-language source. Comments (// and /* */) and whitespace are
/// skipped; numbers keep their exact literal text.
inline FrontResult<std::vector<Token>> tokenize(std::string_view source,
                                                const std::string& filename = "<input>") {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto pos_here = [&] { return SrcPos{filename, line, col}; };
    auto advance = [&](std::size_t n = 1) {
        for (std::size_t k = 0; k < n && i < source.size(); ++k, ++i) {
            if (source[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    while (i < source.size()) {
        char c = source[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance();
            continue;
        }
        if (c == '/' && i + 1 < source.size() && source[i + 1] == '/') {
            while (i < source.size() && source[i] != '\n') advance();
            continue;
        }
        if (c == '/' && i + 1 < source.size() && source[i + 1] == '*') {
            advance(2);
            while (i + 1 < source.size() && !(source[i] == '*' && source[i + 1] == '/')) advance();
            advance(2);
            continue;
        }
        SrcPos p = pos_here();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string text;
            while (i < source.size() && (std::isalnum(static_cast<unsigned char>(source[i])) ||
                                         source[i] == '_')) {
                text += source[i];
                advance();
            }
            out.push_back({Token::Kind::Ident, std::move(text), p});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < source.size() &&
             std::isdigit(static_cast<unsigned char>(source[i + 1])))) {
            std::string text;
            while (i < source.size() && (std::isdigit(static_cast<unsigned char>(source[i])) ||
                                         source[i] == '.' || source[i] == 'e' || source[i] == 'E' ||
                                         ((source[i] == '+' || source[i] == '-') && !text.empty() &&
                                          (text.back() == 'e' || text.back() == 'E')) ||
                                         source[i] == 'f' || source[i] == 'F')) {
                text += source[i];
                advance();
            }
            out.push_back({Token::Kind::Number, std::move(text), p});
            continue;
        }
        if (c == '"') {
            advance();
            std::string text;
            while (i < source.size() && source[i] != '"') {
                text += source[i];
                advance();
            }
            if (i >= source.size())
                return FrontError{p, "unterminated string literal"};
            advance();
            out.push_back({Token::Kind::String, std::move(text), p});
            continue;
        }
        static const char* kTwoChar[] = {"==", "!=", "<=", ">=", "&&", "||", "::"};
        bool matched = false;
        for (const char* t : kTwoChar) {
            if (source.substr(i, 2) == t) {
                out.push_back({Token::Kind::Punct, t, p});
                advance(2);
                matched = true;
                break;
            }
        }
        if (matched) continue;
        if (std::string_view("+-*/=<>!(){}[];,.:&|").find(c) != std::string_view::npos) {
            out.push_back({Token::Kind::Punct, std::string(1, c), p});
            advance();
            continue;
        }
        return FrontError{p, std::string("unexpected character '") + c + "'"};
    }
    out.push_back({Token::Kind::End, "", pos_here()});
    return out;
}

}  // namespace unitlint
