#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace unitlint {

// Exact rational scalar arithmetic. Scalars of unit types are log10 values and
// must never be approximated by floating point.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline Rational rat(std::int64_t n, std::int64_t d = 1) { return Rational(n, d); }

/// Parses a decimal literal such as "-3.5563025007672872650" into the exact
/// rational it denotes. Returns nullopt on malformed input.
inline std::optional<Rational> rational_from_decimal(std::string_view text) {
    if (text.empty()) return std::nullopt;
    bool neg = false;
    std::size_t i = 0;
    if (text[0] == '+' || text[0] == '-') {
        neg = text[0] == '-';
        i = 1;
    }
    BigInt num = 0;
    BigInt den = 1;
    bool saw_digit = false;
    bool saw_dot = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (c == '.') {
            if (saw_dot) return std::nullopt;
            saw_dot = true;
        } else if (c >= '0' && c <= '9') {
            num = num * 10 + (c - '0');
            if (saw_dot) den *= 10;
            saw_digit = true;
        } else {
            return std::nullopt;
        }
    }
    if (!saw_digit) return std::nullopt;
    if (neg) num = -num;
    return Rational(num, den);
}

/// Parses "p/q" or a plain integer "p".
inline std::optional<Rational> rational_from_fraction(std::string_view text) {
    auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        try {
            return Rational(BigInt(std::string(text)));
        } catch (...) {
            return std::nullopt;
        }
    }
    try {
        BigInt p{std::string(text.substr(0, slash))};
        BigInt q{std::string(text.substr(slash + 1))};
        if (q == 0) return std::nullopt;
        return Rational(p, q);
    } catch (...) {
        return std::nullopt;
    }
}

/// Formats as "p/q", or "p" when the denominator is 1.
inline std::string format_fraction(const Rational& r) {
    std::string p = numerator(r).str();
    if (denominator(r) == 1) return p;
    return p + "/" + denominator(r).str();
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace unitlint
