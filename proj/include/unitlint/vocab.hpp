#pragma once

#include <cctype>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "unitlint/unit.hpp"

namespace unitlint {

// Built-in unit vocabulary. Imperial atoms and other non-power-of-ten scales
// store a pinned 20-significant-digit rational approximation of their log10 so
// equality stays exact and deterministic: two scalars are equal only if they
// come from the same vocabulary entry.
inline const std::map<std::string, UnitType, std::less<>>& unit_vocabulary() {
    static const std::map<std::string, UnitType, std::less<>> vocab = [] {
        auto pin = [](const char* text) { return *rational_from_decimal(text); };
        std::map<std::string, UnitType, std::less<>> v;
        v["m"] = UnitType::base(Base::Meter);
        v["cm"] = UnitType::base(Base::Meter, rat(-2));
        v["mm"] = UnitType::base(Base::Meter, rat(-3));
        v["km"] = UnitType::base(Base::Meter, rat(3));
        v["yd"] = UnitType::base(Base::Meter, pin("-0.038863782612774675522"));
        v["ft"] = UnitType::base(Base::Meter, pin("-0.51598503733243711282"));
        v["in"] = UnitType::base(Base::Meter, pin("-1.5951662833800619405"));
        v["mi"] = UnitType::base(Base::Meter, pin("3.2066488852013751461"));
        v["s"] = UnitType::base(Base::Second);
        v["ms"] = UnitType::base(Base::Second, rat(-3));
        v["us"] = UnitType::base(Base::Second, rat(-6));
        v["min"] = UnitType::base(Base::Second, pin("1.7781512503836436325"));
        v["h"] = UnitType::base(Base::Second, pin("3.5563025007672872650"));
        v["g"] = UnitType::base(Base::Gram);
        v["kg"] = UnitType::base(Base::Gram, rat(3));
        v["rad"] = UnitType::dimensionless();
        UnitType deg = UnitType::dimensionless();
        deg.scalar_log10 = pin("-1.7581226324091722155");
        v["deg"] = deg;
        v["mol"] = UnitType::base(Base::Mole);
        v["A"] = UnitType::base(Base::Ampere);
        v["K"] = UnitType::base(Base::Kelvin);
        v["cd"] = UnitType::base(Base::Candela);
        return v;
    }();
    return vocab;
}

namespace detail {

// Parses one atom token: a vocabulary name, "10^{p/q}", either optionally
// followed by "^<int>".
inline UnitResult<UnitType> parse_atom(std::string_view tok) {
    int exp = 1;
    if (auto caret = tok.rfind('^'); caret != std::string_view::npos && caret > 0 &&
                                     tok[caret - 1] != '0' /* not the 10^{..} form */) {
        std::string_view etext = tok.substr(caret + 1);
        try {
            exp = std::stoi(std::string(etext));
        } catch (...) {
            return UnitError{UnitErrorKind::UnknownUnit, std::string(tok)};
        }
        tok = tok.substr(0, caret);
    }
    UnitType atom;
    if (tok.size() > 4 && tok.substr(0, 4) == "10^{" && tok.back() == '}') {
        auto r = rational_from_fraction(tok.substr(4, tok.size() - 5));
        if (!r) return UnitError{UnitErrorKind::UnknownUnit, std::string(tok)};
        atom = UnitType::dimensionless();
        atom.scalar_log10 = *r;
    } else {
        auto it = unit_vocabulary().find(tok);
        if (it == unit_vocabulary().end())
            return UnitError{UnitErrorKind::UnknownUnit, std::string(tok)};
        atom = it->second;
    }
    UnitType out = UnitType::dimensionless();
    out.scalar_log10 = atom.scalar_log10 * exp;
    for (int i = 0; i < kNumBases; ++i) out.exponents[i] = atom.exponents[i] * exp;
    return out;
}

}  // namespace detail

/// Parses a unit string such as "m/s", "cm", "kg*m/s/s". '*' and '/' apply
/// left to right. The result always has frame Any.
inline UnitResult<UnitType> parse_unit_string(std::string_view text) {
    UnitType acc = UnitType::dimensionless();
    std::size_t pos = 0;
    char pending = '*';
    while (pos <= text.size()) {
        std::size_t next = pos;
        int depth = 0;
        while (next < text.size() && (depth > 0 || (text[next] != '*' && text[next] != '/'))) {
            if (text[next] == '{') ++depth;
            if (text[next] == '}') --depth;
            ++next;
        }
        std::string_view tok = text.substr(pos, next - pos);
        while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.front())))
            tok.remove_prefix(1);
        while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.back())))
            tok.remove_suffix(1);
        if (tok.empty()) return UnitError{UnitErrorKind::UnknownUnit, std::string(text)};
        auto atom = detail::parse_atom(tok);
        if (!atom) return atom.error();
        auto combined = pending == '*' ? mul(acc, atom.value()) : div(acc, atom.value());
        acc = combined.value();  // frames are all Any here, cannot fail
        if (next >= text.size()) break;
        pending = text[next];
        pos = next + 1;
    }
    return acc;
}

/// Formats the unit component (scale + exponents, frame excluded). Emits the
/// canonical atom when one matches, then tries quotients/products of two
/// atoms, else the generic "10^{p/q}*m^1*..." form. The output is always
/// re-parseable by parse_unit_string.
inline std::string format_unit(const UnitType& u) {
    const auto& vocab = unit_vocabulary();
    for (const auto& [name, atom] : vocab) {
        if (u.same_dimension(atom)) return name;
    }
    for (const auto& [n1, a1] : vocab) {
        for (const auto& [n2, a2] : vocab) {
            if (u.same_dimension(div(a1, a2).value())) return n1 + "/" + n2;
        }
    }
    for (const auto& [n1, a1] : vocab) {
        for (const auto& [n2, a2] : vocab) {
            if (n1 <= n2 && u.same_dimension(mul(a1, a2).value())) return n1 + "*" + n2;
        }
    }
    std::string out;
    if (u.scalar_log10 != 0) out = "10^{" + format_fraction(u.scalar_log10) + "}";
    for (int i = 0; i < kNumBases; ++i) {
        if (u.exponents[i] == 0) continue;
        if (!out.empty()) out += "*";
        out += kBaseSymbols[i];
        if (u.exponents[i] != 1) out += "^" + std::to_string(u.exponents[i]);
    }
    if (out.empty()) out = "10^{0}";
    return out;
}

/// "(unit, frame)" rendering used in diagnostics.
inline std::string format_unit_type(const UnitType& u) {
    return "(" + format_unit(u) + ", " + u.frame.to_string() + ")";
}

/// One entry of the scale-snapping table used by the linear mining rule.
struct ConversionEntry {
    double factor;
    Rational log10_value;
    std::string label;
};

/// Scale factors the linear rule may snap to: powers of ten plus the common
/// time and imperial constants, with reciprocals.
inline const std::vector<ConversionEntry>& conversion_table() {
    static const std::vector<ConversionEntry> table = [] {
        auto pin = [](const char* text) { return *rational_from_decimal(text); };
        std::vector<ConversionEntry> t;
        for (int k = -9; k <= 9; ++k) {
            t.push_back({std::pow(10.0, k), rat(k), "10^" + std::to_string(k)});
        }
        struct Named {
            double f;
            Rational l;
            std::string name;
        };
        std::vector<Named> named = {
            {60.0, pin("1.7781512503836436325"), "60"},
            {3600.0, pin("3.5563025007672872650"), "3600"},
            {0.9144, pin("-0.038863782612774675522"), "0.9144"},
            {0.3048, pin("-0.51598503733243711282"), "0.3048"},
            {0.0254, pin("-1.5951662833800619405"), "0.0254"},
            {1609.344, pin("3.2066488852013751461"), "1609.344"},
        };
        for (const auto& n : named) {
            t.push_back({n.f, n.l, n.name});
            t.push_back({1.0 / n.f, -n.l, "1/" + n.name});
        }
        return t;
    }();
    return table;
}

}  // namespace unitlint
