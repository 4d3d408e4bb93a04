#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <set>
#include <string>

#include "unitlint/rational.hpp"
#include "unitlint/result.hpp"

namespace unitlint {

// SI bases in canonical order. Gram (not kilogram) is the mass base.
inline constexpr int kNumBases = 7;
inline constexpr const char* kBaseSymbols[kNumBases] = {"m", "s", "mol", "A", "K", "cd", "g"};
enum class Base : int { Meter = 0, Second, Mole, Ampere, Kelvin, Candela, Gram };

using ExpVec = std::array<int, kNumBases>;

/// Frame-of-reference specifier: Any (top of the lattice), a single concrete
/// frame, or a non-empty set of possible frames. A one-element set is
/// normalized to the concrete form, so equality is structural.
class FrameSpec {
public:
    FrameSpec() : any_(true) {}

    static FrameSpec any() { return FrameSpec(); }
    static FrameSpec concrete(std::string id) {
        FrameSpec f;
        f.any_ = false;
        f.ids_.insert(std::move(id));
        return f;
    }
    static FrameSpec one_of(std::set<std::string> ids) {
        FrameSpec f;
        f.any_ = false;
        f.ids_ = std::move(ids);
        return f;
    }

    bool is_any() const { return any_; }
    bool is_concrete() const { return !any_ && ids_.size() == 1; }
    const std::set<std::string>& ids() const { return ids_; }

    bool operator==(const FrameSpec& o) const { return any_ == o.any_ && ids_ == o.ids_; }
    bool operator!=(const FrameSpec& o) const { return !(*this == o); }

    /// f1 below f2 in the frame lattice: f2 is Any, or f1's set is a subset.
    friend bool frame_below(const FrameSpec& f1, const FrameSpec& f2) {
        if (f2.any_) return true;
        if (f1.any_) return false;
        return std::includes(f2.ids_.begin(), f2.ids_.end(), f1.ids_.begin(), f1.ids_.end());
    }

    std::string to_string() const {
        if (any_) return "Any";
        if (ids_.size() == 1) return *ids_.begin();
        std::string out = "{";
        bool first = true;
        for (const auto& id : ids_) {
            if (!first) out += ", ";
            out += id;
            first = false;
        }
        return out + "}";
    }

private:
    bool any_;
    std::set<std::string> ids_;
};

/// A unit type: exact log10 scale factor, integer exponents over the seven SI
/// bases, and a frame of reference.
struct UnitType {
    Rational scalar_log10{0};
    ExpVec exponents{};
    FrameSpec frame = FrameSpec::any();

    static UnitType dimensionless() { return UnitType{}; }

    static UnitType base(Base b, Rational scale = Rational(0)) {
        UnitType u;
        u.scalar_log10 = std::move(scale);
        u.exponents[static_cast<int>(b)] = 1;
        return u;
    }

    bool same_dimension(const UnitType& o) const {
        return scalar_log10 == o.scalar_log10 && exponents == o.exponents;
    }
    bool is_dimensionless() const {
        return scalar_log10 == 0 &&
               std::all_of(exponents.begin(), exponents.end(), [](int e) { return e == 0; });
    }

    bool operator==(const UnitType& o) const { return same_dimension(o) && frame == o.frame; }
    bool operator!=(const UnitType& o) const { return !(*this == o); }

    UnitType with_frame(FrameSpec f) const {
        UnitType u = *this;
        u.frame = std::move(f);
        return u;
    }
};

enum class UnitErrorKind { FrameMismatch, DimensionMismatch, EmptyComplement, UnknownUnit };

struct UnitError {
    UnitErrorKind kind;
    std::string detail;
    std::optional<UnitType> left;
    std::optional<UnitType> right;
};

template <typename T>
using UnitResult = Result<T, UnitError>;

/// u1 below u2: dimensions identical and u1's frame below u2's.
inline bool subtype(const UnitType& u1, const UnitType& u2) {
    return u1.same_dimension(u2) && frame_below(u1.frame, u2.frame);
}

/// Lattice meet. Any is the top element; sets meet by intersection.
inline UnitResult<FrameSpec> frame_meet(const FrameSpec& f1, const FrameSpec& f2) {
    if (f1.is_any()) return f2;
    if (f2.is_any()) return f1;
    std::set<std::string> inter;
    std::set_intersection(f1.ids().begin(), f1.ids().end(), f2.ids().begin(), f2.ids().end(),
                          std::inserter(inter, inter.begin()));
    if (inter.empty()) {
        return UnitError{UnitErrorKind::FrameMismatch,
                         "frames " + f1.to_string() + " and " + f2.to_string() + " are disjoint",
                         std::nullopt, std::nullopt};
    }
    return FrameSpec::one_of(std::move(inter));
}

/// Set complement against the full frame enumeration from the protocol model.
inline UnitResult<FrameSpec> frame_complement(const FrameSpec& f,
                                              const std::set<std::string>& universe) {
    if (f.is_any()) {
        return UnitError{UnitErrorKind::EmptyComplement, "complement of Any is empty",
                         std::nullopt, std::nullopt};
    }
    std::set<std::string> out;
    std::set_difference(universe.begin(), universe.end(), f.ids().begin(), f.ids().end(),
                        std::inserter(out, out.begin()));
    if (out.empty()) {
        return UnitError{UnitErrorKind::EmptyComplement,
                         "complement of " + f.to_string() + " in the frame universe is empty",
                         std::nullopt, std::nullopt};
    }
    return FrameSpec::one_of(std::move(out));
}

inline UnitResult<UnitType> mul(const UnitType& u1, const UnitType& u2) {
    auto fm = frame_meet(u1.frame, u2.frame);
    if (!fm) {
        auto err = fm.error();
        err.left = u1;
        err.right = u2;
        return err;
    }
    UnitType out;
    out.scalar_log10 = u1.scalar_log10 + u2.scalar_log10;
    for (int i = 0; i < kNumBases; ++i) out.exponents[i] = u1.exponents[i] + u2.exponents[i];
    out.frame = fm.value();
    return out;
}

inline UnitResult<UnitType> div(const UnitType& u1, const UnitType& u2) {
    auto fm = frame_meet(u1.frame, u2.frame);
    if (!fm) {
        auto err = fm.error();
        err.left = u1;
        err.right = u2;
        return err;
    }
    UnitType out;
    out.scalar_log10 = u1.scalar_log10 - u2.scalar_log10;
    for (int i = 0; i < kNumBases; ++i) out.exponents[i] = u1.exponents[i] - u2.exponents[i];
    out.frame = fm.value();
    return out;
}

/// Addition (and subtraction) is defined only when one operand is a subtype of
/// the other; the result is the larger operand.
inline UnitResult<UnitType> add(const UnitType& u1, const UnitType& u2) {
    if (subtype(u1, u2)) return u2;
    if (subtype(u2, u1)) return u1;
    if (!u1.same_dimension(u2)) {
        return UnitError{UnitErrorKind::DimensionMismatch, "operand dimensions differ", u1, u2};
    }
    return UnitError{UnitErrorKind::FrameMismatch, "operand frames are incompatible", u1, u2};
}

inline UnitResult<UnitType> sub(const UnitType& u1, const UnitType& u2) { return add(u1, u2); }

}  // namespace unitlint
