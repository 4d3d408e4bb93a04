#pragma once

#include <cassert>
#include <utility>
#include <variant>

namespace unitlint {

/// Minimal expected-like result carrier. T and E must be distinct types.
template <typename T, typename E>
class Result {
public:
    Result(T value) : v_(std::move(value)) {}
    Result(E error) : v_(std::move(error)) {}

    bool ok() const { return std::holds_alternative<T>(v_); }
    explicit operator bool() const { return ok(); }

    T& value() & {
        assert(ok());
        return std::get<T>(v_);
    }
    T&& value() && {
        assert(ok());
        return std::get<T>(std::move(v_));
    }
    const T& value() const& {
        assert(ok());
        return std::get<T>(v_);
    }
    E& error() {
        assert(!ok());
        return std::get<E>(v_);
    }
    const E& error() const {
        assert(!ok());
        return std::get<E>(v_);
    }

    T value_or(T fallback) const { return ok() ? std::get<T>(v_) : std::move(fallback); }

private:
    std::variant<T, E> v_;
};

}  // namespace unitlint
