#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace hybridsim {

// Minimal result type; gcc 11 has no std::expected yet.
template <typename T, typename E>
class Result {
public:
    Result(T value) : v_(std::in_place_index<0>, std::move(value)) {}
    Result(E error) : v_(std::in_place_index<1>, std::move(error)) {}

    bool ok() const { return v_.index() == 0; }
    explicit operator bool() const { return ok(); }

    const T& value() const& {
        if (!ok()) throw std::logic_error("Result: value() on error");
        return std::get<0>(v_);
    }
    T& value() & {
        if (!ok()) throw std::logic_error("Result: value() on error");
        return std::get<0>(v_);
    }
    T&& value() && {
        if (!ok()) throw std::logic_error("Result: value() on error");
        return std::move(std::get<0>(v_));
    }
    const E& error() const {
        if (ok()) throw std::logic_error("Result: error() on value");
        return std::get<1>(v_);
    }

private:
    std::variant<T, E> v_;
};

std::string to_hex(const uint8_t* data, size_t len);
std::optional<std::string> from_hex(const std::string& hex);  // returns raw bytes

}  // namespace hybridsim
