#pragma once

// Named bindings to configuration struct members, used for the flat
// `key = value` config file, config echoes in model files and run
// manifests.  Numbers are formatted with the shortest round-trip form.

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <type_traits>
#include <system_error>
#include <variant>
#include <vector>

#include "oga/error.hpp"

namespace oga {

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "seeds and sizes share one field kind");

struct FieldRef {
    std::string key;
    std::variant<int*, double*, std::uint64_t*, bool*, std::string*> target;
};

using FieldList = std::vector<FieldRef>;

inline std::string format_field(const FieldRef& field) {
    return std::visit(
        [](auto* p) -> std::string {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, double>) return format_double(*p);
            else if constexpr (std::is_same_v<T, bool>) return *p ? "true" : "false";
            else if constexpr (std::is_same_v<T, std::string>) return *p;
            else return std::to_string(*p);
        },
        field.target);
}

inline void parse_field(const FieldRef& field, std::string_view text) {
    auto bad = [&](const char* kind) {
        throw ConfigError("config key `" + field.key + "`: `" + std::string(text) + "` is not " + kind);
    };
    std::visit(
        [&](auto* p) {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, std::string>) {
                *p = std::string(text);
            } else if constexpr (std::is_same_v<T, bool>) {
                if (text == "true") *p = true;
                else if (text == "false") *p = false;
                else bad("a boolean (true/false)");
            } else {
                T value{};
                auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
                if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
                    bad(std::is_same_v<T, double> ? "a number" : "an integer");
                *p = value;
            }
        },
        field.target);
}

} // namespace oga
