#include "hybridspec/units.hpp"

#include "hybridspec/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <string>
#include <utility>

namespace hybridspec {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

// Ohm spellings are normalized before matching.
std::string normalize_unit(std::string_view s) {
    std::string out(s);
    // Greek capital omega and the dedicated ohm sign both appear in the wild.
    for (std::string_view alias : {std::string_view{"Ω"}, std::string_view{"Ω"},
                                   std::string_view{"ohm"}}) {
        for (auto pos = out.find(alias); pos != std::string::npos; pos = out.find(alias)) {
            out.replace(pos, alias.size(), "Ohm");
        }
    }
    return out;
}

constexpr std::array<std::pair<std::string_view, double>, 12> kPrefixes{{
    {"a", 1e-18},
    {"f", 1e-15},
    {"p", 1e-12},
    {"n", 1e-9},
    {"u", 1e-6},
    {"µ", 1e-6},
    {"μ", 1e-6},
    {"m", 1e-3},
    {"k", 1e3},
    {"M", 1e6},
    {"G", 1e9},
    {"T", 1e12},
}};

}  // namespace

double parse_quantity(std::string_view text, std::string_view unit) {
    const std::string_view body = trim(text);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
    if (ec != std::errc{} || end == body.data()) {
        throw ConfigError("malformed quantity '" + std::string(text) + "'");
    }
    if (!std::isfinite(value)) {
        throw ConfigError("non-finite quantity '" + std::string(text) + "'");
    }
    const std::string suffix =
        normalize_unit(trim(body.substr(static_cast<std::size_t>(end - body.data()))));
    const std::string expected = normalize_unit(unit);

    if (suffix == expected) return value;
    for (const auto& [prefix, scale] : kPrefixes) {
        if (suffix.size() == prefix.size() + expected.size() && suffix.starts_with(prefix) &&
            suffix.compare(prefix.size(), std::string::npos, expected) == 0) {
            return value * scale;
        }
    }
    throw ConfigError("quantity '" + std::string(text) + "' does not carry unit '" +
                      std::string(unit) + "'");
}

}  // namespace hybridspec
