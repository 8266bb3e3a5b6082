#pragma once

#include <numbers>
#include <string_view>

namespace hybridspec {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Vacuum permeability (H/m), CODATA 2018.
inline constexpr double kMu0 = 1.25663706212e-6;

constexpr double hz_to_angular(double hz) noexcept { return kTwoPi * hz; }
constexpr double angular_to_hz(double omega) noexcept { return omega / kTwoPi; }

/// Parses a quantity written with an SI prefix and unit symbol, e.g.
/// "2.923GHz", "444 kHz", "2.73nH", "884MOhm", "7fF/mm", "0.01mT/mA".
///
/// `unit` is the symbol the text must carry ("Hz", "H", "F", "Ohm", "A",
/// "m", "H/mm", ...). The prefix applies to the leading symbol only, so
/// "7fF/mm" parsed against "F/mm" yields 7e-15. "Ω" and "ohm" are accepted
/// wherever "Ohm" is expected, and "u" is accepted for "µ".
///
/// Throws ConfigError when the number is malformed or the unit does not match.
double parse_quantity(std::string_view text, std::string_view unit);

}  // namespace hybridspec
