#pragma once

// Parameter set of the flip-chip bump-bonded device in angular units. The
// cavity port split is fixed at kappa_c1 = kappa_c2 = 2 pi 100 kHz and
// kappa_ci = 2 pi 244 kHz.

#include "hybridspec/model.hpp"

#include <array>
#include <cstddef>

namespace hybridspec::reference {

inline constexpr double kCavityHz = 2.923e9;
inline constexpr double kCavityLinewidthHz = 444e3;
inline constexpr double kCavityPort1Hz = 100e3;
inline constexpr double kCavityPort2Hz = 100e3;
inline constexpr double kCavityIntrinsicHz = 244e3;

inline constexpr std::array<double, 3> kMicrowaveHz{2.572e9, 2.589e9, 2.604e9};
inline constexpr std::array<double, 3> kMicrowaveLossHz{295e3, 346e3, 339e3};

inline constexpr std::array<double, 5> kMechanicalHz{2.485e9, 2.526e9, 2.559e9, 2.606e9, 2.651e9};
inline constexpr std::array<double, 5> kMechanicalLossHz{81e3, 80e3, 149e3, 72e3, 836e3};

inline constexpr double kCavityCouplingHz = 83.466e6;
inline constexpr std::array<double, 5> kMechanicalCouplingHz{15.314e6, 14.364e6, 14.255e6,
                                                             13.590e6, 13.633e6};

/// Flip-chip set with the microwave mode of fitting cut `cut` (0, 1 or 2).
[[nodiscard]] SystemParams flip_chip(std::size_t cut = 0);

}  // namespace hybridspec::reference
