#pragma once

// Synthetic data shared by unit and acceptance tests.

#include "hybridspec/fit.hpp"
#include "hybridspec/model.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace hybridspec::testing {

/// start, start + step, ... up to and including stop (within half a step).
std::vector<double> uniform_grid(double start_hz, double stop_hz, double step_hz);

/// Random valid system with n mechanical modes in a 2-3 GHz band. Rates span
/// 1 kHz - 5 MHz and couplings 1 - 100 MHz (all times 2 pi).
SystemParams random_system(std::mt19937_64& rng, std::size_t n_mechanical);

struct SyntheticFit {
    FitProblem problem;
    std::vector<SystemParams> truth;  ///< one per cut
};

/// Three cuts of the flip-chip reference set on 2.46-2.68 GHz. Each value is
/// scaled by (1 + noise * N(0, 1)). Bounds are asymmetric around the truth:
/// mechanical frequencies -2/+3 MHz, microwave -8/+12 MHz, rates 20 kHz-2 MHz
/// (mechanical) and 50 kHz-2 MHz (microwave), g_ab 5-30 MHz, g_ac 50-120 MHz,
/// c_offset 0.3-3.
SyntheticFit flip_chip_three_cuts(double noise, std::uint64_t noise_seed, double step_hz = 50e3);

}  // namespace hybridspec::testing
