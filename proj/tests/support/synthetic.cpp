#include "support/synthetic.hpp"

#include "hybridspec/reference_sets.hpp"
#include "hybridspec/scattering.hpp"
#include "hybridspec/units.hpp"

#include <cmath>
#include <string>

namespace hybridspec::testing {

std::vector<double> uniform_grid(double start_hz, double stop_hz, double step_hz) {
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((stop_hz - start_hz) / step_hz + 0.5));
    for (long k = 0; k <= n; ++k) out.push_back(start_hz + static_cast<double>(k) * step_hz);
    return out;
}

SystemParams random_system(std::mt19937_64& rng, std::size_t n_mechanical) {
    std::uniform_real_distribution<double> band(2.0e9, 3.0e9);
    std::uniform_real_distribution<double> log_rate(std::log(1e3), std::log(5e6));
    std::uniform_real_distribution<double> log_coupling(std::log(1e6), std::log(100e6));
    auto rate = [&] { return hz_to_angular(std::exp(log_rate(rng))); };

    SystemParams p;
    p.cavity.omega_c = hz_to_angular(band(rng));
    p.cavity.kappa_c1 = rate();
    p.cavity.kappa_c2 = rate();
    p.cavity.kappa_ci = rate();
    p.microwave = {hz_to_angular(band(rng)), rate()};
    p.g_ac = hz_to_angular(std::exp(log_coupling(rng)));
    for (std::size_t n = 0; n < n_mechanical; ++n) {
        p.mechanical.push_back({hz_to_angular(band(rng)), rate()});
        p.g_ab.push_back(hz_to_angular(std::exp(log_coupling(rng))));
    }
    std::uniform_real_distribution<double> unit(0.2, 2.0);
    p.c_offset = {unit(rng), 0.0};
    return p;
}

SyntheticFit flip_chip_three_cuts(double noise, std::uint64_t noise_seed, double step_hz) {
    namespace ref = hybridspec::reference;
    SyntheticFit out;
    const auto freqs = uniform_grid(2.46e9, 2.68e9, step_hz);
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    for (std::size_t k = 0; k < ref::kMicrowaveHz.size(); ++k) {
        SystemParams truth = ref::flip_chip(k);
        SpectrumTrace trace = simulate_s21(truth, freqs);
        if (noise > 0.0) {
            for (auto& v : trace.values) v *= 1.0 + noise * normal(rng);
        }
        out.problem.cuts.push_back({"cut" + std::to_string(k + 1), trace, std::nullopt});
        out.problem.per_cut_bounds.push_back(
            {{hz_to_angular(ref::kMicrowaveHz[k] - 8e6), hz_to_angular(ref::kMicrowaveHz[k] + 12e6)},
             {hz_to_angular(50e3), hz_to_angular(2e6)}});
        out.truth.push_back(truth);
    }
    out.problem.fixed = out.truth.front().cavity;
    for (double f : ref::kMechanicalHz) {
        out.problem.shared_bounds.mechanical.push_back({{hz_to_angular(f - 2e6), hz_to_angular(f + 3e6)},
                                                        {hz_to_angular(20e3), hz_to_angular(2e6)},
                                                        {hz_to_angular(5e6), hz_to_angular(30e6)}});
    }
    out.problem.shared_bounds.g_ac = {hz_to_angular(50e6), hz_to_angular(120e6)};
    out.problem.shared_bounds.c_offset = {0.3, 3.0};
    return out;
}

}  // namespace hybridspec::testing
