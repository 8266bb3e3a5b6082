#pragma once

// Real-coded genetic algorithm over genes normalized to [0, 1].

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace hybridspec {

/// Operator suite: tournament selection, uniform crossover, Gaussian
/// mutation and elitism. Each individual carries its own mutation step,
/// which is inherited and perturbed log-normally, so the search narrows as
/// the population converges. mutation_scale is the initial step in
/// normalized gene units.
struct GaSettings {
    int population = 200;
    int generations = 500;
    double crossover_rate = 0.9;
    double mutation_rate = 0.2;      ///< per-gene mutation probability
    double mutation_scale = 0.1;     ///< initial Gaussian sigma, normalized units
    int elite_count = 2;
    std::uint64_t seed = 1;
    int stall_generations = 150;     ///< stop after this many generations without improvement; 0 disables
    int tournament_size = 3;
    int threads = 0;                 ///< fitness evaluation workers; 0 uses the hardware count


    friend bool operator==(const GaSettings&, const GaSettings&) = default;
};

/// Throws ConfigError when the settings are inconsistent.
void require_valid(const GaSettings& settings);

struct GaOutcome {
    std::vector<double> best_genes;
    double best_cost = 0.0;
    std::vector<double> history;  ///< best cost after each generation, starting with the initial population
    int generations_run = 0;
};

using GeneObjective = std::function<double(std::span<const double>)>;

/// Minimizes `objective` over [0, 1]^dimension. Non-finite objective values
/// count as +infinity. The objective may be called concurrently; it must be
/// thread-safe. Results do not depend on the thread count.
[[nodiscard]] GaOutcome minimize_genetic(std::size_t dimension, const GeneObjective& objective,
                                         const GaSettings& settings);

}  // namespace hybridspec
