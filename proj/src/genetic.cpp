#include "hybridspec/genetic.hpp"

#include "hybridspec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace hybridspec {

void require_valid(const GaSettings& s) {
    if (s.population < 2) throw ConfigError("ga: population must be at least 2");
    if (s.generations < 0) throw ConfigError("ga: generations must be non-negative");
    if (s.elite_count < 0 || s.population < 2 * s.elite_count) {
        throw ConfigError("ga: population must be at least twice elite_count");
    }
    if (!(s.crossover_rate >= 0.0 && s.crossover_rate <= 1.0) ||
        !(s.mutation_rate >= 0.0 && s.mutation_rate <= 1.0)) {
        throw ConfigError("ga: crossover and mutation rates must lie in [0, 1]");
    }
    if (!(s.mutation_scale > 0.0) || !std::isfinite(s.mutation_scale)) {
        throw ConfigError("ga: mutation_scale must be positive");
    }
    if (s.tournament_size < 1) throw ConfigError("ga: tournament_size must be at least 1");
    if (s.stall_generations < 0) throw ConfigError("ga: stall_generations must be non-negative");
    if (s.threads < 0) throw ConfigError("ga: threads must be non-negative");
}

namespace {

struct Individual {
    std::vector<double> genes;
    std::vector<double> sigma;  // per-gene mutation step
    double cost = std::numeric_limits<double>::infinity();
};

double reflect_unit(double x) {
    // Mirror at both walls until inside; a large step can bounce more than once.
    for (int k = 0; k < 8 && (x < 0.0 || x > 1.0); ++k) {
        if (x < 0.0) x = -x;
        if (x > 1.0) x = 2.0 - x;
    }
    return std::clamp(x, 0.0, 1.0);
}

double safe_cost(const GeneObjective& objective, std::span<const double> genes) {
    const double c = objective(genes);
    return std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
}

// Fills cost for members [first, end). Each worker owns a fixed stride of
// members, and selection happens afterwards on one thread, so the outcome is
// independent of scheduling.
void evaluate(std::vector<Individual>& members, std::size_t first, const GeneObjective& objective,
              int requested_threads) {
    const std::size_t count = members.size() - first;
    unsigned workers = requested_threads > 0 ? static_cast<unsigned>(requested_threads)
                                             : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    if (workers <= 1) {
        for (std::size_t k = first; k < members.size(); ++k) {
            members[k].cost = safe_cost(objective, members[k].genes);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t k = first + w; k < members.size(); k += workers) {
                    members[k].cost = safe_cost(objective, members[k].genes);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

GaOutcome minimize_genetic(std::size_t dimension, const GeneObjective& objective,
                           const GaSettings& settings) {
    require_valid(settings);
    if (dimension == 0) throw ConfigError("ga: dimension must be positive");

    std::mt19937_64 rng(settings.seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto pop_size = static_cast<std::size_t>(settings.population);
    const double n = static_cast<double>(dimension);
    const double tau_global = 1.0 / std::sqrt(2.0 * n);
    const double tau_local = 1.0 / std::sqrt(2.0 * std::sqrt(n));
    constexpr double kMinSigma = 1e-12;
    constexpr double kMaxSigma = 0.5;

    std::vector<Individual> population(pop_size);
    for (auto& ind : population) {
        ind.genes.resize(dimension);
        for (auto& g : ind.genes) g = uniform(rng);
        ind.sigma.assign(dimension, settings.mutation_scale);
    }
    evaluate(population, 0, objective, settings.threads);

    std::vector<std::size_t> order(pop_size);
    auto rank = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return population[a].cost < population[b].cost;
        });
    };

    auto tournament = [&]() -> const Individual& {
        std::size_t best = static_cast<std::size_t>(uniform(rng) * static_cast<double>(pop_size));
        best = std::min(best, pop_size - 1);
        for (int k = 1; k < settings.tournament_size; ++k) {
            auto pick = static_cast<std::size_t>(uniform(rng) * static_cast<double>(pop_size));
            pick = std::min(pick, pop_size - 1);
            if (population[pick].cost < population[best].cost) best = pick;
        }
        return population[best];
    };

    GaOutcome out;
    rank();
    out.history.push_back(population[order.front()].cost);

    int stall = 0;
    for (int gen = 0; gen < settings.generations; ++gen) {
        std::vector<Individual> next;
        next.reserve(pop_size);
        for (int e = 0; e < settings.elite_count; ++e) {
            next.push_back(population[order[static_cast<std::size_t>(e)]]);
        }
        while (next.size() < pop_size) {
            const Individual& a = tournament();
            const Individual& b = tournament();
            Individual child = a;
            if (uniform(rng) < settings.crossover_rate) {
                for (std::size_t j = 0; j < dimension; ++j) {
                    if (uniform(rng) < 0.5) {
                        child.genes[j] = b.genes[j];
                        child.sigma[j] = b.sigma[j];
                    }
                }
            }
            const double common = tau_global * normal(rng);
            for (auto& s : child.sigma) {
                s = std::clamp(s * std::exp(common + tau_local * normal(rng)), kMinSigma, kMaxSigma);
            }

            bool mutated = false;
            for (std::size_t j = 0; j < dimension; ++j) {
                if (uniform(rng) < settings.mutation_rate) {
                    child.genes[j] = reflect_unit(child.genes[j] + child.sigma[j] * normal(rng));
                    mutated = true;
                }
            }
            if (!mutated) {
                auto j = static_cast<std::size_t>(uniform(rng) * static_cast<double>(dimension));
                j = std::min(j, dimension - 1);
                child.genes[j] = reflect_unit(child.genes[j] + child.sigma[j] * normal(rng));
            }
            next.push_back(std::move(child));
        }
        evaluate(next, static_cast<std::size_t>(settings.elite_count), objective, settings.threads);

        const double previous_best = out.history.back();
        population = std::move(next);
        rank();
        const double best = population[order.front()].cost;
        out.history.push_back(best);
        out.generations_run = gen + 1;

        stall = best < previous_best ? 0 : stall + 1;
        if (settings.stall_generations > 0 && stall >= settings.stall_generations) break;
    }

    out.best_genes = population[order.front()].genes;
    out.best_cost = population[order.front()].cost;
    return out;
}

}  // namespace hybridspec
