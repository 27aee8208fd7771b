// Idealized selection/mutation model on bitstrings with fitness = number of set bits.
#pragma once

#include "culmark/rng.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace culmark {

using Bitstring = std::vector<std::uint8_t>;

enum class MutationMode {
    Flips,       ///< mu distinct positions flipped per child
    Probability, ///< each bit flipped independently with probability mu
};

/// How the popularity weight C acts on the non-fitness half of choices.
enum class PopularityMode {
    Gate,         ///< with probability C pick uniformly among the most popular, else uniformly at random
    Proportional, ///< with probability C pick proportionally to popularity + 1, else uniformly at random
};

struct BitstringConfig {
    std::string label = "model";
    int bits = 256;
    double mu = 2.0;
    MutationMode mode = MutationMode::Flips;
    double cum_adv = 0.0; // C
    PopularityMode popularity_mode = PopularityMode::Gate;
    double select_best = 0.5; // probability of a fitness-driven choice
    int window = 12;
    int generations = 60;
    int chains = 128;
    double initial_density = 0.5;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

int fitness(std::span<const std::uint8_t> bits);

struct ModelEntry {
    int fitness = 0;
    int popularity = 0;
};

/// With probability select_best: uniform over the fittest entries. Otherwise,
/// with probability C: the popularity rule; else uniform over the window.
std::size_t model_select(std::span<const ModelEntry> window, double cum_adv, Rng& rng,
                         PopularityMode mode = PopularityMode::Gate, double select_best = 0.5);

/// Throws InvalidArgument on out-of-range mu.
Bitstring mutate(std::span<const std::uint8_t> bits, double mu, MutationMode mode, Rng& rng);

struct FitnessPoint {
    int generation = 0;
    double mean_fitness = 0.0;
    double se_fitness = 0.0;
    double mean_delta = 0.0; // f(child) - f(parent); 0 at generation 0
    double se_delta = 0.0;
};

struct FitnessSeries {
    std::string label;
    std::vector<FitnessPoint> points; // generations 0..G
};

/// Simulates config.chains independent chains with the sliding market window.
/// Initial strings and per-chain draws depend only on (seed, chain index), so
/// parameterizations run with the same seed share their starting points.
FitnessSeries run_fitness_experiment(const BitstringConfig& config, std::uint64_t seed, int threads = 1);

} // namespace culmark
