// Experiment configuration: flat `key = value` text with dotted section prefixes.
#pragma once

#include "culmark/creation.hpp"
#include "culmark/fitness_model.hpp"
#include "culmark/policies.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace culmark {

struct FitnessSettings {
    int bits = 256;
    double mu_low = 2.0;
    double mu_high = 48.0;
    MutationMode mode = MutationMode::Flips;
    PopularityMode c_mode = PopularityMode::Gate;
    double select_best = 0.5;
    int chains = 128;
    int generations = 60;
    int window = 12;
    double initial_density = 0.5;
    std::vector<std::string> parameterizations{"low_c0", "low_c1", "high_c0", "high_c1"};

    /// Config for one of "low_c0", "low_c1", "high_c0", "high_c1".
    /// Throws ConfigError for an unknown label.
    BitstringConfig parameterization(const std::string& label) const;
};

struct AnalysisSettings {
    int max_lag = 10;
    std::size_t permutations = 10000;
    std::size_t bootstrap = 1000;
};

struct ExperimentConfig {
    int chains = 128; // per condition; with pairing, also the number of pairs
    int generations = 60;
    int window = kDefaultWindow;
    bool pairing = true;
    int seed_rectangles = 3; // filled rectangles drawn into each seed image

    PolicyMixture mixture_pi = PolicyMixture::pi_default();
    PolicyMixture mixture_npi = PolicyMixture::npi_default();
    CriterionScores beta{1.0, 1.0, 1.0, 1.0};
    CumAdvMode cum_adv_mode = CumAdvMode::Argmax;

    StrategyProfile profile_pi = StrategyProfile::pi_default();
    StrategyProfile profile_npi = StrategyProfile::npi_default();

    FitnessSettings fitness;
    AnalysisSettings analysis;

    std::uint64_t seed = 1;
    std::string output_dir = "out";

    const PolicyMixture& mixture(Condition c) const { return c == Condition::PI ? mixture_pi : mixture_npi; }
    const StrategyProfile& profile(Condition c) const { return c == Condition::PI ? profile_pi : profile_npi; }
};

using KeyValues = std::map<std::string, std::string>;

/// Parses `key = value` lines; '#' starts a comment. Throws ConfigError(kind Parse) naming the line.
KeyValues parse_key_values(std::string_view text, const std::string& source = "config");

/// Resolves defaults and validates. Unknown keys and invariant violations throw ConfigError naming the key.
ExperimentConfig config_from_key_values(const KeyValues& kv);

/// Every key the schema accepts, in documentation order.
const std::vector<std::string>& config_keys();

/// Overlays environment variables CULMARK_<KEY> (dots become underscores, upper case).
void apply_env_overrides(KeyValues& kv, const std::function<std::optional<std::string>(const std::string&)>& getenv_fn);
std::string env_var_name(const std::string& key);

/// Reads, parses and validates a config file. Throws ConfigError (kind MissingFile, Parse or Invalid).
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved config in the same key = value schema (deterministic).
std::string config_to_text(const ExperimentConfig& cfg);

} // namespace culmark
