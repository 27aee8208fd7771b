// Maximum-likelihood recovery of selection-policy mixtures from choice records (EM).
#pragma once

#include "culmark/config.hpp"
#include "culmark/core.hpp"
#include "culmark/metrics.hpp"
#include "culmark/policies.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace culmark {

struct MarketSlot {
    std::optional<int> popularity; // hidden in NPI markets
    CriterionScores ratings{};     // point estimates of the latent scores
};

/// One observed selection: the market as shown and the index that was picked.
struct ChoiceRecord {
    std::uint64_t id = 0;
    Condition condition = Condition::PI;
    std::size_t chosen = 0;
    std::vector<MarketSlot> slots;
};

/// Probability of the observed choice under each policy, in kPolicies order.
/// Cumulative advantage and balancing are 0 for NPI records.
std::array<double, 4> policy_likelihoods(const ChoiceRecord& record, const CriterionScores& beta);

/// Posterior policy responsibilities for one record (sum to 1).
std::array<double, 4> responsibilities(const std::array<double, 4>& likelihoods, const std::array<double, 4>& weights);

/// Expected image-driven log-likelihood sum_n r_n log softmax(u_n)[chosen_n] and its gradient in beta.
double image_driven_objective(std::span<const ChoiceRecord> records, std::span<const double> resp_image_driven,
                              const CriterionScores& beta);
CriterionScores image_driven_gradient(std::span<const ChoiceRecord> records, std::span<const double> resp_image_driven,
                                      const CriterionScores& beta);

struct FitOptions {
    int max_iter = 2000;
    double tol = 1e-10;
    bool fit_beta = false;
    bool shared_beta = true; // one beta for every condition when fitting beta
    CriterionScores initial_beta{1.0, 1.0, 1.0, 1.0};
    int starts = 5;
    std::size_t bootstrap = 0;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct ConditionFit {
    Condition condition = Condition::PI;
    PolicyMixture mixture{1.0, 0.0, 0.0, 0.0};
    std::array<double, 4> se{}; // bootstrap standard errors (0 without bootstrap)
    CriterionScores beta{};
    std::size_t records = 0;
};

struct FitResult {
    std::vector<ConditionFit> conditions; // in order of first appearance (PI before NPI)
    double log_likelihood = 0.0;
    int iterations = 0;
    double final_delta = 0.0;
    bool converged = false;
    std::vector<double> log_likelihood_trace; // best start, one entry per iteration
    int best_start = 0;

    const ConditionFit& for_condition(Condition c) const;
};

/// EM over per-condition mixture weights (and optionally beta) with multi-start.
/// Throws InvalidArgument on an empty record set or a malformed record.
FitResult fit_mixture(std::span<const ChoiceRecord> records, const FitOptions& options);

/// Synthetic records: `count` 12-slot markets with N(0,1) ratings and (PI only)
/// popularity uniform in [0, max_popularity]; choices drawn with mixture_select.
std::vector<ChoiceRecord> synthesize_records(std::size_t count, Condition condition, const PolicyMixture& mixture,
                                             const CriterionScores& beta, std::uint64_t seed, int market_size = 12,
                                             int max_popularity = 5);

struct FitSimulation {
    std::vector<Chain> chains;
    std::vector<MetricSeries> phylo_diversity; // per condition, mean +- SE per generation
};

/// Runs the chain simulator with the fitted mixtures (and beta) in place of the configured ones.
FitSimulation simulate_from_fit(const FitResult& fit, const ExperimentConfig& config, std::uint64_t seed, int threads = 1);

} // namespace culmark
