// Selection policies: image-driven softmax choice, cumulative advantage,
// balancing selection, uniform random choice, and their mixture.
#pragma once

#include "culmark/core.hpp"
#include "culmark/rng.hpp"

#include <array>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace culmark {

enum class Policy { ImageDriven = 0, CumulativeAdvantage = 1, Balancing = 2, Random = 3 };
inline constexpr std::array<Policy, 4> kPolicies{Policy::ImageDriven, Policy::CumulativeAdvantage, Policy::Balancing,
                                                 Policy::Random};
std::string_view policy_name(Policy p);

/// Rating criteria behind the latent utility, in storage order.
inline constexpr std::array<std::string_view, 4> kCriteria{"appeal", "editing_potential", "originality", "recognizability"};
using CriterionScores = std::array<double, 4>;

/// Latent utility u_i = sum_c beta_c * u_ic.
struct UtilityModel {
    CriterionScores beta{1.0, 1.0, 1.0, 1.0};
    std::unordered_map<NodeId, CriterionScores> scores;

    /// Throws InvalidArgument when the image has no scores or the utility is not finite.
    double utility(NodeId id) const;
};

double combined_utility(const CriterionScores& beta, const CriterionScores& scores);

/// Non-negative weights over the four policies, normalized to sum to 1.
class PolicyMixture {
public:
    /// Throws InvalidArgument on negative or non-finite weights, or an all-zero mixture.
    PolicyMixture(double image_driven, double cumulative_advantage, double balancing, double random);
    explicit PolicyMixture(const std::array<double, 4>& w) : PolicyMixture(w[0], w[1], w[2], w[3]) {}

    static PolicyMixture pi_default() { return {0.50, 0.25, 0.00, 0.25}; }
    static PolicyMixture npi_default() { return {0.50, 0.00, 0.00, 0.50}; }

    double weight(Policy p) const { return w_[static_cast<std::size_t>(p)]; }
    const std::array<double, 4>& weights() const noexcept { return w_; }
    /// True when cumulative-advantage or balancing weight is nonzero.
    bool uses_popularity() const { return w_[1] > 0.0 || w_[2] > 0.0; }

private:
    std::array<double, 4> w_{};
};

/// Throws ConfigError when a popularity-dependent weight is set for the NPI condition.
void validate_mixture_for_condition(const PolicyMixture& m, Condition c, const std::string& key);

/// Numerically stable softmax (max subtraction).
/// Throws InvalidArgument on empty or non-finite input.
std::vector<double> softmax_probs(std::span<const double> utilities);

/// Indices of the maximal (or minimal) values.
std::vector<std::size_t> extreme_indices(std::span<const int> values, bool maximal);

/// How cumulative advantage turns popularity into a choice.
enum class CumAdvMode {
    Argmax,       ///< uniform among the most popular entries
    Proportional, ///< probability proportional to popularity + 1
};

NodeId image_driven_select(const MarketView& view, const UtilityModel& model, Rng& rng);
/// Throws PolicyUnavailable when the view hides popularity.
NodeId cumulative_advantage_select(const MarketView& view, Rng& rng, CumAdvMode mode = CumAdvMode::Argmax);
/// Throws PolicyUnavailable when the view hides popularity.
NodeId balancing_select(const MarketView& view, Rng& rng);
NodeId random_select(const MarketView& view, Rng& rng);

struct Selection {
    NodeId id = 0;
    Policy policy = Policy::Random;
};

/// Draws a policy from the mixture and delegates to it.
///
/// On a view without popularity the popularity-dependent policies are
/// excluded from the draw and the remaining weights renormalized; if nothing
/// remains, PolicyUnavailable is thrown. Experiment setup rejects such
/// mixtures up front (validate_mixture_for_condition).
Selection mixture_select(const MarketView& view, const PolicyMixture& mixture, const UtilityModel& model, Rng& rng,
                         CumAdvMode mode = CumAdvMode::Argmax);

} // namespace culmark
