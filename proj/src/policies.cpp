#include "culmark/policies.hpp"

#include "culmark/errors.hpp"

#include <algorithm>
#include <cmath>

namespace culmark {

std::string_view policy_name(Policy p)
{
    switch (p) {
    case Policy::ImageDriven: return "image_driven";
    case Policy::CumulativeAdvantage: return "cum_adv";
    case Policy::Balancing: return "balancing";
    case Policy::Random: return "random";
    }
    return "unknown";
}

double combined_utility(const CriterionScores& beta, const CriterionScores& scores)
{
    double u = 0.0;
    for (std::size_t c = 0; c < beta.size(); ++c) u += beta[c] * scores[c];
    return u;
}

double UtilityModel::utility(NodeId id) const
{
    auto it = scores.find(id);
    if (it == scores.end()) throw InvalidArgument("no criterion scores for image " + std::to_string(id));
    const double u = combined_utility(beta, it->second);
    if (!std::isfinite(u)) throw InvalidArgument("utility of image " + std::to_string(id) + " is not finite");
    return u;
}

PolicyMixture::PolicyMixture(double image_driven, double cumulative_advantage, double balancing, double random)
    : w_{image_driven, cumulative_advantage, balancing, random}
{
    double total = 0.0;
    for (std::size_t i = 0; i < w_.size(); ++i) {
        if (!std::isfinite(w_[i]) || w_[i] < 0.0)
            throw InvalidArgument("policy weight '" + std::string(policy_name(kPolicies[i])) + "' must be finite and >= 0");
        total += w_[i];
    }
    if (!(total > 0.0)) throw InvalidArgument("policy weights must not all be zero");
    for (double& w : w_) w /= total;
}

void validate_mixture_for_condition(const PolicyMixture& m, Condition c, const std::string& key)
{
    if (c == Condition::NPI && m.uses_popularity())
        throw ConfigError(key, "cumulative-advantage and balancing weights must be 0 without popularity information");
}

std::vector<double> softmax_probs(std::span<const double> utilities)
{
    if (utilities.empty()) throw InvalidArgument("softmax_probs: empty input");
    double top = utilities[0];
    for (const double u : utilities) {
        if (!std::isfinite(u)) throw InvalidArgument("softmax_probs: non-finite utility");
        top = std::max(top, u);
    }
    std::vector<double> p(utilities.size());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(utilities[i] - top);
        total += p[i];
    }
    for (double& x : p) x /= total;
    return p;
}

std::vector<std::size_t> extreme_indices(std::span<const int> values, bool maximal)
{
    std::vector<std::size_t> out;
    if (values.empty()) return out;
    const int target = maximal ? *std::max_element(values.begin(), values.end())
                               : *std::min_element(values.begin(), values.end());
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] == target) out.push_back(i);
    return out;
}

namespace {

void require_entries(const MarketView& view, const char* who)
{
    if (view.entries.empty()) throw InvalidArgument(std::string(who) + ": empty market");
}

std::vector<int> popularities(const MarketView& view, const char* who)
{
    std::vector<int> pop;
    pop.reserve(view.entries.size());
    for (const MarketEntry& e : view.entries) {
        if (!e.popularity) throw PolicyUnavailable(std::string(who) + ": popularity is hidden in this market");
        pop.push_back(*e.popularity);
    }
    return pop;
}

NodeId pick_from(const MarketView& view, const std::vector<std::size_t>& candidates, Rng& rng)
{
    return view.entries[candidates[rng.below(candidates.size())]].id;
}

} // namespace

NodeId image_driven_select(const MarketView& view, const UtilityModel& model, Rng& rng)
{
    require_entries(view, "image_driven_select");
    std::vector<double> u;
    u.reserve(view.entries.size());
    for (const MarketEntry& e : view.entries) u.push_back(model.utility(e.id));
    const auto p = softmax_probs(u);
    return view.entries[rng.categorical(p)].id;
}

NodeId cumulative_advantage_select(const MarketView& view, Rng& rng, CumAdvMode mode)
{
    require_entries(view, "cumulative_advantage_select");
    const auto pop = popularities(view, "cumulative_advantage_select");
    if (mode == CumAdvMode::Proportional) {
        std::vector<double> w(pop.begin(), pop.end());
        for (double& x : w) x += 1.0;
        return view.entries[rng.categorical(w)].id;
    }
    return pick_from(view, extreme_indices(pop, true), rng);
}

NodeId balancing_select(const MarketView& view, Rng& rng)
{
    require_entries(view, "balancing_select");
    const auto pop = popularities(view, "balancing_select");
    return pick_from(view, extreme_indices(pop, false), rng);
}

NodeId random_select(const MarketView& view, Rng& rng)
{
    require_entries(view, "random_select");
    return view.entries[rng.below(view.entries.size())].id;
}

Selection mixture_select(const MarketView& view, const PolicyMixture& mixture, const UtilityModel& model, Rng& rng,
                         CumAdvMode mode)
{
    require_entries(view, "mixture_select");
    std::array<double, 4> w = mixture.weights();
    if (!view.shows_popularity()) {
        w[static_cast<std::size_t>(Policy::CumulativeAdvantage)] = 0.0;
        w[static_cast<std::size_t>(Policy::Balancing)] = 0.0;
        if (!(w[0] + w[3] > 0.0)) throw PolicyUnavailable("mixture_select: only popularity-dependent policies remain");
    }
    const Policy policy = kPolicies[rng.categorical(w)];
    switch (policy) {
    case Policy::ImageDriven: return {image_driven_select(view, model, rng), policy};
    case Policy::CumulativeAdvantage: return {cumulative_advantage_select(view, rng, mode), policy};
    case Policy::Balancing: return {balancing_select(view, rng), policy};
    case Policy::Random: return {random_select(view, rng), policy};
    }
    throw InvariantViolation("mixture_select: unknown policy");
}

} // namespace culmark
