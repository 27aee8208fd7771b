#include "culmark/inference.hpp"

#include "culmark/errors.hpp"
#include "culmark/experiment.hpp"
#include "culmark/parallel.hpp"
#include "culmark/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace culmark {

namespace {

void validate_record(const ChoiceRecord& r)
{
    const std::string where = "choice record " + std::to_string(r.id) + ": ";
    if (r.slots.empty()) throw InvalidArgument(where + "empty market");
    if (r.chosen >= r.slots.size()) throw InvalidArgument(where + "chosen index outside the market");
    for (const MarketSlot& s : r.slots) {
        for (const double x : s.ratings)
            if (!std::isfinite(x)) throw InvalidArgument(where + "non-finite rating");
        if (r.condition == Condition::PI && !s.popularity) throw InvalidArgument(where + "PI market without popularity");
        if (s.popularity && *s.popularity < 0) throw InvalidArgument(where + "negative popularity");
    }
}

/// Softmax probabilities of a record's market under beta.
std::vector<double> record_probs(const ChoiceRecord& r, const CriterionScores& beta)
{
    std::vector<double> u(r.slots.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = combined_utility(beta, r.slots[i].ratings);
    return softmax_probs(u);
}

double set_likelihood(const ChoiceRecord& r, bool maximal)
{
    std::vector<int> pop(r.slots.size());
    for (std::size_t i = 0; i < pop.size(); ++i) pop[i] = *r.slots[i].popularity;
    const auto set = extreme_indices(pop, maximal);
    return std::find(set.begin(), set.end(), r.chosen) != set.end() ? 1.0 / static_cast<double>(set.size()) : 0.0;
}

struct Group {
    Condition condition;
    std::vector<std::size_t> members;
};

std::vector<Group> group_records(std::span<const ChoiceRecord> records)
{
    std::vector<Group> groups;
    for (const Condition c : {Condition::PI, Condition::NPI}) {
        Group g{c, {}};
        for (std::size_t i = 0; i < records.size(); ++i)
            if (records[i].condition == c) g.members.push_back(i);
        if (!g.members.empty()) groups.push_back(std::move(g));
    }
    return groups;
}

struct EmState {
    std::vector<std::array<double, 4>> weights; // per group
    std::vector<CriterionScores> betas;         // per group
    double log_likelihood = 0.0;
    int iterations = 0;
    double final_delta = 0.0;
    bool converged = false;
    std::vector<double> trace;
};

class EmFitter {
public:
    EmFitter(std::span<const ChoiceRecord> records, const FitOptions& options)
        : records_(records), options_(options), groups_(group_records(records)), group_of_(records.size())
    {
        for (std::size_t g = 0; g < groups_.size(); ++g)
            for (const std::size_t i : groups_[g].members) group_of_[i] = g;
    }

    const std::vector<Group>& groups() const { return groups_; }

    EmState run(std::vector<std::array<double, 4>> weights, std::vector<CriterionScores> betas) const
    {
        EmState st;
        st.weights = std::move(weights);
        st.betas = std::move(betas);
        std::vector<std::array<double, 4>> lik(records_.size());
        std::vector<std::array<double, 4>> resp(records_.size());
        for (std::size_t n = 0; n < records_.size(); ++n) lik[n] = policy_likelihoods(records_[n], st.betas[group_of_[n]]);
        double ll = log_likelihood(st, lik);
        st.trace.push_back(ll);

        for (int it = 1; it <= options_.max_iter; ++it) {
            for (std::size_t n = 0; n < records_.size(); ++n) resp[n] = responsibilities(lik[n], st.weights[group_of_[n]]);
            for (std::size_t g = 0; g < groups_.size(); ++g) {
                std::array<double, 4> w{};
                for (const std::size_t n : groups_[g].members)
                    for (std::size_t z = 0; z < 4; ++z) w[z] += resp[n][z];
                for (double& x : w) x /= static_cast<double>(groups_[g].members.size());
                st.weights[g] = w;
            }
            if (options_.fit_beta) {
                ascend_beta(st, resp);
                refresh_likelihoods(st, lik);
            }
            const double next = log_likelihood(st, lik);
            const double delta = next - ll;
            if (delta < -1e-9 * std::max(1.0, std::abs(ll)))
                throw InvariantViolation("EM log-likelihood decreased by " + std::to_string(-delta));
            ll = next;
            st.trace.push_back(ll);
            st.iterations = it;
            st.final_delta = delta;
            if (delta < options_.tol * (1.0 + std::abs(ll))) {
                st.converged = true;
                break;
            }
        }
        st.log_likelihood = ll;
        return st;
    }

private:
    /// Only the image-driven term depends on beta.
    void refresh_likelihoods(const EmState& st, std::vector<std::array<double, 4>>& lik) const
    {
        for (std::size_t n = 0; n < records_.size(); ++n)
            lik[n][0] = record_probs(records_[n], st.betas[group_of_[n]])[records_[n].chosen];
    }

    double log_likelihood(const EmState& st, const std::vector<std::array<double, 4>>& lik) const
    {
        double ll = 0.0;
        for (std::size_t n = 0; n < records_.size(); ++n) {
            double p = 0.0;
            for (std::size_t z = 0; z < 4; ++z) p += st.weights[group_of_[n]][z] * lik[n][z];
            if (!(p > 0.0)) throw InvariantViolation("record " + std::to_string(records_[n].id) + " has zero likelihood");
            ll += std::log(p);
        }
        return ll;
    }

    // Generalized M-step for beta: a few Armijo-backtracked gradient steps on the
    // expected image-driven log-likelihood, each guaranteed not to decrease it.
    void ascend_beta(EmState& st, const std::vector<std::array<double, 4>>& resp) const
    {
        const auto ascend = [&](const std::vector<std::size_t>& members, CriterionScores beta) {
            // Records outside `members` get zero weight, which the objective skips.
            std::vector<double> r(records_.size(), 0.0);
            for (const std::size_t n : members) r[n] = resp[n][0];
            const auto subset = records_;
            const double mass = std::accumulate(r.begin(), r.end(), 0.0);
            if (!(mass > 0.0)) return beta;
            double q = image_driven_objective(subset, r, beta);
            for (int step = 0; step < 2; ++step) {
                const CriterionScores g = image_driven_gradient(subset, r, beta);
                double g2 = 0.0;
                for (const double x : g) g2 += x * x;
                if (g2 / (mass * mass) < 1e-20) break;
                bool improved = false;
                for (double s = 1.0 / mass; s > 1e-12 / mass; s *= 0.5) {
                    CriterionScores cand = beta;
                    for (std::size_t c = 0; c < 4; ++c) cand[c] += s * g[c];
                    const double qc = image_driven_objective(subset, r, cand);
                    if (qc >= q + 1e-4 * s * g2) {
                        beta = cand;
                        q = qc;
                        improved = true;
                        break;
                    }
                }
                if (!improved) break;
            }
            return beta;
        };
        if (options_.shared_beta) {
            std::vector<std::size_t> all(records_.size());
            std::iota(all.begin(), all.end(), std::size_t{0});
            const CriterionScores b = ascend(all, st.betas[0]);
            for (auto& x : st.betas) x = b;
        } else {
            for (std::size_t g = 0; g < groups_.size(); ++g) st.betas[g] = ascend(groups_[g].members, st.betas[g]);
        }
    }

    std::span<const ChoiceRecord> records_;
    FitOptions options_;
    std::vector<Group> groups_;
    std::vector<std::size_t> group_of_;
};

std::array<double, 4> dirichlet_start(Rng& rng)
{
    std::array<double, 4> w{};
    double total = 0.0;
    for (double& x : w) total += (x = rng.gamma(1.0));
    for (double& x : w) x /= total;
    return w;
}

} // namespace

std::array<double, 4> policy_likelihoods(const ChoiceRecord& record, const CriterionScores& beta)
{
    std::array<double, 4> out{};
    out[0] = record_probs(record, beta)[record.chosen];
    if (record.condition == Condition::PI) {
        out[1] = set_likelihood(record, true);
        out[2] = set_likelihood(record, false);
    }
    out[3] = 1.0 / static_cast<double>(record.slots.size());
    return out;
}

std::array<double, 4> responsibilities(const std::array<double, 4>& likelihoods, const std::array<double, 4>& weights)
{
    std::array<double, 4> r{};
    double total = 0.0;
    for (std::size_t z = 0; z < 4; ++z) total += (r[z] = weights[z] * likelihoods[z]);
    if (!(total > 0.0)) throw InvariantViolation("responsibilities: zero total likelihood");
    for (double& x : r) x /= total;
    return r;
}

double image_driven_objective(std::span<const ChoiceRecord> records, std::span<const double> resp_image_driven,
                              const CriterionScores& beta)
{
    double q = 0.0;
    std::vector<double> u;
    for (std::size_t n = 0; n < records.size(); ++n) {
        if (resp_image_driven[n] == 0.0) continue;
        const ChoiceRecord& r = records[n];
        u.resize(r.slots.size());
        double top = -INFINITY;
        for (std::size_t i = 0; i < u.size(); ++i) top = std::max(top, u[i] = combined_utility(beta, r.slots[i].ratings));
        double z = 0.0;
        for (const double x : u) z += std::exp(x - top);
        q += resp_image_driven[n] * (u[r.chosen] - top - std::log(z));
    }
    return q;
}

CriterionScores image_driven_gradient(std::span<const ChoiceRecord> records, std::span<const double> resp_image_driven,
                                      const CriterionScores& beta)
{
    CriterionScores g{};
    std::vector<double> p;
    for (std::size_t n = 0; n < records.size(); ++n) {
        if (resp_image_driven[n] == 0.0) continue;
        const ChoiceRecord& r = records[n];
        p.resize(r.slots.size());
        double top = -INFINITY;
        for (std::size_t i = 0; i < p.size(); ++i) top = std::max(top, p[i] = combined_utility(beta, r.slots[i].ratings));
        double z = 0.0;
        for (double& x : p) z += (x = std::exp(x - top));
        for (std::size_t c = 0; c < 4; ++c) {
            double expected = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) expected += p[i] * r.slots[i].ratings[c];
            g[c] += resp_image_driven[n] * (r.slots[r.chosen].ratings[c] - expected / z);
        }
    }
    return g;
}

const ConditionFit& FitResult::for_condition(Condition c) const
{
    for (const auto& f : conditions)
        if (f.condition == c) return f;
    throw InvalidArgument("fit has no records for condition " + std::string(condition_name(c)));
}

FitResult fit_mixture(std::span<const ChoiceRecord> records, const FitOptions& options)
{
    if (records.empty()) throw InvalidArgument("fit_mixture: no records");
    for (const auto& r : records) validate_record(r);
    const EmFitter fitter(records, options);
    const std::size_t n_groups = fitter.groups().size();
    const RngLedger ledger(options.seed);

    const int starts = std::max(1, options.starts);
    std::vector<EmState> results(static_cast<std::size_t>(starts));
    parallel_for(results.size(), options.threads, [&](std::size_t s) {
        std::vector<std::array<double, 4>> w(n_groups, {0.25, 0.25, 0.25, 0.25});
        if (s > 0) {
            Rng rng = ledger.stream("fit_start", s);
            for (auto& x : w) x = dirichlet_start(rng);
        }
        results[s] = fitter.run(w, std::vector<CriterionScores>(n_groups, options.initial_beta));
    });
    std::size_t best = 0;
    for (std::size_t s = 1; s < results.size(); ++s)
        if (results[s].log_likelihood > results[best].log_likelihood) best = s;
    const EmState& st = results[best];

    FitResult fit;
    fit.log_likelihood = st.log_likelihood;
    fit.iterations = st.iterations;
    fit.final_delta = st.final_delta;
    fit.converged = st.converged;
    fit.log_likelihood_trace = st.trace;
    fit.best_start = static_cast<int>(best);
    for (std::size_t g = 0; g < n_groups; ++g) {
        ConditionFit cf;
        cf.condition = fitter.groups()[g].condition;
        cf.mixture = PolicyMixture(st.weights[g]);
        cf.beta = st.betas[g];
        cf.records = fitter.groups()[g].members.size();
        fit.conditions.push_back(cf);
    }

    if (options.bootstrap > 0) {
        std::vector<std::vector<std::array<double, 4>>> boot(options.bootstrap);
        parallel_for(boot.size(), options.threads, [&](std::size_t b) {
            Rng rng = ledger.stream("fit_bootstrap", b);
            std::vector<ChoiceRecord> sample;
            sample.reserve(records.size());
            for (const Group& g : fitter.groups())
                for (std::size_t k = 0; k < g.members.size(); ++k) sample.push_back(records[g.members[rng.below(g.members.size())]]);
            FitOptions inner = options;
            const EmFitter boot_fitter(sample, inner);
            boot[b] = boot_fitter.run(st.weights, st.betas).weights;
        });
        for (std::size_t g = 0; g < n_groups; ++g) {
            for (std::size_t z = 0; z < 4; ++z) {
                std::vector<double> xs;
                for (const auto& w : boot) xs.push_back(w[g][z]);
                fit.conditions[g].se[z] = mean_and_se(xs).se * std::sqrt(static_cast<double>(xs.size()));
            }
        }
    }
    return fit;
}

std::vector<ChoiceRecord> synthesize_records(std::size_t count, Condition condition, const PolicyMixture& mixture,
                                             const CriterionScores& beta, std::uint64_t seed, int market_size,
                                             int max_popularity)
{
    if (market_size < 1) throw InvalidArgument("synthesize_records: market_size must be >= 1");
    Rng rng(seed);
    std::vector<ChoiceRecord> out;
    out.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        ChoiceRecord rec;
        rec.id = n;
        rec.condition = condition;
        MarketView view;
        UtilityModel model;
        model.beta = beta;
        for (int i = 0; i < market_size; ++i) {
            MarketSlot slot;
            for (double& x : slot.ratings) x = rng.normal();
            if (condition == Condition::PI) slot.popularity = rng.between(0, max_popularity);
            view.entries.push_back(MarketEntry{static_cast<NodeId>(i), Image{}, 0, slot.popularity});
            model.scores[static_cast<NodeId>(i)] = slot.ratings;
            rec.slots.push_back(slot);
        }
        rec.chosen = mixture_select(view, mixture, model, rng).id;
        out.push_back(std::move(rec));
    }
    return out;
}

FitSimulation simulate_from_fit(const FitResult& fit, const ExperimentConfig& config, std::uint64_t seed, int threads)
{
    ExperimentConfig cfg = config;
    cfg.seed = seed;
    for (const ConditionFit& cf : fit.conditions) {
        if (cf.condition == Condition::PI) cfg.mixture_pi = cf.mixture;
        else cfg.mixture_npi = cf.mixture;
    }
    if (!fit.conditions.empty()) cfg.beta = fit.conditions.front().beta;

    FitSimulation out;
    out.chains = run_experiment(cfg, threads).chains;
    out.phylo_diversity = diversity_series(out.chains, DistanceKind::Phylogenetic, cfg.window);
    return out;
}

} // namespace culmark
