#include "culmark/experiment.hpp"

#include "culmark/errors.hpp"
#include "culmark/parallel.hpp"
#include "culmark/rng.hpp"

#include <algorithm>
#include <cstdio>

namespace culmark {

Image random_seed_image(int rectangles, Rng& rng)
{
    if (rectangles < 0) throw InvalidArgument("random_seed_image: negative rectangle count");
    Image img;
    for (int k = 0; k < rectangles; ++k) {
        const int h = static_cast<int>(rng.between(2, 8));
        const int w = static_cast<int>(rng.between(2, 8));
        const int r0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(kImageSide - h + 1)));
        const int c0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(kImageSide - w + 1)));
        for (int r = r0; r < r0 + h; ++r)
            for (int c = c0; c < c0 + w; ++c) img.set(r, c, true);
    }
    return img;
}

namespace {

struct ChainRun {
    std::optional<Chain> chain;
    std::vector<EditRecord> edits;
    std::vector<ChoiceRecord> choices;
};

CriterionScores draw_scores(Rng& rng)
{
    return {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
}

ChainRun simulate_chain(const ExperimentConfig& config, const RngLedger& ledger, int chain_id, int pair_id,
                        Condition cond, const Image& seed_image)
{
    const std::uint64_t stream_seed = ledger.derive_seed("chain", static_cast<std::uint64_t>(chain_id));
    Rng rng(stream_seed);
    const auto base = static_cast<NodeId>(static_cast<std::uint64_t>(chain_id) * static_cast<std::uint64_t>(config.generations + 1));
    ChainRun out;
    out.chain.emplace(chain_id, pair_id, cond, stream_seed, base, seed_image);
    Chain& chain = *out.chain;

    UtilityModel model;
    model.beta = config.beta;
    model.scores.emplace(base, draw_scores(rng));
    const bool show = cond == Condition::PI;

    for (int g = 1; g <= config.generations; ++g) {
        const MarketView view = market_window(chain, g, config.window, show);
        const Selection pick = mixture_select(view, config.mixture(cond), model, rng, config.cum_adv_mode);

        ChoiceRecord record;
        record.id = static_cast<std::uint64_t>(chain_id) * static_cast<std::uint64_t>(config.generations) +
                    static_cast<std::uint64_t>(g - 1);
        record.condition = cond;
        for (std::size_t i = 0; i < view.entries.size(); ++i) {
            const MarketEntry& e = view.entries[i];
            if (e.id == pick.id) record.chosen = i;
            record.slots.push_back(MarketSlot{e.popularity, model.scores.at(e.id)});
        }
        out.choices.push_back(std::move(record));

        const EditStrategy strategy = sample_strategy(config.profile(cond), rng);
        const EditResult edit = apply_strategy(chain.find(pick.id)->image, strategy, rng);
        const ChainNode& child = record_choice(chain, g, pick.id, edit.child, config.window);
        model.scores.emplace(child.id, draw_scores(rng));
        out.edits.push_back(EditRecord{chain_id, pick.id, child.id, strategy.kind, edit.changed_pixels});
    }
    return out;
}

} // namespace

RunResult run_experiment(const ExperimentConfig& config, int threads)
{
    validate_mixture_for_condition(config.mixture_npi, Condition::NPI, "policy.npi");
    if (config.chains < 1) throw ConfigError("chains", "must be at least 1");
    if (config.generations < 1) throw ConfigError("generations", "must be at least 1");
    if (config.window < 1) throw ConfigError("window", "must be at least 1");

    const RngLedger ledger(config.seed);
    const auto pairs = static_cast<std::size_t>(config.chains);
    RunResult result;
    for (std::size_t p = 0; p < pairs; ++p) {
        Rng seed_rng = ledger.stream("seed_image", p);
        result.seed_images.push_back(random_seed_image(config.seed_rectangles, seed_rng));
        if (!config.pairing) {
            Rng npi_rng = ledger.stream("seed_image_unpaired", p);
            result.seed_images.push_back(random_seed_image(config.seed_rectangles, npi_rng));
        }
    }

    std::vector<ChainRun> runs(2 * pairs);
    parallel_for(runs.size(), threads, [&](std::size_t i) {
        const std::size_t p = i / 2;
        const Condition cond = i % 2 == 0 ? Condition::PI : Condition::NPI;
        const Image& seed = config.pairing ? result.seed_images[p] : result.seed_images[i];
        runs[i] = simulate_chain(config, ledger, static_cast<int>(i), static_cast<int>(p), cond, seed);
    });

    for (ChainRun& r : runs) {
        result.chains.push_back(std::move(*r.chain));
        result.edits.insert(result.edits.end(), r.edits.begin(), r.edits.end());
        for (ChoiceRecord& c : r.choices) result.choices.push_back(std::move(c));
    }
    return result;
}

std::vector<double> chain_diversity(const Chain& chain, DistanceKind kind, int window, const EmbeddingTable* embeddings)
{
    std::vector<double> out;
    const int last = static_cast<int>(chain.size());
    for (int g = 2; g <= last; ++g)
        out.push_back(market_diversity(market_window(chain, g, window, false), kind, chain, embeddings));
    return out;
}

namespace {

std::vector<const Chain*> chains_of(std::span<const Chain> chains, Condition cond)
{
    std::vector<const Chain*> out;
    for (const Chain& c : chains)
        if (c.condition() == cond) out.push_back(&c);
    return out;
}

constexpr Condition kConditionOrder[] = {Condition::PI, Condition::NPI};

} // namespace

std::vector<MetricSeries> diversity_series(std::span<const Chain> chains, DistanceKind kind, int window,
                                           const EmbeddingTable* embeddings)
{
    std::vector<MetricSeries> out;
    for (const Condition cond : kConditionOrder) {
        const auto members = chains_of(chains, cond);
        if (members.empty()) continue;
        std::vector<std::vector<double>> per_chain;
        std::size_t longest = 0;
        for (const Chain* c : members) {
            per_chain.push_back(chain_diversity(*c, kind, window, embeddings));
            longest = std::max(longest, per_chain.back().size());
        }
        MetricSeries s{std::string(condition_name(cond)), "diversity_" + std::string(distance_name(kind)), {}};
        for (std::size_t k = 0; k < longest; ++k) {
            std::vector<double> xs;
            for (const auto& d : per_chain)
                if (k < d.size()) xs.push_back(d[k]);
            const MeanSe m = mean_and_se(xs);
            s.points.push_back(MetricPoint{static_cast<double>(k + 2), m.mean, m.se, m.n});
        }
        out.push_back(std::move(s));
    }
    return out;
}

AnalysisOptions analysis_options(const ExperimentConfig& config)
{
    AnalysisOptions o;
    o.window = config.window;
    o.max_lag = config.analysis.max_lag;
    o.permutations = config.analysis.permutations;
    o.bootstrap = config.analysis.bootstrap;
    o.seed = config.seed;
    return o;
}

const PairedComparison& AnalysisReport::comparison(const std::string& metric) const
{
    for (const auto& c : comparisons)
        if (c.metric == metric) return c;
    throw InvalidArgument("no comparison for metric '" + metric + "'");
}

const MetricSeries& AnalysisReport::find_series(const std::string& condition, const std::string& metric) const
{
    for (const auto& s : series)
        if (s.condition == condition && s.metric == metric) return s;
    throw InvalidArgument("no series " + condition + "/" + metric);
}

namespace {

std::vector<double> selection_counts(const Chain& c)
{
    std::vector<double> out;
    for (const ChainNode& n : c.nodes()) out.push_back(static_cast<double>(n.selection_count));
    return out;
}

double safe_gini(std::span<const double> xs)
{
    try {
        return gini(xs);
    } catch (const DegenerateInput&) {
        return 0.0;
    }
}

double mean_of(std::span<const double> xs)
{
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (const double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

DistanceKind diversity_kind(const std::string& metric)
{
    if (metric == "diversity_hamming") return DistanceKind::Hamming;
    if (metric == "diversity_phylogenetic") return DistanceKind::Phylogenetic;
    if (metric == "diversity_cosine") return DistanceKind::Cosine;
    throw InvalidArgument("unknown metric '" + metric + "'");
}

const std::vector<std::string> kPairedMetrics{"diversity_hamming", "diversity_phylogenetic", "diversity_cosine",
                                              "gini_chain", "edit_size"};

} // namespace

std::vector<double> chain_statistic(std::span<const Chain> chains, const std::string& metric, const AnalysisOptions& options)
{
    std::vector<double> out;
    for (const Chain& c : chains) {
        if (metric == "gini_chain") {
            const auto counts = selection_counts(c);
            out.push_back(safe_gini(counts));
        } else if (metric == "edit_size") {
            std::vector<double> sizes;
            for (const ChainNode& n : c.nodes())
                if (n.parent) sizes.push_back(hamming_count(n.image, c.find(*n.parent)->image));
            out.push_back(mean_of(sizes));
        } else {
            const auto d = chain_diversity(c, diversity_kind(metric), options.window, options.embeddings);
            out.push_back(mean_of(d));
        }
    }
    return out;
}

std::vector<double> autocorrelation_by_lag(std::span<const Chain> chains, int max_lag, const EmbeddingTable* embeddings)
{
    std::vector<ChainEmbeddings> data;
    std::size_t longest = 0;
    for (const Chain& c : chains) {
        ChainEmbeddings e;
        for (const ChainNode& n : c.nodes()) e.push_back(embeddings ? embeddings->at(n.id) : pixel_embedding(n.image));
        longest = std::max(longest, e.size());
        data.push_back(std::move(e));
    }
    std::vector<double> out;
    for (int tau = 0; tau <= max_lag && static_cast<std::size_t>(tau) < longest; ++tau) {
        try {
            out.push_back(chain_autocorrelation(data, tau));
        } catch (const DegenerateInput&) {
            break;
        }
    }
    return out;
}

AnalysisReport analyze_chains(std::span<const Chain> chains, const AnalysisOptions& options)
{
    const RngLedger ledger(options.seed);
    AnalysisReport report;
    std::vector<Chain> by_cond[2];
    for (const Condition cond : kConditionOrder)
        for (const Chain* c : chains_of(chains, cond)) by_cond[cond == Condition::PI ? 0 : 1].push_back(*c);
    report.chains_pi = by_cond[0].size();
    report.chains_npi = by_cond[1].size();

    for (const DistanceKind kind : {DistanceKind::Hamming, DistanceKind::Phylogenetic, DistanceKind::Cosine}) {
        auto s = diversity_series(chains, kind, options.window, options.embeddings);
        for (auto& x : s) report.series.push_back(std::move(x));
    }

    std::vector<double> pooled[2];
    for (std::size_t k = 0; k < 2; ++k) {
        const std::string cond(condition_name(kConditionOrder[k]));
        if (by_cond[k].empty()) continue;
        const auto rho = autocorrelation_by_lag(by_cond[k], options.max_lag, options.embeddings);
        MetricSeries ac{cond, "autocorrelation", {}};
        for (std::size_t t = 0; t < rho.size(); ++t)
            ac.points.push_back(MetricPoint{static_cast<double>(t), rho[t], 0.0, by_cond[k].size()});
        report.series.push_back(std::move(ac));

        for (const Chain& c : by_cond[k]) {
            const auto counts = selection_counts(c);
            pooled[k].insert(pooled[k].end(), counts.begin(), counts.end());
        }
        report.series.push_back(MetricSeries{cond, "gini_pooled", {MetricPoint{0.0, safe_gini(pooled[k]), 0.0, pooled[k].size()}}});

        for (const char* metric : {"gini_chain", "edit_size"}) {
            const auto values = chain_statistic(by_cond[k], metric, options);
            const MeanSe m = mean_and_se(values);
            report.series.push_back(MetricSeries{cond, metric, {MetricPoint{0.0, m.mean, m.se, m.n}}});
        }
    }

    if (!pooled[0].empty() && !pooled[1].empty()) {
        report.gini = gini_difference_bootstrap(pooled[0], pooled[1], options.bootstrap,
                                                ledger.derive_seed("gini_bootstrap", 0));
    }
    report.edit_sizes = edit_size_stats(chains);

    // Pair chains by pair_id; unmatched chains are left out of the paired tests.
    std::map<int, std::pair<const Chain*, const Chain*>> pairs;
    for (const Chain& c : chains) {
        auto& slot = pairs[c.pair_id()];
        (c.condition() == Condition::PI ? slot.first : slot.second) = &c;
    }
    std::vector<Chain> paired_pi, paired_npi;
    for (const auto& [id, pr] : pairs) {
        if (!pr.first || !pr.second) continue;
        paired_pi.push_back(*pr.first);
        paired_npi.push_back(*pr.second);
    }
    if (!paired_pi.empty()) {
        for (std::size_t i = 0; i < kPairedMetrics.size(); ++i) {
            const std::string& metric = kPairedMetrics[i];
            const auto a = chain_statistic(paired_pi, metric, options);
            const auto b = chain_statistic(paired_npi, metric, options);
            PairedComparison cmp;
            cmp.metric = metric;
            cmp.mean_pi = mean_of(a);
            cmp.mean_npi = mean_of(b);
            cmp.difference = cmp.mean_pi - cmp.mean_npi;
            cmp.pairs = a.size();
            cmp.p_value = paired_permutation_test(a, b, options.permutations, ledger.derive_seed("permutation", i));
            report.comparisons.push_back(cmp);
        }
    }
    return report;
}

std::string format_report(const AnalysisReport& report)
{
    std::string out;
    char buf[512];
    std::snprintf(buf, sizeof buf, "chains: PI %zu, NPI %zu\n\n", report.chains_pi, report.chains_npi);
    out += buf;

    out += "paired comparisons (mean per chain, PI - NPI, sign-flip permutation test)\n";
    for (const auto& c : report.comparisons) {
        std::snprintf(buf, sizeof buf, "  %-24s PI=%.6f NPI=%.6f diff=%+.6f p=%.4g pairs=%zu\n", c.metric.c_str(), c.mean_pi,
                      c.mean_npi, c.difference, c.p_value, c.pairs);
        out += buf;
    }

    out += "\ninequality of selection counts\n";
    std::snprintf(buf, sizeof buf, "  simulated: G(PI)=%.2f, G(NPI)=%.2f, \xCE\x94=%.2f (bootstrap SE %.3f, p=%.4g)\n",
                  report.gini.gini_a, report.gini.gini_b, report.gini.delta, report.gini.se, report.gini.p_value);
    out += buf;
    for (const auto& c : report.comparisons) {
        if (c.metric != "gini_chain") continue;
        std::snprintf(buf, sizeof buf, "  per-chain: G(PI)=%.2f, G(NPI)=%.2f, \xCE\x94=%.2f (paired permutation p=%.4g)\n",
                      c.mean_pi, c.mean_npi, c.difference, c.p_value);
        out += buf;
    }
    out += "  human-experiment reference (comparison only): G(PI)=0.69, G(NPI)=0.61, \xCE\x94=0.08, p<0.001\n";

    out += "\nedit size (changed pixels per edit)\n";
    for (const auto& [cond, s] : report.edit_sizes) {
        std::snprintf(buf, sizeof buf, "  %-3s mean=%.4f se=%.4f n=%zu\n", std::string(condition_name(cond)).c_str(), s.mean,
                      s.se, s.n);
        out += buf;
    }

    out += "\nchain autocorrelation by lag\n";
    for (const auto& s : report.series) {
        if (s.metric != "autocorrelation") continue;
        out += "  " + s.condition + ":";
        for (const auto& p : s.points) {
            std::snprintf(buf, sizeof buf, " %.4f", p.value);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

} // namespace culmark
