#include "culmark/fitness_model.hpp"

#include "culmark/errors.hpp"
#include "culmark/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace culmark {

void BitstringConfig::validate() const
{
    const std::string where = label.empty() ? "fitness" : "fitness[" + label + "]";
    if (bits < 1) throw ConfigError(where + ".bits", "must be >= 1");
    if (mode == MutationMode::Flips) {
        if (!(mu >= 1.0 && mu <= bits) || mu != std::floor(mu))
            throw ConfigError(where + ".mu", "flip count must be an integer in [1, bits]");
    } else if (!(mu > 0.0 && mu <= 1.0)) {
        throw ConfigError(where + ".mu", "flip probability must be in (0, 1]");
    }
    if (!(cum_adv >= 0.0 && cum_adv <= 1.0)) throw ConfigError(where + ".cum_adv", "must be in [0, 1]");
    if (!(select_best >= 0.0 && select_best <= 1.0)) throw ConfigError(where + ".select_best", "must be in [0, 1]");
    if (window < 1) throw ConfigError(where + ".window", "must be >= 1");
    if (generations < 1) throw ConfigError(where + ".generations", "must be >= 1");
    if (chains < 1) throw ConfigError(where + ".chains", "must be >= 1");
    if (!(initial_density >= 0.0 && initial_density <= 1.0))
        throw ConfigError(where + ".initial_density", "must be in [0, 1]");
}

int fitness(std::span<const std::uint8_t> bits)
{
    return static_cast<int>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

namespace {

template <typename Key>
std::size_t uniform_argmax(std::span<const ModelEntry> window, Key key, Rng& rng)
{
    int best = key(window[0]);
    for (const auto& e : window) best = std::max(best, key(e));
    std::vector<std::size_t> ties;
    for (std::size_t i = 0; i < window.size(); ++i)
        if (key(window[i]) == best) ties.push_back(i);
    return ties[rng.below(ties.size())];
}

} // namespace

std::size_t model_select(std::span<const ModelEntry> window, double cum_adv, Rng& rng, PopularityMode mode,
                         double select_best)
{
    if (window.empty()) throw InvalidArgument("model_select: empty window");
    if (rng.bernoulli(select_best)) return uniform_argmax(window, [](const ModelEntry& e) { return e.fitness; }, rng);
    if (rng.bernoulli(cum_adv)) {
        if (mode == PopularityMode::Gate)
            return uniform_argmax(window, [](const ModelEntry& e) { return e.popularity; }, rng);
        std::vector<double> w;
        w.reserve(window.size());
        for (const auto& e : window) w.push_back(e.popularity + 1.0);
        return rng.categorical(w);
    }
    return rng.below(window.size());
}

Bitstring mutate(std::span<const std::uint8_t> bits, double mu, MutationMode mode, Rng& rng)
{
    Bitstring child(bits.begin(), bits.end());
    if (mode == MutationMode::Flips) {
        if (!(mu >= 0.0 && mu <= static_cast<double>(bits.size())) || mu != std::floor(mu))
            throw InvalidArgument("mutate: flip count must be an integer in [0, N]");
        for (const std::size_t i : rng.sample_distinct(bits.size(), static_cast<std::size_t>(mu))) child[i] ^= 1;
    } else {
        if (!(mu >= 0.0 && mu <= 1.0)) throw InvalidArgument("mutate: flip probability must be in [0, 1]");
        for (auto& b : child)
            if (rng.bernoulli(mu)) b ^= 1;
    }
    return child;
}

namespace {

struct ChainTrace {
    std::vector<int> fitness; // per generation
    std::vector<int> delta;   // per generation, 0 at generation 0
};

ChainTrace simulate_chain(const BitstringConfig& cfg, Rng& init_rng, Rng& rng)
{
    std::vector<Bitstring> strings;
    std::vector<int> fit, popularity;
    strings.reserve(static_cast<std::size_t>(cfg.generations) + 1);

    Bitstring seed(static_cast<std::size_t>(cfg.bits), 0);
    for (auto& b : seed) b = init_rng.bernoulli(cfg.initial_density) ? 1 : 0;
    strings.push_back(seed);
    fit.push_back(fitness(seed));
    popularity.push_back(0);

    ChainTrace trace;
    trace.fitness.push_back(fit[0]);
    trace.delta.push_back(0);

    std::vector<ModelEntry> view;
    for (int g = 1; g <= cfg.generations; ++g) {
        const int oldest = std::max(0, g - cfg.window);
        view.clear();
        for (int gen = g - 1; gen >= oldest; --gen)
            view.push_back({fit[static_cast<std::size_t>(gen)], popularity[static_cast<std::size_t>(gen)]});
        const std::size_t pick = model_select(view, cfg.cum_adv, rng, cfg.popularity_mode, cfg.select_best);
        const auto parent = static_cast<std::size_t>(g - 1 - static_cast<int>(pick));
        ++popularity[parent];
        strings.push_back(mutate(strings[parent], cfg.mu, cfg.mode, rng));
        fit.push_back(fitness(strings.back()));
        popularity.push_back(0);
        trace.fitness.push_back(fit.back());
        trace.delta.push_back(fit.back() - fit[parent]);
    }
    return trace;
}

std::pair<double, double> mean_se(const std::vector<double>& xs)
{
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (const double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

} // namespace

FitnessSeries run_fitness_experiment(const BitstringConfig& config, std::uint64_t seed, int threads)
{
    config.validate();
    const RngLedger ledger(seed);
    std::vector<ChainTrace> traces(static_cast<std::size_t>(config.chains));
    parallel_for(traces.size(), threads, [&](std::size_t c) {
        Rng init = ledger.stream("fitness_init", c);
        Rng rng = ledger.stream("fitness_chain", c);
        traces[c] = simulate_chain(config, init, rng);
    });

    FitnessSeries series;
    series.label = config.label;
    std::vector<double> f(traces.size()), d(traces.size());
    for (int g = 0; g <= config.generations; ++g) {
        for (std::size_t c = 0; c < traces.size(); ++c) {
            f[c] = traces[c].fitness[static_cast<std::size_t>(g)];
            d[c] = traces[c].delta[static_cast<std::size_t>(g)];
        }
        const auto [mf, sf] = mean_se(f);
        const auto [md, sd] = mean_se(d);
        series.points.push_back({g, mf, sf, md, sd});
    }
    return series;
}

} // namespace culmark
