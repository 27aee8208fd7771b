#include "culmark/metrics.hpp"

#include "culmark/errors.hpp"
#include "culmark/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace culmark {

double hamming_fraction(const Image& a, const Image& b)
{
    return static_cast<double>(hamming_count(a, b)) / kPixelCount;
}

void EmbeddingTable::add(NodeId id, std::vector<double> v)
{
    if (v.empty()) throw InvalidArgument("embedding for image " + std::to_string(id) + " is empty");
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_)
        throw InvalidArgument("embedding for image " + std::to_string(id) + " has dimension " + std::to_string(v.size()) +
                              ", expected " + std::to_string(dim_));
    for (const double x : v)
        if (!std::isfinite(x)) throw InvalidArgument("embedding for image " + std::to_string(id) + " is not finite");
    if (!vectors_.emplace(id, std::move(v)).second)
        throw InvalidArgument("duplicate embedding for image " + std::to_string(id));
}

const std::vector<double>& EmbeddingTable::at(NodeId id) const
{
    auto it = vectors_.find(id);
    if (it == vectors_.end()) throw InvalidArgument("no embedding for image " + std::to_string(id));
    return it->second;
}

std::vector<double> pixel_embedding(const Image& img)
{
    std::vector<double> v(kPixelCount);
    for (int i = 0; i < kPixelCount; ++i) v[static_cast<std::size_t>(i)] = img.at(i) ? 1.0 : -1.0;
    return v;
}

double cosine_distance(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) throw InvalidArgument("cosine_distance: dimension mismatch");
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        xy += x[i] * y[i];
        xx += x[i] * x[i];
        yy += y[i] * y[i];
    }
    if (xx == 0.0 || yy == 0.0) throw DegenerateInput("cosine_distance: zero-norm vector");
    return 1.0 - xy / (std::sqrt(xx) * std::sqrt(yy));
}

std::string_view distance_name(DistanceKind k)
{
    switch (k) {
    case DistanceKind::Hamming: return "hamming";
    case DistanceKind::Phylogenetic: return "phylogenetic";
    case DistanceKind::Cosine: return "cosine";
    }
    return "unknown";
}

double mean_pairwise_distance(std::size_t n, const std::function<double(std::size_t, std::size_t)>& dist)
{
    if (n < 2) throw DegenerateInput("diversity is undefined for fewer than two items");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) total += dist(i, j);
    return total / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

double market_diversity(const MarketView& view, DistanceKind kind, const Chain& chain, const EmbeddingTable* embeddings)
{
    const auto& e = view.entries;
    switch (kind) {
    case DistanceKind::Hamming:
        return mean_pairwise_distance(e.size(), [&](std::size_t i, std::size_t j) { return hamming_fraction(e[i].image, e[j].image); });
    case DistanceKind::Phylogenetic:
        return mean_pairwise_distance(e.size(), [&](std::size_t i, std::size_t j) {
            return static_cast<double>(phylo_distance(chain, e[i].id, e[j].id));
        });
    case DistanceKind::Cosine: {
        if (e.size() < 2) throw DegenerateInput("diversity is undefined for fewer than two items");
        std::vector<std::vector<double>> local;
        std::vector<const std::vector<double>*> vecs;
        if (embeddings) {
            for (const auto& entry : e) vecs.push_back(&embeddings->at(entry.id));
        } else {
            local.reserve(e.size());
            for (const auto& entry : e) local.push_back(pixel_embedding(entry.image));
            for (const auto& v : local) vecs.push_back(&v);
        }
        return mean_pairwise_distance(e.size(), [&](std::size_t i, std::size_t j) { return cosine_distance(*vecs[i], *vecs[j]); });
    }
    }
    throw InvariantViolation("market_diversity: unknown distance");
}

double chain_autocorrelation(std::span<const ChainEmbeddings> chains, int tau)
{
    if (tau < 0) throw InvalidArgument("chain_autocorrelation: tau must be >= 0");
    std::size_t dim = 0, count = 0;
    bool long_enough = false;
    for (const auto& chain : chains) {
        if (chain.size() > static_cast<std::size_t>(tau)) long_enough = true;
        for (const auto& x : chain) {
            if (dim == 0) dim = x.size();
            if (x.size() != dim || dim == 0) throw InvalidArgument("chain_autocorrelation: inconsistent embedding dimension");
            ++count;
        }
    }
    if (!long_enough) throw InvalidArgument("chain_autocorrelation: no chain has more than tau images");

    std::vector<double> mu(dim, 0.0);
    for (const auto& chain : chains)
        for (const auto& x : chain)
            for (std::size_t d = 0; d < dim; ++d) mu[d] += x[d];
    for (double& m : mu) m /= static_cast<double>(count);

    const auto centred_dot = [&](const std::vector<double>& x, const std::vector<double>& y) {
        double s = 0.0;
        for (std::size_t d = 0; d < dim; ++d) s += (x[d] - mu[d]) * (y[d] - mu[d]);
        return s;
    };
    double num = 0.0, den = 0.0;
    const auto lag = static_cast<std::size_t>(tau);
    for (const auto& chain : chains) {
        for (std::size_t t = 0; t < chain.size(); ++t) {
            den += centred_dot(chain[t], chain[t]);
            if (t + lag < chain.size()) num += centred_dot(chain[t], chain[t + lag]);
        }
    }
    if (den == 0.0) throw DegenerateInput("chain_autocorrelation: all images are identical (zero variance)");
    return num / den;
}

double gini(std::span<const double> values)
{
    if (values.empty()) throw InvalidArgument("gini: empty input");
    std::vector<double> x(values.begin(), values.end());
    for (const double v : x)
        if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("gini: values must be finite and non-negative");
    std::sort(x.begin(), x.end());
    const double total = std::accumulate(x.begin(), x.end(), 0.0);
    if (total == 0.0) throw DegenerateInput("gini: undefined when all values are zero");
    // sum_ij |x_i - x_j| = 2 * sum_i (2i - n - 1) x_(i) for ascending x, 1-based i.
    const double n = static_cast<double>(x.size());
    double weighted = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) weighted += (2.0 * static_cast<double>(i + 1) - n - 1.0) * x[i];
    return weighted / (n * total);
}

GiniDifference gini_difference_bootstrap(std::span<const double> a, std::span<const double> b, std::size_t resamples,
                                         std::uint64_t seed)
{
    GiniDifference out;
    out.gini_a = gini(a);
    out.gini_b = gini(b);
    out.delta = out.gini_a - out.gini_b;
    if (resamples == 0) return out;

    Rng rng(seed);
    std::vector<double> ra(a.size()), rb(b.size()), deltas;
    deltas.reserve(resamples);
    for (std::size_t r = 0; r < resamples; ++r) {
        for (auto& x : ra) x = a[rng.below(a.size())];
        for (auto& x : rb) x = b[rng.below(b.size())];
        const bool a_zero = std::all_of(ra.begin(), ra.end(), [](double v) { return v == 0.0; });
        const bool b_zero = std::all_of(rb.begin(), rb.end(), [](double v) { return v == 0.0; });
        if (a_zero || b_zero) continue;
        deltas.push_back(gini(ra) - gini(rb));
    }
    if (deltas.empty()) return out;
    const MeanSe ms = mean_and_se(deltas);
    out.se = ms.se * std::sqrt(static_cast<double>(deltas.size()));
    const double below = static_cast<double>(std::count_if(deltas.begin(), deltas.end(), [](double d) { return d <= 0.0; }));
    const double above = static_cast<double>(std::count_if(deltas.begin(), deltas.end(), [](double d) { return d >= 0.0; }));
    out.p_value = std::min(1.0, 2.0 * (1.0 + std::min(below, above)) / (1.0 + static_cast<double>(deltas.size())));
    return out;
}

double paired_permutation_test(std::span<const double> a, std::span<const double> b, std::size_t resamples,
                               std::uint64_t seed)
{
    if (a.size() != b.size()) throw InvalidArgument("paired_permutation_test: unequal number of values");
    if (a.empty()) throw InvalidArgument("paired_permutation_test: zero pairs");
    const std::size_t n = a.size();
    std::vector<double> d(n);
    double observed = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = a[i] - b[i];
        observed += d[i];
        scale += std::abs(d[i]);
    }
    // Sums stand in for means (same n); the slack absorbs rounding in re-summation.
    const double threshold = std::abs(observed) - 1e-12 * scale;

    if (n <= kExactPermutationLimit) {
        std::uint64_t hits = 0;
        const std::uint64_t total = std::uint64_t{1} << n;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += (mask >> i & 1U) ? -d[i] : d[i];
            if (std::abs(s) >= threshold) ++hits;
        }
        return static_cast<double>(hits) / static_cast<double>(total);
    }

    if (resamples == 0) throw InvalidArgument("paired_permutation_test: resamples must be positive");
    Rng rng(seed);
    std::uint64_t hits = 0;
    for (std::size_t r = 0; r < resamples; ++r) {
        double s = 0.0;
        std::uint64_t bits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i % 64 == 0) bits = rng.next_u64();
            s += (bits & 1U) ? -d[i] : d[i];
            bits >>= 1;
        }
        if (std::abs(s) >= threshold) ++hits;
    }
    return static_cast<double>(hits + 1) / static_cast<double>(resamples + 1);
}

double quantile_sorted(std::span<const double> sorted, double q)
{
    if (sorted.empty()) throw InvalidArgument("quantile of empty data");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) return sorted[lo];
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

OddsRatioPosterior odds_ratio_posterior(int successes_1, int n_1, int successes_2, int n_2, std::size_t samples,
                                        std::uint64_t seed)
{
    if (n_1 < 1 || n_2 < 1) throw InvalidArgument("odds_ratio_posterior: n must be >= 1");
    if (successes_1 < 0 || successes_1 > n_1 || successes_2 < 0 || successes_2 > n_2)
        throw InvalidArgument("odds_ratio_posterior: successes must be in [0, n]");
    if (samples == 0) throw InvalidArgument("odds_ratio_posterior: samples must be positive");

    Rng rng(seed);
    std::vector<double> ratio(samples);
    for (auto& r : ratio) {
        const double p1 = rng.beta(successes_1 + 1.0, n_1 - successes_1 + 1.0);
        const double p2 = rng.beta(successes_2 + 1.0, n_2 - successes_2 + 1.0);
        r = (p1 * (1.0 - p2)) / ((1.0 - p1) * p2);
    }
    std::sort(ratio.begin(), ratio.end());
    OddsRatioPosterior out;
    out.median = quantile_sorted(ratio, 0.5);
    out.ci68 = {quantile_sorted(ratio, 0.16), quantile_sorted(ratio, 0.84)};
    out.ci95 = {quantile_sorted(ratio, 0.025), quantile_sorted(ratio, 0.975)};
    const auto below = static_cast<double>(std::lower_bound(ratio.begin(), ratio.end(), 1.0) - ratio.begin());
    const auto above = static_cast<double>(ratio.end() - std::upper_bound(ratio.begin(), ratio.end(), 1.0));
    out.p_null = std::min(1.0, 2.0 * std::min(below, above) / static_cast<double>(samples));
    return out;
}

std::string format_odds_ratio(const OddsRatioPosterior& post)
{
    char buf[96];
    std::snprintf(buf, sizeof buf, "OR=%.2f, CI95=[%.2f, %.2f]", post.median, post.ci95[0], post.ci95[1]);
    return buf;
}

MeanSe mean_and_se(std::span<const double> xs)
{
    MeanSe out;
    out.n = xs.size();
    if (xs.empty()) return out;
    out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (const double x : xs) ss += (x - out.mean) * (x - out.mean);
        out.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    }
    return out;
}

} // namespace culmark
