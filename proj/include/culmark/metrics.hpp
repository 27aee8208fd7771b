// Diversity, autocorrelation, inequality and significance measures.
#pragma once

#include "culmark/core.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace culmark {

/// Fraction of the 256 pixels that differ.
double hamming_fraction(const Image& a, const Image& b);

/// Image id -> fixed-dimension real vector.
class EmbeddingTable {
public:
    explicit EmbeddingTable(std::string source = "pixels") : source_(std::move(source)) {}

    /// Throws InvalidArgument on dimension mismatch, empty or non-finite vectors, or a duplicate id.
    void add(NodeId id, std::vector<double> v);
    bool contains(NodeId id) const { return vectors_.count(id) != 0; }
    /// Throws InvalidArgument when the id is missing.
    const std::vector<double>& at(NodeId id) const;

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return vectors_.size(); }
    const std::string& source() const noexcept { return source_; }

private:
    std::string source_;
    std::size_t dim_ = 0;
    std::unordered_map<NodeId, std::vector<double>> vectors_;
};

/// Default embedding: pixels mapped to -1 (unset) / +1 (set), 256 dimensions.
std::vector<double> pixel_embedding(const Image& img);

/// 1 - x.y / (|x||y|). Throws DegenerateInput on a zero-norm vector.
double cosine_distance(std::span<const double> x, std::span<const double> y);

enum class DistanceKind { Hamming, Phylogenetic, Cosine };
std::string_view distance_name(DistanceKind k);

/// Mean of dist(i, j) over all unordered pairs i < j of n items.
/// Throws DegenerateInput when n < 2.
double mean_pairwise_distance(std::size_t n, const std::function<double(std::size_t, std::size_t)>& dist);

/// Average pairwise distance between the images of a market.
/// Cosine mode uses `embeddings` when given, otherwise pixel embeddings.
double market_diversity(const MarketView& view, DistanceKind kind, const Chain& chain,
                        const EmbeddingTable* embeddings = nullptr);

/// One chain's embedding vectors, ordered by generation.
using ChainEmbeddings = std::vector<std::vector<double>>;

/// Average chain autocorrelation at lag tau.
///
/// Vectors are centred on the grand mean over every (chain, generation). The
/// numerator sums x'(c,t).x'(c,t+tau) over all valid lag pairs; the
/// denominator sums |x'(c,t)|^2 over all (c, t), so the value at tau = 0 is 1.
/// Throws InvalidArgument for tau < 0, no chain longer than tau, or ragged dimensions;
/// DegenerateInput when every centred vector is zero.
double chain_autocorrelation(std::span<const ChainEmbeddings> chains, int tau);

/// Gini coefficient: sum_i sum_j |x_i - x_j| / (2 n^2 mean), no small-sample correction.
/// Throws InvalidArgument on empty/negative/non-finite input, DegenerateInput when all values are zero.
double gini(std::span<const double> values);

struct GiniDifference {
    double gini_a = 0.0;
    double gini_b = 0.0;
    double delta = 0.0; // gini_a - gini_b
    double se = 0.0;    // bootstrap standard error of delta
    double p_value = 1.0;
};

/// Bootstrap over items (resampled within each group) for G(a) - G(b).
GiniDifference gini_difference_bootstrap(std::span<const double> a, std::span<const double> b, std::size_t resamples,
                                         std::uint64_t seed);

/// Two-sided sign-flip test on paired differences a_i - b_i, statistic = mean difference.
///
/// Exact enumeration of all 2^n sign assignments when n <= 20, otherwise
/// `resamples` Monte-Carlo draws with the observed assignment counted once
/// (p = (1 + hits) / (1 + resamples)).
/// Throws InvalidArgument on zero pairs, mismatched lengths, or resamples == 0 in Monte-Carlo mode.
double paired_permutation_test(std::span<const double> a, std::span<const double> b, std::size_t resamples,
                               std::uint64_t seed);

inline constexpr std::size_t kExactPermutationLimit = 20;

struct OddsRatioPosterior {
    double median = 1.0;
    std::array<double, 2> ci68{};
    std::array<double, 2> ci95{};
    double p_null = 1.0; // twice the smaller posterior mass on either side of OR = 1, capped at 1
};

/// Posterior of odds(p1)/odds(p2) under uniform Beta(1,1) priors, by Monte-Carlo.
/// Throws InvalidArgument unless 0 <= s <= n and n >= 1 for both groups.
OddsRatioPosterior odds_ratio_posterior(int successes_1, int n_1, int successes_2, int n_2, std::size_t samples,
                                        std::uint64_t seed);

/// "OR=0.84, CI95=[0.73, 0.96]"
std::string format_odds_ratio(const OddsRatioPosterior& post);

/// Linear-interpolation quantile of sorted data (q in [0, 1]).
double quantile_sorted(std::span<const double> sorted, double q);

struct MetricPoint {
    double index = 0.0; // generation or lag
    double value = 0.0;
    double se = 0.0;
    std::size_t n = 1;
};

struct MetricSeries {
    std::string condition;
    std::string metric;
    std::vector<MetricPoint> points;
};

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

/// Mean and standard error (sample sd / sqrt(n)); se is 0 for n < 2.
MeanSe mean_and_se(std::span<const double> xs);

} // namespace culmark
