// Paired PI/NPI chain simulation and the analysis pipeline over stored chains.
#pragma once

#include "culmark/config.hpp"
#include "culmark/core.hpp"
#include "culmark/creation.hpp"
#include "culmark/formats.hpp"
#include "culmark/inference.hpp"
#include "culmark/metrics.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace culmark {

struct RunResult {
    std::vector<Chain> chains; // PI chain of pair p has id 2p, its NPI twin 2p + 1
    std::vector<EditRecord> edits;
    std::vector<ChoiceRecord> choices;
    std::vector<Image> seed_images; // one per pair (or per chain without pairing)
};

/// Draws a seed image from `rectangles` random filled rectangles (blank for 0).
Image random_seed_image(int rectangles, Rng& rng);

/// Simulates config.chains pairs of chains. Each chain draws only from its own
/// stream, so the result is identical for every thread count.
/// Throws ConfigError when the NPI mixture depends on popularity.
RunResult run_experiment(const ExperimentConfig& config, int threads = 1);

/// Market diversity of one chain for generations 2..G+1 (the markets seen while
/// building generations 2..G, plus the final market).
std::vector<double> chain_diversity(const Chain& chain, DistanceKind kind, int window,
                                    const EmbeddingTable* embeddings = nullptr);

/// Mean +- SE over chains per generation, one series per condition (PI first).
std::vector<MetricSeries> diversity_series(std::span<const Chain> chains, DistanceKind kind, int window,
                                           const EmbeddingTable* embeddings = nullptr);

struct AnalysisOptions {
    int window = kDefaultWindow;
    int max_lag = 10;
    std::size_t permutations = 10000;
    std::size_t bootstrap = 1000;
    std::uint64_t seed = 1;
    const EmbeddingTable* embeddings = nullptr; // pixel embeddings when null
};

AnalysisOptions analysis_options(const ExperimentConfig& config);

struct PairedComparison {
    std::string metric;
    double mean_pi = 0.0;
    double mean_npi = 0.0;
    double difference = 0.0; // mean over pairs of PI - NPI
    double p_value = 1.0;
    std::size_t pairs = 0;
};

struct AnalysisReport {
    std::vector<MetricSeries> series;
    std::vector<PairedComparison> comparisons;
    GiniDifference gini; // pooled selection counts, PI minus NPI
    std::map<Condition, EditSizeSummary> edit_sizes;
    std::size_t chains_pi = 0;
    std::size_t chains_npi = 0;

    const PairedComparison& comparison(const std::string& metric) const;
    const MetricSeries& find_series(const std::string& condition, const std::string& metric) const;
};

/// Per-chain summary statistics used for the paired tests.
std::vector<double> chain_statistic(std::span<const Chain> chains, const std::string& metric, const AnalysisOptions& options);

/// Autocorrelation by lag (0..max_lag) for one condition's chains.
std::vector<double> autocorrelation_by_lag(std::span<const Chain> chains, int max_lag, const EmbeddingTable* embeddings);

/// Recomputes every metric from chains alone; pure function of (chains, options).
AnalysisReport analyze_chains(std::span<const Chain> chains, const AnalysisOptions& options);

/// Human-readable report including the Gini comparison.
std::string format_report(const AnalysisReport& report);

} // namespace culmark
