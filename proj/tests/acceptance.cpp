// Acceptance suite: one PASS/FAIL line per criterion. Exit status 1 if any fails.

#include "culmark/commands.hpp"
#include "culmark/experiment.hpp"
#include "culmark/fitness_model.hpp"
#include "culmark/formats.hpp"
#include "culmark/inference.hpp"
#include "culmark/metrics.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace culmark;
namespace fs = std::filesystem;

namespace {

// Pinned thresholds.
constexpr double kOracleTol = 1e-12;
constexpr double kNullTol = 0.1;
constexpr int kNullSeeds = 50;
constexpr int kSeeds = 20;
constexpr double kSeedFraction = 0.9;
constexpr double kAutocorrFraction = 0.8;
constexpr double kAlpha = 0.05;
constexpr double kWeightTol = 0.05;
constexpr std::size_t kRecords = 5000;
constexpr double kGradientTol = 1e-5;
constexpr double kTraceSlack = 1e-9;
constexpr int kOrTrials = 20;
constexpr int kEditsPerCondition = 5000;
constexpr long kEditCalls = 1'000'000;
constexpr std::size_t kPermutations = 2000;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fraction(int hits, int total)
{
    return std::to_string(hits) + "/" + std::to_string(total);
}

bool enough(int hits, int total, double needed)
{
    return hits >= static_cast<int>(std::ceil(needed * total - 1e-9));
}

Verdict metric_oracles()
{
    bool ok = true;
    std::string detail;
    const auto check = [&](bool cond, const char* what) {
        if (!cond) {
            ok = false;
            detail += std::string(what) + " failed; ";
        }
    };
    check(std::abs(gini(std::vector<double>{1, 0, 0, 0}) - 0.75) <= kOracleTol, "gini([1,0,0,0]) = 0.75");
    check(gini(std::vector<double>{5, 5, 5, 5}) == 0.0, "gini([5,5,5,5]) = 0");

    Image a = Image::from_string(std::string(128, '1') + std::string(128, '0'));
    Image b = Image::from_string(std::string(128, '0') + std::string(128, '1'));
    check(hamming_fraction(a, b) == 1.0, "hamming complement = 1");

    Chain chain(0, 0, Condition::PI, 1, 0, Image{});
    Image c1, c2;
    c1.set(0, 0);
    c2.set(1, 1);
    record_choice(chain, 1, 0, c1);
    record_choice(chain, 2, 0, c2);
    check(phylo_distance(chain, 1, 2) == 2, "sibling phylo distance = 2");

    const std::vector<double> v{1.0, -2.0, 0.5};
    const std::vector<double> w{-1.0, 2.0, -0.5};
    const std::vector<ChainEmbeddings> alt{{v, w, v, w}};
    check(std::abs(chain_autocorrelation(alt, 1) + 0.75) <= kOracleTol, "alternating autocorrelation = -0.75");

    const std::vector<ChainEmbeddings> coincident{{{1.0, 0.0}, {0.0, 2.0}, {3.0, 1.0}}, {{2.0, 2.0}, {-1.0, 0.5}, {0.0, 0.0}}};
    check(std::abs(chain_autocorrelation(coincident, 0) - 1.0) <= kOracleTol, "rho(0) = 1");
    return {ok, ok ? "all six oracles hold" : detail};
}

Verdict null_calibration()
{
    constexpr int dim = 8, chains = 2, generations = 60, tau = 5;
    double worst = 0.0, sum = 0.0;
    for (int s = 0; s < kNullSeeds; ++s) {
        Rng rng = RngLedger(static_cast<std::uint64_t>(s) + 1).stream("null_embeddings");
        std::vector<ChainEmbeddings> data(chains);
        for (auto& ch : data)
            for (int g = 0; g < generations; ++g) {
                std::vector<double> x(dim);
                for (double& e : x) e = rng.normal();
                ch.push_back(std::move(x));
            }
        const double rho = chain_autocorrelation(data, tau);
        worst = std::max(worst, std::abs(rho));
        sum += rho;
    }
    const bool ok = worst <= kNullTol;
    return {ok, "max |rho(5)| over " + std::to_string(kNullSeeds) + " seeds = " + fmt("%.4f", worst) + ", mean = " +
                    fmt("%.4f", sum / kNullSeeds)};
}

Verdict fitness_crossing()
{
    const FitnessSettings defaults;
    int crossings = 0, below = 0;
    double pooled_c0 = 0.0, pooled_c1 = 0.0;
    for (int s = 1; s <= kSeeds; ++s) {
        std::map<std::string, FitnessSeries> series;
        for (const char* label : {"low_c0", "low_c1", "high_c0"})
            series[label] = run_fitness_experiment(defaults.parameterization(label), static_cast<std::uint64_t>(s));
        const auto at = [&](const char* label, int g) { return series[label].points.at(static_cast<std::size_t>(g)).mean_fitness; };
        const int last = defaults.generations;
        if (at("high_c0", 5) > at("low_c1", 5) && at("low_c1", last) > at("high_c0", last)) ++crossings;
        if (at("low_c1", 5) <= at("low_c0", 5)) ++below;
        pooled_c0 += at("low_c0", 5);
        pooled_c1 += at("low_c1", 5);
    }
    const bool ok = enough(crossings, kSeeds, kSeedFraction) && pooled_c1 <= pooled_c0;
    return {ok, "crossing in " + fraction(crossings, kSeeds) + " seeds; low-mu C=1 vs C=0 at generation 5: " +
                    fmt("%.3f", pooled_c1 / kSeeds) + " vs " + fmt("%.3f", pooled_c0 / kSeeds) + " (pooled), at or below in " +
                    fraction(below, kSeeds) + " seeds"};
}

struct SeedAnalysis {
    AnalysisReport report;
};

std::vector<SeedAnalysis> simulate_seeds()
{
    std::vector<SeedAnalysis> out;
    for (int s = 1; s <= kSeeds; ++s) {
        ExperimentConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(s);
        const RunResult run = run_experiment(cfg);
        AnalysisOptions opt = analysis_options(cfg);
        opt.permutations = kPermutations;
        opt.bootstrap = 200;
        out.push_back({analyze_chains(run.chains, opt)});
    }
    return out;
}

Verdict diversity_ordering(const std::vector<SeedAnalysis>& seeds)
{
    int hits = 0;
    std::map<std::string, int> per_metric;
    for (const auto& s : seeds) {
        bool all = true;
        for (const char* m : {"diversity_hamming", "diversity_phylogenetic", "diversity_cosine"}) {
            const PairedComparison& c = s.report.comparison(m);
            const bool good = c.difference < 0.0 && c.p_value < kAlpha;
            per_metric[m] += good;
            all = all && good;
        }
        hits += all;
    }
    const int n = static_cast<int>(seeds.size());
    return {enough(hits, n, kSeedFraction),
            "all three lower with p < 0.05 in " + fraction(hits, n) + " seeds (hamming " +
                fraction(per_metric["diversity_hamming"], n) + ", phylogenetic " +
                fraction(per_metric["diversity_phylogenetic"], n) + ", cosine " + fraction(per_metric["diversity_cosine"], n) + ")"};
}

Verdict autocorrelation_ordering(const std::vector<SeedAnalysis>& seeds)
{
    int hits = 0;
    for (const auto& s : seeds) {
        const auto& pi = s.report.find_series("PI", "autocorrelation").points;
        const auto& npi = s.report.find_series("NPI", "autocorrelation").points;
        bool all = pi.size() > 10 && npi.size() > 10;
        for (std::size_t tau = 1; all && tau <= 10; ++tau) all = pi[tau].value >= npi[tau].value;
        hits += all;
    }
    const int n = static_cast<int>(seeds.size());
    return {enough(hits, n, kAutocorrFraction), "PI >= NPI at every lag 1..10 in " + fraction(hits, n) + " seeds"};
}

Verdict inequality(const std::vector<SeedAnalysis>& seeds)
{
    int hits = 0;
    for (const auto& s : seeds) {
        const PairedComparison& c = s.report.comparison("gini_chain");
        hits += c.difference > 0.0 && c.p_value < kAlpha;
    }
    const std::string report = format_report(seeds.front().report);
    const auto begin = report.find("inequality of selection counts");
    const auto end = report.find("\n\n", begin);
    std::printf("%s\n", report.substr(begin, end == std::string::npos ? std::string::npos : end - begin).c_str());
    const int n = static_cast<int>(seeds.size());
    return {enough(hits, n, kSeedFraction), "G(PI) - G(NPI) > 0 with p < 0.05 in " + fraction(hits, n) + " seeds"};
}

Verdict inference_recovery()
{
    const std::vector<PolicyMixture> settings{
        PolicyMixture::pi_default(), {1.0, 0.0, 0.0, 0.0}, {0.0, 0.0, 0.0, 1.0}, {0.25, 0.25, 0.25, 0.25}, {0.0, 0.5, 0.5, 0.0}};
    const CriterionScores beta{1.0, 0.5, -0.5, 1.5};
    double worst = 0.0, worst_drop = 0.0;
    bool monotone = true;
    for (std::size_t i = 0; i < settings.size(); ++i) {
        const auto records = synthesize_records(kRecords, Condition::PI, settings[i], beta, 100 + i);
        FitOptions opt;
        opt.initial_beta = beta;
        opt.seed = 7 + i;
        const FitResult fit = fit_mixture(records, opt);
        const auto& w = fit.for_condition(Condition::PI).mixture;
        for (std::size_t k = 0; k < 4; ++k) worst = std::max(worst, std::abs(w.weights()[k] - settings[i].weights()[k]));
        const auto& trace = fit.log_likelihood_trace;
        for (std::size_t t = 1; t < trace.size(); ++t) {
            const double drop = trace[t - 1] - trace[t];
            worst_drop = std::max(worst_drop, drop);
            if (drop > kTraceSlack * std::abs(trace[t - 1])) monotone = false;
        }
    }

    const auto records = synthesize_records(2000, Condition::PI, PolicyMixture::pi_default(), beta, 99);
    std::vector<double> resp(records.size());
    Rng rng(5);
    for (double& r : resp) r = rng.uniform();
    const CriterionScores at{0.8, 0.3, -0.2, 1.1};
    const CriterionScores grad = image_driven_gradient(records, resp, at);
    double worst_grad = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
        const double h = 1e-5;
        CriterionScores up = at, down = at;
        up[c] += h;
        down[c] -= h;
        const double fd = (image_driven_objective(records, resp, up) - image_driven_objective(records, resp, down)) / (2 * h);
        worst_grad = std::max(worst_grad, std::abs(fd - grad[c]) / std::max(1.0, std::abs(fd)));
    }

    const bool ok = worst <= kWeightTol && monotone && worst_grad <= kGradientTol;
    return {ok, "max weight error " + fmt("%.4f", worst) + ", largest log-likelihood drop " + fmt("%.2e", worst_drop) +
                    ", gradient relative error " + fmt("%.2e", worst_grad)};
}

Verdict fit_simulation()
{
    FitResult fit;
    fit.conditions = {ConditionFit{Condition::PI, PolicyMixture::pi_default(), {}, {1, 1, 1, 1}, 0},
                      ConditionFit{Condition::NPI, PolicyMixture::npi_default(), {}, {1, 1, 1, 1}, 0}};
    ExperimentConfig cfg;
    cfg.generations = 30;
    int hits = 0;
    for (int s = 1; s <= kSeeds; ++s) {
        const FitSimulation sim = simulate_from_fit(fit, cfg, static_cast<std::uint64_t>(s));
        const auto value_at = [&](const MetricSeries& series) {
            for (const auto& p : series.points)
                if (p.index == 30.0) return p.value;
            return std::nan("");
        };
        hits += value_at(sim.phylo_diversity.at(0)) < value_at(sim.phylo_diversity.at(1));
    }
    return {enough(hits, kSeeds, kSeedFraction), "PI phylogenetic diversity lower at generation 30 in " + fraction(hits, kSeeds) + " seeds"};
}

Verdict odds_ratios()
{
    const StrategyProfile pi = StrategyProfile::pi_default();
    const StrategyProfile npi = StrategyProfile::npi_default();
    int inside = 0, total = 0;
    double med_disruption = 0.0, med_growth = 0.0;
    for (int t = 0; t < kOrTrials; ++t) {
        const RngLedger ledger(static_cast<std::uint64_t>(t) + 1);
        std::array<int, 5> n_pi{}, n_npi{};
        Rng r_pi = ledger.stream("edits_pi"), r_npi = ledger.stream("edits_npi");
        for (int e = 0; e < kEditsPerCondition; ++e) {
            ++n_pi[static_cast<std::size_t>(sample_strategy(pi, r_pi).kind)];
            ++n_npi[static_cast<std::size_t>(sample_strategy(npi, r_npi).kind)];
        }
        for (std::size_t k = 0; k < 5; ++k) {
            const double p1 = pi.probabilities()[k], p2 = npi.probabilities()[k];
            const double configured = (p1 / (1 - p1)) / (p2 / (1 - p2));
            const auto post = odds_ratio_posterior(n_pi[k], kEditsPerCondition, n_npi[k], kEditsPerCondition, 20000,
                                                   ledger.derive_seed("odds_ratio", k));
            inside += post.ci95[0] <= configured && configured <= post.ci95[1];
            ++total;
            if (kEditKinds[k] == EditKind::Disruption) med_disruption += post.median / kOrTrials;
            if (kEditKinds[k] == EditKind::PatternGrowth) med_growth += post.median / kOrTrials;
        }
    }
    const bool ok = enough(inside, total, kSeedFraction) && med_disruption < 1.0 && med_growth > 1.0;
    return {ok, "configured OR inside CI95 in " + fraction(inside, total) + " trials; mean posterior median disruption " +
                    fmt("%.3f", med_disruption) + ", pattern_growth " + fmt("%.3f", med_growth)};
}

Verdict determinism()
{
    const fs::path root = fs::temp_directory_path() / "culmark_acceptance";
    fs::remove_all(root);
    const auto tree = [](const fs::path& dir) {
        std::map<std::string, std::string> files;
        for (const auto& e : fs::recursive_directory_iterator(dir))
            if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_text_file(e.path());
        return files;
    };
    std::ostringstream sink;
    bool ok = true;
    for (const char* threads : {"1", "4"})
        ok = ok && run_cli({"run", "--seed", "11", "--threads", threads, "--out", (root / threads).string()}, sink, sink) == 0;
    const bool identical = ok && tree(root / "1") == tree(root / "4");
    const std::size_t files = ok ? tree(root / "1").size() : 0;

    Rng rng(2024);
    EditParams params;
    long violations = 0;
    for (long i = 0; i < kEditCalls; ++i) {
        Image parent;
        const double density = rng.uniform();
        for (int p = 0; p < kPixelCount; ++p) parent.set_at(p, rng.bernoulli(density));
        const EditStrategy strategy{kEditKinds[rng.below(5)], params};
        const int changed = hamming_count(apply_strategy(parent, strategy, rng).child, parent);
        violations += changed < kMinEditPixels || changed > kMaxEditPixels;
    }
    fs::remove_all(root);
    return {identical && violations == 0, std::string(identical ? "identical" : "different") + " artifact trees (" +
                                              std::to_string(files) + " files) at 1 and 4 threads; " +
                                              std::to_string(violations) + " edit-bound violations in " +
                                              std::to_string(kEditCalls) + " calls"};
}

} // namespace

int main()
{
    int failures = 0;
    const auto report = [&](int id, const std::function<Verdict()>& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d: %s  %s [%.1fs]\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
        std::fflush(stdout);
        failures += !v.pass;
    };

    report(1, metric_oracles);
    report(2, null_calibration);
    report(3, fitness_crossing);
    std::vector<SeedAnalysis> seeds;
    const auto t0 = std::chrono::steady_clock::now();
    seeds = simulate_seeds();
    std::printf("(simulated %d seeds x 128 pairs in %.1fs)\n", kSeeds,
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    report(4, [&] { return diversity_ordering(seeds); });
    report(5, [&] { return autocorrelation_ordering(seeds); });
    report(6, [&] { return inequality(seeds); });
    report(7, inference_recovery);
    report(8, fit_simulation);
    report(9, odds_ratios);
    report(10, determinism);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
