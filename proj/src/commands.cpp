#include "culmark/commands.hpp"

#include "culmark/config.hpp"
#include "culmark/errors.hpp"
#include "culmark/experiment.hpp"
#include "culmark/fitness_model.hpp"
#include "culmark/formats.hpp"
#include "culmark/inference.hpp"
#include "culmark/plot.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace culmark {

std::optional<std::string> process_env(const std::string& name)
{
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
}

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    int threads = 1;
    std::string embeddings;
};

/// File < environment < flags.
ExperimentConfig resolve_config(const CommonFlags& flags, const EnvLookup& env)
{
    KeyValues kv;
    if (!flags.config.empty()) {
        std::ifstream in(flags.config, std::ios::binary);
        if (!in) throw ConfigError("config", "cannot open config file '" + flags.config + "'", ConfigError::Kind::MissingFile);
        std::stringstream buf;
        buf << in.rdbuf();
        kv = parse_key_values(buf.str(), flags.config);
    }
    apply_env_overrides(kv, env);
    if (flags.seed) kv["seed"] = std::to_string(*flags.seed);
    if (!flags.out.empty()) kv["output"] = flags.out;
    return config_from_key_values(kv);
}

/// Resolved config without the output directory, so artifact trees compare equal wherever they are written.
std::string resolved_text(const ExperimentConfig& cfg)
{
    std::string out;
    std::istringstream in(config_to_text(cfg));
    for (std::string line; std::getline(in, line);)
        if (line.rfind("output ", 0) != 0) out += line + "\n";
    return out;
}

std::optional<EmbeddingTable> load_embeddings(const std::string& path)
{
    if (path.empty()) return std::nullopt;
    return read_embeddings_csv(read_text_file(path), path);
}

void write_report_files(const fs::path& dir, const AnalysisReport& report)
{
    write_text_file(dir / "metrics.csv", write_metrics_csv(report.series));
    write_text_file(dir / "report.txt", format_report(report));
    for (const std::string metric : {"diversity_hamming", "diversity_phylogenetic", "diversity_cosine", "autocorrelation"}) {
        std::vector<MetricSeries> selected;
        for (const auto& s : report.series)
            if (s.metric == metric && !s.points.empty()) selected.push_back(s);
        if (selected.empty()) continue;
        PlotStyle style;
        style.title = metric;
        style.y_label = metric == "autocorrelation" ? "mean chain autocorrelation" : "market diversity";
        if (metric == "autocorrelation") style.x_label = "lag";
        write_text_file(dir / (metric + ".svg"), emit_plot_svg(selected, style));
    }
}

int cmd_run(const CommonFlags& flags, const EnvLookup& env, std::ostream& out)
{
    const ExperimentConfig cfg = resolve_config(flags, env);
    const auto embeddings = load_embeddings(flags.embeddings);
    const RunResult run = run_experiment(cfg, flags.threads);
    const fs::path dir(cfg.output_dir);

    write_text_file(dir / "config.resolved", resolved_text(cfg));
    write_text_file(dir / "chains.csv", write_chains_csv(run.chains));
    write_text_file(dir / "edits.csv", write_edits_csv(run.edits));
    write_text_file(dir / "choices.csv", write_choices_csv(run.choices));
    write_text_file(dir / "trees.nwk", write_newick(run.chains));
    for (std::size_t i = 0; i < run.seed_images.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "seed_%03zu.pbm", i);
        write_text_file(dir / "seeds" / name, write_image_pbm(run.seed_images[i]));
    }

    AnalysisOptions opts = analysis_options(cfg);
    opts.embeddings = embeddings ? &*embeddings : nullptr;
    const AnalysisReport report = analyze_chains(run.chains, opts);
    write_report_files(dir, report);

    std::size_t nodes = 0;
    for (const Chain& c : run.chains) nodes += c.size();
    out << "simulated " << run.chains.size() << " chains (" << nodes << " nodes) into " << dir.string() << "\n";
    out << format_report(report);
    return kExitOk;
}

int cmd_analyze(const CommonFlags& flags, const std::string& chains_path, const EnvLookup& env, std::ostream& out)
{
    const ExperimentConfig cfg = resolve_config(flags, env);
    const auto embeddings = load_embeddings(flags.embeddings);
    const auto chains = read_chains_csv(read_text_file(chains_path), chains_path);
    AnalysisOptions opts = analysis_options(cfg);
    opts.embeddings = embeddings ? &*embeddings : nullptr;
    const AnalysisReport report = analyze_chains(chains, opts);
    write_report_files(fs::path(cfg.output_dir), report);
    out << format_report(report);
    return kExitOk;
}

int cmd_fitness(const CommonFlags& flags, const EnvLookup& env, std::ostream& out)
{
    const ExperimentConfig cfg = resolve_config(flags, env);
    if (cfg.fitness.parameterizations.empty())
        throw ConfigError("fitness.parameterizations", "at least one parameterization is required");
    std::vector<FitnessSeries> all;
    std::vector<MetricSeries> plot;
    for (const std::string& label : cfg.fitness.parameterizations) {
        all.push_back(run_fitness_experiment(cfg.fitness.parameterization(label), cfg.seed, flags.threads));
        MetricSeries s{label, "mean_fitness", {}};
        for (const FitnessPoint& p : all.back().points)
            s.points.push_back(MetricPoint{static_cast<double>(p.generation), p.mean_fitness, p.se_fitness,
                                           static_cast<std::size_t>(cfg.fitness.chains)});
        plot.push_back(std::move(s));
    }
    const fs::path dir(cfg.output_dir);
    write_text_file(dir / "config.resolved", resolved_text(cfg));
    write_text_file(dir / "fitness.csv", write_fitness_csv(all));
    PlotStyle style;
    style.title = "bitstring selection/mutation model";
    style.y_label = "mean fitness";
    write_text_file(dir / "fitness.svg", emit_plot_svg(plot, style));

    char buf[160];
    for (const FitnessSeries& s : all) {
        const auto at = [&](std::size_t g) { return s.points[std::min(g, s.points.size() - 1)].mean_fitness; };
        std::snprintf(buf, sizeof buf, "%-10s gen5=%.3f gen%zu=%.3f\n", s.label.c_str(), at(5), s.points.size() - 1,
                      at(s.points.size() - 1));
        out << buf;
    }
    return kExitOk;
}

struct FitFlags {
    int starts = 5;
    std::size_t bootstrap = 200;
    bool fit_beta = false;
    bool per_condition_beta = false;
    int max_iter = 2000;
    double tol = 1e-10;
    bool simulate = false;
};

int cmd_fit(const CommonFlags& flags, const FitFlags& ff, const std::string& choices_path, const EnvLookup& env,
            std::ostream& out)
{
    const ExperimentConfig cfg = resolve_config(flags, env);
    const ChoiceData data = read_choices_csv(read_text_file(choices_path), choices_path);
    FitOptions opts;
    opts.max_iter = ff.max_iter;
    opts.tol = ff.tol;
    opts.fit_beta = ff.fit_beta;
    opts.shared_beta = !ff.per_condition_beta;
    opts.initial_beta = cfg.beta;
    opts.starts = ff.starts;
    opts.bootstrap = ff.bootstrap;
    opts.seed = cfg.seed;
    opts.threads = flags.threads;
    const FitResult fit = fit_mixture(data.records, opts);

    const fs::path dir(cfg.output_dir);
    write_text_file(dir / "fit.csv", write_fit_csv(fit));
    const std::string summary = format_fit_summary(fit, data.rating_sd);
    write_text_file(dir / "fit_summary.txt", summary);
    out << summary;

    if (ff.simulate) {
        const FitSimulation sim = simulate_from_fit(fit, cfg, cfg.seed, flags.threads);
        write_text_file(dir / "fit_phylogenetic_diversity.csv", write_metrics_csv(sim.phylo_diversity));
        PlotStyle style;
        style.title = "phylogenetic diversity under the fitted mixtures";
        style.y_label = "market diversity";
        write_text_file(dir / "fit_phylogenetic_diversity.svg", emit_plot_svg(sim.phylo_diversity, style));
    }
    return kExitOk;
}

void add_common(CLI::App* sub, CommonFlags& flags)
{
    sub->add_option("--config", flags.config, "key = value config file");
    sub->add_option("--seed", flags.seed, "master seed (overrides config and environment)");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--embeddings", flags.embeddings, "embedding CSV (image_id,v0,...) for cosine diversity and autocorrelation");
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env)
{
    CLI::App app{"culmark: cultural market simulator and analysis toolkit", "culmark"};
    app.require_subcommand(1);

    CommonFlags flags;
    FitFlags fit_flags;
    std::string input;

    auto* run = app.add_subcommand("run", "simulate paired PI/NPI chains and write all artifacts");
    add_common(run, flags);
    auto* fitness = app.add_subcommand("fitness", "run the bitstring selection/mutation model");
    add_common(fitness, flags);
    auto* analyze = app.add_subcommand("analyze", "recompute metrics and tests from a chains CSV");
    add_common(analyze, flags);
    analyze->add_option("chains", input, "chains CSV")->required();
    auto* fit = app.add_subcommand("fit", "fit policy mixtures to a choice-record CSV");
    add_common(fit, flags);
    fit->add_option("choices", input, "choice-record CSV")->required();
    fit->add_option("--starts", fit_flags.starts, "EM starts")->check(CLI::PositiveNumber);
    fit->add_option("--bootstrap", fit_flags.bootstrap, "bootstrap resamples for standard errors");
    fit->add_option("--max-iter", fit_flags.max_iter, "EM iteration cap")->check(CLI::PositiveNumber);
    fit->add_option("--tol", fit_flags.tol, "relative log-likelihood tolerance");
    fit->add_flag("--fit-beta", fit_flags.fit_beta, "also fit the utility coefficients");
    fit->add_flag("--per-condition-beta", fit_flags.per_condition_beta, "fit separate coefficients per condition");
    fit->add_flag("--simulate", fit_flags.simulate, "simulate chains with the fitted mixtures");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run 'culmark --help' for usage\n";
        return kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(flags, env, out);
        if (fitness->parsed()) return cmd_fitness(flags, env, out);
        if (analyze->parsed()) return cmd_analyze(flags, input, env, out);
        return cmd_fit(flags, fit_flags, input, env, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataFormatError& e) {
        err << "data format error: " << e.what() << "\n";
        return kExitDataFormat;
    } catch (const InvariantViolation& e) {
        err << "internal invariant violated: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

} // namespace culmark
