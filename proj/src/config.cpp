#include "culmark/config.hpp"

#include "culmark/errors.hpp"
#include "culmark/formats.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace culmark {

namespace {

std::string trim(std::string_view s)
{
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

const std::array<std::string, 4> kPolicyKeys{"image_driven", "cum_adv", "balancing", "random"};

std::vector<std::string> build_keys()
{
    std::vector<std::string> keys{"chains", "generations", "window", "pairing", "seed", "output", "seed_image.rectangles"};
    for (const char* cond : {"pi", "npi"})
        for (const auto& p : kPolicyKeys) keys.push_back(std::string("policy.") + cond + "." + p);
    for (const auto c : kCriteria) keys.push_back("policy.beta." + std::string(c));
    keys.push_back("policy.cum_adv_mode");
    for (const char* cond : {"pi", "npi"})
        for (const auto k : kEditKinds) keys.push_back(std::string("creation.") + cond + "." + std::string(edit_kind_name(k)));
    for (const char* k : {"bits", "mu_low", "mu_high", "mu_mode", "c_mode", "select_best", "chains", "generations", "window",
                          "initial_density", "parameterizations"})
        keys.push_back(std::string("fitness.") + k);
    for (const char* k : {"max_lag", "permutations", "bootstrap"}) keys.push_back(std::string("analysis.") + k);
    return keys;
}

class Reader {
public:
    explicit Reader(const KeyValues& kv) : kv_(kv) {}

    const std::string* raw(const std::string& key) const
    {
        auto it = kv_.find(key);
        return it == kv_.end() ? nullptr : &it->second;
    }

    template <typename Int>
    void integer(const std::string& key, Int& out) const
    {
        if (const auto* v = raw(key)) {
            Int value{};
            const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), value);
            if (ec != std::errc() || ptr != v->data() + v->size() || v->empty())
                throw ConfigError(key, "expected an integer, got '" + *v + "'");
            out = value;
        }
    }

    void real(const std::string& key, double& out) const
    {
        if (const auto* v = raw(key)) {
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), value);
            if (ec != std::errc() || ptr != v->data() + v->size() || v->empty() || !std::isfinite(value))
                throw ConfigError(key, "expected a finite number, got '" + *v + "'");
            out = value;
        }
    }

    void boolean(const std::string& key, bool& out) const
    {
        if (const auto* v = raw(key)) {
            if (*v == "true" || *v == "1" || *v == "yes") out = true;
            else if (*v == "false" || *v == "0" || *v == "no") out = false;
            else throw ConfigError(key, "expected true or false, got '" + *v + "'");
        }
    }

    void text(const std::string& key, std::string& out) const
    {
        if (const auto* v = raw(key)) out = *v;
    }

private:
    const KeyValues& kv_;
};

void require(bool ok, const std::string& key, const std::string& what)
{
    if (!ok) throw ConfigError(key, what);
}

PolicyMixture read_mixture(const Reader& r, const std::string& cond, const PolicyMixture& fallback)
{
    std::array<double, 4> w = fallback.weights();
    for (std::size_t i = 0; i < 4; ++i) {
        const std::string key = "policy." + cond + "." + kPolicyKeys[i];
        r.real(key, w[i]);
        require(w[i] >= 0.0, key, "policy weights must be >= 0");
    }
    require(w[0] + w[1] + w[2] + w[3] > 0.0, "policy." + cond, "policy weights must not all be zero");
    return PolicyMixture(w);
}

StrategyProfile read_profile(const Reader& r, const std::string& cond, const StrategyProfile& fallback)
{
    std::array<double, 5> p = fallback.probabilities();
    double total = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        const std::string key = "creation." + cond + "." + std::string(edit_kind_name(kEditKinds[i]));
        r.real(key, p[i]);
        require(p[i] >= 0.0, key, "strategy probabilities must be >= 0");
        total += p[i];
    }
    require(total > 0.0, "creation." + cond, "strategy probabilities must not all be zero");
    return StrategyProfile(p);
}

std::vector<std::string> split_list(const std::string& v)
{
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

} // namespace

BitstringConfig FitnessSettings::parameterization(const std::string& label) const
{
    BitstringConfig c;
    c.label = label;
    c.bits = bits;
    c.mode = mode;
    c.popularity_mode = c_mode;
    c.select_best = select_best;
    c.window = window;
    c.generations = generations;
    c.chains = chains;
    c.initial_density = initial_density;
    if (label == "low_c0" || label == "low_c1") c.mu = mu_low;
    else if (label == "high_c0" || label == "high_c1") c.mu = mu_high;
    else throw ConfigError("fitness.parameterizations", "unknown parameterization '" + label + "'");
    c.cum_adv = label.ends_with("c1") ? 1.0 : 0.0;
    return c;
}

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = build_keys();
    return keys;
}

KeyValues parse_key_values(std::string_view text, const std::string& source)
{
    KeyValues kv;
    std::size_t line_no = 0, pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        ++line_no;
        pos = end + 1;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const std::string content = trim(line);
        if (content.empty()) {
            if (end == text.size()) break;
            continue;
        }
        const auto eq = content.find('=');
        if (eq == std::string::npos)
            throw ConfigError("", source + ":" + std::to_string(line_no) + ": expected 'key = value'", ConfigError::Kind::Parse);
        const std::string key = trim(std::string_view(content).substr(0, eq));
        const std::string value = trim(std::string_view(content).substr(eq + 1));
        if (key.empty())
            throw ConfigError("", source + ":" + std::to_string(line_no) + ": empty key", ConfigError::Kind::Parse);
        if (!kv.emplace(key, value).second)
            throw ConfigError(key, source + ":" + std::to_string(line_no) + ": duplicate key", ConfigError::Kind::Parse);
        if (end == text.size()) break;
    }
    return kv;
}

ExperimentConfig config_from_key_values(const KeyValues& kv)
{
    const auto& known = config_keys();
    for (const auto& [key, value] : kv)
        if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError(key, "unknown configuration key");

    const Reader r(kv);
    ExperimentConfig cfg;
    r.integer("chains", cfg.chains);
    require(cfg.chains >= 1, "chains", "must be >= 1");
    r.integer("generations", cfg.generations);
    require(cfg.generations >= 1, "generations", "must be >= 1");
    r.integer("window", cfg.window);
    require(cfg.window >= 1, "window", "must be >= 1");
    r.boolean("pairing", cfg.pairing);
    r.integer("seed", cfg.seed);
    r.text("output", cfg.output_dir);
    require(!cfg.output_dir.empty(), "output", "must not be empty");
    r.integer("seed_image.rectangles", cfg.seed_rectangles);
    require(cfg.seed_rectangles >= 0, "seed_image.rectangles", "must be >= 0");

    cfg.mixture_pi = read_mixture(r, "pi", cfg.mixture_pi);
    cfg.mixture_npi = read_mixture(r, "npi", cfg.mixture_npi);
    if (cfg.mixture_npi.weight(Policy::CumulativeAdvantage) > 0.0)
        validate_mixture_for_condition(cfg.mixture_npi, Condition::NPI, "policy.npi.cum_adv");
    validate_mixture_for_condition(cfg.mixture_npi, Condition::NPI, "policy.npi.balancing");
    for (std::size_t c = 0; c < kCriteria.size(); ++c) r.real("policy.beta." + std::string(kCriteria[c]), cfg.beta[c]);
    std::string mode = "argmax";
    r.text("policy.cum_adv_mode", mode);
    if (mode == "argmax") cfg.cum_adv_mode = CumAdvMode::Argmax;
    else if (mode == "proportional") cfg.cum_adv_mode = CumAdvMode::Proportional;
    else throw ConfigError("policy.cum_adv_mode", "expected argmax or proportional, got '" + mode + "'");

    cfg.profile_pi = read_profile(r, "pi", cfg.profile_pi);
    cfg.profile_npi = read_profile(r, "npi", cfg.profile_npi);

    FitnessSettings& f = cfg.fitness;
    r.integer("fitness.bits", f.bits);
    r.real("fitness.mu_low", f.mu_low);
    r.real("fitness.mu_high", f.mu_high);
    std::string mu_mode = "flips";
    r.text("fitness.mu_mode", mu_mode);
    if (mu_mode == "flips") f.mode = MutationMode::Flips;
    else if (mu_mode == "probability") f.mode = MutationMode::Probability;
    else throw ConfigError("fitness.mu_mode", "expected flips or probability, got '" + mu_mode + "'");
    std::string c_mode = "gate";
    r.text("fitness.c_mode", c_mode);
    if (c_mode == "gate") f.c_mode = PopularityMode::Gate;
    else if (c_mode == "proportional") f.c_mode = PopularityMode::Proportional;
    else throw ConfigError("fitness.c_mode", "expected gate or proportional, got '" + c_mode + "'");
    r.real("fitness.select_best", f.select_best);
    r.integer("fitness.chains", f.chains);
    r.integer("fitness.generations", f.generations);
    r.integer("fitness.window", f.window);
    r.real("fitness.initial_density", f.initial_density);
    if (const auto* v = r.raw("fitness.parameterizations")) f.parameterizations = split_list(*v);
    require(!f.parameterizations.empty(), "fitness.parameterizations", "at least one parameterization is required");
    for (const auto& label : f.parameterizations) {
        BitstringConfig bc = f.parameterization(label);
        try {
            bc.validate();
        } catch (const ConfigError& e) {
            // Map the per-parameterization field back onto the config key.
            std::string key = e.key();
            const auto dot = key.rfind('.');
            std::string field = dot == std::string::npos ? key : key.substr(dot + 1);
            if (field == "mu") field = label.starts_with("low") ? "mu_low" : "mu_high";
            throw ConfigError("fitness." + field, std::string(e.what()).substr(e.key().size() + 2));
        }
    }

    r.integer("analysis.max_lag", cfg.analysis.max_lag);
    require(cfg.analysis.max_lag >= 0, "analysis.max_lag", "must be >= 0");
    r.integer("analysis.permutations", cfg.analysis.permutations);
    require(cfg.analysis.permutations >= 1, "analysis.permutations", "must be >= 1");
    r.integer("analysis.bootstrap", cfg.analysis.bootstrap);
    return cfg;
}

std::string env_var_name(const std::string& key)
{
    std::string name = "CULMARK_";
    for (const char ch : key) name += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return name;
}

void apply_env_overrides(KeyValues& kv, const std::function<std::optional<std::string>(const std::string&)>& getenv_fn)
{
    for (const auto& key : config_keys())
        if (auto v = getenv_fn(env_var_name(key))) kv[key] = trim(*v);
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot open config file '" + path.string() + "'", ConfigError::Kind::MissingFile);
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_key_values(parse_key_values(buf.str(), path.string()));
}

std::string config_to_text(const ExperimentConfig& cfg)
{
    std::string out;
    const auto put = [&](const std::string& key, const std::string& value) { out += key + " = " + value + "\n"; };
    const auto num = [](double x) { return format_double(x); };
    put("chains", std::to_string(cfg.chains));
    put("generations", std::to_string(cfg.generations));
    put("window", std::to_string(cfg.window));
    put("pairing", cfg.pairing ? "true" : "false");
    put("seed", std::to_string(cfg.seed));
    put("output", cfg.output_dir);
    put("seed_image.rectangles", std::to_string(cfg.seed_rectangles));
    for (const Condition c : {Condition::PI, Condition::NPI}) {
        const std::string cond = c == Condition::PI ? "pi" : "npi";
        for (std::size_t i = 0; i < 4; ++i) put("policy." + cond + "." + kPolicyKeys[i], num(cfg.mixture(c).weights()[i]));
    }
    for (std::size_t c = 0; c < kCriteria.size(); ++c) put("policy.beta." + std::string(kCriteria[c]), num(cfg.beta[c]));
    put("policy.cum_adv_mode", cfg.cum_adv_mode == CumAdvMode::Argmax ? "argmax" : "proportional");
    for (const Condition c : {Condition::PI, Condition::NPI}) {
        const std::string cond = c == Condition::PI ? "pi" : "npi";
        for (std::size_t i = 0; i < 5; ++i)
            put("creation." + cond + "." + std::string(edit_kind_name(kEditKinds[i])), num(cfg.profile(c).probabilities()[i]));
    }
    const FitnessSettings& f = cfg.fitness;
    put("fitness.bits", std::to_string(f.bits));
    put("fitness.mu_low", num(f.mu_low));
    put("fitness.mu_high", num(f.mu_high));
    put("fitness.mu_mode", f.mode == MutationMode::Flips ? "flips" : "probability");
    put("fitness.c_mode", f.c_mode == PopularityMode::Gate ? "gate" : "proportional");
    put("fitness.select_best", num(f.select_best));
    put("fitness.chains", std::to_string(f.chains));
    put("fitness.generations", std::to_string(f.generations));
    put("fitness.window", std::to_string(f.window));
    put("fitness.initial_density", num(f.initial_density));
    std::string labels;
    for (const auto& l : f.parameterizations) labels += (labels.empty() ? "" : ", ") + l;
    put("fitness.parameterizations", labels);
    put("analysis.max_lag", std::to_string(cfg.analysis.max_lag));
    put("analysis.permutations", std::to_string(cfg.analysis.permutations));
    put("analysis.bootstrap", std::to_string(cfg.analysis.bootstrap));
    return out;
}

} // namespace culmark
