#include "culmark/formats.hpp"

#include "culmark/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace culmark {

std::string format_double(double x)
{
    if (x == 0.0) return "0"; // also folds -0
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw InvariantViolation("format_double failed");
    return std::string(buf, ptr);
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    for (;;) {
        const std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(pos));
            return out;
        }
        out.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
}

/// Iterates the non-empty lines of a CSV text, checking the header first.
class CsvReader {
public:
    CsvReader(std::string_view text, std::string source, const std::vector<std::string>& header)
        : text_(text), source_(std::move(source))
    {
        std::string_view line;
        if (!next_line(line)) throw DataFormatError(source_, 0, "empty file (missing header)");
        const auto fields = split_fields(line);
        bool ok = fields.size() == header.size();
        for (std::size_t i = 0; ok && i < fields.size(); ++i) ok = fields[i] == header[i];
        if (!ok) fail("unexpected header");
        columns_ = header.size();
    }

    bool next(std::vector<std::string_view>& fields)
    {
        std::string_view line;
        if (!next_line(line)) return false;
        fields = split_fields(line);
        if (fields.size() != columns_)
            fail("expected " + std::to_string(columns_) + " fields, found " + std::to_string(fields.size()));
        return true;
    }

    std::size_t line() const { return line_; }
    [[noreturn]] void fail(const std::string& what) const { throw DataFormatError(source_, line_, what); }

    template <typename Int>
    Int integer(std::string_view field, const char* name) const
    {
        Int v{};
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
            fail(std::string(name) + ": expected an integer, got '" + std::string(field) + "'");
        return v;
    }

    double real(std::string_view field, const char* name) const
    {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
            fail(std::string(name) + ": expected a finite number, got '" + std::string(field) + "'");
        return v;
    }

private:
    bool next_line(std::string_view& line)
    {
        while (pos_ < text_.size()) {
            const std::size_t end = std::min(text_.find('\n', pos_), text_.size());
            line = text_.substr(pos_, end - pos_);
            pos_ = end + 1;
            ++line_;
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (!line.empty()) return true;
        }
        return false;
    }

    std::string_view text_;
    std::string source_;
    std::size_t pos_ = 0;
    std::size_t line_ = 0;
    std::size_t columns_ = 0;
};

std::string join_header(const std::vector<std::string>& cols)
{
    std::string out;
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
    return out + "\n";
}

const std::vector<std::string> kChainHeader{"chain_id", "pair_id", "condition", "generation", "node_id", "parent_id",
                                            "selection_count", "pixels"};
const std::vector<std::string> kEditHeader{"chain_id", "parent_id", "child_id", "strategy", "changed_pixel_count"};
const std::array<const char*, 4> kRatingPrefixes{"r_appeal_", "r_edit_", "r_orig_", "r_recog_"};

std::vector<std::string> choice_header()
{
    std::vector<std::string> h{"record_id", "condition", "chosen_index"};
    for (int i = 0; i < kChoiceSlots; ++i) h.push_back("popularity_" + std::to_string(i));
    for (const char* p : kRatingPrefixes)
        for (int i = 0; i < kChoiceSlots; ++i) h.push_back(p + std::to_string(i));
    return h;
}

} // namespace

std::string write_chains_csv(std::span<const Chain> chains)
{
    std::string out = join_header(kChainHeader);
    for (const Chain& c : chains) {
        for (const ChainNode& n : c.nodes()) {
            out += std::to_string(c.chain_id()) + ',' + std::to_string(c.pair_id()) + ',' +
                   std::string(condition_name(c.condition())) + ',' + std::to_string(n.generation) + ',' +
                   std::to_string(n.id) + ',' + (n.parent ? std::to_string(*n.parent) : std::string()) + ',' +
                   std::to_string(n.selection_count) + ',' + n.image.to_string() + '\n';
        }
    }
    return out;
}

std::vector<Chain> read_chains_csv(std::string_view text, const std::string& source)
{
    struct Pending {
        int pair_id;
        Condition condition;
        std::size_t first_line;
        std::vector<ChainNode> nodes;
    };
    std::map<int, Pending> pending;
    CsvReader csv(text, source, kChainHeader);
    std::vector<std::string_view> f;
    while (csv.next(f)) {
        const int chain_id = csv.integer<int>(f[0], "chain_id");
        const int pair_id = csv.integer<int>(f[1], "pair_id");
        Condition cond;
        try {
            cond = parse_condition(f[2]);
        } catch (const InvalidArgument& e) {
            csv.fail(e.what());
        }
        ChainNode node;
        node.generation = csv.integer<int>(f[3], "generation");
        node.id = csv.integer<NodeId>(f[4], "node_id");
        if (!f[5].empty()) node.parent = csv.integer<NodeId>(f[5], "parent_id");
        node.selection_count = csv.integer<int>(f[6], "selection_count");
        try {
            node.image = Image::from_string(f[7]);
        } catch (const InvalidArgument& e) {
            csv.fail(e.what());
        }
        auto [it, fresh] = pending.try_emplace(chain_id, Pending{pair_id, cond, csv.line(), {}});
        if (it->second.pair_id != pair_id || it->second.condition != cond)
            csv.fail("chain " + std::to_string(chain_id) + " changes pair_id or condition");
        it->second.nodes.push_back(std::move(node));
    }

    std::vector<Chain> chains;
    for (auto& [chain_id, p] : pending) {
        std::sort(p.nodes.begin(), p.nodes.end(), [](const ChainNode& a, const ChainNode& b) { return a.generation < b.generation; });
        try {
            chains.push_back(Chain::from_nodes(chain_id, p.pair_id, p.condition, 0, std::move(p.nodes)));
        } catch (const InvalidArgument& e) {
            throw DataFormatError(source, p.first_line, e.what());
        }
    }
    return chains;
}

std::string write_newick(std::span<const Chain> chains)
{
    std::string out;
    for (const Chain& c : chains) out += to_newick(c) + '\n';
    return out;
}

std::string write_edits_csv(std::span<const EditRecord> edits)
{
    std::string out = join_header(kEditHeader);
    for (const EditRecord& e : edits)
        out += std::to_string(e.chain_id) + ',' + std::to_string(e.parent) + ',' + std::to_string(e.child) + ',' +
               std::string(edit_kind_name(e.strategy)) + ',' + std::to_string(e.changed_pixels) + '\n';
    return out;
}

std::vector<EditRecord> read_edits_csv(std::string_view text, const std::string& source)
{
    CsvReader csv(text, source, kEditHeader);
    std::vector<EditRecord> out;
    std::vector<std::string_view> f;
    while (csv.next(f)) {
        EditRecord e;
        e.chain_id = csv.integer<int>(f[0], "chain_id");
        e.parent = csv.integer<NodeId>(f[1], "parent_id");
        e.child = csv.integer<NodeId>(f[2], "child_id");
        try {
            e.strategy = parse_edit_kind(f[3]);
        } catch (const InvalidArgument& err) {
            csv.fail(err.what());
        }
        e.changed_pixels = csv.integer<int>(f[4], "changed_pixel_count");
        out.push_back(e);
    }
    return out;
}

std::string write_choices_csv(std::span<const ChoiceRecord> records)
{
    std::string out = join_header(choice_header());
    for (const ChoiceRecord& r : records) {
        if (r.slots.size() > static_cast<std::size_t>(kChoiceSlots))
            throw InvalidArgument("choice record " + std::to_string(r.id) + " has more than 12 slots");
        out += std::to_string(r.id) + ',' + std::string(condition_name(r.condition)) + ',' + std::to_string(r.chosen);
        for (int i = 0; i < kChoiceSlots; ++i) {
            out += ',';
            const auto idx = static_cast<std::size_t>(i);
            if (idx < r.slots.size() && r.slots[idx].popularity) out += std::to_string(*r.slots[idx].popularity);
        }
        for (std::size_t c = 0; c < 4; ++c) {
            for (int i = 0; i < kChoiceSlots; ++i) {
                out += ',';
                const auto idx = static_cast<std::size_t>(i);
                if (idx < r.slots.size()) out += format_double(r.slots[idx].ratings[c]);
            }
        }
        out += '\n';
    }
    return out;
}

ChoiceData read_choices_csv(std::string_view text, const std::string& source)
{
    const auto header = choice_header();
    CsvReader csv(text, source, header);
    ChoiceData data;
    std::array<double, 4> ss{};
    std::array<double, 4> dof{};
    std::vector<std::string_view> f;
    while (csv.next(f)) {
        ChoiceRecord r;
        r.id = csv.integer<std::uint64_t>(f[0], "record_id");
        try {
            r.condition = parse_condition(f[1]);
        } catch (const InvalidArgument& e) {
            csv.fail(e.what());
        }
        const auto chosen_column = csv.integer<std::size_t>(f[2], "chosen_index");
        if (chosen_column >= static_cast<std::size_t>(kChoiceSlots)) csv.fail("chosen_index outside the market");
        bool chosen_present = false;
        for (int i = 0; i < kChoiceSlots; ++i) {
            const auto col = [&](std::size_t c) { return f[3 + kChoiceSlots * (c + 1) + static_cast<std::size_t>(i)]; };
            const bool any_rating = !col(0).empty() || !col(1).empty() || !col(2).empty() || !col(3).empty();
            const std::string_view pop = f[3 + static_cast<std::size_t>(i)];
            if (!any_rating) {
                if (!pop.empty()) csv.fail("slot " + std::to_string(i) + " has popularity but no ratings");
                continue;
            }
            MarketSlot slot;
            if (!pop.empty()) slot.popularity = csv.integer<int>(pop, "popularity");
            for (std::size_t c = 0; c < 4; ++c) {
                const std::string_view cell = col(c);
                if (cell.empty()) csv.fail("slot " + std::to_string(i) + " is missing a rating");
                std::vector<double> reps;
                std::size_t pos = 0;
                for (;;) {
                    const std::size_t semi = cell.find(';', pos);
                    reps.push_back(csv.real(cell.substr(pos, semi == std::string_view::npos ? std::string_view::npos : semi - pos), "rating"));
                    if (semi == std::string_view::npos) break;
                    pos = semi + 1;
                }
                double mean = 0.0;
                for (const double x : reps) mean += x;
                mean /= static_cast<double>(reps.size());
                for (const double x : reps) ss[c] += (x - mean) * (x - mean);
                dof[c] += static_cast<double>(reps.size() - 1);
                slot.ratings[c] = mean;
            }
            if (static_cast<std::size_t>(i) == chosen_column) {
                r.chosen = r.slots.size();
                chosen_present = true;
            }
            r.slots.push_back(slot);
        }
        if (!chosen_present) csv.fail("chosen slot is empty");
        if (r.condition == Condition::PI)
            for (const auto& s : r.slots)
                if (!s.popularity) csv.fail("PI record with hidden popularity");
        data.records.push_back(std::move(r));
    }
    for (std::size_t c = 0; c < 4; ++c)
        if (dof[c] > 0.0) data.rating_sd[c] = std::sqrt(ss[c] / dof[c]);
    return data;
}

std::string write_metrics_csv(std::span<const MetricSeries> series)
{
    std::string out = "condition,metric,index,value,se,n\n";
    for (const MetricSeries& s : series)
        for (const MetricPoint& p : s.points)
            out += s.condition + ',' + s.metric + ',' + format_double(p.index) + ',' + format_double(p.value) + ',' +
                   format_double(p.se) + ',' + std::to_string(p.n) + '\n';
    return out;
}

EmbeddingTable read_embeddings_csv(std::string_view text, const std::string& source)
{
    // Header is image_id,v0..v{D-1}; D comes from the header itself.
    const std::size_t eol = std::min(text.find('\n'), text.size());
    std::string_view first = text.substr(0, eol);
    if (!first.empty() && first.back() == '\r') first.remove_suffix(1);
    const auto cols = split_fields(first);
    if (cols.size() < 2 || cols[0] != "image_id") throw DataFormatError(source, 1, "expected header image_id,v0,...");
    std::vector<std::string> header{"image_id"};
    for (std::size_t d = 0; d + 1 < cols.size(); ++d) header.push_back("v" + std::to_string(d));

    CsvReader csv(text, source, header);
    EmbeddingTable table(source);
    std::vector<std::string_view> f;
    while (csv.next(f)) {
        const auto id = csv.integer<NodeId>(f[0], "image_id");
        std::vector<double> v;
        for (std::size_t d = 1; d < f.size(); ++d) v.push_back(csv.real(f[d], "value"));
        try {
            table.add(id, std::move(v));
        } catch (const InvalidArgument& e) {
            csv.fail(e.what());
        }
    }
    return table;
}

std::string write_embeddings_csv(const EmbeddingTable& table, std::span<const NodeId> order)
{
    std::string out = "image_id";
    for (std::size_t d = 0; d < table.dim(); ++d) out += ",v" + std::to_string(d);
    out += '\n';
    for (const NodeId id : order) {
        out += std::to_string(id);
        for (const double x : table.at(id)) out += ',' + format_double(x);
        out += '\n';
    }
    return out;
}

std::string write_fitness_csv(std::span<const FitnessSeries> series)
{
    std::string out = "parameterization,generation,mean_fitness,se_fitness,mean_delta,se_delta\n";
    for (const FitnessSeries& s : series)
        for (const FitnessPoint& p : s.points)
            out += s.label + ',' + std::to_string(p.generation) + ',' + format_double(p.mean_fitness) + ',' +
                   format_double(p.se_fitness) + ',' + format_double(p.mean_delta) + ',' + format_double(p.se_delta) + '\n';
    return out;
}

std::string write_fit_csv(const FitResult& fit)
{
    std::string out = "condition,parameter,value,se,records\n";
    for (const ConditionFit& cf : fit.conditions) {
        const std::string cond(condition_name(cf.condition));
        for (std::size_t z = 0; z < 4; ++z)
            out += cond + ",w_" + std::string(policy_name(kPolicies[z])) + ',' + format_double(cf.mixture.weights()[z]) + ',' +
                   format_double(cf.se[z]) + ',' + std::to_string(cf.records) + '\n';
        for (std::size_t c = 0; c < 4; ++c)
            out += cond + ",beta_" + std::string(kCriteria[c]) + ',' + format_double(cf.beta[c]) + ",," +
                   std::to_string(cf.records) + '\n';
    }
    return out;
}

std::string format_fit_summary(const FitResult& fit, const std::array<std::optional<double>, 4>& rating_sd)
{
    std::string out = "policy mixture fit (EM, maximum likelihood)\n";
    char buf[256];
    std::snprintf(buf, sizeof buf, "log-likelihood %.6f after %d iterations (last change %.3g, %s, best start %d)\n",
                  fit.log_likelihood, fit.iterations, fit.final_delta, fit.converged ? "converged" : "max iterations",
                  fit.best_start);
    out += buf;
    for (const ConditionFit& cf : fit.conditions) {
        std::snprintf(buf, sizeof buf, "%s (%zu records)\n", std::string(condition_name(cf.condition)).c_str(), cf.records);
        out += buf;
        for (std::size_t z = 0; z < 4; ++z) {
            std::snprintf(buf, sizeof buf, "  %-14s %.4f +- %.4f\n", std::string(policy_name(kPolicies[z])).c_str(),
                          cf.mixture.weights()[z], cf.se[z]);
            out += buf;
        }
        out += "  beta";
        for (std::size_t c = 0; c < 4; ++c) {
            std::snprintf(buf, sizeof buf, " %s=%.4f", std::string(kCriteria[c]).c_str(), cf.beta[c]);
            out += buf;
        }
        out += '\n';
    }
    bool any_sd = false;
    for (const auto& sd : rating_sd) any_sd = any_sd || sd.has_value();
    if (any_sd) {
        out += "rating noise (pooled replicate sd):";
        for (std::size_t c = 0; c < 4; ++c) {
            if (rating_sd[c]) std::snprintf(buf, sizeof buf, " %s=%.4f", std::string(kCriteria[c]).c_str(), *rating_sd[c]);
            else std::snprintf(buf, sizeof buf, " %s=n/a", std::string(kCriteria[c]).c_str());
            out += buf;
        }
        out += '\n';
    }
    return out;
}

std::string write_image_pbm(const Image& img)
{
    std::string out = "P1\n16 16\n";
    for (int r = 0; r < kImageSide; ++r) {
        for (int c = 0; c < kImageSide; ++c) out += img.get(r, c) ? '1' : '0';
        out += '\n';
    }
    return out;
}

Image read_image_pbm(std::string_view text)
{
    std::string cleaned;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '#') {
            while (i < text.size() && text[i] != '\n') ++i;
            cleaned += '\n';
            continue;
        }
        cleaned += text[i];
    }
    std::istringstream in(cleaned);
    std::string magic;
    int w = 0, h = 0;
    if (!(in >> magic) || magic != "P1") throw DataFormatError("pbm", 0, "missing P1 magic number");
    if (!(in >> w >> h) || w != kImageSide || h != kImageSide) throw DataFormatError("pbm", 0, "expected a 16x16 bitmap");
    Image img;
    int count = 0;
    char ch;
    while (in >> ch) {
        if (ch != '0' && ch != '1') throw DataFormatError("pbm", 0, std::string("unexpected character '") + ch + "'");
        if (count >= kPixelCount) throw DataFormatError("pbm", 0, "too many pixels");
        img.set_at(count++, ch == '1');
    }
    if (count != kPixelCount) throw DataFormatError("pbm", 0, "expected 256 pixels, found " + std::to_string(count));
    return img;
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataFormatError(path.string(), 0, "cannot open file");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

} // namespace culmark
