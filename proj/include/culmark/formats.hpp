// CSV, Newick, PBM readers and writers. All writers are deterministic:
// LF line endings and shortest round-trip decimal formatting.
#pragma once

#include "culmark/core.hpp"
#include "culmark/creation.hpp"
#include "culmark/fitness_model.hpp"
#include "culmark/inference.hpp"
#include "culmark/metrics.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace culmark {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

// Chains: chain_id,pair_id,condition,generation,node_id,parent_id,selection_count,pixels
std::string write_chains_csv(std::span<const Chain> chains);
/// Throws DataFormatError naming the offending line.
std::vector<Chain> read_chains_csv(std::string_view text, const std::string& source = "chains.csv");

/// One Newick tree per line, in chain order.
std::string write_newick(std::span<const Chain> chains);

struct EditRecord {
    int chain_id = 0;
    NodeId parent = 0;
    NodeId child = 0;
    EditKind strategy = EditKind::Refinement;
    int changed_pixels = 0;
};

// Edits: chain_id,parent_id,child_id,strategy,changed_pixel_count
std::string write_edits_csv(std::span<const EditRecord> edits);
std::vector<EditRecord> read_edits_csv(std::string_view text, const std::string& source = "edits.csv");

inline constexpr int kChoiceSlots = 12;

struct ChoiceData {
    std::vector<ChoiceRecord> records;
    /// Pooled within-cell standard deviation of replicate ratings per criterion,
    /// empty when no cell had more than one rating.
    std::array<std::optional<double>, 4> rating_sd;
};

// Choices: record_id,condition,chosen_index,popularity_0..11,r_appeal_0..11,r_edit_0..11,r_orig_0..11,r_recog_0..11
// Rating cells may hold ';'-separated replicates (averaged). A slot is absent when its ratings are blank.
std::string write_choices_csv(std::span<const ChoiceRecord> records);
ChoiceData read_choices_csv(std::string_view text, const std::string& source = "choices.csv");

// Metrics: condition,metric,index,value,se,n
std::string write_metrics_csv(std::span<const MetricSeries> series);

// Embeddings: image_id,v0..v{D-1}
EmbeddingTable read_embeddings_csv(std::string_view text, const std::string& source = "embeddings.csv");
std::string write_embeddings_csv(const EmbeddingTable& table, std::span<const NodeId> order);

// Fitness model: parameterization,generation,mean_fitness,se_fitness,mean_delta,se_delta
std::string write_fitness_csv(std::span<const FitnessSeries> series);

// Fit: condition,policy,weight,se,records + beta rows (condition,beta_<criterion>,value,,records)
std::string write_fit_csv(const FitResult& fit);
std::string format_fit_summary(const FitResult& fit, const std::array<std::optional<double>, 4>& rating_sd = {});

/// Plain PBM: "P1", "16 16", then 16 rows of 16 digits.
std::string write_image_pbm(const Image& img);
/// Accepts any whitespace layout and '#' comments. Throws DataFormatError.
Image read_image_pbm(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

} // namespace culmark
