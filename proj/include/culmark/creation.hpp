// Child-image generation under the 1..24 changed-pixel constraint.
#pragma once

#include "culmark/core.hpp"
#include "culmark/rng.hpp"

#include <array>
#include <map>
#include <span>
#include <string_view>

namespace culmark {

enum class EditKind { Disruption = 0, Addition = 1, PatternGrowth = 2, Removal = 3, Refinement = 4 };
inline constexpr std::array<EditKind, 5> kEditKinds{EditKind::Disruption, EditKind::Addition, EditKind::PatternGrowth,
                                                    EditKind::Removal, EditKind::Refinement};
std::string_view edit_kind_name(EditKind k);
/// Throws InvalidArgument for unknown labels.
EditKind parse_edit_kind(std::string_view name);

/// Size ranges for the edit operators (inclusive).
struct EditParams {
    int refine_min = 1, refine_max = 4;
    int growth_min = 4, growth_max = 12;
    int block_min = 2, block_max = 3; // side lengths of the added block
    int removal_min = 4, removal_max = 12;
    int removal_min_set = 5;          // removal needs at least this many set pixels
    int disrupt_min = 16, disrupt_max = 24;
};

struct EditStrategy {
    EditKind kind = EditKind::Refinement;
    EditParams params;
};

/// Probabilities over the five strategies, stored in kEditKinds order.
class StrategyProfile {
public:
    /// Normalizes; throws InvalidArgument on negative/non-finite entries or an all-zero profile.
    explicit StrategyProfile(const std::array<double, 5>& p);

    static StrategyProfile npi_default() { return StrategyProfile({0.20, 0.25, 0.20, 0.10, 0.25}); }
    static StrategyProfile pi_default() { return StrategyProfile({0.17, 0.25, 0.23, 0.085, 0.265}); }

    double probability(EditKind k) const { return p_[static_cast<std::size_t>(k)]; }
    const std::array<double, 5>& probabilities() const noexcept { return p_; }

private:
    std::array<double, 5> p_{};
};

struct EditResult {
    Image child;
    int changed_pixels = 0;
    EditKind applied = EditKind::Refinement; // operator that actually ran after fallbacks
};

/// Applies one editing operator; fallbacks guarantee 1..24 changed pixels for every parent.
///
///  - refinement: flip k in [1, 4] distinct pixels
///  - pattern_growth: set up to k in [4, 12] unset pixels, each 4-adjacent to a set pixel
///    at the time it is set (-> refinement when nothing is set or nothing can grow)
///  - addition: a new 2x2..3x3 block at Chebyshev distance >= 2 from every set pixel
///    (-> pattern_growth when no placement fits)
///  - removal: clear up to k in [4, 12] boundary pixels of one random 4-connected component
///    (-> refinement when fewer than 5 pixels are set or nothing is on a boundary)
///  - disruption: flip k in [16, 24] distinct pixels
EditResult apply_strategy(const Image& parent, const EditStrategy& strategy, Rng& rng);

EditStrategy sample_strategy(const StrategyProfile& profile, Rng& rng, const EditParams& params = {});

/// Set pixels with at least one unset 4-neighbour (grid edges do not count as unset).
std::vector<int> boundary_pixels(const Image& img);
/// 4-connected components of set pixels, each as a sorted list of flat indices.
std::vector<std::vector<int>> connected_components(const Image& img);

struct EditSizeSummary {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

/// Mean and standard error of hamming_count(child, parent) over every non-seed node, per condition.
std::map<Condition, EditSizeSummary> edit_size_stats(std::span<const Chain> chains);

} // namespace culmark
