// Images, chains, phylogeny, and the sliding market window.
#pragma once

#include <bitset>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace culmark {

inline constexpr int kImageSide = 16;
inline constexpr int kPixelCount = kImageSide * kImageSide;
inline constexpr int kDefaultWindow = 12;
inline constexpr int kMinEditPixels = 1;
inline constexpr int kMaxEditPixels = 24;

using NodeId = std::uint32_t;

/// 16x16 black/white pixel grid. Pixel (row, col) is bit row * 16 + col.
class Image {
public:
    Image() = default;

    bool get(int row, int col) const { return bits_[index(row, col)]; }
    void set(int row, int col, bool value = true) { bits_[index(row, col)] = value; }
    void flip(int row, int col) { bits_.flip(index(row, col)); }

    bool at(int flat) const { return bits_[static_cast<std::size_t>(flat)]; }
    void set_at(int flat, bool value) { bits_[static_cast<std::size_t>(flat)] = value; }
    void flip_at(int flat) { bits_.flip(static_cast<std::size_t>(flat)); }

    int count() const { return static_cast<int>(bits_.count()); }
    const std::bitset<kPixelCount>& bits() const { return bits_; }

    /// Row-major string of 256 '0'/'1' characters.
    std::string to_string() const;
    /// Inverse of to_string; throws InvalidArgument on bad length or characters.
    static Image from_string(std::string_view text);

    static Image filled(bool value);

    friend bool operator==(const Image&, const Image&) = default;

private:
    static std::size_t index(int row, int col);
    std::bitset<kPixelCount> bits_;
};

/// Number of pixels that differ between two images.
int hamming_count(const Image& a, const Image& b);

enum class Condition { PI, NPI };

std::string_view condition_name(Condition c);
/// Parses "PI" / "NPI"; throws InvalidArgument otherwise.
Condition parse_condition(std::string_view text);

struct ChainNode {
    NodeId id = 0;
    Image image;
    int generation = 0;
    std::optional<NodeId> parent;
    int selection_count = 0;
};

/// One isolated lineage. The node at position g has generation g.
class Chain {
public:
    Chain(int chain_id, int pair_id, Condition condition, std::uint64_t seed, NodeId seed_node_id, const Image& seed_image);

    /// Rebuilds a chain from stored nodes, checking every structural invariant.
    /// Throws InvalidArgument on any violation.
    static Chain from_nodes(int chain_id, int pair_id, Condition condition, std::uint64_t seed, std::vector<ChainNode> nodes);

    int chain_id() const noexcept { return chain_id_; }
    int pair_id() const noexcept { return pair_id_; }
    Condition condition() const noexcept { return condition_; }
    std::uint64_t seed() const noexcept { return seed_; }

    const std::vector<ChainNode>& nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    /// Generation of the newest node.
    int last_generation() const noexcept { return static_cast<int>(nodes_.size()) - 1; }

    /// Node with the given id, or nullptr.
    const ChainNode* find(NodeId id) const;
    /// Position of the node with the given id; throws InvalidArgument if absent.
    std::size_t position_of(NodeId id) const;

    /// Appends a child node. Validation is done by record_choice.
    const ChainNode& append(NodeId parent, const Image& image);

private:
    Chain() = default;

    int chain_id_ = 0;
    int pair_id_ = 0;
    Condition condition_ = Condition::PI;
    std::uint64_t seed_ = 0;
    std::vector<ChainNode> nodes_;
    bool contiguous_ids_ = true;
};

struct MarketEntry {
    NodeId id = 0;
    Image image;
    int generation = 0;
    std::optional<int> popularity; // empty when popularity is hidden
};

/// What the agent acting at `generation` sees: up to `window` most recent images, newest first.
struct MarketView {
    std::vector<MarketEntry> entries;
    int generation = 0;
    int window = kDefaultWindow;

    bool shows_popularity() const { return !entries.empty() && entries.front().popularity.has_value(); }
};

/// Nodes with generation in [max(0, g - T), g - 1], newest first. Popularity is the
/// number of children among generations before g, so past markets can be replayed.
/// Throws InvalidArgument if g == 0, g > chain size, or T < 1.
MarketView market_window(const Chain& chain, int g, int window, bool show_popularity);

/// Commits generation g: appends a child of `chosen` and bumps the parent's selection count.
/// The chosen node must be in market_window(chain, g, window) and g must be the next generation.
/// Throws ConstraintViolation when the edit changes fewer than 1 or more than 24 pixels.
const ChainNode& record_choice(Chain& chain, int g, NodeId chosen, const Image& new_image, int window = kDefaultWindow);

/// Number of edges on the tree path between two nodes.
int phylo_distance(const Chain& chain, NodeId a, NodeId b);

/// Newick string with labels n<id> and unit branch lengths, children ordered by id.
std::string to_newick(const Chain& chain);

} // namespace culmark
