#include "culmark/core.hpp"

#include "culmark/errors.hpp"

#include <algorithm>
#include <map>

namespace culmark {

std::size_t Image::index(int row, int col)
{
    if (row < 0 || row >= kImageSide || col < 0 || col >= kImageSide)
        throw InvalidArgument("pixel (" + std::to_string(row) + ", " + std::to_string(col) + ") outside 16x16 grid");
    return static_cast<std::size_t>(row * kImageSide + col);
}

std::string Image::to_string() const
{
    std::string out(kPixelCount, '0');
    for (int i = 0; i < kPixelCount; ++i)
        if (bits_[static_cast<std::size_t>(i)]) out[static_cast<std::size_t>(i)] = '1';
    return out;
}

Image Image::from_string(std::string_view text)
{
    if (text.size() != kPixelCount)
        throw InvalidArgument("pixel string must have 256 characters, got " + std::to_string(text.size()));
    Image img;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '1') img.bits_.set(i);
        else if (text[i] != '0') throw InvalidArgument("pixel string may contain only '0' and '1'");
    }
    return img;
}

Image Image::filled(bool value)
{
    Image img;
    if (value) img.bits_.set();
    return img;
}

int hamming_count(const Image& a, const Image& b)
{
    return static_cast<int>((a.bits() ^ b.bits()).count());
}

std::string_view condition_name(Condition c)
{
    return c == Condition::PI ? "PI" : "NPI";
}

Condition parse_condition(std::string_view text)
{
    if (text == "PI") return Condition::PI;
    if (text == "NPI") return Condition::NPI;
    throw InvalidArgument("unknown condition '" + std::string(text) + "' (expected PI or NPI)");
}

Chain::Chain(int chain_id, int pair_id, Condition condition, std::uint64_t seed, NodeId seed_node_id, const Image& seed_image)
    : chain_id_(chain_id), pair_id_(pair_id), condition_(condition), seed_(seed)
{
    nodes_.push_back(ChainNode{seed_node_id, seed_image, 0, std::nullopt, 0});
}

Chain Chain::from_nodes(int chain_id, int pair_id, Condition condition, std::uint64_t seed, std::vector<ChainNode> nodes)
{
    if (nodes.empty()) throw InvalidArgument("chain " + std::to_string(chain_id) + " has no nodes");
    Chain chain;
    chain.chain_id_ = chain_id;
    chain.pair_id_ = pair_id;
    chain.condition_ = condition;
    chain.seed_ = seed;

    const auto where = [&](std::size_t g) { return "chain " + std::to_string(chain_id) + " generation " + std::to_string(g) + ": "; };
    std::map<NodeId, std::size_t> position;
    for (std::size_t g = 0; g < nodes.size(); ++g) {
        const ChainNode& n = nodes[g];
        if (n.generation != static_cast<int>(g)) throw InvalidArgument(where(g) + "node generation mismatch");
        if (!position.emplace(n.id, g).second) throw InvalidArgument(where(g) + "duplicate node id " + std::to_string(n.id));
        if (n.selection_count < 0) throw InvalidArgument(where(g) + "negative selection count");
        if (g == 0) {
            if (n.parent) throw InvalidArgument(where(g) + "seed node must not have a parent");
        } else {
            if (!n.parent) throw InvalidArgument(where(g) + "missing parent");
            auto it = position.find(*n.parent);
            if (it == position.end() || it->second >= g)
                throw InvalidArgument(where(g) + "parent " + std::to_string(*n.parent) + " is not an earlier node of this chain");
        }
        if (n.id != nodes[0].id + g) chain.contiguous_ids_ = false;
    }
    std::vector<int> children(nodes.size(), 0);
    for (const ChainNode& n : nodes)
        if (n.parent) ++children[position.at(*n.parent)];
    for (std::size_t g = 0; g < nodes.size(); ++g)
        if (children[g] != nodes[g].selection_count)
            throw InvalidArgument(where(g) + "selection count " + std::to_string(nodes[g].selection_count) +
                                  " does not match " + std::to_string(children[g]) + " children");
    chain.nodes_ = std::move(nodes);
    return chain;
}

const ChainNode* Chain::find(NodeId id) const
{
    if (contiguous_ids_) {
        if (id < nodes_.front().id) return nullptr;
        const std::size_t pos = id - nodes_.front().id;
        return pos < nodes_.size() ? &nodes_[pos] : nullptr;
    }
    for (const ChainNode& n : nodes_)
        if (n.id == id) return &n;
    return nullptr;
}

std::size_t Chain::position_of(NodeId id) const
{
    const ChainNode* n = find(id);
    if (!n) throw InvalidArgument("node " + std::to_string(id) + " is not in chain " + std::to_string(chain_id_));
    return static_cast<std::size_t>(n->generation);
}

const ChainNode& Chain::append(NodeId parent, const Image& image)
{
    const std::size_t parent_pos = position_of(parent);
    NodeId id = nodes_.back().id + 1;
    if (!contiguous_ids_) {
        for (const ChainNode& n : nodes_) id = std::max(id, n.id + 1);
    }
    ++nodes_[parent_pos].selection_count;
    nodes_.push_back(ChainNode{id, image, static_cast<int>(nodes_.size()), parent, 0});
    return nodes_.back();
}

MarketView market_window(const Chain& chain, int g, int window, bool show_popularity)
{
    if (g < 1) throw InvalidArgument("market_window: no market exists at generation " + std::to_string(g));
    if (window < 1) throw InvalidArgument("market_window: window must be at least 1");
    if (static_cast<std::size_t>(g) > chain.size())
        throw InvalidArgument("market_window: generation " + std::to_string(g) + " is beyond the chain");
    MarketView view;
    view.generation = g;
    view.window = window;
    const int oldest = std::max(0, g - window);
    // Popularity as it stood when generation g was built: later children do not count.
    std::vector<int> popularity;
    if (show_popularity) {
        popularity.assign(static_cast<std::size_t>(g - oldest), 0);
        for (int gen = oldest + 1; gen < g; ++gen) {
            const ChainNode& n = chain.nodes()[static_cast<std::size_t>(gen)];
            if (!n.parent) continue;
            const ChainNode* p = chain.find(*n.parent);
            if (p && p->generation >= oldest) ++popularity[static_cast<std::size_t>(p->generation - oldest)];
        }
    }
    for (int gen = g - 1; gen >= oldest; --gen) {
        const ChainNode& n = chain.nodes()[static_cast<std::size_t>(gen)];
        MarketEntry e{n.id, n.image, n.generation, std::nullopt};
        if (show_popularity) e.popularity = popularity[static_cast<std::size_t>(gen - oldest)];
        view.entries.push_back(std::move(e));
    }
    return view;
}

const ChainNode& record_choice(Chain& chain, int g, NodeId chosen, const Image& new_image, int window)
{
    if (g != static_cast<int>(chain.size()))
        throw InvalidArgument("record_choice: generation " + std::to_string(g) + " is not the next generation (" +
                              std::to_string(chain.size()) + ")");
    const ChainNode* parent = chain.find(chosen);
    const int oldest = std::max(0, g - window);
    if (!parent || parent->generation < oldest || parent->generation > g - 1)
        throw InvalidArgument("record_choice: node " + std::to_string(chosen) + " is not in the market at generation " +
                              std::to_string(g));
    const int changed = hamming_count(parent->image, new_image);
    if (changed < kMinEditPixels || changed > kMaxEditPixels)
        throw ConstraintViolation("record_choice: edit changes " + std::to_string(changed) +
                                  " pixels, allowed range is [1, 24]");
    return chain.append(chosen, new_image);
}

int phylo_distance(const Chain& chain, NodeId a, NodeId b)
{
    const ChainNode* na = chain.find(a);
    const ChainNode* nb = chain.find(b);
    if (!na) throw InvalidArgument("phylo_distance: unknown node " + std::to_string(a));
    if (!nb) throw InvalidArgument("phylo_distance: unknown node " + std::to_string(b));

    // Parents are strictly older, so repeatedly lifting the younger node meets at the LCA.
    int steps = 0;
    while (na != nb) {
        if (na->generation >= nb->generation) na = chain.find(*na->parent);
        else nb = chain.find(*nb->parent);
        ++steps;
    }
    return steps;
}

namespace {

void newick_subtree(const Chain& chain, std::size_t pos, const std::vector<std::vector<std::size_t>>& children, std::string& out)
{
    const auto& kids = children[pos];
    if (!kids.empty()) {
        out += '(';
        for (std::size_t i = 0; i < kids.size(); ++i) {
            if (i) out += ',';
            newick_subtree(chain, kids[i], children, out);
            out += ":1";
        }
        out += ')';
    }
    out += 'n';
    out += std::to_string(chain.nodes()[pos].id);
}

} // namespace

std::string to_newick(const Chain& chain)
{
    const auto& nodes = chain.nodes();
    std::vector<std::vector<std::size_t>> children(nodes.size());
    for (std::size_t i = 1; i < nodes.size(); ++i) children[chain.position_of(*nodes[i].parent)].push_back(i);
    for (auto& kids : children)
        std::sort(kids.begin(), kids.end(), [&](std::size_t x, std::size_t y) { return nodes[x].id < nodes[y].id; });
    std::string out;
    newick_subtree(chain, 0, children, out);
    out += ';';
    return out;
}

} // namespace culmark
