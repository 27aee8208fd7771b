#include <doctest.h>

#include "culmark/core.hpp"
#include "culmark/errors.hpp"
#include "culmark/rng.hpp"

#include <map>
#include <queue>

using namespace culmark;

namespace {

Image with_pixel(Image img, int flat)
{
    img.flip_at(flat);
    return img;
}

/// Chain of `generations` random commits: each picks a uniform parent in the window and flips one pixel.
Chain random_chain(int generations, std::uint64_t seed, int window = kDefaultWindow)
{
    Rng rng(seed);
    Chain chain(0, 0, Condition::PI, seed, 0, Image{});
    for (int g = 1; g <= generations; ++g) {
        const MarketView view = market_window(chain, g, window, true);
        const NodeId parent = view.entries[rng.below(view.entries.size())].id;
        const Image child = with_pixel(chain.find(parent)->image, static_cast<int>(rng.below(kPixelCount)));
        record_choice(chain, g, parent, child, window);
    }
    return chain;
}

/// Breadth-first search over the undirected tree.
int bfs_distance(const Chain& chain, NodeId a, NodeId b)
{
    std::map<NodeId, std::vector<NodeId>> adj;
    for (const auto& n : chain.nodes())
        if (n.parent) {
            adj[n.id].push_back(*n.parent);
            adj[*n.parent].push_back(n.id);
        }
    std::map<NodeId, int> dist{{a, 0}};
    std::queue<NodeId> q;
    q.push(a);
    while (!q.empty()) {
        const NodeId x = q.front();
        q.pop();
        for (const NodeId y : adj[x])
            if (!dist.count(y)) {
                dist[y] = dist[x] + 1;
                q.push(y);
            }
    }
    return dist.at(b);
}

} // namespace

TEST_CASE("image string round trip and hamming count")
{
    Image img;
    img.set(0, 0);
    img.set(15, 15);
    const Image back = Image::from_string(img.to_string());
    CHECK(back == img);
    CHECK(img.to_string().size() == 256);
    CHECK(img.to_string().front() == '1');
    CHECK(hamming_count(img, Image{}) == 2);
    CHECK(hamming_count(Image::filled(true), Image{}) == 256);
    CHECK_THROWS_AS(Image::from_string("0101"), InvalidArgument);
    CHECK_THROWS_AS(Image::from_string(std::string(255, '0') + "2"), InvalidArgument);
}

TEST_CASE("market window on a seed-only chain")
{
    Chain chain(0, 0, Condition::PI, 1, 0, Image{});
    const MarketView v = market_window(chain, 1, 12, true);
    REQUIRE(v.entries.size() == 1);
    CHECK(v.entries[0].id == 0);
    CHECK(v.entries[0].popularity == 0);
    CHECK_FALSE(market_window(chain, 1, 12, false).entries[0].popularity.has_value());
    CHECK_THROWS_AS(market_window(chain, 0, 12, true), InvalidArgument);
    CHECK_THROWS_AS(market_window(chain, 2, 12, true), InvalidArgument);
    CHECK_THROWS_AS(market_window(chain, 1, 0, true), InvalidArgument);
}

TEST_CASE("market window bounds on a 61-node chain")
{
    const Chain chain = random_chain(60, 11);
    REQUIRE(chain.size() == 61);

    const MarketView late = market_window(chain, 13, 12, true);
    REQUIRE(late.entries.size() == 12);
    std::vector<int> gens;
    for (const auto& e : late.entries) gens.push_back(e.generation);
    CHECK(*std::min_element(gens.begin(), gens.end()) == 1);
    CHECK(*std::max_element(gens.begin(), gens.end()) == 12);

    const MarketView early = market_window(chain, 5, 12, true);
    REQUIRE(early.entries.size() == 5);
    for (const auto& e : early.entries) CHECK(e.generation <= 4);
}

TEST_CASE("market window property over random chains")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const int window = 1 + static_cast<int>(seed % 12);
        const Chain chain = random_chain(30, seed, window);
        for (int g = 1; g <= 31; ++g) {
            const MarketView v = market_window(chain, g, window, seed % 2 == 0);
            CHECK(v.entries.size() >= 1);
            CHECK(v.entries.size() <= static_cast<std::size_t>(window));
            for (const auto& e : v.entries) {
                CHECK(e.generation < g);
                CHECK(e.generation >= std::max(0, g - window));
                CHECK(e.popularity.has_value() == (seed % 2 == 0));
            }
        }
    }
}

TEST_CASE("popularity counts only choices made so far")
{
    const Chain chain = random_chain(20, 5);
    const MarketView v = market_window(chain, 10, 12, true);
    for (const auto& e : v.entries) {
        int expected = 0;
        for (const auto& n : chain.nodes())
            if (n.generation < 10 && n.parent == e.id) ++expected;
        CHECK(*e.popularity == expected);
    }
}

TEST_CASE("record_choice enforces the edit bound")
{
    Chain chain(0, 0, Condition::NPI, 1, 0, Image{});
    CHECK_THROWS_AS(record_choice(chain, 1, 0, Image{}), ConstraintViolation);
    Image big;
    for (int i = 0; i < 25; ++i) big.set_at(i, true);
    CHECK_THROWS_AS(record_choice(chain, 1, 0, big), ConstraintViolation);
    CHECK(chain.size() == 1);
    CHECK(chain.nodes()[0].selection_count == 0);

    Image legal24;
    for (int i = 0; i < 24; ++i) legal24.set_at(i, true);
    const ChainNode& child = record_choice(chain, 1, 0, with_pixel(Image{}, 3));
    CHECK(child.parent == NodeId{0});
    CHECK(child.generation == 1);
    CHECK(chain.nodes()[0].selection_count == 1);
    record_choice(chain, 2, 0, legal24);
    CHECK(chain.nodes()[0].selection_count == 2);
}

TEST_CASE("record_choice rejects parents outside the window and out-of-order generations")
{
    Chain chain = random_chain(5, 3, 2);
    CHECK_THROWS_AS(record_choice(chain, 6, 0, with_pixel(chain.nodes()[0].image, 0), 2), InvalidArgument);
    CHECK_THROWS_AS(record_choice(chain, 8, 5, with_pixel(chain.nodes()[5].image, 0), 2), InvalidArgument);
    CHECK_THROWS_AS(record_choice(chain, 6, 999, Image{}, 2), InvalidArgument);
}

TEST_CASE("selection counts sum to the number of committed generations")
{
    const Chain chain = random_chain(60, 17);
    int total = 0;
    for (const auto& n : chain.nodes()) {
        total += n.selection_count;
        int children = 0;
        for (const auto& m : chain.nodes()) children += m.parent == n.id;
        CHECK(children == n.selection_count);
    }
    CHECK(total == 60);
}

TEST_CASE("phylo distance small cases")
{
    Chain chain(0, 0, Condition::PI, 1, 0, Image{});
    record_choice(chain, 1, 0, with_pixel(Image{}, 1));
    record_choice(chain, 2, 0, with_pixel(Image{}, 2));
    record_choice(chain, 3, 1, with_pixel(with_pixel(Image{}, 1), 3));
    CHECK(phylo_distance(chain, 1, 1) == 0);
    CHECK(phylo_distance(chain, 0, 1) == 1);
    CHECK(phylo_distance(chain, 1, 2) == 2);
    CHECK(phylo_distance(chain, 3, 2) == 3);
    CHECK_THROWS_AS(phylo_distance(chain, 0, 77), InvalidArgument);
}

TEST_CASE("phylo distance is a tree metric matching breadth-first search")
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Chain chain = random_chain(9, seed, 4);
        for (const auto& a : chain.nodes())
            for (const auto& b : chain.nodes()) {
                const int d = phylo_distance(chain, a.id, b.id);
                CHECK(d == bfs_distance(chain, a.id, b.id));
                CHECK(d == phylo_distance(chain, b.id, a.id));
                CHECK((d == 0) == (a.id == b.id));
                for (const auto& c : chain.nodes())
                    CHECK(d <= phylo_distance(chain, a.id, c.id) + phylo_distance(chain, c.id, b.id));
            }
    }
}

TEST_CASE("newick export")
{
    Chain chain(0, 0, Condition::PI, 1, 0, Image{});
    record_choice(chain, 1, 0, with_pixel(Image{}, 1));
    record_choice(chain, 2, 1, with_pixel(with_pixel(Image{}, 1), 2));
    record_choice(chain, 3, 0, with_pixel(Image{}, 3));
    CHECK(to_newick(chain) == "((n2:1)n1:1,n3:1)n0;");
    Chain seed_only(0, 0, Condition::PI, 1, 5, Image{});
    CHECK(to_newick(seed_only) == "n5;");
}

TEST_CASE("from_nodes validates structure")
{
    const Chain chain = random_chain(6, 2);
    std::vector<ChainNode> nodes = chain.nodes();
    CHECK(Chain::from_nodes(0, 0, Condition::PI, 0, nodes).size() == 7);

    auto bad_count = nodes;
    bad_count[0].selection_count += 1;
    CHECK_THROWS_AS(Chain::from_nodes(0, 0, Condition::PI, 0, bad_count), InvalidArgument);

    auto bad_parent = nodes;
    bad_parent[3].parent = 5;
    CHECK_THROWS_AS(Chain::from_nodes(0, 0, Condition::PI, 0, bad_parent), InvalidArgument);

    auto bad_generation = nodes;
    bad_generation[2].generation = 4;
    CHECK_THROWS_AS(Chain::from_nodes(0, 0, Condition::PI, 0, bad_generation), InvalidArgument);

    auto seed_parent = nodes;
    seed_parent[0].parent = 1;
    CHECK_THROWS_AS(Chain::from_nodes(0, 0, Condition::PI, 0, seed_parent), InvalidArgument);

    auto duplicate = nodes;
    duplicate[4].id = duplicate[2].id;
    CHECK_THROWS_AS(Chain::from_nodes(0, 0, Condition::PI, 0, duplicate), InvalidArgument);
}

TEST_CASE("condition names round trip")
{
    CHECK(parse_condition(condition_name(Condition::PI)) == Condition::PI);
    CHECK(parse_condition("NPI") == Condition::NPI);
    CHECK_THROWS_AS(parse_condition("pi?"), InvalidArgument);
}
