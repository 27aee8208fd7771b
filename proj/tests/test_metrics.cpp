#include <doctest.h>

#include "culmark/core.hpp"
#include "culmark/errors.hpp"
#include "culmark/metrics.hpp"
#include "culmark/rng.hpp"

#include <boost/math/distributions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <random>

using namespace culmark;

namespace {

/// Ordered-pair mean absolute difference, written out directly.
double gini_bruteforce(const std::vector<double>& x)
{
    double diff = 0.0, sum = 0.0;
    for (const double a : x) {
        sum += a;
        for (const double b : x) diff += std::abs(a - b);
    }
    const double n = static_cast<double>(x.size());
    return diff / (2.0 * n * n * (sum / n));
}

MarketView view_of(const Chain& chain, std::initializer_list<NodeId> ids)
{
    MarketView v;
    for (const NodeId id : ids) {
        const ChainNode* n = chain.find(id);
        v.entries.push_back(MarketEntry{id, n->image, n->generation, std::nullopt});
    }
    return v;
}

Image pixels(std::initializer_list<int> set)
{
    Image img;
    for (const int f : set) img.set_at(f, true);
    return img;
}

} // namespace

TEST_CASE("hamming fraction")
{
    Image a;
    a.set(4, 4);
    CHECK(hamming_fraction(a, a) == 0.0);
    Image comp = Image::filled(true);
    comp.set(4, 4, false);
    CHECK(hamming_fraction(a, comp) == 1.0);
    Image b = a;
    b.flip(0, 0);
    CHECK(hamming_fraction(a, b) == 1.0 / 256);
}

TEST_CASE("mean pairwise distance")
{
    const double d[3][3] = {{0, 0.1, 0.2}, {0.1, 0, 0.3}, {0.2, 0.3, 0}};
    CHECK(mean_pairwise_distance(3, [&](std::size_t i, std::size_t j) { return d[i][j]; }) == doctest::Approx(0.2));
    CHECK_THROWS_AS(mean_pairwise_distance(1, [](std::size_t, std::size_t) { return 0.0; }), DegenerateInput);
}

TEST_CASE("market diversity by each distance")
{
    Chain chain(0, 0, Condition::PI, 1, 0, pixels({0}));
    record_choice(chain, 1, 0, pixels({0, 1}));
    record_choice(chain, 2, 1, pixels({0, 1, 2}));
    record_choice(chain, 3, 0, pixels({0, 5}));

    const auto same = view_of(chain, {0, 0});
    CHECK(market_diversity(same, DistanceKind::Hamming, chain) == 0.0);

    const auto lineage = view_of(chain, {0, 1, 2});
    CHECK(market_diversity(lineage, DistanceKind::Phylogenetic, chain) == doctest::Approx(4.0 / 3));
    CHECK(market_diversity(lineage, DistanceKind::Hamming, chain) == doctest::Approx((1 + 2 + 1) / 3.0 / 256));

    const auto cos = market_diversity(lineage, DistanceKind::Cosine, chain);
    const auto e0 = pixel_embedding(chain.find(0)->image), e1 = pixel_embedding(chain.find(1)->image),
               e2 = pixel_embedding(chain.find(2)->image);
    CHECK(cos == doctest::Approx((cosine_distance(e0, e1) + cosine_distance(e0, e2) + cosine_distance(e1, e2)) / 3));

    EmbeddingTable table("test");
    table.add(0, {1, 0});
    table.add(1, {0, 1});
    table.add(2, {1, 1});
    table.add(3, {-1, 0});
    const auto pair = view_of(chain, {0, 3});
    CHECK(market_diversity(pair, DistanceKind::Cosine, chain, &table) == doctest::Approx(2.0));
}

TEST_CASE("market diversity ignores entry order")
{
    Rng rng(3);
    Chain chain(0, 0, Condition::NPI, 1, 0, Image{});
    for (int g = 1; g <= 12; ++g) {
        const auto v = market_window(chain, g, 12, false);
        const NodeId parent = v.entries[rng.below(v.entries.size())].id;
        Image child = chain.find(parent)->image;
        for (int k = 0; k < 5; ++k) child.flip_at(static_cast<int>(rng.below(256)));
        if (child == chain.find(parent)->image) child.flip_at(0);
        record_choice(chain, g, parent, child);
    }
    MarketView v = market_window(chain, 13, 12, false);
    for (const DistanceKind k : {DistanceKind::Hamming, DistanceKind::Phylogenetic, DistanceKind::Cosine}) {
        const double base = market_diversity(v, k, chain);
        MarketView shuffled = v;
        std::reverse(shuffled.entries.begin(), shuffled.entries.end());
        std::swap(shuffled.entries[0], shuffled.entries[5]);
        CHECK(market_diversity(shuffled, k, chain) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("cosine distance")
{
    CHECK(cosine_distance(std::vector<double>{1, 0}, std::vector<double>{0, 2}) == doctest::Approx(1.0));
    CHECK(cosine_distance(std::vector<double>{1, 1}, std::vector<double>{2, 2}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(cosine_distance(std::vector<double>{0, 0}, std::vector<double>{1, 2}), DegenerateInput);
}

TEST_CASE("autocorrelation hand cases")
{
    // Grand mean of +v,-v,+v,-v is zero, so the centred vectors alternate.
    const std::vector<double> v{1.0, -2.0, 0.5};
    const std::vector<double> w{-1.0, 2.0, -0.5};
    const std::vector<ChainEmbeddings> alt{{v, w, v, w}};
    CHECK(chain_autocorrelation(alt, 1) == doctest::Approx(-0.75).epsilon(1e-12));
    CHECK(chain_autocorrelation(alt, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(chain_autocorrelation(alt, -1), InvalidArgument);
    CHECK_THROWS_AS(chain_autocorrelation(alt, 4), InvalidArgument);

    const std::vector<ChainEmbeddings> flat{{v, v, v}};
    CHECK_THROWS_AS(chain_autocorrelation(flat, 1), DegenerateInput);
}

TEST_CASE("autocorrelation is translation invariant and zero for independent vectors")
{
    Rng rng(5);
    std::vector<ChainEmbeddings> chains(2), moved(2);
    for (std::size_t c = 0; c < 2; ++c)
        for (int t = 0; t < 60; ++t) {
            std::vector<double> x(8), y(8);
            for (std::size_t d = 0; d < 8; ++d) y[d] = (x[d] = rng.normal()) + 100.0 + static_cast<double>(d);
            chains[c].push_back(x);
            moved[c].push_back(y);
        }
    for (int tau = 0; tau <= 10; ++tau)
        CHECK(chain_autocorrelation(chains, tau) == doctest::Approx(chain_autocorrelation(moved, tau)).epsilon(1e-9));
    CHECK(std::abs(chain_autocorrelation(chains, 5)) < 0.1);
}

TEST_CASE("gini examples and oracle")
{
    CHECK(gini(std::vector<double>{1, 0, 0, 0}) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(gini(std::vector<double>{5, 5, 5, 5}) == 0.0);
    CHECK(gini(std::vector<double>{3, 0}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(gini(std::vector<double>{0.01, 0}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(gini(std::vector<double>{}), InvalidArgument);
    CHECK_THROWS_AS(gini(std::vector<double>{1, -1}), InvalidArgument);
    CHECK_THROWS_AS(gini(std::vector<double>{0, 0}), DegenerateInput);

    Rng rng(6);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> x(1 + rng.below(40)), scaled;
        for (double& v : x) v = static_cast<double>(rng.below(10));
        x[0] += 1.0;
        CHECK(gini(x) == doctest::Approx(gini_bruteforce(x)).epsilon(1e-12));
        for (const double v : x) scaled.push_back(v * 7.3);
        CHECK(std::abs(gini(scaled) - gini(x)) < 1e-12);
    }
}

TEST_CASE("gini bootstrap")
{
    const std::vector<double> unequal{10, 0, 0, 0, 1, 0, 0, 0, 9, 0, 0, 1};
    const std::vector<double> equal{2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1};
    const GiniDifference d = gini_difference_bootstrap(unequal, equal, 2000, 1);
    CHECK(d.delta == doctest::Approx(gini(unequal) - gini(equal)));
    CHECK(d.se > 0.0);
    CHECK(d.p_value < 0.01);
    const GiniDifference again = gini_difference_bootstrap(unequal, equal, 2000, 1);
    CHECK(again.se == d.se);
}

TEST_CASE("paired permutation test examples")
{
    const std::vector<double> a(10, 1.0), b(10, 0.0), z(10, 3.0);
    CHECK(paired_permutation_test(a, b, 0, 1) == doctest::Approx(2.0 / 1024).epsilon(1e-12));
    CHECK(paired_permutation_test(z, z, 0, 1) == 1.0);
    CHECK_THROWS_AS(paired_permutation_test(std::vector<double>{}, std::vector<double>{}, 10, 1), InvalidArgument);
    CHECK_THROWS_AS(paired_permutation_test(a, std::vector<double>{1.0}, 10, 1), InvalidArgument);
}

TEST_CASE("paired permutation test is symmetric in its arguments")
{
    Rng rng(7);
    for (const std::size_t n : {std::size_t{8}, std::size_t{60}}) {
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.normal() + 0.3;
            b[i] = rng.normal();
        }
        CHECK(paired_permutation_test(a, b, 4000, 9) == paired_permutation_test(b, a, 4000, 9));
    }
}

TEST_CASE("paired permutation test is calibrated under the null")
{
    Rng rng(8);
    std::vector<double> ps;
    for (int run = 0; run < 500; ++run) {
        std::vector<double> a(30), b(30);
        for (std::size_t i = 0; i < 30; ++i) {
            a[i] = rng.normal();
            b[i] = rng.normal();
        }
        ps.push_back(paired_permutation_test(a, b, 999, 100 + static_cast<std::uint64_t>(run)));
    }
    std::sort(ps.begin(), ps.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double n = static_cast<double>(ps.size());
        ks = std::max({ks, std::abs(ps[i] - i / n), std::abs(ps[i] - (i + 1) / n)});
    }
    CHECK(ks < 0.1);
}

TEST_CASE("odds ratio posterior against beta quantile sampling")
{
    const auto check_against_oracle = [](int s1, int n1, int s2, int n2) {
        const boost::math::beta_distribution<> p1(s1 + 1.0, n1 - s1 + 1.0), p2(s2 + 1.0, n2 - s2 + 1.0);
        std::mt19937_64 gen(99);
        std::uniform_real_distribution<double> unif(1e-12, 1.0 - 1e-12);
        std::vector<double> ors;
        for (int i = 0; i < 200000; ++i) {
            const double a = boost::math::quantile(p1, unif(gen)), b = boost::math::quantile(p2, unif(gen));
            ors.push_back((a / (1 - a)) / (b / (1 - b)));
        }
        std::sort(ors.begin(), ors.end());
        const OddsRatioPosterior post = odds_ratio_posterior(s1, n1, s2, n2, 200000, 3);
        CHECK(post.median == doctest::Approx(quantile_sorted(ors, 0.5)).epsilon(0.02));
        CHECK(post.ci95[0] == doctest::Approx(quantile_sorted(ors, 0.025)).epsilon(0.03));
        CHECK(post.ci95[1] == doctest::Approx(quantile_sorted(ors, 0.975)).epsilon(0.03));
        CHECK(post.ci68[0] == doctest::Approx(quantile_sorted(ors, 0.16)).epsilon(0.02));
        CHECK(post.ci68[1] == doctest::Approx(quantile_sorted(ors, 0.84)).epsilon(0.02));
    };
    check_against_oracle(170, 1000, 200, 1000);
    check_against_oracle(30, 80, 12, 90);
}

TEST_CASE("odds ratio posterior examples")
{
    const OddsRatioPosterior same = odds_ratio_posterior(50, 100, 50, 100, 100000, 1);
    CHECK(std::abs(same.median - 1.0) < 0.05);
    CHECK(same.p_null > 0.9);

    const OddsRatioPosterior low = odds_ratio_posterior(0, 10, 10, 10, 100000, 2);
    CHECK(low.median < 0.01);
    CHECK(low.ci95[1] < 1.0);
    // P(p1 >= p2) for Beta(1,11) vs Beta(11,1) is (11! * 11!) / 23!, far below 1e-5.
    CHECK(low.p_null < 1e-3);

    CHECK(format_odds_ratio(OddsRatioPosterior{0.84, {0.8, 0.9}, {0.731, 0.9649}, 0.01}) == "OR=0.84, CI95=[0.73, 0.96]");
    CHECK_THROWS_AS(odds_ratio_posterior(11, 10, 1, 10, 100, 1), InvalidArgument);
}

TEST_CASE("mean and standard error")
{
    const MeanSe m = mean_and_se(std::vector<double>{1, 2, 3, 4});
    CHECK(m.mean == 2.5);
    CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
    CHECK(mean_and_se(std::vector<double>{7}).se == 0.0);
    CHECK(quantile_sorted(std::vector<double>{0, 10}, 0.25) == doctest::Approx(2.5));
}

TEST_CASE("embedding table checks")
{
    EmbeddingTable t;
    t.add(1, {1, 2});
    CHECK_THROWS_AS(t.add(2, {1, 2, 3}), InvalidArgument);
    CHECK_THROWS_AS(t.add(1, {3, 4}), InvalidArgument);
    CHECK_THROWS_AS(t.add(3, {NAN, 1}), InvalidArgument);
    CHECK_THROWS_AS(t.at(9), InvalidArgument);
    CHECK(t.dim() == 2);
}
