#include "culmark/creation.hpp"

#include "culmark/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace culmark {

std::string_view edit_kind_name(EditKind k)
{
    switch (k) {
    case EditKind::Disruption: return "disruption";
    case EditKind::Addition: return "addition";
    case EditKind::PatternGrowth: return "pattern_growth";
    case EditKind::Removal: return "removal";
    case EditKind::Refinement: return "refinement";
    }
    return "unknown";
}

EditKind parse_edit_kind(std::string_view name)
{
    for (const EditKind k : kEditKinds)
        if (edit_kind_name(k) == name) return k;
    throw InvalidArgument("unknown edit strategy '" + std::string(name) + "'");
}

StrategyProfile::StrategyProfile(const std::array<double, 5>& p) : p_(p)
{
    double total = 0.0;
    for (std::size_t i = 0; i < p_.size(); ++i) {
        if (!std::isfinite(p_[i]) || p_[i] < 0.0)
            throw InvalidArgument("strategy probability '" + std::string(edit_kind_name(kEditKinds[i])) +
                                  "' must be finite and >= 0");
        total += p_[i];
    }
    if (!(total > 0.0)) throw InvalidArgument("strategy probabilities must not all be zero");
    for (double& x : p_) x /= total;
}

namespace {

constexpr int kSide = kImageSide;

template <typename F>
void for_each_neighbour4(int flat, F&& f)
{
    const int r = flat / kSide, c = flat % kSide;
    if (r > 0) f(flat - kSide);
    if (r + 1 < kSide) f(flat + kSide);
    if (c > 0) f(flat - 1);
    if (c + 1 < kSide) f(flat + 1);
}

bool has_unset_neighbour(const Image& img, int flat)
{
    bool found = false;
    for_each_neighbour4(flat, [&](int n) { found = found || !img.at(n); });
    return found;
}

bool has_set_neighbour(const Image& img, int flat)
{
    bool found = false;
    for_each_neighbour4(flat, [&](int n) { found = found || img.at(n); });
    return found;
}

EditResult flip_random(const Image& parent, int lo, int hi, EditKind kind, Rng& rng)
{
    EditResult out{parent, 0, kind};
    const int k = rng.between(lo, hi);
    for (const std::size_t idx : rng.sample_distinct(kPixelCount, static_cast<std::size_t>(k)))
        out.child.flip_at(static_cast<int>(idx));
    out.changed_pixels = k;
    return out;
}

EditResult refinement(const Image& parent, const EditParams& p, Rng& rng)
{
    return flip_random(parent, p.refine_min, p.refine_max, EditKind::Refinement, rng);
}

EditResult pattern_growth(const Image& parent, const EditParams& p, Rng& rng)
{
    if (parent.count() == 0 || parent.count() == kPixelCount) return refinement(parent, p, rng);
    EditResult out{parent, 0, EditKind::PatternGrowth};
    const int k = rng.between(p.growth_min, p.growth_max);
    std::vector<int> frontier;
    for (int step = 0; step < k; ++step) {
        frontier.clear();
        for (int i = 0; i < kPixelCount; ++i)
            if (!out.child.at(i) && has_set_neighbour(out.child, i)) frontier.push_back(i);
        if (frontier.empty()) break;
        out.child.set_at(frontier[rng.below(frontier.size())], true);
        ++out.changed_pixels;
    }
    return out;
}

EditResult addition(const Image& parent, const EditParams& p, Rng& rng)
{
    // prefix[r][c] = number of set pixels in rows < r, cols < c.
    std::array<std::array<int, kSide + 1>, kSide + 1> prefix{};
    for (int r = 0; r < kSide; ++r)
        for (int c = 0; c < kSide; ++c)
            prefix[r + 1][c + 1] = prefix[r][c + 1] + prefix[r + 1][c] - prefix[r][c] + (parent.get(r, c) ? 1 : 0);
    const auto set_in = [&](int r0, int c0, int r1, int c1) { // inclusive, clamped
        r0 = std::max(r0, 0), c0 = std::max(c0, 0), r1 = std::min(r1, kSide - 1), c1 = std::min(c1, kSide - 1);
        return prefix[r1 + 1][c1 + 1] - prefix[r0][c1 + 1] - prefix[r1 + 1][c0] + prefix[r0][c0];
    };

    struct Placement { int row, col; };
    struct Shape { int h, w; std::vector<Placement> spots; };
    std::vector<Shape> shapes;
    for (int h = p.block_min; h <= p.block_max; ++h) {
        for (int w = p.block_min; w <= p.block_max; ++w) {
            Shape s{h, w, {}};
            for (int r = 0; r + h <= kSide; ++r)
                for (int c = 0; c + w <= kSide; ++c)
                    if (set_in(r - 1, c - 1, r + h, c + w) == 0) s.spots.push_back({r, c});
            if (!s.spots.empty()) shapes.push_back(std::move(s));
        }
    }
    if (shapes.empty()) return pattern_growth(parent, p, rng);

    const Shape& shape = shapes[rng.below(shapes.size())];
    const Placement at = shape.spots[rng.below(shape.spots.size())];
    EditResult out{parent, shape.h * shape.w, EditKind::Addition};
    for (int r = 0; r < shape.h; ++r)
        for (int c = 0; c < shape.w; ++c) out.child.set(at.row + r, at.col + c);
    return out;
}

EditResult removal(const Image& parent, const EditParams& p, Rng& rng)
{
    if (parent.count() < p.removal_min_set) return refinement(parent, p, rng);
    std::vector<std::vector<int>> candidates;
    for (auto& comp : connected_components(parent)) {
        const bool on_boundary =
            std::any_of(comp.begin(), comp.end(), [&](int i) { return has_unset_neighbour(parent, i); });
        if (on_boundary) candidates.push_back(std::move(comp));
    }
    if (candidates.empty()) return refinement(parent, p, rng);

    std::vector<int> remaining = std::move(candidates[rng.below(candidates.size())]);
    EditResult out{parent, 0, EditKind::Removal};
    const int k = rng.between(p.removal_min, p.removal_max);
    std::vector<int> edge;
    for (int step = 0; step < k && !remaining.empty(); ++step) {
        edge.clear();
        for (const int i : remaining)
            if (has_unset_neighbour(out.child, i)) edge.push_back(i);
        if (edge.empty()) break;
        const int victim = edge[rng.below(edge.size())];
        out.child.set_at(victim, false);
        remaining.erase(std::find(remaining.begin(), remaining.end(), victim));
        ++out.changed_pixels;
    }
    return out;
}

EditResult disruption(const Image& parent, const EditParams& p, Rng& rng)
{
    return flip_random(parent, p.disrupt_min, p.disrupt_max, EditKind::Disruption, rng);
}

} // namespace

std::vector<int> boundary_pixels(const Image& img)
{
    std::vector<int> out;
    for (int i = 0; i < kPixelCount; ++i)
        if (img.at(i) && has_unset_neighbour(img, i)) out.push_back(i);
    return out;
}

std::vector<std::vector<int>> connected_components(const Image& img)
{
    std::vector<std::vector<int>> comps;
    std::array<bool, kPixelCount> seen{};
    std::vector<int> stack;
    for (int start = 0; start < kPixelCount; ++start) {
        if (!img.at(start) || seen[static_cast<std::size_t>(start)]) continue;
        std::vector<int> comp;
        stack.push_back(start);
        seen[static_cast<std::size_t>(start)] = true;
        while (!stack.empty()) {
            const int cur = stack.back();
            stack.pop_back();
            comp.push_back(cur);
            for_each_neighbour4(cur, [&](int n) {
                if (img.at(n) && !seen[static_cast<std::size_t>(n)]) {
                    seen[static_cast<std::size_t>(n)] = true;
                    stack.push_back(n);
                }
            });
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

EditResult apply_strategy(const Image& parent, const EditStrategy& strategy, Rng& rng)
{
    EditResult out;
    switch (strategy.kind) {
    case EditKind::Disruption: out = disruption(parent, strategy.params, rng); break;
    case EditKind::Addition: out = addition(parent, strategy.params, rng); break;
    case EditKind::PatternGrowth: out = pattern_growth(parent, strategy.params, rng); break;
    case EditKind::Removal: out = removal(parent, strategy.params, rng); break;
    case EditKind::Refinement: out = refinement(parent, strategy.params, rng); break;
    }
    if (out.changed_pixels != hamming_count(parent, out.child) || out.changed_pixels < kMinEditPixels ||
        out.changed_pixels > kMaxEditPixels)
        throw InvariantViolation("apply_strategy produced an illegal edit of " + std::to_string(out.changed_pixels) +
                                 " pixels");
    return out;
}

EditStrategy sample_strategy(const StrategyProfile& profile, Rng& rng, const EditParams& params)
{
    return EditStrategy{kEditKinds[rng.categorical(profile.probabilities())], params};
}

std::map<Condition, EditSizeSummary> edit_size_stats(std::span<const Chain> chains)
{
    std::map<Condition, std::vector<double>> sizes;
    for (const Chain& chain : chains) {
        auto& bucket = sizes[chain.condition()];
        for (const ChainNode& n : chain.nodes())
            if (n.parent) bucket.push_back(hamming_count(chain.nodes()[chain.position_of(*n.parent)].image, n.image));
    }
    std::map<Condition, EditSizeSummary> out;
    for (const auto& [cond, xs] : sizes) {
        EditSizeSummary s;
        s.n = xs.size();
        if (s.n == 0) {
            out[cond] = s;
            continue;
        }
        for (const double x : xs) s.mean += x;
        s.mean /= static_cast<double>(s.n);
        if (s.n > 1) {
            double ss = 0.0;
            for (const double x : xs) ss += (x - s.mean) * (x - s.mean);
            s.se = std::sqrt(ss / static_cast<double>(s.n - 1)) / std::sqrt(static_cast<double>(s.n));
        }
        out[cond] = s;
    }
    return out;
}

} // namespace culmark
