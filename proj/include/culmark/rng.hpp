#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace culmark {

/// Random stream with portable distributions.
///
/// The engine is std::mt19937_64 (bit-exact by the standard). The standard
/// distribution classes are implementation-defined, so every draw goes
/// through the helpers below to keep output identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    /// Uniform integer in [lo, hi].
    int between(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1)); }

    /// Uniform real in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    double normal();
    double gamma(double shape);
    double beta(double a, double b);

    /// Index drawn with probability proportional to `weights` (non-negative, positive sum).
    std::size_t categorical(std::span<const double> weights);

    /// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
    std::vector<std::size_t> sample_distinct(std::size_t n, std::size_t k);

private:
    std::mt19937_64 engine_;
};

/// Derives independent streams from a master seed.
///
/// A stream is a pure function of (master seed, purpose label, index), so
/// the draws a chain sees do not depend on scheduling or on how many other
/// streams were opened before it.
class RngLedger {
public:
    explicit RngLedger(std::uint64_t master_seed) : master_(master_seed) {}

    std::uint64_t master_seed() const noexcept { return master_; }
    std::uint64_t derive_seed(std::string_view purpose, std::uint64_t index) const;
    Rng stream(std::string_view purpose, std::uint64_t index = 0) const { return Rng(derive_seed(purpose, index)); }

private:
    std::uint64_t master_;
};

std::uint64_t splitmix64(std::uint64_t x);

} // namespace culmark
