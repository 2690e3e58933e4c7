#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace mia {

/// Seedable random source. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; the real-valued and integer mappings
/// are implemented here so draws are identical across standard libraries.
///
/// Normal samples use the Box-Muller cosine branch and consume two uniform
/// draws per sample (the sine branch is discarded).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform01();
    /// Uniform in [lo, hi); returns lo when lo == hi.
    double uniform(double lo, double hi);
    /// Uniform integer in the closed range [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    double normal(double mean, double stddev);
    bool bernoulli(double p);

    /// Child stream keyed on (seed, label). Does not depend on, or advance,
    /// this stream's state.
    Rng derive(std::uint64_t label) const;
    Rng derive(std::string_view label) const;

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i - 1)));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace mia
