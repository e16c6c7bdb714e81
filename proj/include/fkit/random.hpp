#ifndef FKIT_RANDOM_HPP
#define FKIT_RANDOM_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace fkit {

/// Caller-owned random state.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The variate transforms below are written out rather than taken
/// from <random> distributions, whose algorithms are implementation-defined,
/// so that a seed reproduces the same campaign on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Independent stream for a named consumer, derived from a campaign seed.
    static Rng split(std::uint64_t seed, std::string_view stream);

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal (Marsaglia polar method).
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    /// Uniform integer on [0, n). n must be positive.
    std::size_t index(std::size_t n);

    std::uint64_t next_u64() { return engine_(); }

    bool operator==(const Rng&) const = default;

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

} // namespace fkit

#endif
