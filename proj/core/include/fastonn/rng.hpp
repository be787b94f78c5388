#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace fastonn {

// Portable deterministic random source (xoshiro256**). The standard
// library's distributions are implementation-defined, so every draw the
// simulator makes goes through this class to keep outputs bit-identical
// across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 bits of resolution.
    double uniform();

    // Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    // Standard normal draw (Box-Muller, second value cached).
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t s_[4];
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

// Named sub-stream of a base seed ("hardware-noise", "shuffle", ...).
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream);

// Indexed sub-stream, e.g. one per frame or per image.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace fastonn
