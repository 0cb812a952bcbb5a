#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace imf {

// Streams are keyed by (seed, label): the label is hashed with FNV-1a and
// mixed into the seed with splitmix64, and the result seeds an mt19937_64.
// Both algorithms are fixed by their definitions, so a stream reproduces
// bit-for-bit on any platform.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t derive_stream_seed(std::uint64_t seed, std::string_view label);

class Stream {
public:
    Stream(std::uint64_t seed, std::string_view label);

    std::uint64_t next_u64() { return gen_(); }
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform integer on [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 gen_;
};

}  // namespace imf
