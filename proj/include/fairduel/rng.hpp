#pragma once

#include <cstdint>

namespace fairduel {

// Identifies one pseudo-random stream. Equal (master_seed, stream_index)
// pairs produce identical sequences on every platform.
struct RngSeed {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;
};

namespace detail {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

// Deterministic 64-bit hash of a sequence of words, used to derive
// independent stream indices from structured identifiers.
inline std::uint64_t hash_u64(std::uint64_t a) { return detail::mix64(a); }

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return detail::mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

// Derives a child stream from a parent seed and a tag. Children with
// distinct tags are independent streams of the same master seed.
inline RngSeed substream(RngSeed seed, std::uint64_t tag) {
    return RngSeed{seed.master_seed, hash_combine(seed.stream_index, tag)};
}

// Counter-based generator: the state is a counter advanced by the SplitMix64
// increment and each output is the mix of the counter. Output therefore
// depends only on (seed, position), is identical across platforms, and any
// number of streams can be split off cheaply.
class Rng {
public:
    explicit Rng(RngSeed seed)
        : state_(detail::mix64(seed.master_seed) ^
                 detail::mix64(detail::mix64(seed.stream_index) + 0x6a09e667f3bcc909ULL)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1), 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + uniform() * (hi - lo);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in {0, ..., n-1} via 128-bit multiply-shift.
    // Bias is at most n / 2^64, negligible at the scales used here.
    int uniform_int(int n) {
        return static_cast<int>(
            (static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n)) >> 64);
    }

private:
    std::uint64_t state_;
};

} // namespace fairduel
