#pragma once

#include <cstdint>
#include <vector>

namespace oqw {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Stateless avalanche mix of a word sequence; used to key site lookups and
// per-trajectory substreams.
inline uint64_t mix_words(uint64_t seed, const uint64_t* words, size_t n) {
    uint64_t state = seed ^ 0xD1B54A32D192ED03ULL;
    uint64_t h = splitmix64(state);
    for (size_t i = 0; i < n; ++i) {
        state = h ^ words[i];
        h = splitmix64(state);
    }
    return h;
}

inline double to_unit_interval(uint64_t bits) {
    return double(bits >> 11) * 0x1.0p-53;  // [0, 1)
}

// Counter-based substream: the stream for (master seed, index) is independent
// of every other index and reproducible regardless of execution order.
class RngStream {
public:
    RngStream(uint64_t master_seed, uint64_t index) {
        const uint64_t words[2] = {index, 0x6A09E667F3BCC909ULL};
        state_ = mix_words(master_seed, words, 2);
    }

    uint64_t next_u64() { return splitmix64(state_); }
    double next_double() { return to_unit_interval(next_u64()); }

private:
    uint64_t state_;
};

}  // namespace oqw
