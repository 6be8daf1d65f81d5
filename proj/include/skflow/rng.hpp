#pragma once

#include <cstdint>
#include <limits>

namespace skflow {

/// Counter-based generator: output k is a finalizer applied to a key
/// derived from (seed, stream) plus the counter, so streams are
/// independent of call order and safe to hand to parallel workers.
/// Satisfies UniformRandomBitGenerator for use with <random> distributions.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(derive_key(seed, stream)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return finalize(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

    /// Uniform double in [0, 1).
    double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    static std::uint64_t finalize(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
        return finalize(finalize(seed + 0x9E3779B97F4A7C15ULL) ^ finalize(stream ^ 0xD1B54A32D192ED03ULL));
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace skflow
