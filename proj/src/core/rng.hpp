#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace seqlsi {

// SplitMix64 finalizer; used to derive independent seeds from (seed, stream id).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

// Small counter-style generator: state advances by a fixed increment and each output is
// the SplitMix64 finalizer of the state. Cheap to construct per unit, so per-unit streams
// can be derived from (seed, unit id) independently of iteration order.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// Sampler-side engine.
using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
    const std::uint64_t s = derive_seed(seed, stream);
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
    return Engine(seq);
}

// Uniform on the open interval (0, 1), 53 bits.
template <class Gen>
double uniform_open(Gen& g) {
    return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace seqlsi
