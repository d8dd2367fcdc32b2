#pragma once

#include <cstdint>
#include <initializer_list>

#include <Eigen/Core>

namespace mrn {

// Flat parameter / update vector. Element-wise semantics throughout, so the
// Eigen Array type rather than Vector.
using ParamVector = Eigen::ArrayXd;

// SplitMix64 finalizer. All randomness in the project funnels through this
// mixer; it is pure 64-bit integer arithmetic and therefore bit-identical on
// every platform.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Domain-separation hash: folds a path of tags/indices into a base seed so
// that distinct purposes (partitioning, client sampling, per-round noise,
// ...) get statistically independent streams from one master seed.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(base + kGolden);
    for (std::uint64_t v : path) {
        h = mix64((h ^ v) + kGolden);
    }
    return h;
}

struct RngState {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

// Counter-based generator: value i of a stream is mix64(key + (i+1)*golden),
// i.e. SplitMix64 run from a key derived from (seed, stream_id). Consuming
// code advances the counter; the same (seed, stream, counter) triple always
// reproduces the same value, which is what lets the server regenerate client
// noise exactly.
class Prng {
  public:
    explicit Prng(RngState s) : Prng(s.seed, s.stream_id) {}
    explicit Prng(std::uint64_t seed, std::uint64_t stream_id = 0)
        : key_(derive_seed(seed, {stream_id})) {}

    std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

    // Uniform double in [0, 1) with 53-bit resolution.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform double in the open interval (lo, hi); never returns exactly
    // zero (the masking probability u/n is undefined at n = 0).
    double next_open(double lo, double hi);

    // Standard normal via Box-Muller (two counter values per draw), scaled
    // by sigma; exact zeros are resampled.
    double next_gaussian(double sigma);

    std::uint64_t counter() const { return counter_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Array-producing wrappers. Each is a pure function of the state argument.
ParamVector rng_uniform(RngState state, Eigen::Index count, double lo, double hi);
ParamVector rng_gaussian(RngState state, Eigen::Index count, double sigma);
ParamVector rng_two_point(RngState state, Eigen::Index count, double magnitude);

// In-place variants for code that threads one stream through several draws.
ParamVector rng_uniform(Prng& g, Eigen::Index count, double lo, double hi);
ParamVector rng_gaussian(Prng& g, Eigen::Index count, double sigma);
ParamVector rng_two_point(Prng& g, Eigen::Index count, double magnitude);

// Noise generator specification: distribution family and magnitude.
// Uniform   -> U(-magnitude, magnitude)
// Gaussian  -> N(0, magnitude^2)   (magnitude is the standard deviation)
// TwoPoint  -> {-magnitude, +magnitude} equiprobably
enum class NoiseDist { Uniform, Gaussian, TwoPoint };

struct NoiseSpec {
    NoiseDist dist = NoiseDist::Uniform;
    double magnitude = 1e-2;
    std::uint64_t seed = 0;
};

// Realizes G(s): the noise vector for a given seed. No entry is ever exactly
// zero.
ParamVector generate_noise(const NoiseSpec& spec, std::uint64_t seed, Eigen::Index d);

}  // namespace mrn
