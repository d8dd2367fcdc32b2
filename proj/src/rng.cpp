#include "mrn/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mrn {

double Prng::next_open(double lo, double hi) {
    // Rejection keeps the interval open and excludes exact zero; at 53-bit
    // resolution the loop terminates almost immediately.
    for (;;) {
        const double v = lo + next_unit() * (hi - lo);
        if (v > lo && v < hi && v != 0.0) return v;
    }
}

double Prng::next_gaussian(double sigma) {
    for (;;) {
        const double u1 = 1.0 - next_unit();  // (0, 1]
        const double u2 = next_unit();
        const double z = std::sqrt(-2.0 * std::log(u1)) *
                         std::cos(2.0 * std::numbers::pi * u2);
        const double v = sigma * z;
        if (v != 0.0) return v;
    }
}

ParamVector rng_uniform(Prng& g, Eigen::Index count, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("rng_uniform: requires lo < hi");
    ParamVector out(count);
    for (Eigen::Index i = 0; i < count; ++i) out[i] = g.next_open(lo, hi);
    return out;
}

ParamVector rng_gaussian(Prng& g, Eigen::Index count, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("rng_gaussian: requires sigma > 0");
    ParamVector out(count);
    for (Eigen::Index i = 0; i < count; ++i) out[i] = g.next_gaussian(sigma);
    return out;
}

ParamVector rng_two_point(Prng& g, Eigen::Index count, double magnitude) {
    if (!(magnitude > 0.0)) throw std::invalid_argument("rng_two_point: requires magnitude > 0");
    ParamVector out(count);
    for (Eigen::Index i = 0; i < count; ++i)
        out[i] = g.next_unit() < 0.5 ? -magnitude : magnitude;
    return out;
}

ParamVector rng_uniform(RngState state, Eigen::Index count, double lo, double hi) {
    Prng g(state);
    return rng_uniform(g, count, lo, hi);
}

ParamVector rng_gaussian(RngState state, Eigen::Index count, double sigma) {
    Prng g(state);
    return rng_gaussian(g, count, sigma);
}

ParamVector rng_two_point(RngState state, Eigen::Index count, double magnitude) {
    Prng g(state);
    return rng_two_point(g, count, magnitude);
}

ParamVector generate_noise(const NoiseSpec& spec, std::uint64_t seed, Eigen::Index d) {
    Prng g(seed);
    switch (spec.dist) {
        case NoiseDist::Uniform:
            return rng_uniform(g, d, -spec.magnitude, spec.magnitude);
        case NoiseDist::Gaussian:
            return rng_gaussian(g, d, spec.magnitude);
        case NoiseDist::TwoPoint:
            return rng_two_point(g, d, spec.magnitude);
    }
    throw std::logic_error("generate_noise: unknown distribution");
}

}  // namespace mrn
