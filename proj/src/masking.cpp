#include "mrn/masking.hpp"

#include <algorithm>
#include <stdexcept>

namespace mrn {

namespace {

void check_lengths(const ParamVector& a, const ParamVector& b, const char* op) {
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(op) + ": update/noise length mismatch");
}

}  // namespace

double PmSchedule::probability() const {
    if (total_steps < 1 || current_step < 1 || current_step > total_steps)
        throw std::invalid_argument("PmSchedule: requires 1 <= tau <= S");
    return static_cast<double>(current_step) / static_cast<double>(total_steps);
}

double mask_probability(double u, double n, MaskMode mode) {
    if (n == 0.0) throw std::invalid_argument("mask_probability: noise entry is zero");
    const double p = mode == MaskMode::Binary ? u / n : (u + n) / (2.0 * n);
    return std::clamp(p, 0.0, 1.0);
}

MaskVector stochastic_mask(const ParamVector& update, const ParamVector& noise,
                           MaskMode mode, Prng& g) {
    check_lengths(update, noise, "stochastic_mask");
    MaskVector m;
    m.mode = mode;
    m.bits.resize(static_cast<std::size_t>(update.size()));
    for (Eigen::Index i = 0; i < update.size(); ++i) {
        const double p = mask_probability(update[i], noise[i], mode);
        m.bits[static_cast<std::size_t>(i)] = g.next_unit() < p ? 1 : 0;
    }
    return m;
}

MaskVector deterministic_mask(const ParamVector& update, const ParamVector& noise,
                              MaskMode mode) {
    check_lengths(update, noise, "deterministic_mask");
    MaskVector m;
    m.mode = mode;
    m.bits.resize(static_cast<std::size_t>(update.size()));
    for (Eigen::Index i = 0; i < update.size(); ++i) {
        const double prod = update[i] * noise[i];
        bool bit;
        if (mode == MaskMode::Binary) {
            bit = update[i] != 0.0 && prod > 0.0;
        } else {
            bit = prod >= 0.0;  // ties to +1
        }
        m.bits[static_cast<std::size_t>(i)] = bit ? 1 : 0;
    }
    return m;
}

ParamVector apply_mask(const MaskVector& mask, const ParamVector& noise) {
    if (mask.size() != noise.size())
        throw std::invalid_argument("apply_mask: mask/noise length mismatch");
    ParamVector out(noise.size());
    for (Eigen::Index i = 0; i < noise.size(); ++i) {
        const bool bit = mask.bits[static_cast<std::size_t>(i)] != 0;
        out[i] = mask.mode == MaskMode::Binary ? (bit ? noise[i] : 0.0)
                                               : (bit ? noise[i] : -noise[i]);
    }
    return out;
}

ParamVector clip_to_noise(const ParamVector& update, const ParamVector& noise,
                          MaskMode mode) {
    check_lengths(update, noise, "clip_to_noise");
    ParamVector out(update.size());
    for (Eigen::Index i = 0; i < update.size(); ++i) {
        double lo, hi;
        if (mode == MaskMode::Binary) {
            lo = std::min(0.0, noise[i]);
            hi = std::max(0.0, noise[i]);
        } else {
            hi = std::abs(noise[i]);
            lo = -hi;
        }
        out[i] = std::clamp(update[i], lo, hi);
    }
    return out;
}

PsmResult psm_forward(const ParamVector& update, const ParamVector& noise,
                      MaskMode mode, const PmSchedule& schedule, Prng& g) {
    check_lengths(update, noise, "psm_forward");
    const double gate_p = schedule.probability();

    PsmResult r;
    r.mask = stochastic_mask(update, noise, mode, g);
    const ParamVector masked = apply_mask(r.mask, noise);
    const ParamVector clipped = clip_to_noise(update, noise, mode);

    r.gate.resize(static_cast<std::size_t>(update.size()));
    r.masked_update.resize(update.size());
    for (Eigen::Index i = 0; i < update.size(); ++i) {
        const bool on = g.next_unit() < gate_p;
        r.gate[static_cast<std::size_t>(i)] = on ? 1 : 0;
        r.masked_update[i] = on ? masked[i] : clipped[i];
    }
    return r;
}

ParamVector ste_step(const ParamVector& update, const ParamVector& grad_at_masked,
                     double lr) {
    if (update.size() != grad_at_masked.size())
        throw std::invalid_argument("ste_step: update/gradient length mismatch");
    return update - lr * grad_at_masked;
}

}  // namespace mrn
