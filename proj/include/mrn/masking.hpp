#pragma once

#include <cstdint>
#include <vector>

#include "mrn/rng.hpp"

namespace mrn {

// Binary masks take values in {0,1}; signed masks in {-1,+1}. A mask bit of
// 1 means "keep the noise value" in binary mode and "+noise" in signed mode;
// a bit of 0 means "drop" (binary) or "-noise" (signed).
enum class MaskMode { Binary, Signed };

struct MaskVector {
    std::vector<std::uint8_t> bits;  // one 0/1 entry per coordinate
    MaskMode mode = MaskMode::Binary;

    Eigen::Index size() const { return static_cast<Eigen::Index>(bits.size()); }
    bool operator==(const MaskVector&) const = default;
};

// Progressive-masking schedule over a client's local steps: the gate
// probability at step tau of S is tau/S, reaching 1 at the final step.
struct PmSchedule {
    long total_steps = 1;   // S
    long current_step = 1;  // tau in [1, S]

    double probability() const;
};

// Probability that a mask bit is 1 given update u and noise n.
// Binary: clip(u/n, 0, 1). Signed: clip((u+n)/(2n), 0, 1).
double mask_probability(double u, double n, MaskMode mode);

// Element-wise Bernoulli mask with mask_probability; consumes one draw per
// coordinate in index order.
MaskVector stochastic_mask(const ParamVector& update, const ParamVector& noise,
                           MaskMode mode, Prng& g);

// Sign-agreement mask. Binary: 1 iff sign(u)=sign(n) and u != 0.
// Signed: sign(u*n), ties at u = 0 resolved to +1. Biased; kept as a
// diagnostic baseline.
MaskVector deterministic_mask(const ParamVector& update, const ParamVector& noise,
                              MaskMode mode);

// Masked noise: noise ⊙ mask. Values land in {0, n_i} (binary) or
// {-n_i, +n_i} (signed) exactly.
ParamVector apply_mask(const MaskVector& mask, const ParamVector& noise);

// Clamp each update coordinate to the interval spanned by the noise:
// binary [min(0,n_i), max(0,n_i)], signed [-|n_i|, |n_i|].
ParamVector clip_to_noise(const ParamVector& update, const ParamVector& noise,
                          MaskMode mode);

struct PsmResult {
    ParamVector masked_update;       // the u-hat used in the forward pass
    MaskVector mask;                 // stochastic mask drawn this step
    std::vector<std::uint8_t> gate;  // progressive gate, one 0/1 per coordinate
};

// One progressive-stochastic-masking forward pass: mixes the clipped raw
// update (gate off) with masked noise (gate on). Consumes 2*d draws from g:
// d for the stochastic mask, then d for the gate, so at tau = S the masked
// output is bit-identical to stochastic_mask on the same stream.
PsmResult psm_forward(const ParamVector& update, const ParamVector& noise,
                      MaskMode mode, const PmSchedule& schedule, Prng& g);

// Straight-through update: masking is treated as identity in the backward
// pass, so the raw update moves against the gradient taken at the masked
// point.
ParamVector ste_step(const ParamVector& update, const ParamVector& grad_at_masked,
                     double lr);

}  // namespace mrn
