#pragma once

#include "mrn/masking.hpp"
#include "mrn/payload.hpp"
#include "mrn/rng.hpp"

namespace mrn {

// Mask codec: the seed plus one bit per parameter. 1 bpp on the wire.
Payload encode_mask(const MaskVector& mask, std::uint64_t seed);

// Regenerates the noise from the payload seed and returns noise ⊙ mask.
// Bit-identical to the client-side masked noise by construction.
ParamVector decode_to_update(const Payload& p, const NoiseSpec& noise_spec);

// Dense float64 update (codec "none").
Payload encode_dense(const ParamVector& x);

// Stochastic 1-bit sign compression: scale = mean |x_i|, each coordinate
// decodes to +/- scale, bit drawn with probability clip((x_i+a)/(2a), 0, 1).
// Unbiased wherever |x_i| <= scale. All-zero input yields a zero decode.
Payload compress_sign(const ParamVector& x, Prng& g);

// Keeps the k largest-magnitude entries (ties to the lower index); payload
// stores (uint32 index, float64 value) pairs sorted by index.
Payload compress_topk(const ParamVector& x, int k);

// Ternary quantization: s = max |x_i|, coordinate maps to sign(x_i)*s with
// probability |x_i|/s, else 0. Packed 2 bits per coordinate.
Payload compress_terngrad(const ParamVector& x, Prng& g);

struct DriveOptions {
    bool rotate = true;  // test hook: false uses the identity rotation
};

// Randomized-Hadamard 1-bit compression: x is zero-padded to the next power
// of two, rotated by R = H * diag(signs(seed)) / sqrt(n), and reduced to
// sign bits plus the least-squares scale a = ||Rx||_1 / n. Decoding applies
// the inverse rotation and truncates the padding. The options struct exists
// for tests that need the rotation disabled; encode and decode must agree.
Payload compress_drive(const ParamVector& x, std::uint64_t seed, DriveOptions opts = {});
ParamVector decode_drive(const Payload& p, DriveOptions opts = {});

// Decodes any payload produced by this module.
ParamVector decode_update(const Payload& p, const NoiseSpec& noise_spec);

// In-place normalized fast Walsh-Hadamard transform; length must be a power
// of two. Orthonormal, and its own inverse.
void fwht_normalized(ParamVector& v);

}  // namespace mrn
