#include "mrn/codecs.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <stdexcept>

namespace mrn {

namespace {

Eigen::Index checked_dim(const Payload& p) {
    return static_cast<Eigen::Index>(p.dim);
}

std::uint64_t next_pow2(std::uint64_t n) {
    std::uint64_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

void fwht_normalized(ParamVector& v) {
    const auto n = static_cast<std::size_t>(v.size());
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fwht_normalized: length must be a power of two");
    for (std::size_t len = 1; len < n; len <<= 1) {
        for (std::size_t i = 0; i < n; i += len << 1) {
            for (std::size_t j = i; j < i + len; ++j) {
                const double a = v[static_cast<Eigen::Index>(j)];
                const double b = v[static_cast<Eigen::Index>(j + len)];
                v[static_cast<Eigen::Index>(j)] = a + b;
                v[static_cast<Eigen::Index>(j + len)] = a - b;
            }
        }
    }
    v /= std::sqrt(static_cast<double>(n));
}

Payload encode_mask(const MaskVector& mask, std::uint64_t seed) {
    Payload p;
    p.codec = mask.mode == MaskMode::Binary ? CodecId::MrnBinary : CodecId::MrnSigned;
    p.dim = static_cast<std::uint64_t>(mask.size());
    p.seed = seed;
    p.body = pack_bits(mask.bits);
    return p;
}

ParamVector decode_to_update(const Payload& p, const NoiseSpec& noise_spec) {
    if (p.codec != CodecId::MrnBinary && p.codec != CodecId::MrnSigned)
        throw std::invalid_argument("decode_to_update: not a mask payload");
    const Eigen::Index d = checked_dim(p);
    MaskVector mask;
    mask.mode = p.codec == CodecId::MrnBinary ? MaskMode::Binary : MaskMode::Signed;
    mask.bits = unpack_bits(p.body, static_cast<std::size_t>(d));
    const ParamVector noise = generate_noise(noise_spec, p.seed, d);
    return apply_mask(mask, noise);
}

Payload encode_dense(const ParamVector& x) {
    Payload p;
    p.codec = CodecId::None;
    p.dim = static_cast<std::uint64_t>(x.size());
    p.body.resize(static_cast<std::size_t>(x.size()) * 8);
    std::memcpy(p.body.data(), x.data(), p.body.size());
    return p;
}

Payload compress_sign(const ParamVector& x, Prng& g) {
    if (x.size() == 0) throw std::invalid_argument("compress_sign: empty input");
    const double scale = x.abs().mean();
    Payload p;
    p.codec = CodecId::SignStochastic;
    p.dim = static_cast<std::uint64_t>(x.size());
    p.scalars = {scale};
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(x.size()), 0);
    if (scale > 0.0) {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double prob = std::clamp((x[i] + scale) / (2.0 * scale), 0.0, 1.0);
            bits[static_cast<std::size_t>(i)] = g.next_unit() < prob ? 1 : 0;
        }
    }
    p.body = pack_bits(bits);
    return p;
}

Payload compress_topk(const ParamVector& x, int k) {
    if (k < 1 || static_cast<Eigen::Index>(k) > x.size())
        throw std::invalid_argument("compress_topk: k out of range");
    std::vector<int> order(static_cast<std::size_t>(x.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const double ma = std::abs(x[a]), mb = std::abs(x[b]);
        if (ma != mb) return ma > mb;
        return a < b;  // ties to the lower index
    });
    order.resize(static_cast<std::size_t>(k));
    std::sort(order.begin(), order.end());

    Payload p;
    p.codec = CodecId::TopK;
    p.dim = static_cast<std::uint64_t>(x.size());
    p.body.resize(static_cast<std::size_t>(k) * 12);
    std::uint8_t* out = p.body.data();
    for (int idx : order) {
        const auto u = static_cast<std::uint32_t>(idx);
        std::memcpy(out, &u, 4);
        const double v = x[idx];
        std::memcpy(out + 4, &v, 8);
        out += 12;
    }
    return p;
}

Payload compress_terngrad(const ParamVector& x, Prng& g) {
    if (x.size() == 0) throw std::invalid_argument("compress_terngrad: empty input");
    const double s = x.abs().maxCoeff();
    Payload p;
    p.codec = CodecId::TernGrad;
    p.dim = static_cast<std::uint64_t>(x.size());
    p.scalars = {s};
    // 2-bit codes packed LSB-first: 0 -> zero, 1 -> +s, 2 -> -s.
    p.body.assign((static_cast<std::size_t>(x.size()) * 2 + 7) / 8, 0);
    if (s > 0.0) {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double prob = std::abs(x[i]) / s;
            std::uint8_t code = 0;
            if (g.next_unit() < prob) code = x[i] >= 0.0 ? 1 : 2;
            const std::size_t bit = static_cast<std::size_t>(i) * 2;
            p.body[bit / 8] |= static_cast<std::uint8_t>(code << (bit % 8));
        }
    }
    return p;
}

Payload compress_drive(const ParamVector& x, std::uint64_t seed, DriveOptions opts) {
    if (x.size() == 0) throw std::invalid_argument("compress_drive: empty input");
    const auto d = static_cast<std::uint64_t>(x.size());
    const std::uint64_t d_pad = opts.rotate ? next_pow2(d) : d;

    ParamVector y = ParamVector::Zero(static_cast<Eigen::Index>(d_pad));
    y.head(x.size()) = x;
    if (opts.rotate) {
        const ParamVector signs = rng_two_point(RngState{seed, 0}, y.size(), 1.0);
        y *= signs;
        fwht_normalized(y);
    }

    const double scale = y.abs().sum() / static_cast<double>(d_pad);
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(d_pad));
    for (Eigen::Index i = 0; i < y.size(); ++i)
        bits[static_cast<std::size_t>(i)] = y[i] >= 0.0 ? 1 : 0;

    Payload p;
    p.codec = CodecId::Drive;
    p.dim = d;
    p.seed = seed;
    p.scalars = {scale};
    p.body = pack_bits(bits);
    return p;
}

ParamVector decode_drive(const Payload& p, DriveOptions opts) {
    if (p.codec != CodecId::Drive)
        throw std::invalid_argument("decode_drive: not a drive payload");
    if (p.scalars.size() != 1)
        throw std::runtime_error("decode_drive: payload needs one scalar");
    const double scale = p.scalars[0];
    const std::uint64_t d_pad = opts.rotate ? next_pow2(p.dim) : p.dim;
    const auto bits = unpack_bits(p.body, static_cast<std::size_t>(d_pad));
    ParamVector y(static_cast<Eigen::Index>(d_pad));
    for (Eigen::Index i = 0; i < y.size(); ++i)
        y[i] = bits[static_cast<std::size_t>(i)] ? scale : -scale;
    if (opts.rotate) {
        fwht_normalized(y);
        const ParamVector signs = rng_two_point(RngState{p.seed, 0}, y.size(), 1.0);
        y *= signs;
    }
    return y.head(static_cast<Eigen::Index>(p.dim));
}

ParamVector decode_update(const Payload& p, const NoiseSpec& noise_spec) {
    const Eigen::Index d = checked_dim(p);
    switch (p.codec) {
        case CodecId::None: {
            if (p.body.size() != static_cast<std::size_t>(d) * 8)
                throw std::runtime_error("decode_update: dense body size mismatch");
            ParamVector x(d);
            std::memcpy(x.data(), p.body.data(), p.body.size());
            return x;
        }
        case CodecId::MrnBinary:
        case CodecId::MrnSigned:
            return decode_to_update(p, noise_spec);
        case CodecId::SignStochastic: {
            if (p.scalars.size() != 1)
                throw std::runtime_error("decode_update: sign payload needs one scalar");
            const double scale = p.scalars[0];
            const auto bits = unpack_bits(p.body, static_cast<std::size_t>(d));
            ParamVector x(d);
            for (Eigen::Index i = 0; i < d; ++i)
                x[i] = bits[static_cast<std::size_t>(i)] ? scale : -scale;
            return x;
        }
        case CodecId::TopK: {
            if (p.body.size() % 12 != 0)
                throw std::runtime_error("decode_update: top-k body size mismatch");
            ParamVector x = ParamVector::Zero(d);
            const std::uint8_t* in = p.body.data();
            for (std::size_t i = 0; i < p.body.size() / 12; ++i) {
                std::uint32_t idx;
                double v;
                std::memcpy(&idx, in, 4);
                std::memcpy(&v, in + 4, 8);
                if (idx >= p.dim) throw std::runtime_error("decode_update: top-k index out of range");
                x[static_cast<Eigen::Index>(idx)] = v;
                in += 12;
            }
            return x;
        }
        case CodecId::TernGrad: {
            if (p.scalars.size() != 1)
                throw std::runtime_error("decode_update: terngrad payload needs one scalar");
            const double s = p.scalars[0];
            ParamVector x = ParamVector::Zero(d);
            for (Eigen::Index i = 0; i < d; ++i) {
                const std::size_t bit = static_cast<std::size_t>(i) * 2;
                if (bit / 8 >= p.body.size())
                    throw std::runtime_error("decode_update: terngrad body too short");
                const std::uint8_t code = (p.body[bit / 8] >> (bit % 8)) & 3u;
                x[i] = code == 1 ? s : code == 2 ? -s : 0.0;
            }
            return x;
        }
        case CodecId::Drive:
            return decode_drive(p);
    }
    throw std::logic_error("decode_update: unknown codec");
}

}  // namespace mrn
