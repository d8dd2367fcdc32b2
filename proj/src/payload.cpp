#include "mrn/payload.hpp"

#include <cstring>
#include <stdexcept>
#include <string>

namespace mrn {

namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

std::uint64_t get_u64(std::span<const std::uint8_t> b, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[off + i]) << (8 * i);
    return v;
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

}  // namespace

const char* codec_name(CodecId id) {
    switch (id) {
        case CodecId::None: return "none";
        case CodecId::MrnBinary: return "mrn_binary";
        case CodecId::MrnSigned: return "mrn_signed";
        case CodecId::SignStochastic: return "sign_stochastic";
        case CodecId::TopK: return "topk";
        case CodecId::TernGrad: return "terngrad";
        case CodecId::Drive: return "drive";
    }
    throw std::logic_error("codec_name: unknown codec");
}

CodecId codec_from_name(const std::string& name) {
    for (auto id : {CodecId::None, CodecId::MrnBinary, CodecId::MrnSigned,
                    CodecId::SignStochastic, CodecId::TopK, CodecId::TernGrad,
                    CodecId::Drive}) {
        if (name == codec_name(id)) return id;
    }
    throw std::invalid_argument("unknown codec: " + name);
}

std::vector<std::uint8_t> serialize(const Payload& p) {
    if (p.scalars.size() > 0xffff)
        throw std::invalid_argument("serialize: too many scalars");
    std::vector<std::uint8_t> out;
    out.reserve(payload_bytes(p));
    out.push_back(static_cast<std::uint8_t>(p.codec));
    out.push_back(kWireVersion);
    put_u64(out, p.dim);
    put_u64(out, p.seed);
    put_u16(out, static_cast<std::uint16_t>(p.scalars.size()));
    for (double s : p.scalars) {
        std::uint64_t bits;
        std::memcpy(&bits, &s, 8);
        put_u64(out, bits);
    }
    out.insert(out.end(), p.body.begin(), p.body.end());
    return out;
}

Payload deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderBytes)
        throw std::runtime_error("deserialize: truncated header");
    Payload p;
    const std::uint8_t raw_codec = bytes[0];
    if (raw_codec > static_cast<std::uint8_t>(CodecId::Drive))
        throw std::runtime_error("deserialize: unknown codec id " + std::to_string(raw_codec));
    p.codec = static_cast<CodecId>(raw_codec);
    if (bytes[1] != kWireVersion)
        throw std::runtime_error("deserialize: unsupported version " + std::to_string(bytes[1]));
    p.dim = get_u64(bytes, 2);
    p.seed = get_u64(bytes, 10);
    const std::uint16_t n_scalars = get_u16(bytes, 18);
    if (bytes.size() < kHeaderBytes + 8 * static_cast<std::size_t>(n_scalars))
        throw std::runtime_error("deserialize: truncated scalar block");
    p.scalars.resize(n_scalars);
    for (std::uint16_t i = 0; i < n_scalars; ++i) {
        const std::uint64_t bits = get_u64(bytes, kHeaderBytes + 8 * i);
        std::memcpy(&p.scalars[i], &bits, 8);
    }
    p.body.assign(bytes.begin() + static_cast<std::ptrdiff_t>(kHeaderBytes + 8 * n_scalars),
                  bytes.end());
    return p;
}

std::size_t payload_bytes(const Payload& p) {
    return kHeaderBytes + 8 * p.scalars.size() + p.body.size();
}

std::vector<std::uint8_t> pack_bits(const std::vector<std::uint8_t>& bits) {
    std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    return out;
}

std::vector<std::uint8_t> unpack_bits(std::span<const std::uint8_t> bytes, std::size_t n_bits) {
    if (bytes.size() < (n_bits + 7) / 8)
        throw std::runtime_error("unpack_bits: body too short");
    std::vector<std::uint8_t> bits(n_bits);
    for (std::size_t i = 0; i < n_bits; ++i)
        bits[i] = (bytes[i / 8] >> (i % 8)) & 1u;
    return bits;
}

}  // namespace mrn
