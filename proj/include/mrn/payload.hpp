#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mrn {

enum class CodecId : std::uint8_t {
    None = 0,            // dense float64 update
    MrnBinary = 1,       // seed + binary mask bits
    MrnSigned = 2,       // seed + signed mask bits
    SignStochastic = 3,  // scale + sign bits
    TopK = 4,            // (index, value) pairs
    TernGrad = 5,        // scale + 2-bit ternary codes
    Drive = 6,           // rotation seed + scale + sign bits
};

const char* codec_name(CodecId id);
CodecId codec_from_name(const std::string& name);

// Uplink message. Wire layout (all integers little-endian):
//   1 byte  codec id
//   1 byte  format version
//   8 bytes dim d
//   8 bytes seed (0 when the codec uses no shared randomness)
//   2 bytes scalar count
//   8 bytes per scalar (IEEE-754 float64)
//   body bytes (codec-specific; bit fields are packed LSB-first within
//   each byte)
struct Payload {
    CodecId codec = CodecId::None;
    std::uint64_t dim = 0;
    std::uint64_t seed = 0;
    std::vector<double> scalars;
    std::vector<std::uint8_t> body;

    bool operator==(const Payload&) const = default;
};

inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kHeaderBytes = 1 + 1 + 8 + 8 + 2;

std::vector<std::uint8_t> serialize(const Payload& p);
Payload deserialize(std::span<const std::uint8_t> bytes);  // throws on malformed input

// Exact serialized size: header + 8 * scalar count + body.
std::size_t payload_bytes(const Payload& p);

// LSB-first bit packing: bit i lives at byte i/8, position i%8.
std::vector<std::uint8_t> pack_bits(const std::vector<std::uint8_t>& bits);
std::vector<std::uint8_t> unpack_bits(std::span<const std::uint8_t> bytes, std::size_t n_bits);

}  // namespace mrn
