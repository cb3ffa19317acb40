#ifndef HELLPIR_WIRE_HPP
#define HELLPIR_WIRE_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hellpir/core.hpp"
#include "hellpir/pir.hpp"

namespace hellpir::wire {

// Framing, little-endian: u32 frame_length | u8 msg_type | payload.
// frame_length counts everything after the length word (msg_type + payload).
constexpr uint32_t kMaxFrameLength = 64u << 20;
constexpr unsigned kMaxModulusBits = 4096;
constexpr unsigned kMinModulusBits = 32;

enum class MsgType : uint8_t {
    InfoReq = 0x01,
    InfoResp = 0x02,
    PirQuery = 0x10,
    PirResp = 0x11,
    Error = 0x7F,
};

enum class ErrorCode : uint16_t {
    MalformedFrame = 1,
    UnknownMsgType = 2,
    BadTableIndex = 3,
    BadScheme = 4,
    MalformedQuery = 5,
};

struct WireError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Frame {
    MsgType type;
    std::vector<uint8_t> payload;
};

std::vector<uint8_t> encode_frame(const Frame& frame);

/// Parses one complete frame from `bytes`; throws WireError on a length
/// mismatch, oversized frame, or empty body.
Frame decode_frame(std::span<const uint8_t> bytes);

struct InfoResp {
    uint16_t version = 0;
    uint8_t hash_id = 0;
    uint8_t length = 0;
    std::string alphabet;
    uint32_t table_count = 0;
    uint32_t bucket_count = 0;
    uint64_t dp_modulus = 0;
    uint16_t record_size_bits = 0;
};

std::vector<uint8_t> encode_info_resp(const InfoResp& info);
InfoResp decode_info_resp(std::span<const uint8_t> payload);

struct PirQueryMsg {
    uint32_t table_index = 0;
    pir::Query query;
};

// Classic query payloads carry modulus_bits u16 | modulus | elements, every
// big integer as fixed-width unsigned big-endian bytes. Element count is
// implied by the remaining payload length and must divide it exactly.
std::vector<uint8_t> encode_pir_query(const PirQueryMsg& msg);
PirQueryMsg decode_pir_query(std::span<const uint8_t> payload);

/// Response payloads need the scheme's element width to encode; classic
/// widths come from the query's modulus_bits.
std::vector<uint8_t> encode_pir_resp(const pir::Response& response, unsigned modulus_bits);
pir::Response decode_pir_resp(std::span<const uint8_t> payload, unsigned modulus_bits);

struct ErrorMsg {
    ErrorCode code;
    std::string message;
};

std::vector<uint8_t> encode_error(const ErrorMsg& error);
ErrorMsg decode_error(std::span<const uint8_t> payload);

}  // namespace hellpir::wire

#endif
