#include "hellpir/wire.hpp"

#include "hellpir/bytes.hpp"

namespace hellpir::wire {

std::vector<uint8_t> encode_frame(const Frame& frame) {
    ByteWriter w;
    w.u32(static_cast<uint32_t>(1 + frame.payload.size()));
    w.u8(static_cast<uint8_t>(frame.type));
    w.raw(frame.payload);
    return w.take();
}

Frame decode_frame(std::span<const uint8_t> bytes) {
    try {
        ByteReader r(bytes);
        uint32_t len = r.u32();
        if (len == 0) throw WireError("empty frame body");
        if (len > kMaxFrameLength) throw WireError("frame exceeds the size cap");
        if (r.remaining() != len) throw WireError("frame length mismatch");
        Frame frame;
        frame.type = static_cast<MsgType>(r.u8());
        auto payload = r.raw(len - 1);
        frame.payload.assign(payload.begin(), payload.end());
        return frame;
    } catch (const ShortRead&) {
        throw WireError("truncated frame");
    }
}

std::vector<uint8_t> encode_info_resp(const InfoResp& info) {
    ByteWriter w;
    w.u16(info.version);
    w.u8(info.hash_id);
    w.u8(info.length);
    w.u8(static_cast<uint8_t>(info.alphabet.size()));
    w.raw(info.alphabet);
    w.u32(info.table_count);
    w.u32(info.bucket_count);
    w.u64(info.dp_modulus);
    w.u16(info.record_size_bits);
    return w.take();
}

InfoResp decode_info_resp(std::span<const uint8_t> payload) {
    try {
        ByteReader r(payload);
        InfoResp info;
        info.version = r.u16();
        info.hash_id = r.u8();
        info.length = r.u8();
        uint8_t alphabet_len = r.u8();
        info.alphabet = r.str(alphabet_len);
        info.table_count = r.u32();
        info.bucket_count = r.u32();
        info.dp_modulus = r.u64();
        info.record_size_bits = r.u16();
        if (!r.done()) throw WireError("trailing bytes in info response");
        return info;
    } catch (const ShortRead&) {
        throw WireError("truncated info response");
    }
}

std::vector<uint8_t> encode_pir_query(const PirQueryMsg& msg) {
    ByteWriter w;
    w.u32(msg.table_index);
    w.u8(static_cast<uint8_t>(msg.query.scheme));
    if (msg.query.scheme == pir::Scheme::Classic) {
        const size_t width = pir::element_width(msg.query.modulus_bits);
        w.u16(static_cast<uint16_t>(msg.query.modulus_bits));
        std::vector<uint8_t> block;
        pir::append_fixed(msg.query.modulus, width, block);
        for (const auto& e : msg.query.elements) pir::append_fixed(e, width, block);
        w.raw(block);
    }
    return w.take();
}

PirQueryMsg decode_pir_query(std::span<const uint8_t> payload) {
    try {
        ByteReader r(payload);
        PirQueryMsg msg;
        msg.table_index = r.u32();
        uint8_t scheme = r.u8();
        switch (scheme) {
            case static_cast<uint8_t>(pir::Scheme::Naive):
                msg.query = pir::naive_query();
                if (!r.done()) throw WireError("trailing bytes in naive query");
                return msg;
            case static_cast<uint8_t>(pir::Scheme::Classic):
                break;
            default:
                throw WireError("unknown PIR scheme " + std::to_string(scheme));
        }
        msg.query.scheme = pir::Scheme::Classic;
        msg.query.modulus_bits = r.u16();
        if (msg.query.modulus_bits < kMinModulusBits || msg.query.modulus_bits > kMaxModulusBits)
            throw WireError("modulus size outside [32, 4096] bits");
        const size_t width = pir::element_width(msg.query.modulus_bits);
        msg.query.modulus = pir::parse_fixed(r.raw(width));
        if (r.remaining() % width != 0) throw WireError("query element block misaligned");
        size_t count = r.remaining() / width;
        msg.query.elements.reserve(count);
        for (size_t i = 0; i < count; ++i) msg.query.elements.push_back(pir::parse_fixed(r.raw(width)));
        return msg;
    } catch (const ShortRead&) {
        throw WireError("truncated PIR query");
    }
}

std::vector<uint8_t> encode_pir_resp(const pir::Response& response, unsigned modulus_bits) {
    ByteWriter w;
    w.u8(static_cast<uint8_t>(response.scheme));
    if (response.scheme == pir::Scheme::Naive) {
        w.raw(response.database);
    } else {
        const size_t width = pir::element_width(modulus_bits);
        std::vector<uint8_t> block;
        block.reserve(width * response.elements.size());
        for (const auto& e : response.elements) pir::append_fixed(e, width, block);
        w.raw(block);
    }
    return w.take();
}

pir::Response decode_pir_resp(std::span<const uint8_t> payload, unsigned modulus_bits) {
    try {
        ByteReader r(payload);
        pir::Response response;
        uint8_t scheme = r.u8();
        if (scheme == static_cast<uint8_t>(pir::Scheme::Naive)) {
            response.scheme = pir::Scheme::Naive;
            auto rest = r.raw(r.remaining());
            response.database.assign(rest.begin(), rest.end());
            return response;
        }
        if (scheme != static_cast<uint8_t>(pir::Scheme::Classic))
            throw WireError("unknown PIR scheme " + std::to_string(scheme));
        response.scheme = pir::Scheme::Classic;
        const size_t width = pir::element_width(modulus_bits);
        if (r.remaining() % width != 0) throw WireError("response element block misaligned");
        size_t count = r.remaining() / width;
        response.elements.reserve(count);
        for (size_t i = 0; i < count; ++i) response.elements.push_back(pir::parse_fixed(r.raw(width)));
        return response;
    } catch (const ShortRead&) {
        throw WireError("truncated PIR response");
    }
}

std::vector<uint8_t> encode_error(const ErrorMsg& error) {
    ByteWriter w;
    w.u16(static_cast<uint16_t>(error.code));
    w.raw(error.message);
    return w.take();
}

ErrorMsg decode_error(std::span<const uint8_t> payload) {
    try {
        ByteReader r(payload);
        ErrorMsg error;
        error.code = static_cast<ErrorCode>(r.u16());
        error.message = r.str(r.remaining());
        return error;
    } catch (const ShortRead&) {
        throw WireError("truncated error frame");
    }
}

}  // namespace hellpir::wire
