#ifndef HELLPIR_BYTES_HPP
#define HELLPIR_BYTES_HPP

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hellpir {

// Thrown by ByteReader when a read runs past the end of the buffer.
struct ShortRead : std::runtime_error {
    ShortRead() : std::runtime_error("short read: truncated buffer") {}
};

// Little-endian append-only byte buffer.
class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) { append_le(v, 2); }
    void u32(uint32_t v) { append_le(v, 4); }
    void u64(uint64_t v) { append_le(v, 8); }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void raw(std::span<const uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
    void raw(const std::string& s) {
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    size_t size() const { return buf_.size(); }
    // Patches a previously written u32 at `pos` (used for frame lengths).
    void patch_u32(size_t pos, uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_[pos + i] = static_cast<uint8_t>(v >> (8 * i));
    }
    std::vector<uint8_t> take() { return std::move(buf_); }
    const std::vector<uint8_t>& bytes() const { return buf_; }

private:
    void append_le(uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    std::vector<uint8_t> buf_;
};

// Little-endian cursor over a byte span. Reads throw ShortRead on underflow.
class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t u8() { return static_cast<uint8_t>(read_le(1)); }
    uint16_t u16() { return static_cast<uint16_t>(read_le(2)); }
    uint32_t u32() { return static_cast<uint32_t>(read_le(4)); }
    uint64_t u64() { return read_le(8); }
    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::span<const uint8_t> raw(size_t n) {
        need(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::string str(size_t n) {
        auto s = raw(n);
        return std::string(s.begin(), s.end());
    }
    size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }

private:
    void need(size_t n) const {
        if (data_.size() - pos_ < n) throw ShortRead{};
    }
    uint64_t read_le(int n) {
        need(n);
        uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += n;
        return v;
    }
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

inline uint64_t load_le64(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
    return v;
}

inline void store_le64(uint64_t v, uint8_t* p) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<uint8_t>(v >> (8 * i));
}

}  // namespace hellpir

#endif
