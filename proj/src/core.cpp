#include "hellpir/core.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <stdexcept>

namespace hellpir {

PasswordSpace::PasswordSpace(std::string alphabet, unsigned length)
    : alphabet_(std::move(alphabet)), length_(length) {
    if (alphabet_.size() < 2 || alphabet_.size() > 64)
        throw std::invalid_argument("alphabet size must be in [2, 64]");
    if (length_ == 0 || length_ > 255) throw std::invalid_argument("password length must be in [1, 255]");
    char_index_.fill(-1);
    for (size_t i = 0; i < alphabet_.size(); ++i) {
        auto c = static_cast<unsigned char>(alphabet_[i]);
        if (char_index_[c] != -1) throw std::invalid_argument("alphabet characters must be unique");
        char_index_[c] = static_cast<int16_t>(i);
    }
    size_ = 1;
    for (unsigned i = 0; i < length_; ++i) {
        if (size_ > UINT64_MAX / alphabet_.size())
            throw std::invalid_argument("password space exceeds 64 bits");
        size_ *= alphabet_.size();
    }
}

void PasswordSpace::index_to_password(uint64_t index, char* out) const {
    const uint64_t base = alphabet_.size();
    for (unsigned pos = length_; pos-- > 0;) {
        out[pos] = alphabet_[index % base];
        index /= base;
    }
}

std::string PasswordSpace::index_to_password(uint64_t index) const {
    if (index >= size_) throw std::out_of_range("password index exhausts the space");
    std::string out(length_, '\0');
    index_to_password(index, out.data());
    return out;
}

uint64_t PasswordSpace::password_to_index(std::string_view password) const {
    if (password.size() != length_) throw std::invalid_argument("password has the wrong length");
    uint64_t index = 0;
    for (char ch : password) {
        int16_t digit = char_index_[static_cast<unsigned char>(ch)];
        if (digit < 0) throw std::invalid_argument("password character outside the alphabet");
        index = index * alphabet_.size() + static_cast<uint64_t>(digit);
    }
    return index;
}

HashProvider::HashProvider(HashAlgorithm algorithm) : algorithm_(algorithm) {
    switch (algorithm_) {
        case HashAlgorithm::Md5:
            digest_size_ = 16;
            break;
        default:
            throw std::invalid_argument("unknown hash algorithm");
    }
}

void HashProvider::hash(std::string_view input, uint8_t* out) const {
    static const EVP_MD* md5 = EVP_md5();
    unsigned int len = 0;
    EVP_Digest(input.data(), input.size(), out, &len, md5, nullptr);
}

uint32_t derive_m(double alpha, uint64_t n_passwords) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (n_passwords < 8) throw std::invalid_argument("password space too small");
    double x = std::cbrt(-std::log1p(-alpha) * static_cast<double>(n_passwords));
    // Relative epsilon keeps exact-cube inputs (e.g. alpha = 1 - e^-1,
    // N = 1000) from ceiling up through a 1-ulp excess.
    auto m = static_cast<uint64_t>(std::ceil(x - x * 1e-12));
    if (m < 2) m = 2;
    if (m > UINT32_MAX) throw std::invalid_argument("alpha/space combination overflows M");
    return static_cast<uint32_t>(m);
}

void reduce(const uint8_t* digest, uint32_t table_index, const PasswordSpace& space, char* out) {
    uint64_t index = (digest_fingerprint(digest) ^ table_salt(table_index)) % space.size();
    space.index_to_password(index, out);
}

std::optional<WalkResult> walk_to_endpoint(uint64_t start_index, uint32_t table_index,
                                           const ChainParams& params, const PasswordSpace& space,
                                           const HashProvider& hasher) {
    std::string password(space.length(), '\0');
    uint8_t digest[kMaxDigestSize];
    space.index_to_password(start_index, password.data());
    for (uint32_t steps = 1; steps <= params.max_chain_len; ++steps) {
        hasher.hash(password, digest);
        if (is_distinguished(digest, params.dp_modulus))
            return WalkResult{digest_fingerprint(digest), steps};
        reduce(digest, table_index, space, password.data());
    }
    return std::nullopt;  // cycle assumed
}

std::optional<WalkResult> walk_digest_to_endpoint(const uint8_t* digest, uint32_t table_index,
                                                  const ChainParams& params,
                                                  const PasswordSpace& space,
                                                  const HashProvider& hasher) {
    if (is_distinguished(digest, params.dp_modulus))
        return WalkResult{digest_fingerprint(digest), 0};
    std::string password(space.length(), '\0');
    uint8_t current[kMaxDigestSize];
    reduce(digest, table_index, space, password.data());
    for (uint32_t steps = 1; steps <= params.max_chain_len; ++steps) {
        hasher.hash(password, current);
        if (is_distinguished(current, params.dp_modulus))
            return WalkResult{digest_fingerprint(current), steps};
        reduce(current, table_index, space, password.data());
    }
    return std::nullopt;
}

std::optional<std::string> find_preimage(uint64_t start_index, uint32_t table_index,
                                         std::span<const uint8_t> target_digest,
                                         const ChainParams& params, const PasswordSpace& space,
                                         const HashProvider& hasher) {
    std::string password(space.length(), '\0');
    uint8_t digest[kMaxDigestSize];
    const size_t digest_size = hasher.digest_size();
    space.index_to_password(start_index, password.data());
    for (uint32_t steps = 1; steps <= params.max_chain_len; ++steps) {
        hasher.hash(password, digest);
        if (target_digest.size() == digest_size &&
            std::equal(target_digest.begin(), target_digest.end(), digest))
            return password;
        if (is_distinguished(digest, params.dp_modulus)) break;  // endpoint passed
        reduce(digest, table_index, space, password.data());
    }
    return std::nullopt;
}

}  // namespace hellpir
