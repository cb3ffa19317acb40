#ifndef HELLPIR_CORE_HPP
#define HELLPIR_CORE_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace hellpir {

// SplitMix64 finalizer. Used for per-table salts and for remixing endpoint
// fingerprints before bucket placement.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// The set of candidate passwords: all strings of a fixed length over an
/// ordered alphabet. Defines the index <-> password bijection on [0, N).
class PasswordSpace {
public:
    // Throws std::invalid_argument on duplicate characters, alphabet size
    // outside [2, 64], zero length, or N overflowing 64 bits.
    PasswordSpace(std::string alphabet, unsigned length);

    uint64_t size() const { return size_; }  // N = |alphabet|^length
    const std::string& alphabet() const { return alphabet_; }
    unsigned length() const { return length_; }

    /// Mixed-radix expansion of `index`, most significant digit first.
    /// Throws std::out_of_range for index >= size().
    std::string index_to_password(uint64_t index) const;
    // Allocation-free variant; `out` must hold length() bytes.
    void index_to_password(uint64_t index, char* out) const;

    /// Inverse of index_to_password. Throws std::invalid_argument on a
    /// password of the wrong length or with characters outside the alphabet.
    uint64_t password_to_index(std::string_view password) const;

private:
    std::string alphabet_;
    unsigned length_;
    uint64_t size_;
    std::array<int16_t, 256> char_index_;  // -1 for bytes not in the alphabet
};

enum class HashAlgorithm : uint8_t {
    Md5 = 1,
};

/// One-way function H used for the chains. Deterministic; digest_size >= 8
/// because the chain logic consumes an 8-byte digest prefix.
class HashProvider {
public:
    explicit HashProvider(HashAlgorithm algorithm);

    HashAlgorithm algorithm() const { return algorithm_; }
    size_t digest_size() const { return digest_size_; }

    // `out` must hold digest_size() bytes.
    void hash(std::string_view input, uint8_t* out) const;

private:
    HashAlgorithm algorithm_;
    size_t digest_size_;
};

constexpr size_t kMaxDigestSize = 64;

/// Chain-walk tuning shared by table building and cracking.
/// In the standard configuration dp_modulus = M (average chain length M)
/// and max_chain_len = 10*M (cycle cutoff).
struct ChainParams {
    uint64_t dp_modulus = 1;
    uint32_t max_chain_len = 1;

    static ChainParams standard(uint32_t m) { return {m, 10 * m}; }
};

/// Number of tables (and reduction functions, and average chain length)
/// needed to reach success probability `alpha` over `n_passwords` candidates:
/// ceil(cbrt(-ln(1 - alpha) * n_passwords)), at least 2.
/// Throws std::invalid_argument when alpha is outside (0, 1) or
/// n_passwords < 8.
uint32_t derive_m(double alpha, uint64_t n_passwords);

// Little-endian u64 prefix of a digest; the digest's fingerprint.
inline uint64_t digest_fingerprint(const uint8_t* digest) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(digest[i]) << (8 * i);
    return v;
}

inline uint64_t table_salt(uint32_t table_index) { return splitmix64(table_index); }

/// Reduction function r_i: maps a digest back into the password space by
/// XORing the fingerprint with the table salt and reducing mod N.
/// `out` must hold space.length() bytes.
void reduce(const uint8_t* digest, uint32_t table_index, const PasswordSpace& space, char* out);

inline bool is_distinguished(const uint8_t* digest, uint64_t dp_modulus) {
    return digest_fingerprint(digest) % dp_modulus == 0;
}

struct WalkResult {
    uint64_t end_fingerprint;
    uint32_t steps;  // number of hash applications
};

/// Walks the chain starting at password index `start_index` under reduction
/// `table_index` until a distinguished digest appears. Returns nullopt when
/// max_chain_len hash applications pass without one (a presumed cycle).
std::optional<WalkResult> walk_to_endpoint(uint64_t start_index, uint32_t table_index,
                                           const ChainParams& params, const PasswordSpace& space,
                                           const HashProvider& hasher);

/// Endpoint of the chain that `digest` lies on, under reduction `table_index`.
/// The digest itself may already be distinguished (zero steps); otherwise the
/// walk continues through reduce/hash. Used on the cracking side, where the
/// target hash rather than a chain start is in hand.
std::optional<WalkResult> walk_digest_to_endpoint(const uint8_t* digest, uint32_t table_index,
                                                  const ChainParams& params,
                                                  const PasswordSpace& space,
                                                  const HashProvider& hasher);

/// Walks the chain from `start_index` looking for a password whose hash is
/// `target_digest`. Stops after the chain's distinguished endpoint or
/// max_chain_len steps; nullopt covers both "not on this chain" and the
/// false-alarm case (endpoint matched but the preimage is absent).
std::optional<std::string> find_preimage(uint64_t start_index, uint32_t table_index,
                                         std::span<const uint8_t> target_digest,
                                         const ChainParams& params, const PasswordSpace& space,
                                         const HashProvider& hasher);

}  // namespace hellpir

#endif
