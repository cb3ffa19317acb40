#ifndef HELLPIR_PIR_HPP
#define HELLPIR_PIR_HPP

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace hellpir::pir {

using Bigint = mpz_class;

struct MalformedPayload : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- number-theory substrate (GMP-backed) ---

/// Jacobi symbol (a/n) for odd n > 0: -1, 0, or +1.
int jacobi(const Bigint& a, const Bigint& n);

/// base^exponent mod modulus.
Bigint mod_exp(const Bigint& base, const Bigint& exponent, const Bigint& modulus);

Bigint mod_mul(const Bigint& a, const Bigint& b, const Bigint& modulus);

/// Deterministic SplitMix64 stream, used for key generation and query
/// blinding. Distinct seeds give disjoint streams. Not shared across
/// threads; supply one per call site.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64();
    /// Uniform in [0, bound), bound > 0, by rejection sampling.
    Bigint below(const Bigint& bound);
    /// Exactly `bits` bits: top bit always set, remainder uniform.
    Bigint odd_with_top_bits(unsigned bits);

private:
    uint64_t state_;
};

/// Trapdoor for the quadratic-residuosity scheme: a Blum modulus n = p*q
/// (p, q distinct primes congruent to 3 mod 4, secret) and a public
/// non-residue u with Jacobi(u, n) = +1.
struct QraKey {
    Bigint p;  // secret
    Bigint q;  // secret
    Bigint n;  // public modulus
    Bigint u;  // public non-residue, Jacobi +1
    unsigned modulus_bits = 0;
};

/// Deterministic for a given seed. Primes pass 40 Miller-Rabin rounds; u is
/// found by sampling Jacobi(+1) candidates and rejecting residues mod p via
/// Euler's criterion. modulus_bits must be at least 32 (32 is the fast test
/// configuration; 512 is the default operational size).
QraKey keygen(unsigned modulus_bits, uint64_t seed);

/// Consistency check for a key assembled from known primes (test support).
bool key_is_valid(const QraKey& key);

// --- databases and payloads ---

/// Flat array of fixed-size records, the server-side view of one table.
struct PirDatabase {
    uint32_t record_size_bits = 0;  // multiple of 8
    uint32_t record_count = 0;
    std::vector<uint8_t> records;   // record_count * record_size_bits / 8 bytes

    size_t record_bytes() const { return record_size_bits / 8; }
    std::span<const uint8_t> record(uint32_t index) const {
        return std::span<const uint8_t>(records).subspan(index * record_bytes(), record_bytes());
    }
};

enum class Scheme : uint8_t {
    Naive = 0,
    Classic = 1,
};

/// Scheme-tagged query payload. Classic queries carry one group element per
/// database record (all with Jacobi symbol +1) plus the modulus they live in;
/// naive queries carry nothing beyond the tag.
struct Query {
    Scheme scheme = Scheme::Naive;
    unsigned modulus_bits = 0;       // classic only
    Bigint modulus;                  // classic only
    std::vector<Bigint> elements;    // classic only, record_count entries
};

struct Response {
    Scheme scheme = Scheme::Naive;
    std::vector<uint8_t> database;   // naive: the full record array
    std::vector<Bigint> elements;    // classic: record_size_bits products
};

struct ServerStats {
    uint64_t modular_multiplications = 0;
};

// --- classic (quadratic residuosity) scheme ---

/// Element j is a random square r^2 mod n, except at the target position
/// where it is u * r^2 (a non-residue). Every element has Jacobi symbol +1,
/// so without the factorization the target is not identifiable.
Query classic_query(uint32_t target_record, uint32_t record_count, const QraKey& key, Rng& rng);

/// For each bit column b of the database: the product of the query elements
/// at records whose bit b is 1 (empty product = 1). Touches every record;
/// the work depends only on the database contents, never on the hidden
/// target. Throws MalformedPayload on a count mismatch or an element
/// outside (0, n).
Response classic_answer(const PirDatabase& db, const Query& query, ServerStats* stats = nullptr);

/// Bit b is 0 iff the b-th product is a quadratic residue mod n, decided by
/// Euler's criterion mod p and mod q. Bits are packed little-endian.
std::vector<uint8_t> classic_decode(const Response& response, const QraKey& key,
                                    uint32_t record_size_bits);

// --- naive scheme (ship the whole database) ---

Query naive_query();
Response naive_answer(const PirDatabase& db, const Query& query);
std::vector<uint8_t> naive_decode(const Response& response, uint32_t target_record,
                                  uint32_t record_size_bits, uint32_t record_count);

// --- wire encoding: unsigned big-endian, fixed width per element ---

inline size_t element_width(unsigned modulus_bits) { return (modulus_bits + 7) / 8; }

void append_fixed(const Bigint& value, size_t width, std::vector<uint8_t>& out);
Bigint parse_fixed(std::span<const uint8_t> bytes);

}  // namespace hellpir::pir

#endif
