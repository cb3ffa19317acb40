#ifndef HELLPIR_TABLES_HPP
#define HELLPIR_TABLES_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hellpir/core.hpp"

namespace hellpir {

/// Everything needed to rebuild a table set bit-identically.
struct TableParams {
    PasswordSpace space;
    HashAlgorithm hash;
    double alpha;
    double beta;
    uint32_t table_count;   // M: tables = reduction functions = average chain length
    uint32_t bucket_count;  // ceil(beta * M), strictly greater than M
    ChainParams chain;      // dp_modulus = M, max_chain_len = 10 * M

    /// Standard construction: M from derive_m, dp_modulus = M,
    /// max_chain_len = 10 * M. Throws std::invalid_argument on beta <= 1 or
    /// any constraint violation from the underlying pieces.
    static TableParams derive(std::string alphabet, unsigned length, double alpha, double beta,
                              HashAlgorithm hash);

    uint64_t n_passwords() const { return space.size(); }
};

/// One closed-hash bucket: a chain's start index and the fingerprint of its
/// distinguished endpoint. EMPTY is all-0xFF in both fields; a valid record
/// never carries start_index 2^64-1.
struct BucketRecord {
    static constexpr uint64_t kEmptyField = UINT64_MAX;

    uint64_t start_index = kEmptyField;
    uint64_t end_fingerprint = kEmptyField;

    bool is_empty() const { return start_index == kEmptyField; }
    bool operator==(const BucketRecord&) const = default;
};

constexpr uint32_t kRecordSizeBytes = 16;
constexpr uint32_t kRecordSizeBits = 128;

struct HellmanTable {
    uint32_t table_index = 0;
    std::vector<BucketRecord> buckets;  // bucket_count entries
    uint32_t chain_count = 0;           // always M after a successful build
};

struct BuildStats {
    uint64_t chains_attempted = 0;
    uint64_t chains_discarded_collision = 0;
    uint64_t chains_discarded_cycle = 0;

    BuildStats& operator+=(const BuildStats& o) {
        chains_attempted += o.chains_attempted;
        chains_discarded_collision += o.chains_discarded_collision;
        chains_discarded_cycle += o.chains_discarded_cycle;
        return *this;
    }
};

struct TableSet {
    TableParams params;
    std::vector<HellmanTable> tables;
};

// Raised when a table cannot collect M chains from the whole start-index
// sweep; signals a beta/alpha misconfiguration for the space size.
struct ExhaustedSpace : std::runtime_error {
    uint32_t table_index;
    explicit ExhaustedSpace(uint32_t index)
        : std::runtime_error("start indices exhausted before table " + std::to_string(index) +
                             " collected its chains"),
          table_index(index) {}
};

struct CorruptFile : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvariantViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bucket position for an endpoint fingerprint. Fingerprints are remixed
/// first: distinguished values are all congruent mod M, and raw modulo
/// would cluster them.
inline uint32_t bucket_for(uint64_t end_fingerprint, uint32_t bucket_count) {
    return static_cast<uint32_t>(splitmix64(end_fingerprint) % bucket_count);
}

/// Sweeps chain starts 0, 1, 2, ... walking each to its distinguished
/// endpoint; discards cycles and bucket collisions; stops once M chains are
/// stored. Deterministic: identical params give a bit-identical table.
/// Accumulates into `stats`; throws ExhaustedSpace as documented above.
HellmanTable build_table(uint32_t table_index, const TableParams& params, BuildStats& stats);

/// Builds tables 0..M-1, optionally on `threads` worker threads. Output is
/// ordered by table_index regardless of completion order.
std::vector<HellmanTable> build_all(const TableParams& params, BuildStats& stats,
                                    unsigned threads = 1);

// .hpt layout, little-endian:
//   magic "HPT1" | version u16 | hash_id u8 | length u8 | alphabet_len u8 |
//   alphabet | alpha f64 | beta f64 | M u32 | bucket_count u32 |
//   dp_modulus u64 | max_chain_len u32 |
//   M tables, each: table_index u32 | bucket_count x (start u64 | end u64)
constexpr char kTablesMagic[4] = {'H', 'P', 'T', '1'};
constexpr uint16_t kTablesVersion = 1;

std::vector<uint8_t> serialize(const TableParams& params, const std::vector<HellmanTable>& tables);

/// Parses and validates a serialized table set. Throws CorruptFile on bad
/// magic/version/length and InvariantViolation when bucket contents fail
/// the occupancy, placement, distinguishedness, or range checks.
TableSet deserialize(std::span<const uint8_t> bytes);

size_t serialized_size(const TableParams& params);

void save_tables(const std::filesystem::path& path, const TableParams& params,
                 const std::vector<HellmanTable>& tables);
TableSet load_tables(const std::filesystem::path& path);

}  // namespace hellpir

#endif
