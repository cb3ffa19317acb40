#ifndef HELLPIR_CRACKER_HPP
#define HELLPIR_CRACKER_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hellpir/pir.hpp"
#include "hellpir/provider.hpp"
#include "hellpir/tables.hpp"
#include "hellpir/wire.hpp"

namespace hellpir {

struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParamsMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Request/response transport to a provider. Implementations count the raw
/// frame bytes moved in each direction.
class ProviderChannel {
public:
    virtual ~ProviderChannel() = default;
    virtual wire::Frame roundtrip(const wire::Frame& request) = 0;

    uint64_t bytes_up() const { return bytes_up_; }
    uint64_t bytes_down() const { return bytes_down_; }

protected:
    uint64_t bytes_up_ = 0;
    uint64_t bytes_down_ = 0;
};

/// Calls a Provider in the same process through its byte-level entry point.
class InProcessChannel : public ProviderChannel {
public:
    explicit InProcessChannel(Provider& provider) : provider_(provider) {}
    wire::Frame roundtrip(const wire::Frame& request) override;

private:
    Provider& provider_;
};

/// Framed-TCP client. Throws TransportError on connect or I/O failure.
class TcpChannel : public ProviderChannel {
public:
    TcpChannel(const std::string& host, uint16_t port);
    ~TcpChannel() override;

    TcpChannel(const TcpChannel&) = delete;
    TcpChannel& operator=(const TcpChannel&) = delete;

    wire::Frame roundtrip(const wire::Frame& request) override;

private:
    int fd_ = -1;
};

struct CrackTrace {
    uint32_t queries_sent = 0;       // always M after a completed attempt
    uint32_t endpoints_cycled = 0;   // candidate walks that hit the cutoff
    uint32_t starts_found = 0;
    uint32_t chains_walked = 0;
    uint64_t bytes_up = 0;
    uint64_t bytes_down = 0;
    // 'F' per fetch, 'W' per chain walk; all fetches precede all walks.
    std::string events;
};

/// One cracking client bound to a provider. Fetches the provider parameters
/// on construction and refuses mismatched expectations. A session runs one
/// attempt at a time; the fetch phase always issues exactly one PIR query
/// per table, cycling candidates included (those go to a dummy bucket), so
/// the query pattern carries nothing about the target.
class CrackSession {
public:
    /// `seed` drives classic-query blinding and key generation (ignored for
    /// the naive scheme). Throws ParamsMismatch when the provider's INFO
    /// disagrees with `expected_hash` or is internally unusable.
    CrackSession(ProviderChannel& channel, pir::Scheme scheme, HashAlgorithm expected_hash,
                 unsigned modulus_bits = 512, uint64_t seed = 1);

    const wire::InfoResp& info() const { return info_; }
    const PasswordSpace& space() const { return space_; }
    uint32_t table_count() const { return info_.table_count; }

    /// Endpoint fingerprint of the chain the target would lie on, per table;
    /// nullopt marks a cycling walk.
    std::vector<std::optional<uint64_t>> compute_candidate_endpoints(
        std::span<const uint8_t> target_digest) const;

    /// One PIR query for the bucket the fingerprint hashes to; nullopt when
    /// the bucket is empty or holds a different endpoint.
    std::optional<uint64_t> fetch_start(uint64_t end_fingerprint, uint32_t table_index);

    /// The full crack attempt: all M candidate endpoints, then all M PIR
    /// fetches, then chain walks. Every returned password verifies against
    /// the target before being handed back.
    std::optional<std::string> crack(std::span<const uint8_t> target_digest);

    const CrackTrace& last_trace() const { return trace_; }

private:
    void issue_dummy_query(uint32_t table_index);
    pir::Response send_query(uint32_t table_index, pir::Query query);

    ProviderChannel& channel_;
    pir::Scheme scheme_;
    HashProvider hasher_;
    wire::InfoResp info_;
    PasswordSpace space_;
    ChainParams chain_;
    pir::QraKey key_;   // classic only
    pir::Rng rng_;
    CrackTrace trace_;
    uint64_t channel_up_base_ = 0;
    uint64_t channel_down_base_ = 0;
};

/// Non-PIR reference: answers a crack attempt straight from a loaded table
/// set with the same chain logic. The differential oracle for the PIR paths.
std::optional<std::string> lookup_local(const TableSet& set,
                                        std::span<const uint8_t> target_digest);

}  // namespace hellpir

#endif
