#include "hellpir/cracker.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "hellpir/bytes.hpp"

namespace hellpir {

wire::Frame InProcessChannel::roundtrip(const wire::Frame& request) {
    auto request_bytes = wire::encode_frame(request);
    bytes_up_ += request_bytes.size();
    auto reply_bytes = provider_.handle_frame(request_bytes);
    bytes_down_ += reply_bytes.size();
    return wire::decode_frame(reply_bytes);
}

TcpChannel::TcpChannel(const std::string& host, uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* results = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &results) != 0)
        throw TransportError("cannot resolve " + host);
    int fd = -1;
    for (addrinfo* ai = results; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(results);
    if (fd < 0) throw TransportError("cannot connect to " + host + ":" + std::to_string(port));
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    fd_ = fd;
}

TcpChannel::~TcpChannel() {
    if (fd_ >= 0) ::close(fd_);
}

wire::Frame TcpChannel::roundtrip(const wire::Frame& request) {
    auto request_bytes = wire::encode_frame(request);
    const uint8_t* data = request_bytes.data();
    size_t len = request_bytes.size();
    while (len > 0) {
        ssize_t n = ::send(fd_, data, len, MSG_NOSIGNAL);
        if (n <= 0) {
            if (n < 0 && errno == EINTR) continue;
            throw TransportError("send failed");
        }
        data += n;
        len -= static_cast<size_t>(n);
    }
    bytes_up_ += request_bytes.size();

    auto read_exact = [this](uint8_t* out, size_t count) {
        size_t got = 0;
        while (got < count) {
            ssize_t n = ::recv(fd_, out + got, count - got, 0);
            if (n == 0) throw TransportError("connection closed mid-frame");
            if (n < 0) {
                if (errno == EINTR) continue;
                throw TransportError("recv failed");
            }
            got += static_cast<size_t>(n);
        }
    };
    uint8_t len_bytes[4];
    read_exact(len_bytes, 4);
    uint32_t frame_len = 0;
    for (int i = 0; i < 4; ++i) frame_len |= static_cast<uint32_t>(len_bytes[i]) << (8 * i);
    if (frame_len == 0 || frame_len > wire::kMaxFrameLength)
        throw TransportError("peer sent an unframeable length");
    std::vector<uint8_t> frame(4 + frame_len);
    std::memcpy(frame.data(), len_bytes, 4);
    read_exact(frame.data() + 4, frame_len);
    bytes_down_ += frame.size();
    return wire::decode_frame(frame);
}

namespace {

wire::InfoResp fetch_info(ProviderChannel& channel) {
    auto reply = channel.roundtrip({wire::MsgType::InfoReq, {}});
    if (reply.type != wire::MsgType::InfoResp)
        throw ParamsMismatch("provider did not answer the parameter request");
    return wire::decode_info_resp(reply.payload);
}

PasswordSpace space_from_info(const wire::InfoResp& info) {
    try {
        return PasswordSpace(info.alphabet, info.length);
    } catch (const std::invalid_argument& e) {
        throw ParamsMismatch(std::string("provider advertises an unusable space: ") + e.what());
    }
}

}  // namespace

CrackSession::CrackSession(ProviderChannel& channel, pir::Scheme scheme,
                           HashAlgorithm expected_hash, unsigned modulus_bits, uint64_t seed)
    : channel_(channel),
      scheme_(scheme),
      hasher_(expected_hash),
      info_(fetch_info(channel)),
      space_(space_from_info(info_)),
      rng_(splitmix64(seed)) {  // keygen consumes the raw seed's stream
    if (info_.version != kTablesVersion) throw ParamsMismatch("provider protocol version mismatch");
    if (info_.hash_id != static_cast<uint8_t>(expected_hash))
        throw ParamsMismatch("provider tables use a different hash");
    if (info_.record_size_bits != kRecordSizeBits)
        throw ParamsMismatch("provider record size is not a bucket record");
    if (info_.table_count == 0 || info_.bucket_count <= info_.table_count)
        throw ParamsMismatch("provider table geometry is invalid");
    if (info_.dp_modulus == 0) throw ParamsMismatch("provider distinguished-point modulus is zero");
    // The cycle cutoff is not part of INFO; 10x the average chain length
    // matches the build-side default.
    chain_ = ChainParams{info_.dp_modulus, 10 * info_.table_count};
    if (scheme_ == pir::Scheme::Classic) key_ = pir::keygen(modulus_bits, seed);
}

std::vector<std::optional<uint64_t>> CrackSession::compute_candidate_endpoints(
    std::span<const uint8_t> target_digest) const {
    std::vector<std::optional<uint64_t>> endpoints(info_.table_count);
    for (uint32_t i = 0; i < info_.table_count; ++i) {
        auto walk = walk_digest_to_endpoint(target_digest.data(), i, chain_, space_, hasher_);
        if (walk) endpoints[i] = walk->end_fingerprint;
    }
    return endpoints;
}

pir::Response CrackSession::send_query(uint32_t table_index, pir::Query query) {
    unsigned modulus_bits = query.modulus_bits;
    wire::PirQueryMsg msg{table_index, std::move(query)};
    auto reply = channel_.roundtrip({wire::MsgType::PirQuery, wire::encode_pir_query(msg)});
    trace_.queries_sent++;
    trace_.events.push_back('F');
    if (reply.type == wire::MsgType::Error) {
        auto err = wire::decode_error(reply.payload);
        throw TransportError("provider rejected the query: " + err.message);
    }
    if (reply.type != wire::MsgType::PirResp) throw TransportError("unexpected reply type");
    return wire::decode_pir_resp(reply.payload, modulus_bits);
}

std::optional<uint64_t> CrackSession::fetch_start(uint64_t end_fingerprint, uint32_t table_index) {
    uint32_t bucket = bucket_for(end_fingerprint, info_.bucket_count);
    pir::Query query = scheme_ == pir::Scheme::Classic
                           ? pir::classic_query(bucket, info_.bucket_count, key_, rng_)
                           : pir::naive_query();
    pir::Response response = send_query(table_index, std::move(query));
    std::vector<uint8_t> record =
        scheme_ == pir::Scheme::Classic
            ? pir::classic_decode(response, key_, kRecordSizeBits)
            : pir::naive_decode(response, bucket, kRecordSizeBits, info_.bucket_count);
    BucketRecord rec{load_le64(record.data()), load_le64(record.data() + 8)};
    if (rec.is_empty() || rec.end_fingerprint != end_fingerprint) return std::nullopt;
    return rec.start_index;
}

void CrackSession::issue_dummy_query(uint32_t table_index) {
    pir::Query query = scheme_ == pir::Scheme::Classic
                           ? pir::classic_query(0, info_.bucket_count, key_, rng_)
                           : pir::naive_query();
    send_query(table_index, std::move(query));  // response intentionally unused
}

std::optional<std::string> CrackSession::crack(std::span<const uint8_t> target_digest) {
    if (target_digest.size() != hasher_.digest_size())
        throw std::invalid_argument("target digest has the wrong size");
    trace_ = CrackTrace{};
    channel_up_base_ = channel_.bytes_up();
    channel_down_base_ = channel_.bytes_down();

    auto endpoints = compute_candidate_endpoints(target_digest);

    // Fetch phase: one query per table, no exceptions. A cycling candidate
    // still spends its query on a fixed dummy bucket; skipping it would let
    // the provider learn that the target's chain cycled.
    std::vector<std::optional<uint64_t>> starts(info_.table_count);
    for (uint32_t i = 0; i < info_.table_count; ++i) {
        if (endpoints[i]) {
            starts[i] = fetch_start(*endpoints[i], i);
            if (starts[i]) trace_.starts_found++;
        } else {
            trace_.endpoints_cycled++;
            issue_dummy_query(i);
        }
    }

    // Walk phase, strictly after every fetch.
    std::optional<std::string> found;
    for (uint32_t i = 0; i < info_.table_count && !found; ++i) {
        if (!starts[i]) continue;
        trace_.chains_walked++;
        trace_.events.push_back('W');
        found = find_preimage(*starts[i], i, target_digest, chain_, space_, hasher_);
    }
    trace_.bytes_up = channel_.bytes_up() - channel_up_base_;
    trace_.bytes_down = channel_.bytes_down() - channel_down_base_;

    if (found) {
        uint8_t digest[kMaxDigestSize];
        hasher_.hash(*found, digest);
        if (!std::equal(target_digest.begin(), target_digest.end(), digest))
            throw std::logic_error("chain walk produced a password that does not hash to the target");
    }
    return found;
}

std::optional<std::string> lookup_local(const TableSet& set,
                                        std::span<const uint8_t> target_digest) {
    const TableParams& params = set.params;
    const HashProvider hasher(params.hash);
    if (target_digest.size() != hasher.digest_size())
        throw std::invalid_argument("target digest has the wrong size");
    for (uint32_t i = 0; i < params.table_count; ++i) {
        auto walk = walk_digest_to_endpoint(target_digest.data(), i, params.chain, params.space, hasher);
        if (!walk) continue;
        const auto& rec = set.tables[i].buckets[bucket_for(walk->end_fingerprint, params.bucket_count)];
        if (rec.is_empty() || rec.end_fingerprint != walk->end_fingerprint) continue;
        auto found = find_preimage(rec.start_index, i, target_digest, params.chain, params.space, hasher);
        if (found) return found;
    }
    return std::nullopt;
}

}  // namespace hellpir
