#include "hellpir/provider.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "hellpir/bytes.hpp"

namespace hellpir {

namespace {

pir::PirDatabase database_from_table(const HellmanTable& table, uint32_t bucket_count) {
    pir::PirDatabase db;
    db.record_size_bits = kRecordSizeBits;
    db.record_count = bucket_count;
    db.records.resize(static_cast<size_t>(bucket_count) * kRecordSizeBytes);
    for (uint32_t b = 0; b < bucket_count; ++b) {
        store_le64(table.buckets[b].start_index, db.records.data() + b * kRecordSizeBytes);
        store_le64(table.buckets[b].end_fingerprint, db.records.data() + b * kRecordSizeBytes + 8);
    }
    return db;
}

}  // namespace

Provider::Provider(TableSet set) : params_(std::move(set.params)) {
    databases_.reserve(set.tables.size());
    for (const auto& table : set.tables)
        databases_.push_back(database_from_table(table, params_.bucket_count));
    query_counts_ = std::make_unique<std::atomic<uint64_t>[]>(params_.table_count);
    for (uint32_t i = 0; i < params_.table_count; ++i) query_counts_[i] = 0;
}

wire::InfoResp Provider::info() const {
    wire::InfoResp info;
    info.version = kTablesVersion;
    info.hash_id = static_cast<uint8_t>(params_.hash);
    info.length = static_cast<uint8_t>(params_.space.length());
    info.alphabet = params_.space.alphabet();
    info.table_count = params_.table_count;
    info.bucket_count = params_.bucket_count;
    info.dp_modulus = params_.chain.dp_modulus;
    info.record_size_bits = kRecordSizeBits;
    return info;
}

uint64_t Provider::total_queries() const {
    uint64_t total = 0;
    for (uint32_t i = 0; i < params_.table_count; ++i) total += query_counts_[i].load();
    return total;
}

void Provider::reset_counters() {
    for (uint32_t i = 0; i < params_.table_count; ++i) query_counts_[i] = 0;
    mulmods_ = 0;
}

wire::Frame Provider::error_frame(wire::ErrorCode code, std::string message) const {
    return wire::Frame{wire::MsgType::Error, wire::encode_error({code, std::move(message)})};
}

wire::Frame Provider::handle(const wire::Frame& request) {
    switch (request.type) {
        case wire::MsgType::InfoReq:
            return wire::Frame{wire::MsgType::InfoResp, wire::encode_info_resp(info())};
        case wire::MsgType::PirQuery:
            break;
        default:
            return error_frame(wire::ErrorCode::UnknownMsgType, "unsupported message type");
    }

    wire::PirQueryMsg msg;
    try {
        msg = wire::decode_pir_query(request.payload);
    } catch (const wire::WireError& e) {
        return error_frame(wire::ErrorCode::MalformedQuery, e.what());
    }
    if (msg.table_index >= params_.table_count)
        return error_frame(wire::ErrorCode::BadTableIndex,
                           "table index " + std::to_string(msg.table_index) + " out of range");

    const auto& db = databases_[msg.table_index];
    pir::Response response;
    try {
        if (msg.query.scheme == pir::Scheme::Naive) {
            response = pir::naive_answer(db, msg.query);
        } else {
            pir::ServerStats stats;
            response = pir::classic_answer(db, msg.query, &stats);
            mulmods_ += stats.modular_multiplications;
        }
    } catch (const pir::MalformedPayload& e) {
        return error_frame(wire::ErrorCode::MalformedQuery, e.what());
    }
    query_counts_[msg.table_index]++;
    return wire::Frame{wire::MsgType::PirResp,
                       wire::encode_pir_resp(response, msg.query.modulus_bits)};
}

std::vector<uint8_t> Provider::handle_frame(std::span<const uint8_t> frame_bytes) {
    wire::Frame request;
    try {
        request = wire::decode_frame(frame_bytes);
    } catch (const wire::WireError& e) {
        return wire::encode_frame(error_frame(wire::ErrorCode::MalformedFrame, e.what()));
    }
    return wire::encode_frame(handle(request));
}

// --- TCP front end ---

namespace {

bool send_all(int fd, const uint8_t* data, size_t len) {
    while (len > 0) {
        ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
        if (n <= 0) {
            if (n < 0 && errno == EINTR) continue;
            return false;
        }
        data += n;
        len -= static_cast<size_t>(n);
    }
    return true;
}

// 0 = EOF before any byte, 1 = full read, -1 = error / short read
int recv_all(int fd, uint8_t* data, size_t len) {
    size_t got = 0;
    while (got < len) {
        ssize_t n = ::recv(fd, data + got, len - got, 0);
        if (n == 0) return got == 0 ? 0 : -1;
        if (n < 0) {
            if (errno == EINTR) continue;
            return -1;
        }
        got += static_cast<size_t>(n);
    }
    return 1;
}

}  // namespace

TcpServer::TcpServer(Provider& provider, const std::string& host, uint16_t port)
    : provider_(provider) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket: " + std::string(strerror(errno)));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        throw std::runtime_error("bad listen address: " + host);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(listen_fd_);
        throw std::runtime_error("bind: " + std::string(strerror(errno)));
    }
    if (::listen(listen_fd_, 16) != 0) {
        ::close(listen_fd_);
        throw std::runtime_error("listen: " + std::string(strerror(errno)));
    }
    socklen_t addr_len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &addr_len);
    port_ = ntohs(addr.sin_port);
    accept_thread_ = std::thread([this] { accept_loop(); });
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::stop() {
    bool expected = false;
    if (!stopping_.compare_exchange_strong(expected, true)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (accept_thread_.joinable()) accept_thread_.join();
    {
        std::lock_guard lock(conn_mutex_);
        for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    for (auto& t : conn_threads_)
        if (t.joinable()) t.join();
}

void TcpServer::accept_loop() {
    while (!stopping_.load()) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            break;  // listener closed
        }
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        std::lock_guard lock(conn_mutex_);
        conn_fds_.push_back(fd);
        conn_threads_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void TcpServer::serve_connection(int fd) {
    // One frame in, one frame out, until the peer closes or sends garbage
    // that cannot be framed at all.
    while (true) {
        uint8_t len_bytes[4];
        int status = recv_all(fd, len_bytes, 4);
        if (status <= 0) break;
        uint32_t len = 0;
        for (int i = 0; i < 4; ++i) len |= static_cast<uint32_t>(len_bytes[i]) << (8 * i);
        if (len == 0 || len > wire::kMaxFrameLength) {
            auto err = wire::encode_frame({wire::MsgType::Error,
                                           wire::encode_error({wire::ErrorCode::MalformedFrame,
                                                               "frame length out of range"})});
            send_all(fd, err.data(), err.size());
            break;  // stream framing is lost; drop the connection
        }
        std::vector<uint8_t> frame(4 + len);
        std::memcpy(frame.data(), len_bytes, 4);
        if (recv_all(fd, frame.data() + 4, len) != 1) break;
        auto reply = provider_.handle_frame(frame);
        if (!send_all(fd, reply.data(), reply.size())) break;
    }
    ::close(fd);
}

}  // namespace hellpir
