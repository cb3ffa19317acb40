#ifndef HELLPIR_PROVIDER_HPP
#define HELLPIR_PROVIDER_HPP

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "hellpir/pir.hpp"
#include "hellpir/tables.hpp"
#include "hellpir/wire.hpp"

namespace hellpir {

/// The table provider: immutable per-table PIR databases plus the frame
/// handler. Holds no PIR keys and never decodes a query's target; the only
/// branching on a query is well-formedness. Safe to call from any number of
/// threads; the diagnostic counters are atomics.
class Provider {
public:
    explicit Provider(TableSet set);

    const TableParams& params() const { return params_; }
    const pir::PirDatabase& database(uint32_t table_index) const { return databases_[table_index]; }

    /// Typed request handler; responses are a pure function of the loaded
    /// tables and the request. Never throws for malformed input: those come
    /// back as Error frames.
    wire::Frame handle(const wire::Frame& request);

    /// Byte-level variant: whole frame in, whole frame out.
    std::vector<uint8_t> handle_frame(std::span<const uint8_t> frame_bytes);

    wire::InfoResp info() const;

    // diagnostic counters
    uint64_t queries_to_table(uint32_t table_index) const {
        return query_counts_[table_index].load();
    }
    uint64_t total_queries() const;
    uint64_t modular_multiplications() const { return mulmods_.load(); }
    void reset_counters();

private:
    wire::Frame error_frame(wire::ErrorCode code, std::string message) const;

    TableParams params_;
    std::vector<pir::PirDatabase> databases_;
    std::unique_ptr<std::atomic<uint64_t>[]> query_counts_;
    std::atomic<uint64_t> mulmods_{0};
};

/// Framed-TCP front end for a Provider. Binds on construction (port 0 picks
/// an ephemeral port), serves until stop(); one thread per connection.
class TcpServer {
public:
    TcpServer(Provider& provider, const std::string& host, uint16_t port);
    ~TcpServer();

    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    uint16_t port() const { return port_; }
    void stop();

private:
    void accept_loop();
    void serve_connection(int fd);

    Provider& provider_;
    int listen_fd_ = -1;
    uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    std::mutex conn_mutex_;
    std::vector<int> conn_fds_;
    std::vector<std::thread> conn_threads_;
};

}  // namespace hellpir

#endif
