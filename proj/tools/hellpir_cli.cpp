#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "hellpir/cracker.hpp"
#include "hellpir/provider.hpp"
#include "hellpir/tables.hpp"

using namespace hellpir;

namespace {

std::vector<uint8_t> parse_hex_digest(const std::string& hex) {
    if (hex.size() % 2 != 0) throw CLI::ValidationError("--hash", "odd number of hex digits");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::vector<uint8_t> out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); ++i) {
        int hi = nibble(hex[2 * i]), lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw CLI::ValidationError("--hash", "not a hex digest");
        out[i] = static_cast<uint8_t>(hi << 4 | lo);
    }
    return out;
}

std::pair<std::string, uint16_t> parse_host_port(const std::string& addr, uint16_t default_port) {
    auto colon = addr.rfind(':');
    if (colon == std::string::npos) return {addr, default_port};
    std::string host = addr.substr(0, colon);
    if (host.empty()) host = "127.0.0.1";
    unsigned long port = std::stoul(addr.substr(colon + 1));
    if (port > 65535) throw CLI::ValidationError("address", "port out of range");
    return {host, static_cast<uint16_t>(port)};
}

HashAlgorithm parse_hash_name(const std::string& name) {
    if (name == "md5" || name == "MD5") return HashAlgorithm::Md5;
    throw CLI::ValidationError("--hash", "unsupported hash algorithm: " + name);
}

pir::Scheme parse_scheme(const std::string& name) {
    if (name == "naive") return pir::Scheme::Naive;
    if (name == "classic") return pir::Scheme::Classic;
    throw CLI::ValidationError("--scheme", "unknown scheme: " + name);
}

std::atomic<bool> g_stop{false};
void handle_signal(int) { g_stop = true; }

int cmd_build(const std::string& alphabet, unsigned length, double alpha, double beta,
              const std::string& hash_name, const std::string& out, unsigned threads) {
    auto params = TableParams::derive(alphabet, length, alpha, beta, parse_hash_name(hash_name));
    std::cout << "N=" << params.n_passwords() << " M=" << params.table_count
              << " buckets/table=" << params.bucket_count << "\n";
    BuildStats stats;
    auto tables = build_all(params, stats, threads);
    save_tables(out, params, tables);
    std::cout << "chains attempted=" << stats.chains_attempted
              << " discarded(collision)=" << stats.chains_discarded_collision
              << " discarded(cycle)=" << stats.chains_discarded_cycle << "\n"
              << "wrote " << out << " (" << serialized_size(params) << " bytes)\n";
    return 0;
}

int cmd_serve(const std::string& tables_path, const std::string& listen) {
    auto set = load_tables(tables_path);
    Provider provider(std::move(set));
    auto [host, port] = parse_host_port(listen, 7777);
    TcpServer server(provider, host, port);
    std::cout << "listening on " << host << ":" << server.port() << "\n" << std::flush;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    return 0;
}

void print_outcome(const std::optional<std::string>& password) {
    if (password)
        std::cout << *password << "\n";
    else
        std::cout << "NOT FOUND\n";
}

int cmd_crack(const std::string& server, const std::string& scheme_name, const std::string& hex,
              unsigned modulus_bits, uint64_t seed) {
    auto [host, port] = parse_host_port(server, 7777);
    TcpChannel channel(host, port);
    CrackSession session(channel, parse_scheme(scheme_name), HashAlgorithm::Md5, modulus_bits, seed);
    auto target = parse_hex_digest(hex);
    auto password = session.crack(target);
    print_outcome(password);
    const auto& trace = session.last_trace();
    std::cerr << "queries=" << trace.queries_sent << " starts_found=" << trace.starts_found
              << " chains_walked=" << trace.chains_walked << " cycled=" << trace.endpoints_cycled
              << " bytes_up=" << trace.bytes_up << " bytes_down=" << trace.bytes_down << "\n";
    return 0;
}

int cmd_lookup(const std::string& tables_path, const std::string& hex) {
    auto set = load_tables(tables_path);
    auto target = parse_hex_digest(hex);
    print_outcome(lookup_local(set, target));
    return 0;
}

// One bench cell: build the tables, crack `trials` random passwords through
// an in-process provider, report counters. Wall time covers the crack loop
// only, matching a runtime-per-batch reading.
struct BenchRow {
    unsigned length = 0;
    double alpha = 0;
    uint32_t m = 0;
    std::string scheme;
    uint64_t attempted = 0;
    uint64_t cracked = 0;
    double wall_time = 0;
    uint64_t bytes_up = 0;
    uint64_t bytes_down = 0;
    uint64_t mulmods = 0;
    uint64_t n_passwords = 0;
};

constexpr const char* kBenchHeader =
    "length,alpha,M,scheme,passwords_attempted,passwords_cracked,wall_time_total,"
    "bytes_up,bytes_down,server_mulmods,n_passwords";

void write_row(std::ostream& out, const BenchRow& row) {
    out << row.length << ',' << row.alpha << ',' << row.m << ',' << row.scheme << ','
        << row.attempted << ',' << row.cracked << ',' << row.wall_time << ',' << row.bytes_up
        << ',' << row.bytes_down << ',' << row.mulmods << ',' << row.n_passwords << "\n";
}

BenchRow bench_cell(const std::string& alphabet, unsigned length, double alpha, double beta,
                    pir::Scheme scheme, const std::string& scheme_name, uint64_t trials,
                    unsigned modulus_bits, uint64_t seed, unsigned threads) {
    BenchRow row;
    row.length = length;
    row.alpha = alpha;
    row.scheme = scheme_name;

    auto params = TableParams::derive(alphabet, length, alpha, beta, HashAlgorithm::Md5);
    row.m = params.table_count;
    row.n_passwords = params.n_passwords();
    BuildStats stats;
    Provider provider(TableSet{params, build_all(params, stats, threads)});
    InProcessChannel channel(provider);
    CrackSession session(channel, scheme, HashAlgorithm::Md5, modulus_bits, seed);
    const HashProvider hasher(HashAlgorithm::Md5);

    pir::Rng target_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<uint8_t> digest(hasher.digest_size());
    auto begin = std::chrono::steady_clock::now();
    for (uint64_t t = 0; t < trials; ++t) {
        uint64_t index = target_rng.next_u64() % params.n_passwords();
        hasher.hash(params.space.index_to_password(index), digest.data());
        row.attempted++;
        if (session.crack(digest)) row.cracked++;
    }
    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
    row.bytes_up = channel.bytes_up();
    row.bytes_down = channel.bytes_down();
    row.mulmods = provider.modular_multiplications();
    return row;
}

int cmd_bench(const std::string& alphabet, const std::vector<unsigned>& lengths,
              const std::vector<double>& alphas, double beta, uint64_t trials,
              const std::string& scheme_name, const std::string& out_path, unsigned modulus_bits,
              uint64_t seed, unsigned threads) {
    pir::Scheme scheme = parse_scheme(scheme_name);
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty() && out_path != "-") {
        file.open(out_path, std::ios::trunc);
        if (!file) {
            std::cerr << "cannot open " << out_path << "\n";
            return 1;
        }
        out = &file;
    }
    *out << kBenchHeader << "\n";
    for (unsigned length : lengths) {
        for (double alpha : alphas) {
            try {
                auto row = bench_cell(alphabet, length, alpha, beta, scheme, scheme_name, trials,
                                      modulus_bits, seed, threads);
                write_row(*out, row);
                std::cerr << "bench l=" << length << " alpha=" << alpha << " M=" << row.m
                          << " cracked=" << row.cracked << "/" << row.attempted << " in "
                          << row.wall_time << "s\n";
            } catch (const std::exception& e) {
                BenchRow failed;
                failed.length = length;
                failed.alpha = alpha;
                failed.scheme = "error";
                write_row(*out, failed);
                std::cerr << "bench l=" << length << " alpha=" << alpha << " failed: " << e.what()
                          << "\n";
            }
            out->flush();
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hellman-table hash reversal behind private information retrieval"};
    app.require_subcommand(1);

    std::string alphabet = "abcdef";
    unsigned length = 4;
    double alpha = 0.9;
    double beta = 4.0;
    std::string hash_name = "md5";
    std::string out_path;
    unsigned threads = 1;

    auto* build = app.add_subcommand("build", "compute tables and write a table file");
    build->add_option("--alphabet", alphabet, "password alphabet")->required();
    build->add_option("--length", length, "password length")->required();
    build->add_option("--alpha", alpha, "target success probability in (0,1)")->required();
    build->add_option("--beta", beta, "bucket expansion factor (> 1)")->capture_default_str();
    build->add_option("--hash", hash_name, "hash algorithm")->capture_default_str();
    build->add_option("--out", out_path, "output table file")->required();
    build->add_option("--threads", threads, "parallel table builds")->capture_default_str();

    std::string tables_path;
    std::string listen = "127.0.0.1:7777";
    auto* serve = app.add_subcommand("serve", "serve a table file over framed TCP");
    serve->add_option("--tables", tables_path, "table file")->required();
    serve->add_option("--listen", listen, "host:port to bind")->capture_default_str();

    std::string server = "127.0.0.1:7777";
    std::string scheme_name = "naive";
    std::string hex_digest;
    unsigned modulus_bits = 512;
    uint64_t seed = 1;
    auto* crack = app.add_subcommand("crack", "reverse one hash against a provider");
    crack->add_option("--server", server, "provider host:port")->capture_default_str();
    crack->add_option("--scheme", scheme_name, "naive or classic")->capture_default_str();
    crack->add_option("--hash", hex_digest, "target digest, hex")->required();
    crack->add_option("--modulus-bits", modulus_bits, "classic PIR modulus size")
        ->capture_default_str();
    crack->add_option("--seed", seed, "client randomness seed")->capture_default_str();

    auto* lookup = app.add_subcommand("lookup", "reverse one hash from a local table file");
    lookup->add_option("--tables", tables_path, "table file")->required();
    lookup->add_option("--hash", hex_digest, "target digest, hex")->required();

    std::vector<unsigned> lengths{4, 5, 6};
    std::vector<double> alphas{0.4, 0.6, 0.9};
    uint64_t trials = 100;
    auto* bench = app.add_subcommand("bench", "grid benchmark, CSV output");
    bench->add_option("--alphabet", alphabet, "password alphabet")->capture_default_str();
    bench->add_option("--lengths", lengths, "password lengths")->delimiter(',')->capture_default_str();
    bench->add_option("--alphas", alphas, "success probabilities")->delimiter(',')->capture_default_str();
    bench->add_option("--beta", beta, "bucket expansion factor")->capture_default_str();
    bench->add_option("--trials", trials, "passwords per cell")->capture_default_str();
    bench->add_option("--scheme", scheme_name, "naive or classic")->capture_default_str();
    bench->add_option("--out", out_path, "CSV path ('-' for stdout)")->capture_default_str();
    bench->add_option("--modulus-bits", modulus_bits, "classic PIR modulus size")
        ->capture_default_str();
    bench->add_option("--seed", seed, "target/query randomness seed")->capture_default_str();
    bench->add_option("--threads", threads, "parallel table builds")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (build->parsed())
            return cmd_build(alphabet, length, alpha, beta, hash_name, out_path, threads);
        if (serve->parsed()) return cmd_serve(tables_path, listen);
        if (crack->parsed())
            return cmd_crack(server, scheme_name, hex_digest, modulus_bits, seed);
        if (lookup->parsed()) return cmd_lookup(tables_path, hex_digest);
        if (bench->parsed())
            return cmd_bench(alphabet, lengths, alphas, beta, trials, scheme_name, out_path,
                             modulus_bits, seed, threads);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
