#include "hellpir/tables.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <thread>

#include "hellpir/bytes.hpp"

namespace hellpir {

TableParams TableParams::derive(std::string alphabet, unsigned length, double alpha, double beta,
                                HashAlgorithm hash) {
    PasswordSpace space(std::move(alphabet), length);
    if (!(beta > 1.0)) throw std::invalid_argument("beta must be greater than 1");
    uint32_t m = derive_m(alpha, space.size());
    double raw_buckets = std::ceil(beta * static_cast<double>(m));
    if (raw_buckets > static_cast<double>(UINT32_MAX))
        throw std::invalid_argument("bucket count overflows 32 bits");
    auto bucket_count = static_cast<uint32_t>(raw_buckets);
    if (bucket_count <= m) throw std::invalid_argument("bucket count must exceed M");
    return TableParams{std::move(space), hash, alpha, beta, m, bucket_count, ChainParams::standard(m)};
}

HellmanTable build_table(uint32_t table_index, const TableParams& params, BuildStats& stats) {
    HellmanTable table;
    table.table_index = table_index;
    table.buckets.assign(params.bucket_count, BucketRecord{});

    const HashProvider hasher(params.hash);
    const uint64_t start_limit = params.n_passwords();
    uint64_t chain_index = 0;
    while (table.chain_count < params.table_count) {
        if (chain_index >= start_limit) throw ExhaustedSpace(table_index);
        stats.chains_attempted++;
        auto walk = walk_to_endpoint(chain_index, table_index, params.chain, params.space, hasher);
        if (!walk) {
            stats.chains_discarded_cycle++;
        } else {
            uint32_t bucket = bucket_for(walk->end_fingerprint, params.bucket_count);
            if (!table.buckets[bucket].is_empty()) {
                stats.chains_discarded_collision++;
            } else {
                table.buckets[bucket] = BucketRecord{chain_index, walk->end_fingerprint};
                table.chain_count++;
            }
        }
        chain_index++;
    }
    return table;
}

std::vector<HellmanTable> build_all(const TableParams& params, BuildStats& stats,
                                    unsigned threads) {
    const uint32_t m = params.table_count;
    std::vector<HellmanTable> tables(m);
    if (threads <= 1) {
        for (uint32_t i = 0; i < m; ++i) tables[i] = build_table(i, params, stats);
        return tables;
    }

    std::mutex merge_mutex;
    std::exception_ptr failure;
    std::vector<std::thread> workers;
    std::atomic<uint32_t> next{0};
    auto run = [&] {
        BuildStats local;
        try {
            for (uint32_t i = next.fetch_add(1); i < m; i = next.fetch_add(1))
                tables[i] = build_table(i, params, local);
        } catch (...) {
            std::lock_guard lock(merge_mutex);
            if (!failure) failure = std::current_exception();
        }
        std::lock_guard lock(merge_mutex);
        stats += local;
    };
    unsigned n = std::min<unsigned>(threads, m);
    workers.reserve(n);
    for (unsigned t = 0; t < n; ++t) workers.emplace_back(run);
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
    return tables;
}

size_t serialized_size(const TableParams& params) {
    size_t header = 4 + 2 + 1 + 1 + 1 + params.space.alphabet().size() + 8 + 8 + 4 + 4 + 8 + 4;
    size_t per_table = 4 + static_cast<size_t>(params.bucket_count) * kRecordSizeBytes;
    return header + static_cast<size_t>(params.table_count) * per_table;
}

std::vector<uint8_t> serialize(const TableParams& params, const std::vector<HellmanTable>& tables) {
    if (tables.size() != params.table_count)
        throw std::invalid_argument("table count does not match params");
    ByteWriter w;
    w.raw(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(kTablesMagic), 4));
    w.u16(kTablesVersion);
    w.u8(static_cast<uint8_t>(params.hash));
    w.u8(static_cast<uint8_t>(params.space.length()));
    w.u8(static_cast<uint8_t>(params.space.alphabet().size()));
    w.raw(params.space.alphabet());
    w.f64(params.alpha);
    w.f64(params.beta);
    w.u32(params.table_count);
    w.u32(params.bucket_count);
    w.u64(params.chain.dp_modulus);
    w.u32(params.chain.max_chain_len);
    for (const auto& table : tables) {
        if (table.buckets.size() != params.bucket_count)
            throw std::invalid_argument("bucket count does not match params");
        w.u32(table.table_index);
        for (const auto& rec : table.buckets) {
            w.u64(rec.start_index);
            w.u64(rec.end_fingerprint);
        }
    }
    return w.take();
}

TableSet deserialize(std::span<const uint8_t> bytes) {
    try {
        ByteReader r(bytes);
        auto magic = r.raw(4);
        if (std::memcmp(magic.data(), kTablesMagic, 4) != 0)
            throw CorruptFile("bad magic; not a table file");
        if (uint16_t version = r.u16(); version != kTablesVersion)
            throw CorruptFile("unsupported table file version " + std::to_string(version));
        auto hash_id = r.u8();
        if (hash_id != static_cast<uint8_t>(HashAlgorithm::Md5))
            throw CorruptFile("unknown hash id " + std::to_string(hash_id));
        unsigned length = r.u8();
        unsigned alphabet_len = r.u8();
        std::string alphabet = r.str(alphabet_len);
        double alpha = r.f64();
        double beta = r.f64();
        uint32_t m = r.u32();
        uint32_t bucket_count = r.u32();
        uint64_t dp_modulus = r.u64();
        uint32_t max_chain_len = r.u32();

        PasswordSpace space(alphabet, length);  // std::invalid_argument -> CorruptFile below
        if (m == 0 || bucket_count <= m) throw CorruptFile("bucket count must exceed M");
        if (dp_modulus == 0 || max_chain_len == 0)
            throw CorruptFile("chain parameters must be positive");
        TableSet set{TableParams{std::move(space), static_cast<HashAlgorithm>(hash_id), alpha, beta,
                                 m, bucket_count, ChainParams{dp_modulus, max_chain_len}},
                     {}};

        set.tables.reserve(m);
        for (uint32_t t = 0; t < m; ++t) {
            HellmanTable table;
            table.table_index = r.u32();
            if (table.table_index != t) throw CorruptFile("table indices out of order");
            table.buckets.reserve(bucket_count);
            for (uint32_t b = 0; b < bucket_count; ++b) {
                BucketRecord rec{r.u64(), r.u64()};
                if (rec.is_empty()) {
                    if (rec.end_fingerprint != BucketRecord::kEmptyField)
                        throw InvariantViolation("empty bucket with a residual fingerprint");
                } else {
                    if (rec.start_index >= set.params.n_passwords())
                        throw InvariantViolation("start index outside the password space");
                    if (rec.end_fingerprint % dp_modulus != 0)
                        throw InvariantViolation("stored endpoint is not distinguished");
                    if (bucket_for(rec.end_fingerprint, bucket_count) != b)
                        throw InvariantViolation("record stored in the wrong bucket");
                    table.chain_count++;
                }
                table.buckets.push_back(rec);
            }
            if (table.chain_count != m)
                throw InvariantViolation("table holds " + std::to_string(table.chain_count) +
                                         " chains, expected " + std::to_string(m));
            set.tables.push_back(std::move(table));
        }
        if (!r.done()) throw CorruptFile("trailing bytes after the last table");
        return set;
    } catch (const ShortRead&) {
        throw CorruptFile("truncated table file");
    } catch (const std::invalid_argument& e) {
        throw CorruptFile(std::string("invalid table parameters: ") + e.what());
    }
}

void save_tables(const std::filesystem::path& path, const TableParams& params,
                 const std::vector<HellmanTable>& tables) {
    auto bytes = serialize(params, tables);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + path.string());
}

TableSet load_tables(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace hellpir
