#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <vector>

#include "hellpir/bytes.hpp"
#include "hellpir/tables.hpp"

using namespace hellpir;

namespace {

const TableSet& small_set() {
    static TableSet set = [] {
        auto params = TableParams::derive("abcdef", 4, 0.9, 4.0, HashAlgorithm::Md5);
        BuildStats stats;
        return TableSet{params, build_all(params, stats, 4)};
    }();
    return set;
}

double chi_square_critical(unsigned df, double z) {
    double t = 2.0 / (9.0 * df);
    double v = 1.0 - t + z * std::sqrt(t);
    return df * v * v * v;
}

}  // namespace

TEST_CASE("derive wires M, buckets and chain params together") {
    auto p = TableParams::derive("abcdef", 4, 0.9, 4.0, HashAlgorithm::Md5);
    CHECK(p.n_passwords() == 1296);
    CHECK(p.table_count == 15);
    CHECK(p.bucket_count == 60);
    CHECK(p.chain.dp_modulus == 15);
    CHECK(p.chain.max_chain_len == 150);

    auto p5 = TableParams::derive("abcdef", 5, 0.4, 4.0, HashAlgorithm::Md5);
    CHECK(p5.table_count == 16);
    CHECK(p5.bucket_count == 64);

    CHECK_THROWS_AS(TableParams::derive("abcdef", 4, 0.9, 1.0, HashAlgorithm::Md5),
                    std::invalid_argument);
    CHECK_THROWS_AS(TableParams::derive("abcdef", 4, 0.9, 0.5, HashAlgorithm::Md5),
                    std::invalid_argument);
    CHECK_THROWS_AS(TableParams::derive("abcdef", 4, 1.5, 4.0, HashAlgorithm::Md5),
                    std::invalid_argument);
}

TEST_CASE("empty bucket sentinel") {
    BucketRecord r;
    CHECK(r.is_empty());
    CHECK(r.start_index == UINT64_MAX);
    CHECK(r.end_fingerprint == UINT64_MAX);
    CHECK_FALSE(BucketRecord{0, 0}.is_empty());
}

TEST_CASE("bucket_for spreads arithmetic-progression fingerprints") {
    // Endpoint fingerprints are all multiples of M; raw modulo would land
    // them in gcd(M, bucket_count) buckets. Remixed placement must cover the
    // table uniformly: chi-square over 60 buckets with 60000 fingerprints,
    // Wilson-Hilferty 99.9% critical value.
    const uint32_t bucket_count = 60;
    const uint64_t m = 15;
    std::vector<uint32_t> counts(bucket_count, 0);
    std::set<uint32_t> raw;
    const uint64_t k_max = 60000;
    for (uint64_t k = 0; k < k_max; ++k) {
        counts[bucket_for(k * m, bucket_count)]++;
        raw.insert(static_cast<uint32_t>((k * m) % bucket_count));
    }
    CHECK(raw.size() == 4);  // the clustering bucket_for avoids

    double expected = double(k_max) / bucket_count;
    double chi2 = 0;
    for (uint32_t c : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < chi_square_critical(bucket_count - 1, 3.0902));
}

TEST_CASE("build_table with dp_modulus 1 stores single-hash chains") {
    PasswordSpace space("abcdef", 4);
    HashProvider h(HashAlgorithm::Md5);
    TableParams params{space, HashAlgorithm::Md5, 0.5, 4.0, 1, 4, ChainParams{1, 10}};
    BuildStats stats;
    auto table = build_table(0, params, stats);

    CHECK(table.table_index == 0);
    CHECK(table.chain_count == 1);
    CHECK(stats.chains_attempted == 1);

    // Start 0, one hash, immediately distinguished.
    uint8_t d[16];
    h.hash(space.index_to_password(0), d);
    uint64_t fp = digest_fingerprint(d);
    const auto& rec = table.buckets[bucket_for(fp, 4)];
    CHECK(rec.start_index == 0);
    CHECK(rec.end_fingerprint == fp);
}

TEST_CASE("build_table is deterministic") {
    const auto& params = small_set().params;
    BuildStats s1, s2;
    auto a = build_table(3, params, s1);
    auto b = build_table(3, params, s2);
    CHECK(a.buckets == b.buckets);
    CHECK(a.chain_count == b.chain_count);
    CHECK(s1.chains_attempted == s2.chains_attempted);
}

TEST_CASE("built tables satisfy the occupancy and placement invariants") {
    const auto& set = small_set();
    const auto& params = set.params;
    HashProvider h(params.hash);
    REQUIRE(set.tables.size() == params.table_count);

    for (const auto& table : set.tables) {
        REQUIRE(table.buckets.size() == params.bucket_count);
        uint32_t filled = 0;
        for (uint32_t b = 0; b < params.bucket_count; ++b) {
            const auto& rec = table.buckets[b];
            if (rec.is_empty()) {
                CHECK(rec.end_fingerprint == BucketRecord::kEmptyField);
                continue;
            }
            filled++;
            CHECK(rec.start_index < params.n_passwords());
            CHECK(rec.end_fingerprint % params.chain.dp_modulus == 0);
            CHECK(bucket_for(rec.end_fingerprint, params.bucket_count) == b);

            // Rebuilding the chain must land on the stored endpoint.
            auto walked =
                walk_to_endpoint(rec.start_index, table.table_index, params.chain, params.space, h);
            REQUIRE(walked.has_value());
            CHECK(walked->end_fingerprint == rec.end_fingerprint);
        }
        CHECK(filled == params.table_count);
        CHECK(filled == table.chain_count);
    }
}

TEST_CASE("build stats account for every attempt") {
    auto params = TableParams::derive("abcdef", 4, 0.9, 4.0, HashAlgorithm::Md5);
    BuildStats stats;
    auto tables = build_all(params, stats, 1);
    uint64_t stored = 0;
    for (const auto& t : tables) stored += t.chain_count;
    CHECK(stored == uint64_t{params.table_count} * params.table_count);
    CHECK(stats.chains_attempted ==
          stored + stats.chains_discarded_collision + stats.chains_discarded_cycle);
}

TEST_CASE("build_all is thread-count invariant and ordered") {
    const auto& params = small_set().params;
    BuildStats s1, s4;
    auto seq = build_all(params, s1, 1);
    auto par = build_all(params, s4, 4);
    REQUIRE(seq.size() == par.size());
    for (size_t i = 0; i < seq.size(); ++i) {
        CHECK(seq[i].table_index == i);
        CHECK(par[i].table_index == i);
        CHECK(seq[i].buckets == par[i].buckets);
    }
    CHECK(s1.chains_attempted == s4.chains_attempted);
    CHECK(s1.chains_discarded_collision == s4.chains_discarded_collision);
    CHECK(s1.chains_discarded_cycle == s4.chains_discarded_cycle);
}

TEST_CASE("a space too small for M chains per table throws") {
    PasswordSpace space("ab", 2);  // 4 candidate starts
    TableParams params{space, HashAlgorithm::Md5, 0.5, 4.0, 5, 20, ChainParams{1, 10}};
    BuildStats stats;
    try {
        build_table(7, params, stats);
        FAIL("expected ExhaustedSpace");
    } catch (const ExhaustedSpace& e) {
        CHECK(e.table_index == 7);
    }
}

TEST_CASE("serialization") {
    const auto& set = small_set();
    auto bytes = serialize(set.params, set.tables);

    SUBCASE("size formula and header layout") {
        CHECK(bytes.size() == serialized_size(set.params));
        // 45 fixed header bytes + alphabet, then per table 4 + 16 * buckets.
        size_t expected = 45 + 6 + size_t{15} * (4 + size_t{60} * 16);
        CHECK(bytes.size() == expected);

        ByteReader r(bytes);
        auto magic = r.raw(4);
        CHECK(std::memcmp(magic.data(), kTablesMagic, 4) == 0);
        CHECK(r.u16() == kTablesVersion);
        CHECK(r.u8() == 1);  // md5
        CHECK(r.u8() == 4);
        CHECK(r.u8() == 6);
        CHECK(r.str(6) == "abcdef");
        CHECK(r.f64() == 0.9);
        CHECK(r.f64() == 4.0);
        CHECK(r.u32() == 15);
        CHECK(r.u32() == 60);
        CHECK(r.u64() == 15);
        CHECK(r.u32() == 150);
        CHECK(r.u32() == 0);  // first table index
    }

    SUBCASE("round-trip") {
        auto back = deserialize(bytes);
        CHECK(back.params.space.alphabet() == "abcdef");
        CHECK(back.params.space.length() == 4);
        CHECK(back.params.hash == HashAlgorithm::Md5);
        CHECK(back.params.alpha == 0.9);
        CHECK(back.params.beta == 4.0);
        CHECK(back.params.table_count == 15);
        CHECK(back.params.bucket_count == 60);
        CHECK(back.params.chain.dp_modulus == 15);
        CHECK(back.params.chain.max_chain_len == 150);
        REQUIRE(back.tables.size() == set.tables.size());
        for (size_t i = 0; i < back.tables.size(); ++i) {
            CHECK(back.tables[i].table_index == set.tables[i].table_index);
            CHECK(back.tables[i].buckets == set.tables[i].buckets);
            CHECK(back.tables[i].chain_count == set.tables[i].chain_count);
        }
        // serialize(deserialize(x)) == x
        CHECK(serialize(back.params, back.tables) == bytes);
    }

    SUBCASE("corrupt input") {
        auto bad = bytes;
        bad[0] = 'X';
        CHECK_THROWS_AS(deserialize(bad), CorruptFile);

        bad = bytes;
        bad[4] = 9;  // version
        CHECK_THROWS_AS(deserialize(bad), CorruptFile);

        bad = bytes;
        bad.pop_back();
        CHECK_THROWS_AS(deserialize(bad), CorruptFile);

        bad = bytes;
        bad.push_back(0);
        CHECK_THROWS_AS(deserialize(bad), CorruptFile);

        CHECK_THROWS_AS(deserialize(std::vector<uint8_t>{}), CorruptFile);
    }

    SUBCASE("tampered records") {
        // Find a non-empty record in table 0 and break its fingerprint's
        // distinguishedness.
        size_t table0 = 51;  // table 0: index u32, then its records
        auto bad = bytes;
        for (uint32_t b = 0; b < 60; ++b) {
            size_t off = table0 + 4 + size_t{b} * 16;
            uint64_t start = load_le64(bad.data() + off);
            if (start == UINT64_MAX) continue;
            uint64_t fp = load_le64(bad.data() + off + 8);
            store_le64(fp + 1, bad.data() + off + 8);
            break;
        }
        CHECK_THROWS_AS(deserialize(bad), InvariantViolation);

        // Out-of-range start index.
        bad = bytes;
        for (uint32_t b = 0; b < 60; ++b) {
            size_t off = table0 + 4 + size_t{b} * 16;
            if (load_le64(bad.data() + off) == UINT64_MAX) continue;
            store_le64(1296, bad.data() + off);
            break;
        }
        CHECK_THROWS_AS(deserialize(bad), InvariantViolation);

        // Half-empty record: EMPTY start with a live fingerprint.
        bad = bytes;
        for (uint32_t b = 0; b < 60; ++b) {
            size_t off = table0 + 4 + size_t{b} * 16;
            if (load_le64(bad.data() + off) == UINT64_MAX) continue;
            store_le64(UINT64_MAX, bad.data() + off);
            break;
        }
        CHECK_THROWS_AS(deserialize(bad), InvariantViolation);

        // Duplicate table index.
        bad = bytes;
        size_t table1 = table0 + 4 + size_t{60} * 16;
        bad[table1] = 0;  // second table claims index 0
        CHECK_THROWS_AS(deserialize(bad), CorruptFile);
    }
}

TEST_CASE("save and load round-trip through a file") {
    const auto& set = small_set();
    auto path = std::filesystem::temp_directory_path() / "hellpir_test_tables.hpt";
    save_tables(path, set.params, set.tables);
    auto loaded = load_tables(path);
    CHECK(loaded.tables.size() == set.tables.size());
    CHECK(serialize(loaded.params, loaded.tables) == serialize(set.params, set.tables));
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_tables(path), std::runtime_error);  // missing file
}
