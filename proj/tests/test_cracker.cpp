#include <doctest.h>

#include <algorithm>
#include <functional>
#include <vector>

#include "hellpir/cracker.hpp"
#include "hellpir/provider.hpp"

using namespace hellpir;

namespace {

struct Fixture {
    TableSet set;
    Provider provider;

    Fixture()
        : set(make_set()),
          provider(TableSet{set.params, set.tables}) {}

    static TableSet make_set() {
        auto params = TableParams::derive("abcdef", 4, 0.9, 4.0, HashAlgorithm::Md5);
        BuildStats stats;
        return TableSet{params, build_all(params, stats, 4)};
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

std::vector<uint8_t> hash_password(const std::string& pw) {
    HashProvider h(HashAlgorithm::Md5);
    std::vector<uint8_t> d(h.digest_size());
    h.hash(pw, d.data());
    return d;
}

std::vector<uint8_t> arbitrary_digest(uint64_t seed) {
    std::vector<uint8_t> d(16);
    for (int i = 0; i < 16; ++i) d[i] = static_cast<uint8_t>(splitmix64(seed) >> (4 * i));
    return d;
}

// Rewrites the provider's parameter announcement in flight.
class DoctorChannel : public ProviderChannel {
public:
    DoctorChannel(Provider& provider, std::function<void(wire::InfoResp&)> mutate)
        : inner_(provider), mutate_(std::move(mutate)) {}

    wire::Frame roundtrip(const wire::Frame& request) override {
        auto reply = inner_.roundtrip(request);
        if (reply.type == wire::MsgType::InfoResp) {
            auto info = wire::decode_info_resp(reply.payload);
            mutate_(info);
            reply.payload = wire::encode_info_resp(info);
        }
        return reply;
    }

private:
    InProcessChannel inner_;
    std::function<void(wire::InfoResp&)> mutate_;
};

void check_query_pattern(Provider& provider, const CrackTrace& trace, uint32_t m,
                         const std::vector<uint64_t>& before) {
    CHECK(trace.queries_sent == m);
    for (uint32_t i = 0; i < m; ++i) CHECK(provider.queries_to_table(i) == before[i] + 1);
    REQUIRE(trace.events.size() == m + trace.chains_walked);
    CHECK(std::all_of(trace.events.begin(), trace.events.begin() + m,
                      [](char c) { return c == 'F'; }));
    CHECK(std::all_of(trace.events.begin() + m, trace.events.end(),
                      [](char c) { return c == 'W'; }));
}

std::vector<uint64_t> counter_snapshot(Provider& provider, uint32_t m) {
    std::vector<uint64_t> counts(m);
    for (uint32_t i = 0; i < m; ++i) counts[i] = provider.queries_to_table(i);
    return counts;
}

}  // namespace

TEST_CASE("session adopts the provider parameters") {
    auto& f = fixture();
    InProcessChannel channel(f.provider);
    CrackSession session(channel, pir::Scheme::Naive, HashAlgorithm::Md5);
    CHECK(session.table_count() == 15);
    CHECK(session.space().size() == 1296);
    CHECK(session.info().bucket_count == 60);
    CHECK(session.info().dp_modulus == 15);
}

TEST_CASE("session rejects a provider with mismatched parameters") {
    auto& f = fixture();

    auto expect_mismatch = [&](std::function<void(wire::InfoResp&)> mutate) {
        DoctorChannel channel(f.provider, std::move(mutate));
        CHECK_THROWS_AS(CrackSession(channel, pir::Scheme::Naive, HashAlgorithm::Md5),
                        ParamsMismatch);
    };

    expect_mismatch([](wire::InfoResp& i) { i.hash_id = 9; });
    expect_mismatch([](wire::InfoResp& i) { i.version = 2; });
    expect_mismatch([](wire::InfoResp& i) { i.record_size_bits = 64; });
    expect_mismatch([](wire::InfoResp& i) { i.bucket_count = i.table_count; });
    expect_mismatch([](wire::InfoResp& i) { i.table_count = 0; });
    expect_mismatch([](wire::InfoResp& i) { i.dp_modulus = 0; });
    expect_mismatch([](wire::InfoResp& i) { i.alphabet = "aa"; i.length = 4; });

    // An untouched announcement still works through the same wrapper.
    DoctorChannel channel(f.provider, [](wire::InfoResp&) {});
    CHECK_NOTHROW(CrackSession(channel, pir::Scheme::Naive, HashAlgorithm::Md5));
}

TEST_CASE("candidate endpoints match independent chain walks") {
    auto& f = fixture();
    InProcessChannel channel(f.provider);
    CrackSession session(channel, pir::Scheme::Naive, HashAlgorithm::Md5);
    HashProvider h(HashAlgorithm::Md5);
    ChainParams chain{15, 150};

    auto target = hash_password("cafe");
    auto endpoints = session.compute_candidate_endpoints(target);
    REQUIRE(endpoints.size() == 15);
    for (uint32_t i = 0; i < 15; ++i) {
        auto walk = walk_digest_to_endpoint(target.data(), i, chain, f.set.params.space, h);
        REQUIRE(endpoints[i].has_value() == walk.has_value());
        if (walk) {
            CHECK(*endpoints[i] == walk->end_fingerprint);
            CHECK(*endpoints[i] % 15 == 0);
        }
    }
}

TEST_CASE("a distinguished target is its own candidate endpoint everywhere") {
    auto& f = fixture();
    InProcessChannel channel(f.provider);
    CrackSession session(channel, pir::Scheme::Naive, HashAlgorithm::Md5);

    std::vector<uint8_t> target(16, 0);
    target[0] = 45;  // fingerprint 45, divisible by 15
    auto endpoints = session.compute_candidate_endpoints(target);
    for (const auto& e : endpoints) {
        REQUIRE(e.has_value());
        CHECK(*e == 45);
    }
}

TEST_CASE("fetch_start returns exactly the stored starts") {
    auto& f = fixture();
    InProcessChannel channel(f.provider);
    CrackSession session(channel, pir::Scheme::Naive, HashAlgorithm::Md5);
    const auto& table0 = f.set.tables[0];

    SUBCASE("every stored record is retrievable") {
        for (uint32_t b = 0; b < table0.buckets.size(); ++b) {
            const auto& rec = table0.buckets[b];
            if (rec.is_empty()) continue;
            auto start = session.fetch_start(rec.end_fingerprint, 0);
            REQUIRE(start.has_value());
            CHECK(*start == rec.start_index);
        }
    }

    SUBCASE("an absent fingerprint comes back empty") {
        // A distinguished fingerprint stored in no bucket of table 0.
        uint64_t fp = 15;
        auto stored = [&](uint64_t candidate) {
            const auto& rec = table0.buckets[bucket_for(candidate, 60)];
            return !rec.is_empty() && rec.end_fingerprint == candidate;
        };
        while (stored(fp)) fp += 15;
        CHECK_FALSE(session.fetch_start(fp, 0).has_value());
    }
}

TEST_CASE("crack issues exactly one query per table") {
    auto& f = fixture();
    InProcessChannel channel(f.provider);
    CrackSession session(channel, pir::Scheme::Naive, HashAlgorithm::Md5);

    SUBCASE("successful attempt") {
        auto before = counter_snapshot(f.provider, 15);
        auto result = session.crack(hash_password("fade"));
        REQUIRE(result.has_value());
        CHECK(*result == "fade");
        check_query_pattern(f.provider, session.last_trace(), 15, before);
        CHECK(session.last_trace().bytes_up > 0);
        CHECK(session.last_trace().bytes_down > 0);
    }

    SUBCASE("failed attempt") {
        auto before = counter_snapshot(f.provider, 15);
        auto result = session.crack(arbitrary_digest(777));
        CHECK_FALSE(result.has_value());
        check_query_pattern(f.provider, session.last_trace(), 15, before);
    }

    SUBCASE("wrong digest size throws before any query") {
        auto before = f.provider.total_queries();
        std::vector<uint8_t> bad(5, 0);
        CHECK_THROWS_AS(session.crack(bad), std::invalid_argument);
        CHECK(f.provider.total_queries() == before);
    }
}

TEST_CASE("cycling candidates still spend their query") {
    // A provider whose distinguished predicate never fires within the
    // cutoff: every candidate walk cycles, yet the query pattern must not
    // change shape.
    PasswordSpace space("ab", 2);
    TableParams params{space, HashAlgorithm::Md5, 0.5, 4.0, 2, 8,
                       ChainParams{uint64_t{1} << 62, 20}};
    std::vector<HellmanTable> tables(2);
    for (uint32_t i = 0; i < 2; ++i) {
        tables[i].table_index = i;
        tables[i].buckets.resize(8);
    }
    Provider provider(TableSet{params, std::move(tables)});
    InProcessChannel channel(provider);
    CrackSession session(channel, pir::Scheme::Naive, HashAlgorithm::Md5);

    auto result = session.crack(hash_password("xy"));
    CHECK_FALSE(result.has_value());
    const auto& trace = session.last_trace();
    CHECK(trace.queries_sent == 2);
    CHECK(trace.endpoints_cycled == 2);
    CHECK(trace.starts_found == 0);
    CHECK(trace.chains_walked == 0);
    CHECK(trace.events == "FF");
    CHECK(provider.queries_to_table(0) == 1);
    CHECK(provider.queries_to_table(1) == 1);
}

TEST_CASE("single-hash chains crack immediately") {
    PasswordSpace space("abcdef", 4);
    TableParams params{space, HashAlgorithm::Md5, 0.5, 4.0, 2, 8, ChainParams{1, 10}};
    BuildStats stats;
    Provider provider(TableSet{params, build_all(params, stats, 1)});
    InProcessChannel channel(provider);
    CrackSession session(channel, pir::Scheme::Naive, HashAlgorithm::Md5);

    // Chain start 0 of table 0 is always stored; its first link hashes
    // straight to the stored endpoint.
    auto result = session.crack(hash_password(space.index_to_password(0)));
    REQUIRE(result.has_value());
    CHECK(*result == space.index_to_password(0));
    CHECK(session.last_trace().queries_sent == 2);
}

TEST_CASE("naive and classic sessions agree with the local oracle") {
    auto& f = fixture();
    InProcessChannel naive_channel(f.provider);
    InProcessChannel classic_channel(f.provider);
    CrackSession naive(naive_channel, pir::Scheme::Naive, HashAlgorithm::Md5);
    CrackSession classic(classic_channel, pir::Scheme::Classic, HashAlgorithm::Md5, 64, 9);

    int cracked = 0;
    for (int t = 0; t < 12; ++t) {
        std::vector<uint8_t> target;
        if (t % 2 == 0) {
            uint64_t index = splitmix64(t) % 1296;
            target = hash_password(f.set.params.space.index_to_password(index));
        } else {
            target = arbitrary_digest(t);
        }
        auto from_naive = naive.crack(target);
        auto from_classic = classic.crack(target);
        auto from_local = lookup_local(f.set, target);
        CHECK(from_naive == from_classic);
        CHECK(from_naive == from_local);
        if (from_naive) cracked++;
    }
    CHECK(cracked > 0);
}

TEST_CASE("every stored chain start is recoverable through the full stack") {
    auto& f = fixture();
    InProcessChannel channel(f.provider);
    CrackSession session(channel, pir::Scheme::Naive, HashAlgorithm::Md5);
    HashProvider h(HashAlgorithm::Md5);

    int checked = 0;
    for (const auto& rec : f.set.tables[0].buckets) {
        if (rec.is_empty()) continue;
        auto pw = f.set.params.space.index_to_password(rec.start_index);
        auto target = hash_password(pw);
        auto result = session.crack(target);
        REQUIRE(result.has_value());
        CHECK(hash_password(*result) == target);
        checked++;
    }
    CHECK(checked == 15);
}

TEST_CASE("sessions work over tcp") {
    auto& f = fixture();
    TcpServer server(f.provider, "127.0.0.1", 0);
    TcpChannel channel("127.0.0.1", server.port());
    CrackSession session(channel, pir::Scheme::Naive, HashAlgorithm::Md5);

    auto result = session.crack(hash_password("fade"));
    REQUIRE(result.has_value());
    CHECK(*result == "fade");
    CHECK(session.last_trace().queries_sent == 15);
    CHECK(session.last_trace().bytes_down > session.last_trace().bytes_up);
    server.stop();
}

TEST_CASE("local oracle rejects bad digests") {
    auto& f = fixture();
    std::vector<uint8_t> bad(3);
    CHECK_THROWS_AS(lookup_local(f.set, bad), std::invalid_argument);
}
