#include "hellpir/pir.hpp"

#include "hellpir/core.hpp"

namespace hellpir::pir {

int jacobi(const Bigint& a, const Bigint& n) { return mpz_jacobi(a.get_mpz_t(), n.get_mpz_t()); }

Bigint mod_exp(const Bigint& base, const Bigint& exponent, const Bigint& modulus) {
    Bigint r;
    mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exponent.get_mpz_t(), modulus.get_mpz_t());
    return r;
}

Bigint mod_mul(const Bigint& a, const Bigint& b, const Bigint& modulus) {
    Bigint r = a * b;
    r %= modulus;
    return r;
}

uint64_t Rng::next_u64() {
    uint64_t v = splitmix64(state_);
    state_ += 0x9e3779b97f4a7c15ULL;
    return v;
}

Bigint Rng::below(const Bigint& bound) {
    if (bound <= 0) throw std::invalid_argument("bound must be positive");
    size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
    size_t words = (bits + 63) / 64;
    std::vector<uint64_t> raw(words);
    while (true) {
        for (auto& w : raw) w = next_u64();
        // mask the top word down to the bound's bit length
        unsigned top_bits = bits % 64;
        if (top_bits != 0) raw.back() &= (uint64_t{1} << top_bits) - 1;
        Bigint candidate;
        mpz_import(candidate.get_mpz_t(), words, -1, 8, 0, 0, raw.data());
        if (candidate < bound) return candidate;
    }
}

Bigint Rng::odd_with_top_bits(unsigned bits) {
    if (bits < 3) throw std::invalid_argument("bit length too small");
    Bigint v = below(Bigint(1) << bits);
    mpz_setbit(v.get_mpz_t(), bits - 1);
    mpz_setbit(v.get_mpz_t(), bits - 2);  // top two bits keep the product at full width
    mpz_setbit(v.get_mpz_t(), 0);
    return v;
}

namespace {

Bigint random_blum_prime(unsigned bits, Rng& rng) {
    while (true) {
        Bigint candidate = rng.odd_with_top_bits(bits);
        mpz_setbit(candidate.get_mpz_t(), 1);  // congruent to 3 mod 4
        if (mpz_probab_prime_p(candidate.get_mpz_t(), 40) > 0) return candidate;
    }
}

bool is_nonresidue_mod_prime(const Bigint& value, const Bigint& prime) {
    // Euler's criterion: value^((prime-1)/2) is prime-1 for a non-residue.
    Bigint e = (prime - 1) / 2;
    return mod_exp(value % prime, e, prime) == prime - 1;
}

}  // namespace

QraKey keygen(unsigned modulus_bits, uint64_t seed) {
    if (modulus_bits < 32) throw std::invalid_argument("modulus_bits must be at least 32");
    Rng rng(seed);
    unsigned p_bits = modulus_bits - modulus_bits / 2;
    unsigned q_bits = modulus_bits / 2;
    QraKey key;
    key.modulus_bits = modulus_bits;
    key.p = random_blum_prime(p_bits, rng);
    do {
        key.q = random_blum_prime(q_bits, rng);
    } while (key.q == key.p);
    key.n = key.p * key.q;
    while (true) {
        Bigint candidate = rng.below(key.n - 2) + 2;
        if (jacobi(candidate, key.n) != 1) continue;
        if (is_nonresidue_mod_prime(candidate, key.p)) {
            key.u = candidate;
            break;
        }
    }
    return key;
}

bool key_is_valid(const QraKey& key) {
    if (key.p == key.q || key.p < 3 || key.q < 3) return false;
    if (key.n != key.p * key.q) return false;
    if (key.p % 4 != 3 || key.q % 4 != 3) return false;
    if (mpz_probab_prime_p(key.p.get_mpz_t(), 40) == 0) return false;
    if (mpz_probab_prime_p(key.q.get_mpz_t(), 40) == 0) return false;
    if (jacobi(key.u, key.n) != 1) return false;
    return is_nonresidue_mod_prime(key.u, key.p);
}

Query classic_query(uint32_t target_record, uint32_t record_count, const QraKey& key, Rng& rng) {
    if (target_record >= record_count) throw std::invalid_argument("target outside the database");
    Query query;
    query.scheme = Scheme::Classic;
    query.modulus_bits = key.modulus_bits;
    query.modulus = key.n;
    query.elements.reserve(record_count);
    for (uint32_t j = 0; j < record_count; ++j) {
        Bigint r;
        do {
            r = rng.below(key.n - 1) + 1;
        } while (gcd(r, key.n) != 1);
        Bigint element = mod_mul(r, r, key.n);
        if (j == target_record) element = mod_mul(element, key.u, key.n);
        query.elements.push_back(std::move(element));
    }
    return query;
}

Response classic_answer(const PirDatabase& db, const Query& query, ServerStats* stats) {
    if (query.scheme != Scheme::Classic) throw MalformedPayload("scheme mismatch");
    if (query.elements.size() != db.record_count)
        throw MalformedPayload("query has " + std::to_string(query.elements.size()) +
                               " elements for " + std::to_string(db.record_count) + " records");
    if (query.modulus < 2) throw MalformedPayload("modulus too small");
    for (const auto& e : query.elements)
        if (e <= 0 || e >= query.modulus) throw MalformedPayload("query element out of range");

    Response response;
    response.scheme = Scheme::Classic;
    response.elements.assign(db.record_size_bits, Bigint(1));
    const size_t record_bytes = db.record_bytes();
    for (uint32_t j = 0; j < db.record_count; ++j) {
        const uint8_t* record = db.records.data() + j * record_bytes;
        for (uint32_t b = 0; b < db.record_size_bits; ++b) {
            if ((record[b / 8] >> (b % 8)) & 1) {
                response.elements[b] = mod_mul(response.elements[b], query.elements[j], query.modulus);
                if (stats) stats->modular_multiplications++;
            }
        }
    }
    return response;
}

std::vector<uint8_t> classic_decode(const Response& response, const QraKey& key,
                                    uint32_t record_size_bits) {
    if (response.elements.size() != record_size_bits)
        throw MalformedPayload("response element count mismatch");
    std::vector<uint8_t> record(record_size_bits / 8, 0);
    const Bigint ep = (key.p - 1) / 2;
    const Bigint eq = (key.q - 1) / 2;
    for (uint32_t b = 0; b < record_size_bits; ++b) {
        const Bigint& z = response.elements[b];
        bool residue = mod_exp(z % key.p, ep, key.p) == 1 && mod_exp(z % key.q, eq, key.q) == 1;
        if (!residue) record[b / 8] |= uint8_t{1} << (b % 8);
    }
    return record;
}

Query naive_query() { return Query{Scheme::Naive, 0, Bigint(0), {}}; }

Response naive_answer(const PirDatabase& db, const Query& query) {
    if (query.scheme != Scheme::Naive) throw MalformedPayload("scheme mismatch");
    Response response;
    response.scheme = Scheme::Naive;
    response.database = db.records;
    return response;
}

std::vector<uint8_t> naive_decode(const Response& response, uint32_t target_record,
                                  uint32_t record_size_bits, uint32_t record_count) {
    const size_t record_bytes = record_size_bits / 8;
    if (response.database.size() != static_cast<size_t>(record_count) * record_bytes)
        throw MalformedPayload("database length mismatch");
    if (target_record >= record_count) throw std::invalid_argument("target outside the database");
    auto begin = response.database.begin() + static_cast<ptrdiff_t>(target_record * record_bytes);
    return std::vector<uint8_t>(begin, begin + static_cast<ptrdiff_t>(record_bytes));
}

void append_fixed(const Bigint& value, size_t width, std::vector<uint8_t>& out) {
    if (value < 0) throw std::invalid_argument("negative value");
    size_t start = out.size();
    out.resize(start + width, 0);
    size_t count = 0;
    size_t bytes = (mpz_sizeinbase(value.get_mpz_t(), 2) + 7) / 8;
    if (value == 0) bytes = 0;
    if (bytes > width) throw std::invalid_argument("value wider than the wire width");
    if (bytes > 0)
        mpz_export(out.data() + start + (width - bytes), &count, 1, 1, 1, 0, value.get_mpz_t());
}

Bigint parse_fixed(std::span<const uint8_t> bytes) {
    Bigint v;
    if (!bytes.empty()) mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
    return v;
}

}  // namespace hellpir::pir
