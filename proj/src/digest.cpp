#include "hybridsim/digest.hpp"

#include <openssl/evp.h>

#include <stdexcept>

#include "hybridsim/util.hpp"

namespace hybridsim {

std::string to_hex(const uint8_t* data, size_t len) {
    static const char* k = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (size_t i = 0; i < len; ++i) {
        out.push_back(k[data[i] >> 4]);
        out.push_back(k[data[i] & 0xf]);
    }
    return out;
}

static int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::optional<std::string> from_hex(const std::string& hex) {
    if (hex.size() % 2) return std::nullopt;
    std::string out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_nibble(hex[i]), lo = hex_nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out.push_back(static_cast<char>((hi << 4) | lo));
    }
    return out;
}

std::string Digest256::hex() const { return to_hex(bytes.data(), bytes.size()); }

Digest256 Digest256::from_hex(const std::string& h) {
    auto raw = hybridsim::from_hex(h);
    if (!raw || raw->size() != 32) throw std::invalid_argument("Digest256: bad hex");
    Digest256 d;
    std::memcpy(d.bytes.data(), raw->data(), 32);
    return d;
}

uint64_t Digest256::prefix_u64() const {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | bytes[i];
    return v;
}

uint64_t Digest256::suffix_u64() const {
    uint64_t v = 0;
    for (int i = 24; i < 32; ++i) v = (v << 8) | bytes[i];
    return v;
}

static thread_local DigestBackend g_backend = DigestBackend::sha3;

void set_digest_backend(DigestBackend b) { g_backend = b; }
DigestBackend digest_backend() { return g_backend; }

Digest256 sha3_256(const uint8_t* data, size_t len) {
    // Fetch the algorithm once per thread; the implicit per-call fetch in
    // EVP_sha3_256 costs more than the permutation for short inputs.
    static thread_local EVP_MD* md = EVP_MD_fetch(nullptr, "SHA3-256", nullptr);
    static thread_local EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    Digest256 out;
    unsigned int outlen = 32;
    if (EVP_DigestInit_ex2(ctx, md, nullptr) != 1 || EVP_DigestUpdate(ctx, data, len) != 1 ||
        EVP_DigestFinal_ex(ctx, out.bytes.data(), &outlen) != 1 || outlen != 32)
        throw std::runtime_error("sha3-256 failed");
    return out;
}

static inline uint64_t mix64(uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

// 4-lane mixer: absorbs 8-byte words round-robin, then cross-mixes. Not
// cryptographic; statistically uniform output is all the simulator needs.
static Digest256 fast_digest(const uint8_t* data, size_t len) {
    uint64_t lane[4] = {0x9e3779b97f4a7c15ULL, 0x517cc1b727220a95ULL,
                        0x85ebca77c2b2ae63ULL, 0x27d4eb2f165667c5ULL};
    lane[0] ^= mix64(len + 0x632be59bd9b4e019ULL);
    size_t i = 0, w = 0;
    while (i + 8 <= len) {
        uint64_t v;
        std::memcpy(&v, data + i, 8);
        lane[w & 3] = mix64(lane[w & 3] ^ v) + 0x9e3779b97f4a7c15ULL * (w + 1);
        i += 8;
        ++w;
    }
    uint64_t tail = 0x8000000000000000ULL >> ((len - i) * 8 % 64);
    for (size_t j = 0; i + j < len; ++j) tail ^= uint64_t(data[i + j]) << (8 * j);
    lane[w & 3] = mix64(lane[w & 3] ^ tail);
    for (int r = 0; r < 2; ++r) {
        uint64_t a = mix64(lane[0] ^ lane[3]), b = mix64(lane[1] ^ lane[0]),
                 c = mix64(lane[2] ^ lane[1]), d = mix64(lane[3] ^ lane[2]);
        lane[0] = a;
        lane[1] = b;
        lane[2] = c;
        lane[3] = d;
    }
    Digest256 out;
    for (int l = 0; l < 4; ++l)
        for (int b = 0; b < 8; ++b)
            out.bytes[l * 8 + b] = static_cast<uint8_t>(lane[l] >> (56 - 8 * b));
    return out;
}

Digest256 digest(const uint8_t* data, size_t len) {
    return g_backend == DigestBackend::sha3 ? sha3_256(data, len) : fast_digest(data, len);
}

Digest256 digest(const Bytes& data) { return digest(data.data(), data.size()); }

Digest256 digest_concat(const Digest256& a, const Digest256& b) {
    uint8_t buf[64];
    std::memcpy(buf, a.bytes.data(), 32);
    std::memcpy(buf + 32, b.bytes.data(), 32);
    return digest(buf, 64);
}

}  // namespace hybridsim
