#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace hybridsim {

using Bytes = std::vector<uint8_t>;

// 256-bit digest. Comparison is bytewise lexicographic, which is what every
// tie-break in the protocol uses.
struct Digest256 {
    std::array<uint8_t, 32> bytes{};

    auto operator<=>(const Digest256&) const = default;

    bool is_zero() const {
        for (auto b : bytes)
            if (b) return false;
        return true;
    }
    std::string hex() const;
    static Digest256 from_hex(const std::string& h);

    // Big-endian view of the leading / trailing 8 bytes; mining thresholds
    // compare against these.
    uint64_t prefix_u64() const;
    uint64_t suffix_u64() const;
};

// Digest backend is a per-thread setting so parallel scenario runs stay
// independent. Default is sha3 (OpenSSL); "fast" is a 4-lane mixer for
// long statistical runs.
enum class DigestBackend { sha3, fast };

void set_digest_backend(DigestBackend b);
DigestBackend digest_backend();

Digest256 digest(const uint8_t* data, size_t len);
Digest256 digest(const Bytes& data);
Digest256 digest_concat(const Digest256& a, const Digest256& b);

// Always SHA3-256 regardless of the thread backend; used by tests pinning
// reference vectors.
Digest256 sha3_256(const uint8_t* data, size_t len);

}  // namespace hybridsim
