#include "hybridsim/rng.hpp"

namespace hybridsim {

static inline uint64_t splitmix64(uint64_t& x) {
    uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

DetRng::DetRng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& s : s_) s = splitmix64(x);
}

DetRng::DetRng(const Digest256& seed) {
    for (int l = 0; l < 4; ++l) {
        uint64_t v = 0;
        for (int b = 0; b < 8; ++b) v = (v << 8) | seed.bytes[l * 8 + b];
        s_[l] = v;
    }
    // An all-zero digest would freeze xoshiro; splitmix pass guarantees a
    // nonzero state either way.
    uint64_t x = s_[0] ^ 0xdeadbeefcafef00dULL;
    for (auto& s : s_) s ^= splitmix64(x);
}

static inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

uint64_t DetRng::next_u64() {
    uint64_t result = rotl(s_[1] * 5, 7) * 9;
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

uint64_t DetRng::below(uint64_t n) {
    return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
}

double DetRng::real01() { return (next_u64() >> 11) * 0x1.0p-53; }

}  // namespace hybridsim
