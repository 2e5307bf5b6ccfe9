#pragma once

#include <cstdint>
#include <vector>

#include "hybridsim/digest.hpp"

namespace hybridsim {

// xoshiro256** seeded either from a u64 (via splitmix expansion) or from a
// 256-bit digest. All protocol draws go through this so runs are reproducible
// across platforms; never std::mt19937 (distribution code is not portable).
class DetRng {
public:
    explicit DetRng(uint64_t seed);
    explicit DetRng(const Digest256& seed);

    uint64_t next_u64();

    // Uniform in [0, n) via 128-bit multiply; bias < n / 2^64.
    uint64_t below(uint64_t n);

    // Uniform double in [0, 1).
    double real01();

    // Uniform in [lo, hi] inclusive.
    uint64_t range(uint64_t lo, uint64_t hi) { return lo + below(hi - lo + 1); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    uint64_t s_[4];
};

}  // namespace hybridsim
