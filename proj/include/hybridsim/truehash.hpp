#pragma once

#include <cstdint>
#include <vector>

#include "hybridsim/digest.hpp"
#include "hybridsim/rng.hpp"
#include "hybridsim/util.hpp"

namespace hybridsim {

// Permutation of {0..n-1} acting on header vectors. apply() uses the left
// action v'[g(i)] = v[i], so apply(g2, apply(g1, v)) == apply(compose(g2,g1), v)
// with compose(g2,g1)(i) = g2(g1(i)).
class Permutation {
public:
    Permutation() = default;
    explicit Permutation(std::vector<uint32_t> map);

    static Permutation identity(size_t n);
    static Permutation shuffled(size_t n, DetRng& rng);  // Fisher-Yates

    size_t size() const { return map_.size(); }
    uint32_t operator()(size_t i) const { return map_[i]; }
    bool is_identity() const;

    Permutation compose(const Permutation& inner) const;  // this after inner
    Permutation inverse() const;

    template <typename T>
    std::vector<T> apply(const std::vector<T>& v) const {
        std::vector<T> out(v.size());
        for (size_t i = 0; i < v.size(); ++i) out[map_[i]] = v[i];
        return out;
    }

    auto operator<=>(const Permutation&) const = default;
    const std::vector<uint32_t>& raw() const { return map_; }

private:
    std::vector<uint32_t> map_;
};

// Epoch-rotated mining hash parameters. Every honest node derives the same
// params from the same chain, which is what makes the function a consensus
// artifact rather than local state.
struct TruehashParams {
    uint32_t n = 16;           // header vector length in u64 elements
    uint32_t epoch_length = 20;  // blocks per permutation epoch
    Permutation g;             // current coordinate permutation

    static TruehashParams initial(uint32_t n, uint32_t epoch_length) {
        return {n, epoch_length, Permutation::identity(n)};
    }
};

enum class TruehashError { WrongEpochBoundary };

// Expands (header bytes, nonce) into n u64 elements via keyed digest chunks.
std::vector<uint64_t> pad_header(const Bytes& header, uint64_t nonce, uint32_t n);

// digest over the permuted header vector.
Digest256 truehash(const TruehashParams& params, const Bytes& header, uint64_t nonce);

// New params for the epoch starting at `height`. Must be called exactly at
// multiples of epoch_length (height > 0); the permutation is a seeded shuffle
// keyed by the digests of the last epoch_length blocks.
Result<TruehashParams, TruehashError> rotate_element(const std::vector<Digest256>& recent_hashes,
                                                     uint64_t height,
                                                     const TruehashParams& params);

}  // namespace hybridsim
