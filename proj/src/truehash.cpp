#include "hybridsim/truehash.hpp"

#include <stdexcept>

#include "hybridsim/encoding.hpp"

namespace hybridsim {

Permutation::Permutation(std::vector<uint32_t> map) : map_(std::move(map)) {
    std::vector<bool> seen(map_.size(), false);
    for (auto v : map_) {
        if (v >= map_.size() || seen[v]) throw std::invalid_argument("not a permutation");
        seen[v] = true;
    }
}

Permutation Permutation::identity(size_t n) {
    std::vector<uint32_t> m(n);
    for (size_t i = 0; i < n; ++i) m[i] = static_cast<uint32_t>(i);
    return Permutation(std::move(m));
}

Permutation Permutation::shuffled(size_t n, DetRng& rng) {
    auto p = identity(n);
    rng.shuffle(p.map_);
    return p;
}

bool Permutation::is_identity() const {
    for (size_t i = 0; i < map_.size(); ++i)
        if (map_[i] != i) return false;
    return true;
}

Permutation Permutation::compose(const Permutation& inner) const {
    if (size() != inner.size()) throw std::invalid_argument("size mismatch");
    std::vector<uint32_t> m(size());
    for (size_t i = 0; i < size(); ++i) m[i] = map_[inner.map_[i]];
    return Permutation(std::move(m));
}

Permutation Permutation::inverse() const {
    std::vector<uint32_t> m(size());
    for (size_t i = 0; i < size(); ++i) m[map_[i]] = static_cast<uint32_t>(i);
    return Permutation(std::move(m));
}

std::vector<uint64_t> pad_header(const Bytes& header, uint64_t nonce, uint32_t n) {
    std::vector<uint64_t> out;
    out.reserve(n);
    uint32_t counter = 0;
    while (out.size() < n) {
        Encoder e;
        e.bytes(header);
        e.u64(nonce);
        e.u32(counter++);
        Digest256 d = e.hash();
        for (int i = 0; i < 4 && out.size() < n; ++i) {
            uint64_t v = 0;
            for (int b = 0; b < 8; ++b) v = (v << 8) | d.bytes[i * 8 + b];
            out.push_back(v);
        }
    }
    return out;
}

Digest256 truehash(const TruehashParams& params, const Bytes& header, uint64_t nonce) {
    auto v = params.g.apply(pad_header(header, nonce, params.n));
    Bytes buf(v.size() * 8);
    for (size_t i = 0; i < v.size(); ++i)
        for (int b = 0; b < 8; ++b)
            buf[i * 8 + b] = static_cast<uint8_t>(v[i] >> (56 - 8 * b));
    return digest(buf);
}

Result<TruehashParams, TruehashError> rotate_element(const std::vector<Digest256>& recent_hashes,
                                                     uint64_t height,
                                                     const TruehashParams& params) {
    if (height == 0 || height % params.epoch_length != 0)
        return TruehashError::WrongEpochBoundary;
    if (recent_hashes.size() < params.epoch_length) return TruehashError::WrongEpochBoundary;

    // Seed over exactly the last epoch_length hashes, oldest first.
    Encoder e;
    for (size_t i = recent_hashes.size() - params.epoch_length; i < recent_hashes.size(); ++i)
        e.dig(recent_hashes[i]);
    DetRng rng(e.hash());
    TruehashParams next = params;
    next.g = Permutation::shuffled(params.n, rng);
    return next;
}

}  // namespace hybridsim
