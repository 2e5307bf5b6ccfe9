#include "hybridsim/merkle.hpp"

#include <cstring>

namespace hybridsim {

Digest256 merkle_leaf_hash(const Bytes& leaf) {
    Bytes buf;
    buf.reserve(leaf.size() + 1);
    buf.push_back(0x00);
    buf.insert(buf.end(), leaf.begin(), leaf.end());
    return digest(buf);
}

Digest256 merkle_node_hash(const Digest256& left, const Digest256& right) {
    uint8_t buf[65];
    buf[0] = 0x01;
    std::memcpy(buf + 1, left.bytes.data(), 32);
    std::memcpy(buf + 33, right.bytes.data(), 32);
    return digest(buf, 65);
}

Digest256 merkle_root(const std::vector<Bytes>& leaves) {
    if (leaves.empty()) return Digest256{};
    std::vector<Digest256> level;
    level.reserve(leaves.size());
    for (const auto& l : leaves) level.push_back(merkle_leaf_hash(l));
    while (level.size() > 1) {
        std::vector<Digest256> next;
        next.reserve((level.size() + 1) / 2);
        for (size_t i = 0; i < level.size(); i += 2) {
            const Digest256& right = (i + 1 < level.size()) ? level[i + 1] : level[i];
            next.push_back(merkle_node_hash(level[i], right));
        }
        level = std::move(next);
    }
    return level[0];
}

}  // namespace hybridsim
