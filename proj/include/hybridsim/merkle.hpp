#pragma once

#include <vector>

#include "hybridsim/digest.hpp"

namespace hybridsim {

// Binary merkle tree with domain-separated leaf/node hashing. An odd node at
// any level is paired with itself; the empty list maps to the zero digest;
// a single leaf maps to its leaf hash.
Digest256 merkle_root(const std::vector<Bytes>& leaves);

Digest256 merkle_leaf_hash(const Bytes& leaf);
Digest256 merkle_node_hash(const Digest256& left, const Digest256& right);

}  // namespace hybridsim
