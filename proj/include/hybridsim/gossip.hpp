#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hybridsim/digest.hpp"
#include "hybridsim/util.hpp"

namespace hybridsim {

using Label = uint32_t;       // committee position, in selection order
using NetAddress = uint64_t;  // simulated endpoint identity

// Directed gossip topology: edge i -> j means i sends its address to j.
// Every row and column sums to gsize, the diagonal is zero, and the graph
// is strongly connected so committee traffic can always flood both ways.
struct GossipMatrix {
    std::vector<std::vector<uint8_t>> a;
    uint32_t gsize = 0;
    Digest256 seed;

    uint32_t csize() const { return static_cast<uint32_t>(a.size()); }
    bool edge(Label from, Label to) const { return a[from][to] != 0; }
    std::vector<Label> out_neighbors(Label from) const;
    std::vector<Label> in_neighbors(Label to) const;
    std::string text_grid() const;  // csize lines of 0/1 for audit
};

enum class MatrixError { InfeasibleParams, GenerationTimeout };
std::string to_string(MatrixError e);

// Deterministic in the seed: accumulates gsize pairwise-disjoint random
// derangements and rejects any candidate that is not strongly connected.
Result<GossipMatrix, MatrixError> generate_matrix(const Digest256& seed, uint32_t csize,
                                                  uint32_t gsize,
                                                  uint32_t max_attempts = 10000);

bool is_strongly_connected(const std::vector<std::vector<uint8_t>>& a);

// Stand-in for public-key sealing: only the addressed label can open it.
struct EncryptedAnnouncement {
    Label from = 0;
    Label to = 0;
    NetAddress sealed_address = 0;
};

// One sealed announcement per out-neighbor of `from`.
std::vector<EncryptedAnnouncement> announce(Label from, const GossipMatrix& m,
                                            NetAddress own_address);

// The failure token for everyone but the addressee.
std::optional<NetAddress> decrypt_announcement(const EncryptedAnnouncement& ann, Label me);

// What one member ends up knowing: itself plus whichever in-neighbors'
// announcements actually arrived.
struct AddressTable {
    Label owner = 0;
    std::map<Label, NetAddress> known;
};

AddressTable build_table(Label me, NetAddress own_address,
                         const std::vector<EncryptedAnnouncement>& delivered);

// Compromising one member leaks exactly its table; the bound is gsize + 1.
inline size_t leak_size(const AddressTable& t) { return t.known.size(); }

// Balance guideline: flag topologies whose fan-out crowds the committee.
inline bool gsize_within_guideline(uint32_t csize, uint32_t gsize) {
    return 6 * gsize < csize;
}

}  // namespace hybridsim
