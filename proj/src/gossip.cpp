#include "hybridsim/gossip.hpp"

#include <numeric>

#include "hybridsim/rng.hpp"

namespace hybridsim {

std::vector<Label> GossipMatrix::out_neighbors(Label from) const {
    std::vector<Label> out;
    for (Label j = 0; j < csize(); ++j)
        if (a[from][j]) out.push_back(j);
    return out;
}

std::vector<Label> GossipMatrix::in_neighbors(Label to) const {
    std::vector<Label> in;
    for (Label i = 0; i < csize(); ++i)
        if (a[i][to]) in.push_back(i);
    return in;
}

std::string GossipMatrix::text_grid() const {
    std::string grid;
    grid.reserve(a.size() * (a.size() + 1));
    for (const auto& row : a) {
        for (uint8_t v : row) grid.push_back(v ? '1' : '0');
        grid.push_back('\n');
    }
    return grid;
}

std::string to_string(MatrixError e) {
    return e == MatrixError::InfeasibleParams ? "infeasible matrix parameters"
                                              : "matrix generation timeout";
}

bool is_strongly_connected(const std::vector<std::vector<uint8_t>>& a) {
    const size_t n = a.size();
    if (n == 0) return false;
    // reachability from 0 along edges, then along reversed edges
    for (bool reversed : {false, true}) {
        std::vector<uint8_t> seen(n, 0);
        std::vector<size_t> stack{0};
        seen[0] = 1;
        size_t count = 1;
        while (!stack.empty()) {
            size_t u = stack.back();
            stack.pop_back();
            for (size_t v = 0; v < n; ++v) {
                bool edge = reversed ? a[v][u] : a[u][v];
                if (edge && !seen[v]) {
                    seen[v] = 1;
                    ++count;
                    stack.push_back(v);
                }
            }
        }
        if (count != n) return false;
    }
    return true;
}

// A uniformly random derangement by shuffle-and-retry; about e tries each.
static std::vector<uint32_t> random_derangement(uint32_t n, DetRng& rng) {
    std::vector<uint32_t> p(n);
    for (;;) {
        std::iota(p.begin(), p.end(), 0);
        rng.shuffle(p);
        bool fixed_point = false;
        for (uint32_t i = 0; i < n; ++i)
            if (p[i] == i) {
                fixed_point = true;
                break;
            }
        if (!fixed_point) return p;
    }
}

Result<GossipMatrix, MatrixError> generate_matrix(const Digest256& seed, uint32_t csize,
                                                  uint32_t gsize, uint32_t max_attempts) {
    if (gsize < 1 || gsize >= csize) return MatrixError::InfeasibleParams;
    DetRng rng(seed);
    for (uint32_t attempt = 0; attempt < max_attempts; ++attempt) {
        GossipMatrix m;
        m.gsize = gsize;
        m.seed = seed;
        m.a.assign(csize, std::vector<uint8_t>(csize, 0));
        bool overlap = false;
        for (uint32_t k = 0; k < gsize && !overlap; ++k) {
            auto p = random_derangement(csize, rng);
            for (uint32_t i = 0; i < csize; ++i) {
                if (m.a[i][p[i]]) {  // entry collision would break 0/1-ness
                    overlap = true;
                    break;
                }
                m.a[i][p[i]] = 1;
            }
        }
        if (overlap || !is_strongly_connected(m.a)) continue;
        return m;
    }
    return MatrixError::GenerationTimeout;
}

// XOR with a keystream derived from the addressee keeps honest code from
// reading through the envelope by accident; it is not cryptography.
static uint64_t keystream(Label to) {
    uint64_t z = 0x9e3779b97f4a7c15ULL ^ (static_cast<uint64_t>(to) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<EncryptedAnnouncement> announce(Label from, const GossipMatrix& m,
                                            NetAddress own_address) {
    std::vector<EncryptedAnnouncement> out;
    for (Label to : m.out_neighbors(from))
        out.push_back({from, to, own_address ^ keystream(to)});
    return out;
}

std::optional<NetAddress> decrypt_announcement(const EncryptedAnnouncement& ann, Label me) {
    if (ann.to != me) return std::nullopt;
    return ann.sealed_address ^ keystream(me);
}

AddressTable build_table(Label me, NetAddress own_address,
                         const std::vector<EncryptedAnnouncement>& delivered) {
    AddressTable t;
    t.owner = me;
    t.known[me] = own_address;
    for (const auto& ann : delivered)
        if (auto addr = decrypt_announcement(ann, me)) t.known[ann.from] = *addr;
    return t;
}

}  // namespace hybridsim
