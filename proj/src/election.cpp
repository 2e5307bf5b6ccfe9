#include "hybridsim/election.hpp"

namespace hybridsim {

std::pair<double, double> CandidateSet::interval_of(size_t index) const {
    double k = static_cast<double>(candidates.size());
    return {static_cast<double>(index) / k, static_cast<double>(index + 1) / k};
}

size_t CandidateSet::index_of_draw(uint64_t draw) const {
    return static_cast<size_t>(
        (static_cast<unsigned __int128>(draw) * candidates.size()) >> 64);
}

std::string to_string(ElectionError) { return "no candidates"; }

Result<CandidateSet, ElectionError> collect_candidates(const ChainView& chain,
                                                       const ElectionParams& params) {
    CandidateSet set;
    for (const auto& [miner, count] : chain.fruit_counts(params.window))
        if (count >= params.nu && params.opt_in.count(miner))
            set.candidates.emplace_back(miner, count);
    if (set.candidates.empty()) return ElectionError::NoCandidates;
    return set;
}

ElectionSeed derive_seed(const ElectionSeed& prev,
                         const std::vector<Digest256>& recent_hashes, uint32_t csize) {
    Encoder e;
    e.dig(prev.seed);
    for (const auto& h : recent_hashes) e.dig(h);
    ElectionSeed next;
    next.seed = e.hash();
    DetRng rng(next.seed);
    next.draws.reserve(csize);
    for (uint32_t i = 0; i < csize; ++i) next.draws.push_back(rng.next_u64());
    return next;
}

std::vector<NodeId> elect(const CandidateSet& cands, const ElectionSeed& seed,
                          uint32_t csize, const std::set<NodeId>& exclude) {
    size_t eligible = 0;
    for (const auto& [id, count] : cands.candidates) eligible += exclude.count(id) ? 0 : 1;
    size_t target = std::min<size_t>(csize, eligible);

    std::vector<NodeId> members;
    std::set<NodeId> chosen;
    DetRng rng(seed.seed);  // same stream the stored draws came from
    while (chosen.size() < target) {
        auto [id, count] = cands.candidates[cands.index_of_draw(rng.next_u64())];
        if (exclude.count(id) || !chosen.insert(id).second) continue;
        members.push_back(id);
    }
    return members;
}

}  // namespace hybridsim
