#pragma once

#include <set>
#include <utility>
#include <vector>

#include "hybridsim/fruitchain.hpp"
#include "hybridsim/rng.hpp"
#include "hybridsim/types.hpp"
#include "hybridsim/util.hpp"

namespace hybridsim {

struct ElectionParams {
    uint32_t window = 144;  // snail blocks scanned for fruit merit
    uint64_t nu = 100;      // minimum fruits to qualify
    uint32_t csize = 31;    // committee size
    std::set<NodeId> opt_in;
};

// Qualified miners in id order, each owning an equal-width slice of [0,1).
struct CandidateSet {
    std::vector<std::pair<NodeId, uint64_t>> candidates;  // (id, fruit count)

    size_t size() const { return candidates.size(); }
    // Equal-width slice boundaries, for transcripts and display.
    std::pair<double, double> interval_of(size_t index) const;
    // Exact fixed-point mapping of a 64-bit draw onto a candidate index;
    // floats never enter the consensus path.
    size_t index_of_draw(uint64_t draw) const;
};

enum class ElectionError { NoCandidates };
std::string to_string(ElectionError e);

// Seed chain plus the advisory prefix of its draw stream. Selection always
// re-derives the stream from the seed, so the stored draws are pure record.
struct ElectionSeed {
    Digest256 seed;
    std::vector<uint64_t> draws;

    static ElectionSeed genesis() { return {}; }  // all-zero starting seed
};

// Opted-in miners with at least nu fruits across the last window blocks.
Result<CandidateSet, ElectionError> collect_candidates(const ChainView& chain,
                                                       const ElectionParams& params);

// seed' = digest(prev seed || recent block hashes); draws follow from seed'.
ElectionSeed derive_seed(const ElectionSeed& prev,
                         const std::vector<Digest256>& recent_hashes, uint32_t csize);

// Draws from the seed's stream until csize distinct members are picked,
// skipping repeats and already-serving ids; if fewer eligible candidates
// exist than csize, every one of them serves. Output order is selection
// order, which becomes each member's committee label.
std::vector<NodeId> elect(const CandidateSet& cands, const ElectionSeed& seed,
                          uint32_t csize, const std::set<NodeId>& exclude = {});

// A rotation flagged at a height takes effect only once that block is buried
// deep enough for every honest node to have synchronized.
inline bool rotation_synchronized(uint64_t flagged_height, uint64_t tip_height,
                                  uint32_t lambda) {
    return tip_height >= flagged_height + lambda;
}

// One rotation's worth of transcript, exported per election.
struct ElectionRecord {
    uint64_t term_id = 0;
    Digest256 seed;
    std::vector<std::pair<NodeId, uint64_t>> candidates;
    std::vector<NodeId> members;
};

}  // namespace hybridsim
