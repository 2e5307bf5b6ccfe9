#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "hybridsim/rng.hpp"
#include "hybridsim/truehash.hpp"
#include "hybridsim/types.hpp"

namespace hybridsim {

// Two fruits for one serial are resolved by the lower full mining hash; the
// lower-anchor variant keeps the historical tie-break selectable.
enum class FruitDedupRule { lower_hash, lower_anchor };

struct MiningParams {
    uint64_t block_difficulty = 0;   // exclusive threshold on the hash prefix
    uint64_t fruit_difficulty = 0;   // exclusive threshold on the hash suffix
    uint32_t recency_window = 17;    // lambda: fruits must anchor within this many tip blocks
    uint32_t pointer_depth = 17;     // kappa: block back-pointer distance
    uint32_t election_window = 0;    // heights % window == 0 carry the rotation flag; 0 = off
    FruitDedupRule dedup = FruitDedupRule::lower_hash;

    // Threshold giving a per-draw success probability of 1/interval, scaled
    // by a miner's hash share.
    static uint64_t threshold(double probability);
};

// What a node knows about committed fastchain blocks: serial -> (digest,
// committee sign hash). Learned from committee broadcasts and from fruits.
struct MessageDirectory {
    struct Entry {
        Digest256 digest;
        Digest256 sign_hash;
    };
    std::map<Serial, Entry> entries;

    bool knows(Serial s) const { return entries.count(s) != 0; }
    void learn(Serial s, const Digest256& d, const Digest256& sign = {}) {
        entries.emplace(s, Entry{d, sign});
    }
};

SnailBlock make_genesis();

// One miner's view: its adopted chain plus every valid fruit heard. Pending
// fruits are keyed by serial after dedup; staleness is evaluated lazily
// against the current chain so a reorg can resurrect them.
struct ChainView {
    NodeId owner = 0;
    std::vector<SnailBlock> blocks;          // [0] is genesis
    std::map<Serial, Fruit> pending;

    static ChainView genesis_view(NodeId owner);

    const SnailBlock& tip() const { return blocks.back(); }
    uint64_t height() const { return blocks.size() - 1; }
    Serial last_included_serial() const;
    uint64_t total_fruits() const;
    std::map<NodeId, uint64_t> fruit_counts(uint32_t window_blocks) const;
};

bool is_recent(const std::vector<SnailBlock>& blocks, const Fruit& f, uint32_t window);
// Recency as of a chain prefix of the given length (validation of historical blocks).
bool is_recent_at(const std::vector<SnailBlock>& blocks, size_t prefix_len, const Fruit& f,
                  uint32_t window);

enum class FruitCheck { Ok, BadHash, BadThreshold, BadDifficultyClaim, DigestMismatch };
FruitCheck check_fruit(const Fruit& f, const MiningParams& params, const TruehashParams& th,
                       const MessageDirectory& dir);

enum class HearFruitResult { Accepted, Replaced, DuplicateKept, Invalid };
HearFruitResult on_hear_fruit(ChainView& view, const Fruit& f, const MiningParams& params,
                              const TruehashParams& th, MessageDirectory& dir);

// Serials last_included+1.. up to the first gap, in serial order.
std::vector<Fruit> select_contiguous(const std::map<Serial, Fruit>& pending,
                                     Serial last_included);

// The recent, contiguous, not-yet-included fruitset a block mined now would package.
std::vector<Fruit> candidate_fruitset(const ChainView& view, const MiningParams& params);

struct ChainCheck {
    bool ok = false;
    std::string reason;
    static ChainCheck good() { return {true, {}}; }
    static ChainCheck bad(std::string r) { return {false, std::move(r)}; }
};

// Identity of a block including everything outside the mining hash (stored
// fruits, flags, times); used as the validation-cache key.
Digest256 block_identity(const SnailBlock& b);

// Remembers fully validated prefixes so gossip re-validation only pays for
// new suffixes. Keyed by block_identity; value is the serial the next block
// must continue from.
struct ValidationCache {
    std::map<Digest256, Serial> validated;
};

// Full inductive validation from genesis. truehash params per epoch are
// re-derived from the chain itself when rotation is active. A cache, when
// given, both short-circuits validated prefixes and absorbs the new blocks.
ChainCheck validate_chain(const std::vector<SnailBlock>& blocks, const MiningParams& params,
                          const TruehashParams& initial_th,
                          ValidationCache* cache = nullptr);

enum class HearChainResult { Adopted, NotBetter, Invalid };
HearChainResult on_hear_chain(ChainView& view, const std::vector<SnailBlock>& candidate,
                              const MiningParams& params, const TruehashParams& initial_th,
                              ValidationCache* cache = nullptr);

struct MineOutcome {
    std::optional<Fruit> fruit;
    std::optional<SnailBlock> block;
};

// One nonce draw over the current view. The fruit takes the same hash as the
// block candidate; both may land. The caller feeds the fruit back through
// on_hear_fruit and the block through append/gossip.
MineOutcome mine_step(const ChainView& view, const MiningParams& params,
                      const TruehashParams& th, const MessageDirectory& dir, Tick now,
                      DetRng& rng);

// Appends a block this miner just mined (already validated by construction).
void append_block(ChainView& view, const SnailBlock& block);

// Epoch-consistent truehash params for mining at the current height.
TruehashParams truehash_at_tip(const std::vector<SnailBlock>& blocks,
                               const TruehashParams& initial);

// Heaviest chain by summed fruit difficulty; ties fall to the smaller tip
// hash. Input chains are assumed validated. Returns the winning index.
size_t fork_choice(const std::vector<std::vector<SnailBlock>>& branches);

}  // namespace hybridsim
