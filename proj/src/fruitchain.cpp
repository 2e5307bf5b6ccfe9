#include "hybridsim/fruitchain.hpp"

#include <algorithm>

#include "hybridsim/merkle.hpp"

namespace hybridsim {

uint64_t MiningParams::threshold(double probability) {
    if (probability <= 0.0) return 0;
    if (probability >= 1.0) return UINT64_MAX;
    long double t = probability * 18446744073709551616.0L;  // 2^64
    return static_cast<uint64_t>(t);
}

// Mining preimage: every header field except the nonce, which truehash keys
// separately. Stored fruits and blocks replay this exactly for verification.
static Bytes mining_preimage(const MiningHeader& h) {
    Encoder e;
    e.dig(h.parent_hash);
    e.dig(h.pointer_hash);
    e.u64(h.pointer_number);
    e.dig(h.fruitset_digest);
    e.dig(h.fast_hash);
    e.u64(h.fast_number);
    e.u32(h.miner);
    return e.out();
}

static Digest256 mining_hash(const TruehashParams& th, const MiningHeader& h) {
    return truehash(th, mining_preimage(h), h.nonce);
}

SnailBlock make_genesis() {
    SnailBlock g;
    g.number = 0;
    g.time = 0;
    Encoder e;
    g.encode(e);
    g.hash = sha3_256(e.out().data(), e.out().size());  // backend-independent anchor
    return g;
}

ChainView ChainView::genesis_view(NodeId owner_id) {
    ChainView v;
    v.owner = owner_id;
    v.blocks.push_back(make_genesis());
    return v;
}

Serial ChainView::last_included_serial() const {
    // Serials are contiguous across the chain, so the maximum lives in the
    // most recent block that carries fruits. The fast genesis (serial 0)
    // never needs a fruit.
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it)
        if (!it->fruits.empty()) return it->fruits.back().serial();
    return 0;
}

uint64_t ChainView::total_fruits() const {
    uint64_t n = 0;
    for (const auto& b : blocks) n += b.fruits.size();
    return n;
}

std::map<NodeId, uint64_t> ChainView::fruit_counts(uint32_t window_blocks) const {
    std::map<NodeId, uint64_t> counts;
    size_t start = blocks.size() > window_blocks ? blocks.size() - window_blocks : 1;
    for (size_t i = start; i < blocks.size(); ++i)
        for (const auto& f : blocks[i].fruits) ++counts[f.header.miner];
    return counts;
}

bool is_recent_at(const std::vector<SnailBlock>& blocks, size_t prefix_len, const Fruit& f,
                  uint32_t window) {
    size_t start = prefix_len > window ? prefix_len - window : 0;
    for (size_t i = start; i < prefix_len; ++i)
        if (blocks[i].hash == f.anchor()) return true;
    return false;
}

bool is_recent(const std::vector<SnailBlock>& blocks, const Fruit& f, uint32_t window) {
    return is_recent_at(blocks, blocks.size(), f, window);
}

static TruehashParams truehash_for_height(const std::vector<SnailBlock>& blocks,
                                          uint64_t height, const TruehashParams& initial) {
    // Epoch k covers heights (k*E, (k+1)*E]; rotation at height k*E is keyed
    // on the hashes of the E blocks ending there.
    const uint32_t E = initial.epoch_length;
    TruehashParams th = initial;
    if (E == 0 || height == 0) return th;
    uint64_t epochs = (height - 1) / E;
    for (uint64_t k = 1; k <= epochs; ++k) {
        std::vector<Digest256> hashes;
        hashes.reserve(E);
        for (uint64_t i = (k - 1) * E + 1; i <= k * E; ++i) hashes.push_back(blocks[i].hash);
        auto r = rotate_element(hashes, k * E, th);
        th = r.value();
    }
    return th;
}

TruehashParams truehash_at_tip(const std::vector<SnailBlock>& blocks,
                               const TruehashParams& initial) {
    return truehash_for_height(blocks, blocks.size(), initial);
}

FruitCheck check_fruit(const Fruit& f, const MiningParams& params, const TruehashParams& th,
                       const MessageDirectory& dir) {
    if (f.fruit_difficulty != params.fruit_difficulty) return FruitCheck::BadDifficultyClaim;
    if (mining_hash(th, f.header) != f.hash) return FruitCheck::BadHash;
    if (!(f.hash.suffix_u64() < f.fruit_difficulty)) return FruitCheck::BadThreshold;
    auto it = dir.entries.find(f.serial());
    if (it != dir.entries.end() && it->second.digest != f.header.fast_hash)
        return FruitCheck::DigestMismatch;
    return FruitCheck::Ok;
}

static bool dedup_prefers_new(const Fruit& incumbent, const Fruit& candidate,
                              const ChainView& view, const MiningParams& params) {
    bool inc_recent = is_recent(view.blocks, incumbent, params.recency_window);
    bool cand_recent = is_recent(view.blocks, candidate, params.recency_window);
    if (inc_recent != cand_recent) return cand_recent;  // a packagable fruit beats a stale one
    if (params.dedup == FruitDedupRule::lower_hash) return candidate.hash < incumbent.hash;
    return candidate.anchor() < incumbent.anchor();
}

HearFruitResult on_hear_fruit(ChainView& view, const Fruit& f, const MiningParams& params,
                              const TruehashParams& initial_th, MessageDirectory& dir) {
    // The fruit's epoch is fixed by its anchor: it was drawn when the anchor
    // was the tip. An anchor outside our chain is unverifiable; drop it and
    // let chain gossip carry it if it matters.
    const SnailBlock* anchor_block = nullptr;
    for (auto it = view.blocks.rbegin(); it != view.blocks.rend(); ++it)
        if (it->hash == f.anchor()) {
            anchor_block = &*it;
            break;
        }
    if (!anchor_block) return HearFruitResult::Invalid;
    TruehashParams th =
        truehash_for_height(view.blocks, anchor_block->number + 1, initial_th);
    if (check_fruit(f, params, th, dir) != FruitCheck::Ok) return HearFruitResult::Invalid;

    dir.learn(f.serial(), f.header.fast_hash);

    auto it = view.pending.find(f.serial());
    if (it == view.pending.end()) {
        view.pending.emplace(f.serial(), f);
        return HearFruitResult::Accepted;
    }
    if (it->second == f) return HearFruitResult::DuplicateKept;
    if (dedup_prefers_new(it->second, f, view, params)) {
        it->second = f;
        return HearFruitResult::Replaced;
    }
    return HearFruitResult::DuplicateKept;
}

std::vector<Fruit> select_contiguous(const std::map<Serial, Fruit>& pending,
                                     Serial last_included) {
    std::vector<Fruit> out;
    for (Serial s = last_included + 1;; ++s) {
        auto it = pending.find(s);
        if (it == pending.end()) break;
        out.push_back(it->second);
    }
    return out;
}

std::vector<Fruit> candidate_fruitset(const ChainView& view, const MiningParams& params) {
    std::vector<Fruit> out;
    Serial last = view.last_included_serial();
    for (Serial s = last + 1;; ++s) {
        auto it = view.pending.find(s);
        if (it == view.pending.end()) break;
        if (!is_recent(view.blocks, it->second, params.recency_window)) break;
        out.push_back(it->second);
    }
    return out;
}

static Digest256 fruitset_digest(const std::vector<Fruit>& fruits) {
    std::vector<Bytes> leaves;
    leaves.reserve(fruits.size());
    for (const auto& f : fruits) {
        Encoder e;
        f.encode(e);
        leaves.push_back(e.out());
    }
    return merkle_root(leaves);
}

Digest256 block_identity(const SnailBlock& b) {
    Encoder e;
    b.encode(e);
    return e.hash();
}

ChainCheck validate_chain(const std::vector<SnailBlock>& blocks, const MiningParams& params,
                          const TruehashParams& initial_th, ValidationCache* cache) {
    if (blocks.empty()) return ChainCheck::bad("empty chain");
    if (blocks[0].hash != make_genesis().hash) return ChainCheck::bad("bad genesis");

    // Resume after the deepest cached prefix.
    size_t start = 1;
    Serial next_serial = 1;
    std::vector<Digest256> identities(blocks.size());
    if (cache) {
        for (size_t i = blocks.size(); i-- > 1;) {
            identities[i] = block_identity(blocks[i]);
            auto it = cache->validated.find(identities[i]);
            if (it != cache->validated.end()) {
                start = i + 1;
                next_serial = it->second;
                break;
            }
        }
    }

    TruehashParams th = truehash_for_height(blocks, start, initial_th);
    for (size_t i = start; i < blocks.size(); ++i) {
        const SnailBlock& b = blocks[i];
        const uint32_t E = th.epoch_length;
        if (E && i > E && (i - 1) % E == 0) {
            // block i opens a new epoch; rotation height i-1 keys on blocks (i-1-E, i-1]
            std::vector<Digest256> hashes;
            hashes.reserve(E);
            for (size_t j = i - E; j <= i - 1; ++j) hashes.push_back(blocks[j].hash);
            auto r = rotate_element(hashes, i - 1, th);
            if (!r.ok()) return ChainCheck::bad("rotation failed");
            th = r.value();
        }
        if (b.number != i) return ChainCheck::bad("bad number at " + std::to_string(i));
        if (b.header.parent_hash != blocks[i - 1].hash)
            return ChainCheck::bad("broken parent link at " + std::to_string(i));
        if (b.difficulty != params.block_difficulty ||
            b.fruit_difficulty != params.fruit_difficulty)
            return ChainCheck::bad("difficulty mismatch at " + std::to_string(i));
        uint64_t want_ptr = i > params.pointer_depth ? i - params.pointer_depth : 0;
        if (b.header.pointer_number != want_ptr ||
            b.header.pointer_hash != blocks[want_ptr].hash)
            return ChainCheck::bad("bad pointer at " + std::to_string(i));
        if (b.mix_digest != b.header.fast_hash)
            return ChainCheck::bad("mix digest mismatch at " + std::to_string(i));
        if (params.election_window) {
            bool want = i % params.election_window == 0;
            if (b.to_elect != want) return ChainCheck::bad("bad election flag");
        }
        if (mining_hash(th, b.header) != b.hash)
            return ChainCheck::bad("bad block hash at " + std::to_string(i));
        if (!(b.hash.prefix_u64() < b.difficulty))
            return ChainCheck::bad("block over difficulty at " + std::to_string(i));
        if (b.header.fruitset_digest != fruitset_digest(b.fruits))
            return ChainCheck::bad("fruitset digest mismatch at " + std::to_string(i));

        for (const auto& f : b.fruits) {
            if (f.serial() != next_serial)
                return ChainCheck::bad("serial gap at block " + std::to_string(i));
            ++next_serial;
            if (f.fruit_difficulty != params.fruit_difficulty)
                return ChainCheck::bad("fruit difficulty mismatch");
            if (!is_recent_at(blocks, i, f, params.recency_window))
                return ChainCheck::bad("stale fruit in block " + std::to_string(i));
            const SnailBlock* anchor = nullptr;
            for (size_t j = i; j-- > 0;)
                if (blocks[j].hash == f.anchor()) {
                    anchor = &blocks[j];
                    break;
                }
            TruehashParams fth = truehash_for_height(blocks, anchor->number + 1, initial_th);
            if (mining_hash(fth, f.header) != f.hash)
                return ChainCheck::bad("bad fruit hash, serial " +
                                       std::to_string(f.serial()));
            if (!(f.hash.suffix_u64() < f.fruit_difficulty))
                return ChainCheck::bad("fruit over difficulty");
        }
        if (cache) {
            if (identities[i].is_zero()) identities[i] = block_identity(b);
            cache->validated.emplace(identities[i], next_serial);
        }
    }
    return ChainCheck::good();
}

HearChainResult on_hear_chain(ChainView& view, const std::vector<SnailBlock>& candidate,
                              const MiningParams& params, const TruehashParams& initial_th,
                              ValidationCache* cache) {
    uint64_t cand_fruits = 0;
    for (const auto& b : candidate) cand_fruits += b.fruits.size();
    if (cand_fruits <= view.total_fruits()) return HearChainResult::NotBetter;
    if (!validate_chain(candidate, params, initial_th, cache).ok)
        return HearChainResult::Invalid;

    // Keep every known fruit that the new chain does not include; fruits from
    // the abandoned branch go back to pending.
    std::set<Serial> included;
    for (const auto& b : candidate)
        for (const auto& f : b.fruits) included.insert(f.serial());
    std::map<Serial, Fruit> pending;
    auto retain = [&](const Fruit& f) {
        if (!included.count(f.serial())) pending.emplace(f.serial(), f);
    };
    for (const auto& b : view.blocks)
        for (const auto& f : b.fruits) retain(f);
    for (const auto& [s, f] : view.pending) retain(f);

    view.blocks = candidate;
    view.pending = std::move(pending);
    return HearChainResult::Adopted;
}

MineOutcome mine_step(const ChainView& view, const MiningParams& params,
                      const TruehashParams& th, const MessageDirectory& dir, Tick now,
                      DetRng& rng) {
    MineOutcome out;
    const uint64_t l = view.blocks.size();  // index the mined block would take

    MiningHeader h;
    h.parent_hash = view.tip().hash;
    h.pointer_number = l > params.pointer_depth ? l - params.pointer_depth : 0;
    h.pointer_hash = view.blocks[h.pointer_number].hash;
    auto fruitset = candidate_fruitset(view, params);
    h.fruitset_digest = fruitset_digest(fruitset);
    h.miner = view.owner;
    h.nonce = rng.next_u64();

    // Oldest serial that still needs a fruit: not in the chain and with no
    // packagable pending fruit. Without one, fruit mining idles this draw.
    bool have_message = false;
    Serial last = view.last_included_serial();
    Serial target = last + 1 + fruitset.size();
    if (auto it = dir.entries.find(target); it != dir.entries.end()) {
        h.fast_hash = it->second.digest;
        h.fast_number = target;
        have_message = true;
    }

    Digest256 hash = truehash(th, mining_preimage(h), h.nonce);

    if (have_message && hash.suffix_u64() < params.fruit_difficulty) {
        Fruit f;
        f.header = h;
        f.fruit_difficulty = params.fruit_difficulty;
        f.hash = hash;
        out.fruit = f;
    }
    if (hash.prefix_u64() < params.block_difficulty) {
        SnailBlock b;
        b.header = h;
        b.number = l;
        b.difficulty = params.block_difficulty;
        b.fruit_difficulty = params.fruit_difficulty;
        b.mix_digest = h.fast_hash;
        if (auto it = dir.entries.find(h.fast_number); it != dir.entries.end())
            b.sign_hash = it->second.sign_hash;
        b.to_elect = params.election_window != 0 && l % params.election_window == 0;
        b.time = now;
        b.fruits = std::move(fruitset);
        b.hash = hash;
        out.block = b;
    }
    return out;
}

void append_block(ChainView& view, const SnailBlock& block) {
    for (const auto& f : block.fruits) view.pending.erase(f.serial());
    view.blocks.push_back(block);
}

size_t fork_choice(const std::vector<std::vector<SnailBlock>>& branches) {
    size_t best = 0;
    unsigned __int128 best_weight = 0;
    Digest256 best_tip;
    bool first = true;
    for (size_t i = 0; i < branches.size(); ++i) {
        unsigned __int128 w = 0;
        for (const auto& b : branches[i])
            for (const auto& f : b.fruits) w += f.fruit_difficulty;
        const Digest256& tip = branches[i].back().hash;
        if (first || w > best_weight || (w == best_weight && tip < best_tip)) {
            best = i;
            best_weight = w;
            best_tip = tip;
            first = false;
        }
    }
    return best;
}

}  // namespace hybridsim
