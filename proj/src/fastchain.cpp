#include "hybridsim/fastchain.hpp"

#include <algorithm>

#include "hybridsim/merkle.hpp"

namespace hybridsim {

Bytes seal_message(MsgScope scope, const Bytes& payload) {
    Bytes wire;
    wire.reserve(payload.size() + 1);
    wire.push_back(static_cast<uint8_t>(scope));
    wire.insert(wire.end(), payload.begin(), payload.end());
    return wire;
}

std::optional<Bytes> open_message(MsgScope expected, const Bytes& wire) {
    if (wire.empty() || wire[0] != static_cast<uint8_t>(expected)) return std::nullopt;
    return Bytes(wire.begin() + 1, wire.end());
}

bool verify_timestamp(const Transaction& tx, Tick now, TimestampHistory& hist) {
    int64_t skew = static_cast<int64_t>(now) - tx.physical_timestamp;
    if (skew > hist.window || -skew > hist.window) return false;
    auto it = hist.last_tp.find(tx.sender);
    if (it != hist.last_tp.end() && it->second > tx.physical_timestamp) return false;
    hist.last_tp[tx.sender] = tx.physical_timestamp;
    return true;
}

void mempool_propose(Mempool& pool, const Transaction& tx) {
    auto id = tx.id();
    if (pool.confirmed.count(id)) return;
    pool.pending.emplace(id, tx);
}

void mempool_confirm(Mempool& pool, const FastBlock& block) {
    for (const auto& tx : block.transactions) {
        auto id = tx.id();
        pool.confirmed.insert(id);
        pool.pending.erase(id);
    }
}

const std::set<Digest256>& mempool_query(const Mempool& pool) { return pool.confirmed; }

Digest256 Proposal::digest() const {
    Encoder e;
    e.u32(leader);
    e.u64(serial);
    e.u64(proposed_at);
    Encoder txs;
    txs.u64(transactions.size());
    for (const auto& tx : transactions) tx.encode(txs);
    e.bytes(txs.out());
    return e.hash();
}

static Digest256 vote_payload(const Digest256& proposal, bool yes) {
    Encoder e;
    e.dig(proposal);
    e.boolean(yes);
    return e.hash();
}

Vote Vote::cast(NodeId voter, const Digest256& proposal, bool yes) {
    return {voter, proposal, yes, SigTag::sign(voter, vote_payload(proposal, yes))};
}

bool Vote::sig_ok() const { return sig.verify(voter, vote_payload(proposal, yes)); }

bool CommitteeTerm::is_member(NodeId n) const {
    return std::find(members.begin(), members.end(), n) != members.end();
}

bool log_contiguous(const CommitteeTerm& term) {
    for (size_t i = 1; i < term.daily_log.size(); ++i)
        if (term.daily_log[i].number != term.daily_log[i - 1].number + 1) return false;
    return true;
}

// Canonical batch order: physical timestamp, then creation sequence, then id
// so the order is total even across duplicated metadata.
static bool batch_less(const Transaction& a, const Transaction& b) {
    if (a.physical_timestamp != b.physical_timestamp)
        return a.physical_timestamp < b.physical_timestamp;
    if (a.sequence_number != b.sequence_number) return a.sequence_number < b.sequence_number;
    return a.id() < b.id();
}

Proposal leader_propose(const Mempool& pool, const WorldState& state, Tick now,
                        const TimestampHistory& hist, NodeId leader, Serial serial) {
    std::vector<Transaction> sorted;
    sorted.reserve(pool.pending.size());
    for (const auto& [id, tx] : pool.pending) sorted.push_back(tx);
    std::sort(sorted.begin(), sorted.end(), batch_less);

    Proposal prop;
    prop.leader = leader;
    prop.serial = serial;
    prop.proposed_at = now;

    WorldState running = state;
    TimestampHistory guard = hist;  // advances only within this batch attempt
    for (const auto& tx : sorted) {
        if (!tx.sig_ok()) continue;
        auto applied = running.apply_transaction(tx);
        if (!applied.ok()) continue;
        if (!verify_timestamp(tx, now, guard)) continue;
        running = std::move(applied.value());
        prop.transactions.push_back(tx);
    }
    prop.sig = SigTag::sign(leader, prop.digest());
    return prop;
}

Vote validate_and_vote(NodeId member, const Proposal& prop, const WorldState& state,
                       Tick now, const TimestampHistory& hist) {
    auto no = [&] { return Vote::cast(member, prop.digest(), false); };
    if (!prop.sig.verify(prop.leader, prop.digest())) return no();

    WorldState running = state;
    TimestampHistory guard = hist;
    const Transaction* prev = nullptr;
    for (const auto& tx : prop.transactions) {
        if (prev && batch_less(tx, *prev)) return no();  // sort order violated
        prev = &tx;
        if (!tx.sig_ok()) return no();
        auto applied = running.apply_transaction(tx);
        if (!applied.ok()) return no();
        if (!verify_timestamp(tx, now, guard)) return no();
        running = std::move(applied.value());
    }
    return Vote::cast(member, prop.digest(), true);
}

Decision tally(const std::vector<Vote>& votes, const CommitteeTerm& term,
               const Digest256& proposal_digest) {
    std::map<NodeId, bool> first;  // first vote per member is binding
    for (const auto& v : votes) {
        if (!term.is_member(v.voter)) continue;
        if (v.proposal != proposal_digest) continue;
        if (!v.sig_ok()) continue;
        first.emplace(v.voter, v.yes);
    }
    uint32_t yes = 0;
    for (const auto& [member, y] : first) yes += y ? 1 : 0;
    const uint32_t csize = term.csize();
    const uint32_t quorum = 2 * csize / 3;  // commit needs strictly more than this
    if (yes > quorum) return Decision::Committed;
    uint32_t outstanding = csize - static_cast<uint32_t>(first.size());
    if (yes + outstanding <= quorum) return Decision::Failed;
    return Decision::Pending;
}

WorldState apply_block_txs(const WorldState& state, const std::vector<Transaction>& txs,
                           Address proposer) {
    WorldState running = state;
    Amount fees = 0;
    for (const auto& tx : txs) {
        auto applied = running.apply_transaction(tx);
        if (!applied.ok()) continue;  // committed batches never hit this
        running = std::move(applied.value());
        fees += WorldState::fee_of(tx);
    }
    return fees ? running.credit(proposer, fees) : running;
}

std::pair<FastBlock, FastMessage> emit_fast_block(const std::vector<Transaction>& txs,
                                                  const FastBlock& parent,
                                                  const WorldState& state, NodeId proposer,
                                                  Tick now, const Digest256& snail_hash,
                                                  uint64_t snail_number) {
    FastBlock b;
    b.parent_hash = parent.digest();
    b.number = parent.number + 1;
    b.proposer = proposer;
    b.time = now;
    b.snail_hash = snail_hash;
    b.snail_number = snail_number;
    b.transactions = txs;

    std::vector<Bytes> leaves;
    leaves.reserve(txs.size());
    Amount gas = 0;
    for (const auto& tx : txs) {
        Encoder e;
        tx.encode(e);
        leaves.push_back(e.out());
        gas += WorldState::kGasPerTransfer;
        b.gas_limit += tx.gas_limit;
    }
    b.transactions_root = merkle_root(leaves);
    b.gas_used = gas;
    b.state_root = apply_block_txs(state, txs, proposer).root();

    FastMessage m{b.digest(), b.serial()};
    return {std::move(b), m};
}

static const Bytes kStopCode = {'s', 't', 'o', 'p'};

Transaction make_stop_request(Address member, int64_t t_p, uint64_t seq, uint64_t nonce) {
    Transaction tx;
    tx.sender = member;
    tx.account_nonce = nonce;
    tx.recipient = member;
    tx.code = kStopCode;
    tx.physical_timestamp = t_p;
    tx.sequence_number = seq;
    tx.sig = SigTag::sign(member, tx.body_digest());
    return tx;
}

bool is_stop_marker(const Transaction& tx) { return tx.code == kStopCode; }

Digest256 stop_digest(const CommitteeTerm& term) {
    Encoder e;
    e.u64(term.term_start);
    e.u64(term.term_end);
    e.str("stop");
    return e.hash();
}

Digest256 final_log_hash(const std::vector<FastBlock>& stripped) {
    Encoder e;
    e.u64(stripped.size());
    for (const auto& b : stripped) b.encode(e);
    return e.hash();
}

std::string to_string(StopError) { return "insufficient stop signatures"; }

Result<FinalDailyLog, StopError> daily_stop(const CommitteeTerm& term,
                                            const std::vector<SigTag>& stop_signatures) {
    const Digest256 payload = stop_digest(term);
    std::set<uint64_t> stopped;
    for (const auto& sig : stop_signatures) {
        if (!term.is_member(static_cast<NodeId>(sig.signer))) continue;
        if (!sig.verify(sig.signer, payload)) continue;
        stopped.insert(sig.signer);
    }
    const uint32_t threshold = (term.csize() + 2) / 3;  // ceil(csize/3)
    if (stopped.size() < threshold) return StopError::InsufficientStopSignatures;

    FinalDailyLog out;
    out.entries = term.daily_log;
    for (auto& b : out.entries)
        std::erase_if(b.transactions, [](const Transaction& tx) { return is_stop_marker(tx); });
    out.log_hash = final_log_hash(out.entries);
    return out;
}

}  // namespace hybridsim
