#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "hybridsim/types.hpp"
#include "hybridsim/util.hpp"
#include "hybridsim/world_state.hpp"

namespace hybridsim {

// Committee traffic is namespaced: '0' for the inner consensus instance,
// '1' for the outer day-long protocol. Opening under the wrong scope fails.
enum class MsgScope : uint8_t { inner = '0', outer = '1' };
Bytes seal_message(MsgScope scope, const Bytes& payload);
std::optional<Bytes> open_message(MsgScope expected, const Bytes& wire);

// Per-sender floor of accepted physical timestamps plus the skew window.
// The full acceptance history degenerates to its maximum under the
// monotonicity rule, so one entry per sender is enough.
struct TimestampHistory {
    std::map<Address, int64_t> last_tp;
    int64_t window = 30;
};

// True iff the claimed physical timestamp is within the skew window of `now`
// and does not run backwards for its sender; accepting records it.
bool verify_timestamp(const Transaction& tx, Tick now, TimestampHistory& hist);

struct Mempool {
    std::map<Digest256, Transaction> pending;  // keyed by tx id
    std::set<Digest256> confirmed;
};

// Union-set add; a transaction already confirmed is not re-admitted.
void mempool_propose(Mempool& pool, const Transaction& tx);
// Confirming a block moves its transactions out of pending for good.
void mempool_confirm(Mempool& pool, const FastBlock& block);
const std::set<Digest256>& mempool_query(const Mempool& pool);

struct Proposal {
    NodeId leader = 0;
    Serial serial = 0;  // fast-block height this proposal targets
    Tick proposed_at = 0;
    std::vector<Transaction> transactions;
    SigTag sig;

    Digest256 digest() const;  // over everything but the signature
};

struct Vote {
    NodeId voter = 0;
    Digest256 proposal;
    bool yes = false;
    SigTag sig;

    static Vote cast(NodeId voter, const Digest256& proposal, bool yes);
    bool sig_ok() const;
};

struct CommitteeTerm {
    std::vector<NodeId> members;  // fixed for the whole term, in committee order
    uint32_t leader_index = 0;
    uint64_t term_start = 0;  // snail heights bounding the term
    uint64_t term_end = 0;
    std::vector<FastBlock> daily_log;
    std::vector<std::pair<NodeId, Digest256>> signed_log_hashes;

    uint32_t csize() const { return static_cast<uint32_t>(members.size()); }
    NodeId current_leader() const { return members[leader_index % members.size()]; }
    void advance_leader() { leader_index = (leader_index + 1) % members.size(); }
    bool is_member(NodeId n) const;
};

// Daily-log heights must be contiguous; checked after every commit in tests.
bool log_contiguous(const CommitteeTerm& term);

// Greedy maximal proposal: pending transactions sorted by physical timestamp
// (sequence number breaks ties), keeping those that carry a valid signature,
// apply cleanly in order, and pass the timestamp guard. History and state
// are consulted as copies; they only advance when the block commits.
Proposal leader_propose(const Mempool& pool, const WorldState& state, Tick now,
                        const TimestampHistory& hist, NodeId leader, Serial serial);

// Yes iff the leader signature, the sort order, every transaction signature,
// every state transition, and every timestamp check hold.
Vote validate_and_vote(NodeId member, const Proposal& prop, const WorldState& state,
                       Tick now, const TimestampHistory& hist);

enum class Decision { Committed, Pending, Failed };

// First vote per member counts; non-members and wrong-proposal votes are
// ignored. Commit needs strictly more than floor(2*csize/3) yes votes;
// Failed as soon as that has become unreachable.
Decision tally(const std::vector<Vote>& votes, const CommitteeTerm& term,
               const Digest256& proposal_digest);

// State transition for a committed transaction batch: apply in order, then
// credit the proposer with the collected gas fees (zero-sum with the debits).
WorldState apply_block_txs(const WorldState& state, const std::vector<Transaction>& txs,
                           Address proposer);

// The broadcast that lets PoW nodes mine fruits for this block.
struct FastMessage {
    Digest256 digest;
    Serial serial;
};

std::pair<FastBlock, FastMessage> emit_fast_block(const std::vector<Transaction>& txs,
                                                  const FastBlock& parent,
                                                  const WorldState& state, NodeId proposer,
                                                  Tick now, const Digest256& snail_hash = {},
                                                  uint64_t snail_number = 0);

// Stop requests travel as marker transactions so they appear in the log
// like anything else until the final export strips them.
Transaction make_stop_request(Address member, int64_t t_p, uint64_t seq,
                              uint64_t nonce = 0);
bool is_stop_marker(const Transaction& tx);

// Payload every member signs to request termination of this term.
Digest256 stop_digest(const CommitteeTerm& term);
// Payload members sign over the final (stripped) log.
Digest256 final_log_hash(const std::vector<FastBlock>& stripped);

struct FinalDailyLog {
    std::vector<FastBlock> entries;  // daily log with stop markers stripped
    Digest256 log_hash;
};

enum class StopError { InsufficientStopSignatures };
std::string to_string(StopError e);

// Terminates the term once at least ceil(csize/3) distinct members have
// signed the stop payload; otherwise the term continues.
Result<FinalDailyLog, StopError> daily_stop(const CommitteeTerm& term,
                                            const std::vector<SigTag>& stop_signatures);

}  // namespace hybridsim
