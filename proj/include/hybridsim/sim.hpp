#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "hybridsim/election.hpp"
#include "hybridsim/fastchain.hpp"
#include "hybridsim/fruitchain.hpp"
#include "hybridsim/gossip.hpp"
#include "hybridsim/scenario.hpp"
#include "hybridsim/sharding.hpp"

namespace hybridsim {

// ---------------------------------------------------------------------------
// Events. One tick is one simulated second. Delivery order is total:
// (deliver_at, sequence), with sequence assigned at enqueue time, so a run
// is a pure function of the scenario seed.
// ---------------------------------------------------------------------------

struct EvFruit {
    Fruit fruit;
};
struct EvChain {
    std::shared_ptr<const std::vector<SnailBlock>> chain;
};
struct EvProposal {
    std::shared_ptr<const Proposal> prop;
};
struct EvVote {
    Vote vote;
};
struct EvFastMsg {
    FastMessage msg;
};
struct EvClientTx {
    Transaction tx;
};
struct EvStopSig {
    uint64_t term_id = 0;
    SigTag sig;
};

using SimPayload =
    std::variant<EvFruit, EvChain, EvProposal, EvVote, EvFastMsg, EvClientTx, EvStopSig>;

const char* payload_kind(const SimPayload& p);
Digest256 payload_digest(const SimPayload& p);

struct SimEvent {
    Tick deliver_at = 0;
    NodeId destination = 0;
    uint64_t sequence = 0;  // global enqueue order; breaks same-tick ties
    SimPayload payload;
};

struct SimEventAfter {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
        if (a.deliver_at != b.deliver_at) return a.deliver_at > b.deliver_at;
        return a.sequence > b.sequence;
    }
};

// ---------------------------------------------------------------------------
// Run outcome.
// ---------------------------------------------------------------------------

struct TermRow {
    uint64_t term = 0;
    Tick start_tick = 0;
    double q_fast = 1.0;        // fraction of seats never corrupted this term
    uint64_t commits = 0;       // fast blocks committed during the term
    uint64_t failed_rounds = 0; // rounds with no commit observed
};

struct MetricsReport {
    // Committee and chain quality
    std::vector<double> q_fast;  // per term
    double q_snail = 1.0;        // honest share of the last lambda snail blocks
    uint64_t snail_height = 0;
    uint64_t fast_height = 0;    // committed serials (highest honest view)
    uint64_t total_fruits = 0;   // fruits in the canonical chain

    // Safety
    bool consistency_ok = true;
    uint64_t divergence_depth = 0;  // snail blocks from tip to deepest honest disagreement
    std::vector<std::string> violations;

    // Liveness and load
    bool liveness_ok = true;
    Tick liveness_tau = 0;   // worst submit-to-inclusion lag among included txs
    Tick liveness_bound = 0; // the bound liveness_ok was judged against
    uint64_t submitted_txs = 0;
    uint64_t committed_txs = 0;
    uint64_t pending_txs = 0;  // submitted in the grace tail, not yet included
    double throughput = 0.0;   // committed txs per tick
    uint64_t failed_rounds = 0;
    uint64_t terms = 0;

    // Mining attribution over the canonical chain
    std::map<NodeId, uint64_t> fruits_by_miner;
    std::map<NodeId, uint64_t> blocks_by_miner;
    double selfish_block_share = 0.0;  // nakamoto mode: corrupted share of public blocks
    double selfish_fruit_share = 0.0;  // corrupted share of canonical fruits

    // Adversary bookkeeping
    bool budget_exceeded = false;
    size_t corrupted_nodes = 0;
    size_t leaked_addresses = 0;
    uint64_t ddos_muted_nodes = 0;

    // Value accounting
    uint64_t minted = 0;
    bool conservation_ok = true;

    // Sharding workload
    uint64_t shard_committed = 0;
    uint64_t shard_aborted = 0;

    std::vector<TermRow> term_rows;
};

// ---------------------------------------------------------------------------
// The simulator. Single-threaded and deterministic: identical configs
// (seed included) produce identical metrics and traces, byte for byte.
// ---------------------------------------------------------------------------

class Simulation {
public:
    using TraceFn = std::function<void(Tick, NodeId, const char* kind, const Digest256&)>;

    // cfg must satisfy the scenario validation rules (parse_scenario enforces
    // them); hand-built configs that break them are out of contract.
    explicit Simulation(const ScenarioConfig& cfg);

    // Runs to cfg.ticks and finalizes metrics.
    MetricsReport run();

    // Single-tick stepping for tests; call finalize() yourself afterwards.
    void step();
    Tick now() const { return now_; }
    MetricsReport finalize();

    void set_trace(TraceFn fn) { trace_ = std::move(fn); }

    // Denial of service against leaked addresses. Targets must be node ids
    // whose committee addresses the adversary actually learned through a
    // corrupted member; anything else is refused.
    enum class DdosError { UnknownAddress, NoLeak };
    Result<uint64_t, DdosError> ddos(const std::vector<NodeId>& targets, Tick duration);

    // Introspection for tests.
    const ChainView& view_of(NodeId n) const;
    const std::set<NodeId>& leaked_nodes() const { return leaked_; }
    std::vector<NodeId> current_members() const;
    Serial member_serial(NodeId n) const;
    // Day-log digests per member for a retired term (empty map if unknown).
    std::map<NodeId, std::vector<Digest256>> log_digests(uint64_t term) const;
    const std::vector<FastBlock>* reference_log(uint64_t term) const;
    bool node_corrupted(NodeId n) const;
    bool node_muted(NodeId n) const;
    uint64_t queue_size() const { return static_cast<uint64_t>(queue_.size()); }

private:
    struct Node {
        NodeId id = 0;
        uint64_t weight = 1;
        ChainView view;
        MessageDirectory dir;
        ValidationCache vcache;
        std::unique_ptr<DetRng> rng;
        bool planned = false;        // in the adversary's corruption list
        Tick corrupt_from = 0;       // active when planned && now >= corrupt_from
        bool ever_active = false;    // corruption actually took effect
        Tick muted_until = 0;        // DDoS: drops everything while muted
        Mempool standby;             // txs heard while not seated
    };

    struct Seat {
        NodeId node = 0;
        Label label = 0;
        CommitteeTerm term;
        uint64_t term_id = 0;
        Tick term_start_tick = 0;
        Mempool pool;
        WorldState cstate;
        TimestampHistory hist;
        Serial serial = 1;  // next fast height to commit
        Serial serial_start = 1;
        FastBlock parent;
        uint64_t minted = 0;
        std::set<Serial> voted;
        // proposals in arrival order per serial; votes per proposal digest
        std::map<Serial, std::vector<std::shared_ptr<const Proposal>>> prop_buf;
        std::map<Digest256, std::vector<Vote>> votes;
        std::map<Digest256, std::shared_ptr<const Proposal>> props;
        std::map<Serial, Tick> commit_tick;
        AddressTable table;
    };

    struct RetiredTerm {
        uint64_t term_id = 0;
        std::map<NodeId, std::vector<Digest256>> log_digests;  // per member
        std::map<NodeId, bool> member_honest;                  // honest for the whole term
        std::vector<FastBlock> reference_log;                  // lowest honest member's log
        std::map<NodeId, Digest256> stop_digests;              // per member at retirement
        std::map<NodeId, std::vector<SigTag>> stop_sigs;       // collected per member
        std::set<NodeId> finalized;
        uint32_t csize = 0;
        double q_fast = 1.0;
        uint64_t commits = 0;
        uint64_t failed_rounds = 0;
        Tick start_tick = 0;
    };

    // env
    ScenarioConfig cfg_;
    MiningParams mparams_;
    TruehashParams initial_th_;
    ElectionParams eparams_;
    Tick now_ = 0;
    uint64_t seq_ = 0;
    std::priority_queue<SimEvent, std::vector<SimEvent>, SimEventAfter> queue_;
    std::vector<Node> nodes_;
    std::map<NodeId, Seat> seats_;
    uint64_t term_id_ = 0;
    ElectionSeed eseed_;
    uint64_t anchor_height_ = 0;  // flagged height the current term elected from
    Tick term_start_tick_ = 0;
    uint64_t rounds_at_term_start_ = 0;
    std::optional<GossipMatrix> matrix_;
    std::vector<RetiredTerm> retired_;
    DetRng net_rng_;
    DetRng client_rng_;
    DetRng shard_rng_;
    TraceFn trace_;

    // clients
    struct Client {
        Address addr = 0;
        uint64_t nonce = 0;
    };
    std::vector<Client> clients_;
    uint64_t client_seq_ = 0;
    WorldState genesis_state_;

    // liveness bookkeeping
    struct TxTrack {
        Tick submitted = 0;
        Tick included = 0;  // 0 = not yet; worst honest member tick otherwise
        std::set<NodeId> included_by;
    };
    std::map<Digest256, TxTrack> tx_track_;

    // adversary
    std::set<NodeId> leaked_;   // node ids whose addresses leaked
    bool ddos_fired_ = false;
    uint64_t ddos_muted_count_ = 0;
    bool budget_exceeded_ = false;
    // selfish coalition (withhold_blocks): one private chain for the pool
    ChainView selfish_view_;
    MessageDirectory selfish_dir_;
    bool selfish_active_ = false;
    NodeId selfish_leader_ = 0;  // lowest planned node does coalition housekeeping
    bool consistency_violated_ = false;

    // metrics accumulation
    uint64_t commits_total_ = 0;
    uint64_t rounds_total_ = 0;
    uint64_t failed_rounds_ = 0;
    uint64_t shard_committed_ = 0;
    uint64_t shard_aborted_ = 0;
    std::vector<std::string> violations_;

    static constexpr Tick kNever = ~Tick{0};

    // phases
    void seed_streams();
    void start_term(Tick t);
    void retire_current(Tick t);
    void run_round(Tick t);
    void mine_tick(Tick t);
    void client_tick(Tick t);
    void deliver_due(Tick t);
    void shard_workload();

    // handlers
    void handle(NodeId dest, const SimPayload& p);
    void on_fruit(Node& n, const Fruit& f);
    void on_chain(Node& n, const EvChain& ev);
    void on_proposal(Node& n, const EvProposal& ev);
    void on_vote(Node& n, const Vote& v);
    void on_fastmsg(Node& n, const FastMessage& m);
    void on_client_tx(Node& n, const Transaction& tx);
    void on_stop_sig(Node& n, const EvStopSig& ev);

    void try_vote(Seat& seat, Tick t);
    void try_commit(Seat& seat, const Digest256& digest, Tick t);
    void broadcast(NodeId from, const SimPayload& p, const std::vector<NodeId>& to);
    void broadcast_members(NodeId from, const SimPayload& p);
    void broadcast_all(NodeId from, const SimPayload& p);
    void send(NodeId from, NodeId to, SimPayload p);
    Tick link_delay(NodeId from, NodeId to);

    bool corrupted_now(const Node& n) const {
        return n.planned && n.corrupt_from != kNever && now_ >= n.corrupt_from;
    }
    bool muted(const Node& n) const { return now_ < n.muted_until; }
    uint64_t total_weight() const;
    std::vector<NodeId> honest_nodes() const;
    const ChainView& reference_view() const;  // lowest never-corrupted node
    Transaction make_client_tx(Tick t);
    void activate_corruptions(Tick t);

    void equivocate(Node& leader, Seat& seat, Tick t);

    MetricsReport run_nakamoto();  // abstract block-race mode
    void finalize_consistency(MetricsReport& m);
    void finalize_liveness(MetricsReport& m);
    void record(Tick t, NodeId n, const char* kind, const Digest256& d) {
        if (trace_) trace_(t, n, kind, d);
    }
};

}  // namespace hybridsim
