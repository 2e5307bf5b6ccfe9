#pragma once

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "hybridsim/rng.hpp"
#include "hybridsim/types.hpp"
#include "hybridsim/util.hpp"

namespace hybridsim {

using Lts = int64_t;  // logical (commit) timestamps; sectors start at -1
inline constexpr Lts kLtsInfinity = std::numeric_limits<Lts>::max();

struct ShardingParams {
    uint32_t shards = 2;      // C
    uint32_t shard_size = 4;  // replicas per shard, >= 3f+1
    Tick t_o = 10;            // remote reply timeout
    Tick batch_timeout = 50;  // primary's patience per round

    uint32_t f() const { return (shard_size - 1) / 3; }
    uint32_t quorum() const { return 2 * f() + 1; }
};

// Public contiguous partition of the whole address range into equal slices.
uint32_t host(Address addr, uint32_t shards);

// Total commit order: commit timestamp, then physical stamp, then id. All
// tie-breaking, version chains, and the replay oracle use exactly this key.
using CommitKey = std::tuple<Lts, int64_t, uint64_t>;

struct DataSector {
    Bytes value;
    Lts rts = -1;
    Lts wts = -1;
    std::vector<uint64_t> readers;  // active transaction ids
    std::vector<uint64_t> writers;
};

enum class TxState { Running, Precommit, Committed, Aborted };
enum class TxAbort { TimeoutAbort, BoundCrossAbort, RemoteAbort };
std::string to_string(TxAbort a);

// Bounds snapshot of another transaction, carried inside replies.
struct BoundSnapshot {
    uint64_t id = 0;
    Lts lower = 0;
    Lts upper = kLtsInfinity;
};

struct ReadReply {
    Address addr = 0;
    Bytes value;
    Lts wts = -1;
    std::optional<uint64_t> observed_writer;  // last committed writer, if any
    std::vector<BoundSnapshot> writers;       // active writers at reply time
    Digest256 digest() const;
};

struct WriteReply {
    Address addr = 0;
    Lts rts = -1;
    std::vector<BoundSnapshot> readers;
    Digest256 digest() const;
};

struct PrecommitReply {
    uint64_t id = 0;
    bool commit = false;
    uint64_t batch_counter = 0;  // batch the transaction would land in
    Digest256 digest() const;
};

// Client-side view of one transaction.
struct ShardTX {
    uint64_t id = 0;
    uint32_t home_shard = 0;
    Lts lower = 0;
    Lts upper = kLtsInfinity;
    TxState state = TxState::Running;
    std::vector<BoundSnapshot> before;  // writers seen by our reads
    std::vector<BoundSnapshot> after;   // readers seen by our writes
    Lts cts = -1;
    int64_t physical_timestamp = 0;
    std::optional<TxAbort> abort_reason;
    uint64_t batch_counter = 0;  // metadata tag from the home shard
    std::map<Address, Bytes> write_buffer;
    std::set<uint32_t> accessed;  // shards this tx talked to

    CommitKey key() const { return {cts, physical_timestamp, id}; }
};

// Pure bound resolution at finish time: before-set upper bounds raise the
// lower bound (infinite snapshots carry no information and are skipped),
// after-set lower bounds cap the upper bound. Returns the chosen commit
// timestamp or the bound-cross abort.
Result<Lts, TxAbort> finish_bounds(ShardTX& tx);

// One shard's deterministic state machine; every replica of the shard runs
// an identical copy and answers with a signature over the reply digest.
// Validation is exact: a commit is accepted only if every read still
// observes the newest write below the transaction's commit key and no write
// slips under a validated reader, which keeps the committed history
// serializable in commit-key order.
class ShardStore {
public:
    ShardStore() = default;
    ShardStore(uint32_t id, uint32_t total_shards) : id_(id), shards_(total_shards) {}

    uint32_t id() const { return id_; }

    // Remote handlers; non-hosts ignore by returning nullopt.
    std::optional<ReadReply> handle_read(Address addr, uint64_t tx_id);
    std::optional<WriteReply> handle_write(Address addr, const Bytes& value, uint64_t tx_id);
    std::optional<PrecommitReply> handle_precommit(uint64_t tx_id, Lts cts, int64_t tp);
    void handle_finalize(uint64_t tx_id);
    void handle_abort(uint64_t tx_id);

    const DataSector* sector(Address addr) const;
    // Committed value by the newest committed write (the sector value).
    Bytes committed_value(Address addr) const;

    // Committed-and-unexported transactions as one batch, ordered by commit
    // key; the counter advances even when the batch is empty.
    struct BatchEntry {
        uint64_t id = 0;
        Lts cts = -1;
        int64_t tp = 0;
        uint32_t shard = 0;
        std::vector<std::pair<Address, std::optional<uint64_t>>> reads;  // observed writer
        std::vector<Address> writes;
        void encode(Encoder& e) const;
        static std::optional<BatchEntry> decode(Decoder& d);
    };
    struct Batch {
        uint32_t shard_id = 0;
        uint64_t batch_counter = 0;
        std::vector<BatchEntry> txs;
        void encode(Encoder& e) const;
        static std::optional<Batch> decode(Decoder& d);
        Digest256 digest() const;
    };
    Batch output_batch();
    uint64_t batch_counter() const { return batch_counter_; }

private:
    struct WriteVersion {
        CommitKey key;
        Bytes value;
        uint64_t id = 0;
        bool committed = false;
    };
    struct ReadRecord {
        CommitKey key;
        uint64_t reader = 0;
        std::optional<uint64_t> observed;
        bool committed = false;
    };
    struct TxRecord {
        Lts lower = 0;
        Lts upper = kLtsInfinity;
        Lts cts = -1;
        int64_t tp = 0;
        enum class Phase { Active, Reserved, Committed, Aborted } phase = Phase::Active;
        bool exported = false;
        std::map<Address, Bytes> writes;
        std::map<Address, std::optional<uint64_t>> reads;
    };

    bool hosts(Address addr) const { return host(addr, shards_) == id_; }
    DataSector& ensure(Address addr);
    void prune_lists(uint64_t tx_id);
    std::optional<CommitKey> key_of_writer(Address addr, uint64_t writer_id) const;
    bool validate(uint64_t tx_id, const TxRecord& rec, const CommitKey& key) const;

    uint32_t id_ = 0;
    uint32_t shards_ = 1;
    uint64_t batch_counter_ = 0;
    std::map<Address, DataSector> sectors_;
    std::map<Address, std::optional<uint64_t>> last_committed_writer_;
    std::map<Address, std::vector<WriteVersion>> versions_;
    std::map<Address, std::vector<ReadRecord>> read_records_;
    std::map<uint64_t, TxRecord> records_;
};

// Synchronous quorum transport over replicated shard stores: every request
// reaches all replicas of the host shard in delivery order, and the caller
// needs 2f+1 matching signed replies. Muted replicas stay in sync but do
// not answer, so muting more than f of them starves the quorum, and a
// silenced shard times every remote access out.
class ShardCluster {
public:
    ShardCluster(const ShardingParams& params, uint64_t seed);

    const ShardingParams& params() const { return params_; }

    ShardTX begin(int64_t physical_timestamp, uint32_t home_shard = 0);

    // Algorithm-level operations. Reads serve the transaction's own buffered
    // write first; remote traffic is counted and subject to quorums.
    std::optional<Bytes> tx_read(ShardTX& tx, Address addr);
    bool tx_write(ShardTX& tx, Address addr, const Bytes& value);
    // Resolve bounds, precommit everywhere, then finalize or abort everywhere.
    bool tx_finish(ShardTX& tx);

    void mute_replicas(uint32_t shard, uint32_t count);  // drop that many replies
    void silence_shard(uint32_t shard);                  // shard never answers
    void restore(uint32_t shard);

    uint64_t remote_messages() const { return remote_messages_; }
    ShardStore& store(uint32_t shard) { return replicas_[shard][0]; }  // lead replica
    const std::vector<ShardStore>& replicas(uint32_t shard) const { return replicas_[shard]; }

    ShardStore::Batch output_batch(uint32_t shard);

private:
    template <typename Reply, typename Fn>
    std::optional<Reply> quorum_call(ShardTX& tx, uint32_t shard, Fn&& handler);
    void deliver_all(uint32_t shard, const std::function<void(ShardStore&)>& fn);
    void abort_everywhere(ShardTX& tx, TxAbort reason);

    ShardingParams params_;
    DetRng rng_;
    std::vector<std::vector<ShardStore>> replicas_;
    std::vector<uint32_t> muted_;
    std::vector<uint8_t> silenced_;
    uint64_t remote_messages_ = 0;
};

// Longest non-decreasing subsequence by physical timestamp; among all
// maximum-length answers, the lexicographically earliest index set.
std::vector<size_t> lis_filter(const std::vector<int64_t>& tps);

// One primary-shard round over all shards' batches (nullopt = never arrived
// within the batch timeout). A batch whose median stamp falls outside the
// stamp envelope of a strict majority of the other non-empty batches is
// invalidated wholesale; transactions that observed writes of invalidated
// or aborted transactions abort downstream; the survivors are ordered by
// commit key and filtered to the longest non-decreasing stamp subsequence.
struct RoundOutcome {
    bool round_failed = false;
    bool committee_switch = false;
    std::vector<uint32_t> invalidated_shards;
    std::set<uint64_t> aborted;
    std::vector<ShardStore::BatchEntry> log;
};
RoundOutcome primary_collect(const std::vector<std::optional<ShardStore::Batch>>& batches);

}  // namespace hybridsim
