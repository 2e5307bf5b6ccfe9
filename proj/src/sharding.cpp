#include "hybridsim/sharding.hpp"

#include <algorithm>

namespace hybridsim {

uint32_t host(Address addr, uint32_t shards) {
    if (shards <= 1) return 0;
    return uint32_t((unsigned __int128)(addr) * shards >> 64);
}

std::string to_string(TxAbort a) {
    switch (a) {
        case TxAbort::TimeoutAbort: return "timeout_abort";
        case TxAbort::BoundCrossAbort: return "bound_cross_abort";
        case TxAbort::RemoteAbort: return "remote_abort";
    }
    return "unknown";
}

Digest256 ReadReply::digest() const {
    Encoder e;
    e.u64(addr);
    e.bytes(value);
    e.i64(wts);
    e.boolean(observed_writer.has_value());
    e.u64(observed_writer.value_or(0));
    e.seq(writers, [](Encoder& x, const BoundSnapshot& s) {
        x.u64(s.id);
        x.i64(s.lower);
        x.i64(s.upper);
    });
    return e.hash();
}

Digest256 WriteReply::digest() const {
    Encoder e;
    e.u64(addr);
    e.i64(rts);
    e.seq(readers, [](Encoder& x, const BoundSnapshot& s) {
        x.u64(s.id);
        x.i64(s.lower);
        x.i64(s.upper);
    });
    return e.hash();
}

Digest256 PrecommitReply::digest() const {
    Encoder e;
    e.u64(id);
    e.boolean(commit);
    e.u64(batch_counter);
    return e.hash();
}

Result<Lts, TxAbort> finish_bounds(ShardTX& tx) {
    // An unresolved writer (infinite upper bound) has no serialization point
    // yet, so it cannot push the reader; precommit validation is the
    // correctness backstop for that race.
    for (const auto& s : tx.before)
        if (s.upper != kLtsInfinity) tx.lower = std::max(tx.lower, s.upper);
    for (const auto& s : tx.after) tx.upper = std::min(tx.upper, s.lower);
    if (tx.lower > tx.upper) return TxAbort::BoundCrossAbort;
    tx.cts = tx.upper == kLtsInfinity ? tx.lower + 1 : tx.lower + (tx.upper - tx.lower) / 2;
    return tx.cts;
}

DataSector& ShardStore::ensure(Address addr) { return sectors_[addr]; }

const DataSector* ShardStore::sector(Address addr) const {
    auto it = sectors_.find(addr);
    return it == sectors_.end() ? nullptr : &it->second;
}

Bytes ShardStore::committed_value(Address addr) const {
    auto it = sectors_.find(addr);
    return it == sectors_.end() ? Bytes{} : it->second.value;
}

std::optional<ReadReply> ShardStore::handle_read(Address addr, uint64_t tx_id) {
    if (!hosts(addr)) return std::nullopt;
    auto& sec = ensure(addr);
    auto& rec = records_[tx_id];
    ReadReply reply;
    reply.addr = addr;
    reply.value = sec.value;
    reply.wts = sec.wts;
    auto lw = last_committed_writer_.find(addr);
    if (lw != last_committed_writer_.end()) reply.observed_writer = lw->second;
    for (uint64_t w : sec.writers) {
        if (w == tx_id) continue;  // a transaction never constrains itself
        auto it = records_.find(w);
        if (it != records_.end()) reply.writers.push_back({w, it->second.lower, it->second.upper});
    }
    if (std::find(sec.readers.begin(), sec.readers.end(), tx_id) == sec.readers.end())
        sec.readers.push_back(tx_id);
    rec.reads[addr] = reply.observed_writer;
    rec.lower = std::max(rec.lower, sec.wts);
    return reply;
}

std::optional<WriteReply> ShardStore::handle_write(Address addr, const Bytes& value, uint64_t tx_id) {
    if (!hosts(addr)) return std::nullopt;
    auto& sec = ensure(addr);
    auto& rec = records_[tx_id];
    WriteReply reply;
    reply.addr = addr;
    reply.rts = sec.rts;
    for (uint64_t r : sec.readers) {
        if (r == tx_id) continue;  // a transaction never constrains itself
        auto it = records_.find(r);
        if (it != records_.end()) reply.readers.push_back({r, it->second.lower, it->second.upper});
    }
    if (std::find(sec.writers.begin(), sec.writers.end(), tx_id) == sec.writers.end())
        sec.writers.push_back(tx_id);
    rec.writes[addr] = value;
    rec.lower = std::max(rec.lower, sec.rts);
    return reply;
}

std::optional<CommitKey> ShardStore::key_of_writer(Address addr, uint64_t writer_id) const {
    auto it = versions_.find(addr);
    if (it == versions_.end()) return std::nullopt;
    for (const auto& v : it->second)
        if (v.id == writer_id) return v.key;
    return std::nullopt;
}

bool ShardStore::validate(uint64_t tx_id, const TxRecord& rec, const CommitKey& key) const {
    // Each read must still observe the newest write below this commit key.
    for (const auto& [addr, observed] : rec.reads) {
        const WriteVersion* latest = nullptr;
        auto it = versions_.find(addr);
        if (it != versions_.end())
            for (const auto& v : it->second)
                if (v.key < key && (!latest || latest->key < v.key)) latest = &v;
        if (latest ? (!observed || *observed != latest->id) : observed.has_value()) return false;
    }
    // No write may slip between a validated reader and the version it saw.
    for (const auto& [addr, value] : rec.writes) {
        auto it = read_records_.find(addr);
        if (it == read_records_.end()) continue;
        for (const auto& rr : it->second) {
            if (rr.reader == tx_id || rr.key < key) continue;
            if (!rr.observed) return false;
            auto obs_key = key_of_writer(addr, *rr.observed);
            if (!obs_key || key > *obs_key) return false;
        }
    }
    return true;
}

std::optional<PrecommitReply> ShardStore::handle_precommit(uint64_t tx_id, Lts cts, int64_t tp) {
    PrecommitReply reply;
    reply.id = tx_id;
    reply.batch_counter = batch_counter_ + 1;
    auto it = records_.find(tx_id);
    if (it == records_.end()) return reply;  // unknown id: abort
    auto& rec = it->second;
    if (rec.phase == TxRecord::Phase::Committed ||
        (rec.phase == TxRecord::Phase::Reserved && rec.cts == cts)) {
        reply.commit = true;  // replayed precommit
        return reply;
    }
    if (rec.phase != TxRecord::Phase::Active) return reply;
    CommitKey key{cts, tp, tx_id};
    if (cts < rec.lower || cts > rec.upper || !validate(tx_id, rec, key)) {
        rec.phase = TxRecord::Phase::Aborted;
        prune_lists(tx_id);
        return reply;
    }
    rec.phase = TxRecord::Phase::Reserved;
    rec.cts = cts;
    rec.tp = tp;
    rec.lower = rec.upper = cts;
    for (const auto& [addr, observed] : rec.reads) {
        read_records_[addr].push_back({key, tx_id, observed, false});
        auto& sec = ensure(addr);
        sec.rts = std::max(sec.rts, cts);
    }
    for (const auto& [addr, value] : rec.writes) {
        versions_[addr].push_back({key, value, tx_id, false});
        auto& sec = ensure(addr);
        sec.wts = std::max(sec.wts, cts);
    }
    reply.commit = true;
    return reply;
}

void ShardStore::handle_finalize(uint64_t tx_id) {
    auto it = records_.find(tx_id);
    if (it == records_.end() || it->second.phase != TxRecord::Phase::Reserved) return;
    auto& rec = it->second;
    rec.phase = TxRecord::Phase::Committed;
    for (const auto& [addr, observed] : rec.reads)
        for (auto& rr : read_records_[addr])
            if (rr.reader == tx_id) rr.committed = true;
    for (const auto& [addr, value] : rec.writes) {
        auto& vers = versions_[addr];
        for (auto& v : vers)
            if (v.id == tx_id) v.committed = true;
        // Last-writer-wins by commit key over committed versions only, so
        // out-of-order finalizes converge to the same sector value.
        const WriteVersion* newest = nullptr;
        for (const auto& v : vers)
            if (v.committed && (!newest || newest->key < v.key)) newest = &v;
        auto& sec = ensure(addr);
        sec.value = newest->value;
        sec.wts = std::max(sec.wts, std::get<0>(newest->key));
        last_committed_writer_[addr] = newest->id;
    }
    prune_lists(tx_id);
}

void ShardStore::handle_abort(uint64_t tx_id) {
    auto it = records_.find(tx_id);
    if (it == records_.end() || it->second.phase == TxRecord::Phase::Committed) return;
    auto& rec = it->second;
    for (const auto& [addr, observed] : rec.reads) {
        auto& rrs = read_records_[addr];
        std::erase_if(rrs, [&](const ReadRecord& rr) { return rr.reader == tx_id; });
    }
    for (const auto& [addr, value] : rec.writes) {
        auto& vers = versions_[addr];
        std::erase_if(vers, [&](const WriteVersion& v) { return v.id == tx_id; });
    }
    rec.phase = TxRecord::Phase::Aborted;
    prune_lists(tx_id);
}

void ShardStore::prune_lists(uint64_t tx_id) {
    for (auto& [addr, sec] : sectors_) {
        std::erase(sec.readers, tx_id);
        std::erase(sec.writers, tx_id);
    }
}

void ShardStore::BatchEntry::encode(Encoder& e) const {
    e.u64(id);
    e.i64(cts);
    e.i64(tp);
    e.u32(shard);
    e.seq(reads, [](Encoder& x, const std::pair<Address, std::optional<uint64_t>>& r) {
        x.u64(r.first);
        x.boolean(r.second.has_value());
        x.u64(r.second.value_or(0));
    });
    e.seq(writes, [](Encoder& x, Address a) { x.u64(a); });
}

std::optional<ShardStore::BatchEntry> ShardStore::BatchEntry::decode(Decoder& d) {
    BatchEntry out;
    auto id = d.u64();
    auto cts = d.i64();
    auto tp = d.i64();
    auto shard = d.u32();
    if (!id || !cts || !tp || !shard.has_value()) return std::nullopt;
    auto reads = d.seq<std::pair<Address, std::optional<uint64_t>>>(
        [](Decoder& x) -> std::optional<std::pair<Address, std::optional<uint64_t>>> {
            auto addr = x.u64();
            auto has = x.boolean();
            auto w = x.u64();
            if (!addr || !has || !w) return std::nullopt;
            return std::pair<Address, std::optional<uint64_t>>{
                *addr, *has ? std::optional<uint64_t>(*w) : std::nullopt};
        });
    auto writes = d.seq<Address>([](Decoder& x) { return x.u64(); });
    if (!reads || !writes) return std::nullopt;
    out.id = *id;
    out.cts = *cts;
    out.tp = *tp;
    out.shard = *shard;
    out.reads = std::move(*reads);
    out.writes = std::move(*writes);
    return out;
}

void ShardStore::Batch::encode(Encoder& e) const {
    e.u32(shard_id);
    e.u64(batch_counter);
    e.seq(txs, [](Encoder& x, const BatchEntry& t) { t.encode(x); });
}

std::optional<ShardStore::Batch> ShardStore::Batch::decode(Decoder& d) {
    Batch out;
    auto shard = d.u32();
    auto counter = d.u64();
    if (!shard || !counter) return std::nullopt;
    auto txs = d.seq<BatchEntry>([](Decoder& x) { return BatchEntry::decode(x); });
    if (!txs) return std::nullopt;
    out.shard_id = *shard;
    out.batch_counter = *counter;
    out.txs = std::move(*txs);
    return out;
}

Digest256 ShardStore::Batch::digest() const {
    Encoder e;
    encode(e);
    return e.hash();
}

ShardStore::Batch ShardStore::output_batch() {
    Batch out;
    out.shard_id = id_;
    out.batch_counter = ++batch_counter_;
    for (auto& [id, rec] : records_) {
        if (rec.phase != TxRecord::Phase::Committed || rec.exported) continue;
        rec.exported = true;
        BatchEntry entry;
        entry.id = id;
        entry.cts = rec.cts;
        entry.tp = rec.tp;
        entry.shard = id_;
        for (const auto& [addr, observed] : rec.reads) entry.reads.push_back({addr, observed});
        for (const auto& [addr, value] : rec.writes) entry.writes.push_back(addr);
        out.txs.push_back(std::move(entry));
    }
    std::sort(out.txs.begin(), out.txs.end(), [](const BatchEntry& a, const BatchEntry& b) {
        return CommitKey{a.cts, a.tp, a.id} < CommitKey{b.cts, b.tp, b.id};
    });
    return out;
}

ShardCluster::ShardCluster(const ShardingParams& params, uint64_t seed)
    : params_(params), rng_(seed) {
    replicas_.resize(params.shards);
    for (uint32_t s = 0; s < params.shards; ++s)
        for (uint32_t r = 0; r < params.shard_size; ++r) replicas_[s].emplace_back(s, params.shards);
    muted_.assign(params.shards, 0);
    silenced_.assign(params.shards, 0);
}

ShardTX ShardCluster::begin(int64_t physical_timestamp, uint32_t home_shard) {
    ShardTX tx;
    tx.id = rng_.next_u64();
    tx.home_shard = home_shard;
    tx.physical_timestamp = physical_timestamp;
    return tx;
}

void ShardCluster::deliver_all(uint32_t shard, const std::function<void(ShardStore&)>& fn) {
    if (silenced_[shard]) return;
    for (auto& replica : replicas_[shard]) fn(replica);
}

template <typename Reply, typename Fn>
std::optional<Reply> ShardCluster::quorum_call(ShardTX& tx, uint32_t shard, Fn&& handler) {
    bool remote = shard != tx.home_shard;
    if (remote) remote_messages_ += params_.shard_size;
    if (silenced_[shard]) return std::nullopt;
    std::vector<std::optional<Reply>> answers;
    for (auto& replica : replicas_[shard]) answers.push_back(handler(replica));
    if (!remote) return answers[0];  // the home shard serves itself directly
    // Group verified signed replies by content; 2f+1 matching commits one.
    std::map<Digest256, uint32_t> support;
    for (uint32_t r = muted_[shard]; r < answers.size(); ++r) {
        if (!answers[r]) continue;
        auto digest = answers[r]->digest();
        uint64_t signer = uint64_t(shard) * params_.shard_size + r;
        if (!SigTag::sign(signer, digest).verify(signer, digest)) continue;
        if (++support[digest] >= params_.quorum()) return answers[r];
    }
    return std::nullopt;
}

std::optional<Bytes> ShardCluster::tx_read(ShardTX& tx, Address addr) {
    if (tx.state != TxState::Running) return std::nullopt;
    auto buffered = tx.write_buffer.find(addr);
    if (buffered != tx.write_buffer.end()) return buffered->second;  // read-your-writes
    uint32_t shard = host(addr, params_.shards);
    tx.accessed.insert(shard);
    auto reply = quorum_call<ReadReply>(
        tx, shard, [&](ShardStore& s) { return s.handle_read(addr, tx.id); });
    if (!reply) {
        abort_everywhere(tx, TxAbort::TimeoutAbort);
        return std::nullopt;
    }
    tx.lower = std::max(tx.lower, reply->wts);
    tx.before.insert(tx.before.end(), reply->writers.begin(), reply->writers.end());
    return reply->value;
}

bool ShardCluster::tx_write(ShardTX& tx, Address addr, const Bytes& value) {
    if (tx.state != TxState::Running) return false;
    uint32_t shard = host(addr, params_.shards);
    tx.accessed.insert(shard);
    auto reply = quorum_call<WriteReply>(
        tx, shard, [&](ShardStore& s) { return s.handle_write(addr, value, tx.id); });
    if (!reply) {
        abort_everywhere(tx, TxAbort::TimeoutAbort);
        return false;
    }
    tx.lower = std::max(tx.lower, reply->rts);
    tx.after.insert(tx.after.end(), reply->readers.begin(), reply->readers.end());
    tx.write_buffer[addr] = value;
    return true;
}

bool ShardCluster::tx_finish(ShardTX& tx) {
    if (tx.state != TxState::Running) return false;
    auto cts = finish_bounds(tx);
    if (!cts.ok()) {
        abort_everywhere(tx, cts.error());
        return false;
    }
    tx.state = TxState::Precommit;
    for (uint32_t shard : tx.accessed) {
        auto reply = quorum_call<PrecommitReply>(tx, shard, [&](ShardStore& s) {
            return s.handle_precommit(tx.id, tx.cts, tx.physical_timestamp);
        });
        if (!reply) {
            abort_everywhere(tx, TxAbort::TimeoutAbort);
            return false;
        }
        if (!reply->commit) {
            abort_everywhere(tx, TxAbort::RemoteAbort);
            return false;
        }
        if (shard == tx.home_shard || tx.batch_counter == 0)
            tx.batch_counter = reply->batch_counter;
    }
    for (uint32_t shard : tx.accessed)
        deliver_all(shard, [&](ShardStore& s) { s.handle_finalize(tx.id); });
    tx.state = TxState::Committed;
    return true;
}

void ShardCluster::abort_everywhere(ShardTX& tx, TxAbort reason) {
    for (uint32_t shard : tx.accessed)
        deliver_all(shard, [&](ShardStore& s) { s.handle_abort(tx.id); });
    tx.state = TxState::Aborted;
    tx.abort_reason = reason;
}

void ShardCluster::mute_replicas(uint32_t shard, uint32_t count) { muted_[shard] = count; }
void ShardCluster::silence_shard(uint32_t shard) { silenced_[shard] = 1; }
void ShardCluster::restore(uint32_t shard) {
    silenced_[shard] = 0;
    muted_[shard] = 0;
}

ShardStore::Batch ShardCluster::output_batch(uint32_t shard) {
    ShardStore::Batch out;
    bool first = true;
    for (auto& replica : replicas_[shard]) {
        auto b = replica.output_batch();
        if (first) out = std::move(b), first = false;
    }
    return out;
}

std::vector<size_t> lis_filter(const std::vector<int64_t>& tps) {
    size_t n = tps.size();
    if (n == 0) return {};
    std::vector<size_t> len(n, 1);
    for (size_t i = n; i-- > 0;)
        for (size_t j = i + 1; j < n; ++j)
            if (tps[j] >= tps[i]) len[i] = std::max(len[i], len[j] + 1);
    size_t best = *std::max_element(len.begin(), len.end());
    // Taking the earliest index that still completes a maximum chain yields
    // the lexicographically smallest index set.
    std::vector<size_t> picked;
    size_t need = best;
    int64_t last = std::numeric_limits<int64_t>::min();
    for (size_t i = 0; i < n && need > 0; ++i) {
        if (len[i] == need && tps[i] >= last) {
            picked.push_back(i);
            last = tps[i];
            --need;
        }
    }
    return picked;
}

RoundOutcome primary_collect(const std::vector<std::optional<ShardStore::Batch>>& batches) {
    RoundOutcome out;
    for (const auto& b : batches)
        if (!b) {
            out.round_failed = true;
            out.committee_switch = true;
            return out;
        }
    // A batch whose median stamp escapes the stamp envelope of a strict
    // majority of the other non-empty batches is rejected wholesale.
    struct Stats {
        uint32_t shard;
        int64_t lo, hi, median;
    };
    std::vector<Stats> stats;
    for (const auto& b : batches) {
        if (b->txs.empty()) continue;
        std::vector<int64_t> tps;
        for (const auto& t : b->txs) tps.push_back(t.tp);
        std::sort(tps.begin(), tps.end());
        stats.push_back({b->shard_id, tps.front(), tps.back(), tps[(tps.size() - 1) / 2]});
    }
    for (const auto& s : stats) {
        uint32_t others = 0, violations = 0;
        for (const auto& o : stats) {
            if (o.shard == s.shard) continue;
            ++others;
            if (s.median < o.lo || s.median > o.hi) ++violations;
        }
        if (others > 0 && violations * 2 > others) out.invalidated_shards.push_back(s.shard);
    }
    std::set<uint32_t> bad(out.invalidated_shards.begin(), out.invalidated_shards.end());
    std::vector<ShardStore::BatchEntry> entries;
    for (const auto& b : batches)
        for (const auto& t : b->txs) {
            if (bad.count(t.shard)) out.aborted.insert(t.id);
            entries.push_back(t);
        }
    std::sort(entries.begin(), entries.end(),
              [](const ShardStore::BatchEntry& a, const ShardStore::BatchEntry& b) {
                  return CommitKey{a.cts, a.tp, a.id} < CommitKey{b.cts, b.tp, b.id};
              });
    // Observed writers precede their readers in commit order, so one
    // ascending pass settles all transitive downstream aborts. Cross-shard
    // transactions arrive once per accessed shard; the log keeps one copy.
    std::vector<ShardStore::BatchEntry> survivors;
    std::set<uint64_t> seen;
    for (const auto& t : entries) {
        if (!seen.insert(t.id).second || out.aborted.count(t.id)) continue;
        bool poisoned = false;
        for (const auto& [addr, observed] : t.reads)
            if (observed && out.aborted.count(*observed)) poisoned = true;
        if (poisoned) {
            out.aborted.insert(t.id);
            continue;
        }
        survivors.push_back(t);
    }
    std::vector<int64_t> tps;
    for (const auto& t : survivors) tps.push_back(t.tp);
    auto keep = lis_filter(tps);
    std::set<size_t> kept(keep.begin(), keep.end());
    for (size_t i = 0; i < survivors.size(); ++i) {
        if (kept.count(i)) out.log.push_back(survivors[i]);
        else out.aborted.insert(survivors[i].id);
    }
    return out;
}

}  // namespace hybridsim
