#include "hybridsim/sim.hpp"

#include <algorithm>
#include <cmath>

#include "hybridsim/rewards.hpp"

namespace hybridsim {

namespace {

Digest256 digest_of_string(const std::string& s) {
    return digest(reinterpret_cast<const uint8_t*>(s.data()), s.size());
}

Digest256 labeled_seed(uint64_t seed, const std::string& label) {
    Encoder e;
    e.u64(seed);
    e.bytes(Bytes(label.begin(), label.end()));
    return digest(e.out());
}

constexpr Address kClientBase = 1'000'000;

Address client_address(uint32_t i) { return kClientBase + i; }

}  // namespace

// Delivery kinds carry a recv- prefix so trace consumers can tell receipt
// apart from origination events such as "fruit", "block", or "commit".
const char* payload_kind(const SimPayload& p) {
    switch (p.index()) {
        case 0: return "recv-fruit";
        case 1: return "recv-chain";
        case 2: return "recv-proposal";
        case 3: return "recv-vote";
        case 4: return "recv-fastmsg";
        case 5: return "recv-tx";
        case 6: return "recv-stopsig";
    }
    return "?";
}

Digest256 payload_digest(const SimPayload& p) {
    if (auto* f = std::get_if<EvFruit>(&p)) return f->fruit.hash;
    if (auto* c = std::get_if<EvChain>(&p)) return c->chain->back().hash;
    if (auto* pr = std::get_if<EvProposal>(&p)) return pr->prop->digest();
    if (auto* v = std::get_if<EvVote>(&p)) return v->vote.proposal;
    if (auto* m = std::get_if<EvFastMsg>(&p)) return m->msg.digest;
    if (auto* t = std::get_if<EvClientTx>(&p)) return t->tx.id();
    if (auto* s = std::get_if<EvStopSig>(&p)) return s->sig.payload;
    return {};
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

Simulation::Simulation(const ScenarioConfig& cfg)
    : cfg_(cfg),
      net_rng_(labeled_seed(cfg.seed, "net")),
      client_rng_(labeled_seed(cfg.seed, "client")),
      shard_rng_(labeled_seed(cfg.seed, "shard")) {
    const uint64_t W = [&] {
        uint64_t w = 0;
        if (cfg_.weights.empty()) return static_cast<uint64_t>(cfg_.miners);
        for (auto x : cfg_.weights) w += x;
        return w;
    }();
    const double draws = static_cast<double>(W) * static_cast<double>(cfg_.block_interval);
    mparams_.block_difficulty = MiningParams::threshold(std::min(1.0, 1.0 / draws));
    mparams_.fruit_difficulty =
        MiningParams::threshold(std::min(1.0, static_cast<double>(cfg_.fruits_per_block) / draws));
    mparams_.recency_window = cfg_.lambda;
    mparams_.pointer_depth = cfg_.kappa;
    mparams_.election_window = static_cast<uint32_t>(
        std::max<Tick>(1, cfg_.term_ticks / std::max<Tick>(1, cfg_.block_interval)));
    initial_th_ = TruehashParams::initial(cfg_.truehash_n, cfg_.epoch_length);
    eparams_.window = cfg_.window;
    eparams_.nu = cfg_.nu;
    eparams_.csize = cfg_.csize;
    eseed_ = ElectionSeed::genesis();

    nodes_.resize(cfg_.miners);
    std::set<NodeId> planned(cfg_.adversary.corrupted.begin(), cfg_.adversary.corrupted.end());
    for (uint32_t i = 0; i < cfg_.miners; ++i) {
        Node& n = nodes_[i];
        n.id = i;
        n.weight = cfg_.weights.empty() ? 1 : cfg_.weights[i];
        n.view = ChainView::genesis_view(i);
        n.rng = std::make_unique<DetRng>(labeled_seed(cfg_.seed, "mine" + std::to_string(i)));
        n.planned = planned.count(i) != 0;
        n.corrupt_from = kNever;
        eparams_.opt_in.insert(i);
    }

    // Mining-side strategies take effect tau after the opening election.
    if (cfg_.adversary.strategy == Strategy::WithholdBlocks) {
        for (auto& n : nodes_)
            if (n.planned) n.corrupt_from = cfg_.adversary.tau;
        selfish_view_ = ChainView::genesis_view(0);  // owner reset per draw
    }
    for (const auto& n : nodes_) {
        if (n.planned) {
            selfish_leader_ = n.id;
            break;
        }
    }

    std::map<Address, AccountState> genesis;
    for (uint32_t i = 0; i < cfg_.clients; ++i) {
        clients_.push_back({client_address(i), 0});
        genesis[client_address(i)] = AccountState{0, cfg_.initial_balance, {}, {}};
    }
    genesis_state_ = WorldState(std::move(genesis));
}

uint64_t Simulation::total_weight() const {
    uint64_t w = 0;
    for (const auto& n : nodes_) w += n.weight;
    return w;
}

std::vector<NodeId> Simulation::honest_nodes() const {
    std::vector<NodeId> out;
    for (const auto& n : nodes_)
        if (!n.planned) out.push_back(n.id);
    return out;
}

const ChainView& Simulation::reference_view() const {
    for (const auto& n : nodes_)
        if (!n.planned) return n.view;
    return nodes_.front().view;
}

const ChainView& Simulation::view_of(NodeId n) const { return nodes_.at(n).view; }

std::vector<NodeId> Simulation::current_members() const {
    std::vector<NodeId> out;
    if (!seats_.empty()) {
        const auto& term = seats_.begin()->second.term;
        out = term.members;
    }
    return out;
}

Serial Simulation::member_serial(NodeId n) const {
    auto it = seats_.find(n);
    return it == seats_.end() ? 0 : it->second.serial;
}

std::map<NodeId, std::vector<Digest256>> Simulation::log_digests(uint64_t term) const {
    for (const auto& r : retired_)
        if (r.term_id == term) return r.log_digests;
    return {};
}

const std::vector<FastBlock>* Simulation::reference_log(uint64_t term) const {
    for (const auto& r : retired_)
        if (r.term_id == term) return &r.reference_log;
    return nullptr;
}

bool Simulation::node_corrupted(NodeId n) const { return corrupted_now(nodes_.at(n)); }
bool Simulation::node_muted(NodeId n) const { return muted(nodes_.at(n)); }

// ---------------------------------------------------------------------------
// Network primitives
// ---------------------------------------------------------------------------

Tick Simulation::link_delay(NodeId from, NodeId to) {
    for (const auto& l : cfg_.links)
        if (l.from == from && l.to == to) return l.delay;
    return cfg_.d_min + net_rng_.below(cfg_.d_max - cfg_.d_min + 1);
}

void Simulation::send(NodeId from, NodeId to, SimPayload p) {
    queue_.push(SimEvent{now_ + link_delay(from, to), to, seq_++, std::move(p)});
}

void Simulation::broadcast(NodeId from, const SimPayload& p, const std::vector<NodeId>& to) {
    // Destination order is fixed so the delay draws are reproducible.
    for (NodeId d : to) queue_.push(SimEvent{now_ + link_delay(from, d), d, seq_++, p});
}

void Simulation::broadcast_members(NodeId from, const SimPayload& p) {
    if (seats_.empty()) return;
    broadcast(from, p, seats_.begin()->second.term.members);
}

void Simulation::broadcast_all(NodeId from, const SimPayload& p) {
    std::vector<NodeId> all(nodes_.size());
    for (size_t i = 0; i < nodes_.size(); ++i) all[i] = nodes_[i].id;
    broadcast(from, p, all);
}

void Simulation::deliver_due(Tick t) {
    while (!queue_.empty() && queue_.top().deliver_at <= t) {
        SimEvent ev = queue_.top();
        queue_.pop();
        Node& n = nodes_.at(ev.destination);
        if (muted(n)) continue;  // knocked offline: traffic is lost, not queued
        record(t, ev.destination, payload_kind(ev.payload), payload_digest(ev.payload));
        handle(ev.destination, ev.payload);
    }
}

// ---------------------------------------------------------------------------
// Handlers
// ---------------------------------------------------------------------------

void Simulation::handle(NodeId dest, const SimPayload& p) {
    Node& n = nodes_.at(dest);
    std::visit(
        [&](const auto& ev) {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, EvFruit>) on_fruit(n, ev.fruit);
            else if constexpr (std::is_same_v<T, EvChain>) on_chain(n, ev);
            else if constexpr (std::is_same_v<T, EvProposal>) on_proposal(n, ev);
            else if constexpr (std::is_same_v<T, EvVote>) on_vote(n, ev.vote);
            else if constexpr (std::is_same_v<T, EvFastMsg>) on_fastmsg(n, ev.msg);
            else if constexpr (std::is_same_v<T, EvClientTx>) on_client_tx(n, ev.tx);
            else if constexpr (std::is_same_v<T, EvStopSig>) on_stop_sig(n, ev);
        },
        p);
}

void Simulation::on_fruit(Node& n, const Fruit& f) {
    auto th = truehash_at_tip(n.view.blocks, initial_th_);
    on_hear_fruit(n.view, f, mparams_, th, n.dir);
    if (selfish_active_ && n.id == selfish_leader_ && corrupted_now(n)) {
        auto sth = truehash_at_tip(selfish_view_.blocks, initial_th_);
        on_hear_fruit(selfish_view_, f, mparams_, sth, selfish_dir_);
    }
}

void Simulation::on_chain(Node& n, const EvChain& ev) {
    auto res = on_hear_chain(n.view, *ev.chain, mparams_, initial_th_, &n.vcache);
    if (res == HearChainResult::Adopted)
        record(now_, n.id, "adopt", ev.chain->back().hash);
    else if (res == HearChainResult::Invalid)
        record(now_, n.id, "reject-chain", ev.chain->back().hash);
    // The withholding coalition watches public progress through its lead node.
    if (selfish_active_ && n.id == selfish_leader_ && corrupted_now(n)) {
        const uint64_t pub = n.view.height();
        if (selfish_view_.height() <= pub) {
            // Lost the race: fall in behind the public chain.
            selfish_view_.blocks = n.view.blocks;
            selfish_view_.pending = n.view.pending;
            selfish_dir_ = n.dir;
        } else if (pub + 1 >= selfish_view_.height()) {
            // Lead down to one: publish everything and keep mining on it.
            auto chain = std::make_shared<const std::vector<SnailBlock>>(selfish_view_.blocks);
            broadcast_all(n.id, SimPayload{EvChain{chain}});
            record(now_, n.id, "selfish-publish", selfish_view_.tip().hash);
        }
    }
}

void Simulation::on_fastmsg(Node& n, const FastMessage& m) {
    n.dir.learn(m.serial, m.digest);
    // The withholding pool keeps its private directory current through its
    // lead node, so coalition fruit mining never starves for targets.
    if (selfish_active_ && n.id == selfish_leader_ && corrupted_now(n))
        selfish_dir_.learn(m.serial, m.digest);
}

void Simulation::on_client_tx(Node& n, const Transaction& tx) {
    mempool_propose(n.standby, tx);
    auto it = seats_.find(n.id);
    if (it != seats_.end()) mempool_propose(it->second.pool, tx);
}

void Simulation::on_proposal(Node& n, const EvProposal& ev) {
    auto it = seats_.find(n.id);
    if (it == seats_.end()) return;
    Seat& seat = it->second;
    const Proposal& prop = *ev.prop;
    if (prop.serial < seat.serial) return;               // already committed
    if (!seat.term.is_member(prop.leader)) return;       // not committee traffic
    seat.props.emplace(prop.digest(), ev.prop);
    seat.prop_buf[prop.serial].push_back(ev.prop);
    try_vote(seat, now_);
}

void Simulation::try_vote(Seat& seat, Tick t) {
    Node& n = nodes_.at(seat.node);
    if (corrupted_now(n) && cfg_.adversary.strategy == Strategy::Silent) return;
    const Serial s = seat.serial;
    auto bi = seat.prop_buf.find(s);
    if (bi == seat.prop_buf.end()) return;
    // Work on a copy: a commit below re-enters this function and touches the
    // buffer map.
    const std::vector<std::shared_ptr<const Proposal>> batch = bi->second;
    seat.prop_buf.erase(s);
    for (const auto& propp : batch) {
        if (seat.serial != s) break;  // committed mid-batch
        const Proposal& prop = *propp;
        const Digest256 d = prop.digest();
        Vote v = validate_and_vote(seat.node, prop, seat.cstate, t, seat.hist);
        if (v.yes && seat.voted.count(s)) continue;  // one yes per height
        if (v.yes) seat.voted.insert(s);
        record(t, seat.node, v.yes ? "vote-yes" : "vote-no", d);
        broadcast_members(seat.node, SimPayload{EvVote{v}});
        // A member's own vote also counts toward its local tally.
        seat.votes[d].push_back(v);
        if (v.yes) try_commit(seat, d, t);
    }
}

void Simulation::on_vote(Node& n, const Vote& v) {
    auto it = seats_.find(n.id);
    if (it == seats_.end()) return;
    Seat& seat = it->second;
    seat.votes[v.proposal].push_back(v);
    try_commit(seat, v.proposal, now_);
}

void Simulation::try_commit(Seat& seat, const Digest256& d, Tick t) {
    auto pit = seat.props.find(d);
    if (pit == seat.props.end()) return;  // votes before content: wait
    const Proposal& prop = *pit->second;
    if (prop.serial != seat.serial) return;
    auto vit = seat.votes.find(d);
    if (vit == seat.votes.end()) return;
    // Cheap lower bound: tallying can't commit with fewer raw votes than the
    // quorum, duplicates included.
    if (vit->second.size() <= 2ull * seat.term.members.size() / 3) return;
    if (tally(vit->second, seat.term, d) != Decision::Committed) return;

    // Commit: the agreed proposal content, stamped with its proposal time so
    // every member derives the identical block.
    seat.cstate = apply_block_txs(seat.cstate, prop.transactions, prop.leader);
    auto [block, msg] = emit_fast_block(prop.transactions, seat.parent, seat.cstate,
                                        prop.leader, prop.proposed_at);
    seat.term.daily_log.push_back(block);
    seat.parent = block;
    mempool_confirm(seat.pool, block);
    mempool_confirm(nodes_.at(seat.node).standby, block);
    seat.commit_tick[seat.serial] = t;
    record(t, seat.node, "commit", block.digest());

    if (!nodes_.at(seat.node).planned) {
        for (const auto& tx : prop.transactions) {
            auto tt = tx_track_.find(tx.id());
            if (tt != tx_track_.end()) {
                tt->second.included = std::max(tt->second.included, t);
                tt->second.included_by.insert(seat.node);
            }
        }
    }

    // One member announces the committed height to the mining layer; the
    // proposal's leader is the natural choice and every member agrees on it.
    if (seat.node == prop.leader) broadcast_all(seat.node, SimPayload{EvFastMsg{msg}});

    // Drop consensus traffic for this height; votes already gathered for
    // future heights stay buffered.
    const Serial s = seat.serial;
    seat.voted.erase(s);
    for (auto it = seat.props.begin(); it != seat.props.end();) {
        if (it->second->serial <= s) {
            seat.votes.erase(it->first);
            it = seat.props.erase(it);
        } else {
            ++it;
        }
    }
    ++seat.serial;
    // Proposals that raced ahead can now be considered.
    try_vote(seat, t);
}

void Simulation::on_stop_sig(Node& n, const EvStopSig& ev) {
    for (auto& r : retired_) {
        if (r.term_id != ev.term_id) continue;
        auto dit = r.stop_digests.find(n.id);
        if (dit == r.stop_digests.end()) return;  // not a member of that term
        auto& sigs = r.stop_sigs[n.id];
        sigs.push_back(ev.sig);
        uint64_t matching = 0;
        std::set<uint64_t> signers;
        for (const auto& s : sigs)
            if (s.payload == dit->second && signers.insert(s.signer).second) ++matching;
        if (matching >= (r.csize + 2) / 3) r.finalized.insert(n.id);
        return;
    }
}

// ---------------------------------------------------------------------------
// Committee terms
// ---------------------------------------------------------------------------

void Simulation::retire_current(Tick t) {
    if (seats_.empty()) return;
    RetiredTerm r;
    r.term_id = term_id_;
    r.start_tick = term_start_tick_;
    r.csize = static_cast<uint32_t>(seats_.empty() ? cfg_.csize : seats_.size());
    uint64_t honest = 0;
    NodeId ref = 0;
    bool have_ref = false;
    for (auto& [id, seat] : seats_) {
        const Node& n = nodes_.at(id);
        const bool was_honest = !(n.planned && n.corrupt_from != kNever && n.corrupt_from < t);
        r.member_honest[id] = was_honest;
        if (was_honest) ++honest;
        std::vector<Digest256> digs;
        for (const auto& b : seat.term.daily_log) digs.push_back(b.digest());
        r.log_digests[id] = std::move(digs);
        if (was_honest && !have_ref) {
            ref = id;
            have_ref = true;
        }
    }
    if (!have_ref) ref = seats_.begin()->first;
    r.reference_log = seats_.at(ref).term.daily_log;
    r.q_fast = seats_.empty() ? 1.0
                              : static_cast<double>(honest) / static_cast<double>(seats_.size());
    const Seat& refseat = seats_.at(ref);
    r.commits = refseat.serial - refseat.serial_start;
    const uint64_t rounds = (t / cfg_.round_ticks) - rounds_at_term_start_;
    r.failed_rounds = rounds > r.commits ? rounds - r.commits : 0;
    failed_rounds_ += r.failed_rounds;
    commits_total_ += r.commits;

    // Members request termination; the day log becomes final once a third of
    // the committee has signed off, which stragglers observe via stop_sigs.
    for (auto& [id, seat] : seats_) {
        r.stop_digests[id] = stop_digest(seat.term);
    }
    retired_.push_back(std::move(r));
    for (auto& [id, seat] : seats_) {
        const Node& n = nodes_.at(id);
        if (corrupted_now(n) && cfg_.adversary.strategy == Strategy::Silent) continue;
        SigTag sig = SigTag::sign(id, stop_digest(seat.term));
        broadcast_members(id, SimPayload{EvStopSig{term_id_, sig}});
    }
}

void Simulation::start_term(Tick t) {
    retire_current(t);
    term_id_ = t / cfg_.term_ticks;
    term_start_tick_ = t;
    rounds_at_term_start_ = t / cfg_.round_ticks;

    // --- Election: every honest node would run this on its own chain; the
    // anchor rule pins the electorate to a flagged, lambda-buried height so
    // identical prefixes give identical committees. The run computes it once
    // from the reference view and audits agreement on two other honest views.
    const ChainView& ref = reference_view();
    const uint32_t ew = std::max<uint32_t>(1, mparams_.election_window);
    uint64_t flag = 0;
    if (ref.height() > cfg_.lambda) {
        const uint64_t buried = ref.height() - cfg_.lambda;
        flag = buried - buried % ew;
    }

    std::vector<NodeId> members;
    const uint64_t prev_anchor = anchor_height_;
    if (flag == 0) {
        for (uint32_t i = 0; i < cfg_.csize; ++i) members.push_back(i);
        std::vector<Digest256> recent{ref.blocks.front().hash};
        eseed_ = derive_seed(eseed_, recent, cfg_.csize);
        anchor_height_ = 0;
    } else {
        ChainView prefix;
        prefix.owner = ref.owner;
        prefix.blocks.assign(ref.blocks.begin(), ref.blocks.begin() + flag + 1);
        std::vector<Digest256> recent;
        const size_t take = std::min<size_t>(cfg_.epoch_length, prefix.blocks.size());
        for (size_t i = prefix.blocks.size() - take; i < prefix.blocks.size(); ++i)
            recent.push_back(prefix.blocks[i].hash);
        eseed_ = derive_seed(eseed_, recent, cfg_.csize);
        auto cands = collect_candidates(prefix, eparams_);
        if (cands.ok() && cands.value().size() > 0) {
            members = elect(cands.value(), eseed_, cfg_.csize);
        } else {
            for (uint32_t i = 0; i < cfg_.csize; ++i) members.push_back(i);
        }
        // Cross-node audit: two other honest views must agree on the prefix.
        int checked = 0;
        for (const auto& n : nodes_) {
            if (n.planned || n.id == ref.owner || checked >= 2) continue;
            if (n.view.height() < flag) continue;
            if (n.view.blocks[flag].hash != prefix.blocks[flag].hash) {
                consistency_violated_ = true;
                violations_.push_back("election divergence: node " + std::to_string(n.id) +
                                      " disagrees on the anchor at height " +
                                      std::to_string(flag));
            }
            ++checked;
        }
        anchor_height_ = flag;
    }

    // --- Handoff: the incoming committee syncs fast-layer state from the
    // lowest honest outgoing member (out of band; the protocol ships state
    // with the rotation flag).
    WorldState cstate = genesis_state_;
    Serial serial = 1;
    FastBlock parent;
    uint64_t minted = 0;
    std::set<Digest256> confirmed;
    if (!seats_.empty()) {
        const Seat* donor = nullptr;
        for (const auto& [id, seat] : seats_) {
            if (!nodes_.at(id).planned) {
                donor = &seat;
                break;
            }
        }
        if (!donor) donor = &seats_.begin()->second;
        cstate = donor->cstate;
        serial = donor->serial;
        parent = donor->parent;
        minted = donor->minted;
        confirmed = donor->pool.confirmed;
    }
    seats_.clear();

    // --- Reward settlement for the newly buried snail range (prev, flag].
    // Applied identically by every member, so it lives in consensus state.
    if (anchor_height_ > prev_anchor) {
        auto split = reward_split(cfg_.active_committees, cfg_.alpha, cfg_.block_reward);
        BlockRewardParams brp{cfg_.base_block_reward,
                              static_cast<uint32_t>(cfg_.beta_num),
                              static_cast<uint32_t>(cfg_.beta_den)};
        for (uint64_t h = prev_anchor + 1; h <= anchor_height_; ++h) {
            const SnailBlock& sb = ref.blocks[h];
            if (split.ok()) {
                for (const auto& [m, amt] : equal_split(split.value().bft, members))
                    if (amt) cstate = cstate.credit(m, amt);
                for (const auto& [m, amt] : distribute_block_reward(sb, split.value().pow, brp))
                    if (amt) cstate = cstate.credit(m, amt);
                minted += cfg_.block_reward;
            }
        }
    }

    // --- Seat the committee.
    CommitteeTerm term;
    term.members = members;
    term.term_start = prev_anchor;
    term.term_end = anchor_height_;
    for (uint32_t label = 0; label < members.size(); ++label) {
        Node& n = nodes_.at(members[label]);
        Seat seat;
        seat.node = n.id;
        seat.label = label;
        seat.term = term;
        seat.term_id = term_id_;
        seat.term_start_tick = t;
        seat.cstate = cstate;
        seat.hist.window = cfg_.timestamp_window;
        seat.serial = serial;
        seat.serial_start = serial;
        seat.parent = parent;
        seat.minted = minted;
        seat.pool.pending = n.standby.pending;
        seat.pool.confirmed = confirmed;
        for (auto it = seat.pool.pending.begin(); it != seat.pool.pending.end();) {
            if (seat.pool.confirmed.count(it->first))
                it = seat.pool.pending.erase(it);
            else
                ++it;
        }
        seats_.emplace(n.id, std::move(seat));
    }

    // --- Gossip wiring for the new committee.
    Digest256 mseed = digest_concat(eseed_.seed, digest_of_string("matrix"));
    for (int attempt = 0; attempt < 8; ++attempt) {
        auto m = generate_matrix(mseed, cfg_.csize, cfg_.gsize);
        if (m.ok()) {
            matrix_ = m.value();
            break;
        }
        mseed = digest_concat(mseed, digest_of_string("retry"));
    }
    if (matrix_) {
        std::vector<std::vector<EncryptedAnnouncement>> sent(members.size());
        for (uint32_t label = 0; label < members.size(); ++label)
            sent[label] = announce(label, *matrix_, 0xA0000000ull + members[label]);
        for (uint32_t label = 0; label < members.size(); ++label) {
            std::vector<EncryptedAnnouncement> inbound;
            for (const auto& anns : sent)
                for (const auto& a : anns)
                    if (a.to == label) inbound.push_back(a);
            seats_.at(members[label]).table =
                build_table(label, 0xA0000000ull + members[label], inbound);
        }
    }

    // --- Corruption scheduling: tau after this election, bounded by budget.
    const auto allowed = static_cast<uint64_t>(
        std::ceil(cfg_.adversary.budget * static_cast<double>(cfg_.csize)));
    uint64_t scheduled = 0;
    for (NodeId m : members)
        if (nodes_.at(m).corrupt_from != kNever) ++scheduled;
    if (cfg_.adversary.strategy != Strategy::None &&
        cfg_.adversary.strategy != Strategy::WithholdBlocks) {
        for (NodeId m : members) {
            Node& n = nodes_.at(m);
            if (!n.planned || n.corrupt_from != kNever) continue;
            if (scheduled >= allowed) {
                if (!budget_exceeded_) {
                    budget_exceeded_ = true;
                    violations_.push_back(
                        "BudgetExceeded: corruption plan clipped at " +
                        std::to_string(allowed) + " members");
                }
                continue;
            }
            n.corrupt_from = t + cfg_.adversary.tau;
            ++scheduled;
        }
    }
    record(t, 0, "term", eseed_.seed);
    shard_workload();
}

void Simulation::activate_corruptions(Tick t) {
    for (auto& n : nodes_) {
        if (!n.planned || n.corrupt_from != t) continue;
        n.ever_active = true;
        record(t, n.id, "corrupt", {});
        if (cfg_.adversary.strategy == Strategy::LeakAddresses) {
            auto it = seats_.find(n.id);
            if (it != seats_.end()) {
                for (const auto& [label, addr] : it->second.table.known)
                    leaked_.insert(it->second.term.members[label]);
            }
        }
        if (cfg_.adversary.strategy == Strategy::WithholdBlocks && !selfish_active_) {
            selfish_active_ = true;
            selfish_view_.blocks = n.view.blocks;
            selfish_view_.pending = n.view.pending;
            selfish_dir_ = n.dir;
        }
    }
    if (cfg_.adversary.strategy == Strategy::LeakAddresses && !ddos_fired_ && !leaked_.empty()) {
        std::vector<NodeId> targets;
        for (NodeId id : leaked_)
            if (!nodes_.at(id).planned) targets.push_back(id);
        if (!targets.empty()) {
            ddos_fired_ = true;
            auto res = ddos(targets, cfg_.adversary.ddos_duration);
            (void)res;
        }
    }
}

Result<uint64_t, Simulation::DdosError> Simulation::ddos(const std::vector<NodeId>& targets,
                                                         Tick duration) {
    if (leaked_.empty()) return DdosError::NoLeak;
    for (NodeId t : targets)
        if (!leaked_.count(t)) return DdosError::UnknownAddress;
    for (NodeId t : targets) {
        nodes_.at(t).muted_until = std::max(nodes_.at(t).muted_until, now_ + 1 + duration);
        record(now_, t, "ddos", {});
    }
    ddos_muted_count_ = std::max<uint64_t>(ddos_muted_count_, targets.size());
    return static_cast<uint64_t>(targets.size());
}

// ---------------------------------------------------------------------------
// Rounds
// ---------------------------------------------------------------------------

void Simulation::run_round(Tick t) {
    if (seats_.empty()) return;
    const auto& members = seats_.begin()->second.term.members;
    const uint64_t g = t / cfg_.round_ticks;
    const NodeId leader = members[g % members.size()];
    auto it = seats_.find(leader);
    if (it == seats_.end()) return;
    Seat& seat = it->second;
    Node& n = nodes_.at(leader);
    if (muted(n)) return;
    if (corrupted_now(n)) {
        if (cfg_.adversary.strategy == Strategy::Silent) return;
        if (cfg_.adversary.strategy == Strategy::ByzantineVote) {
            equivocate(n, seat, t);
            return;
        }
    }
    Proposal prop = leader_propose(seat.pool, seat.cstate, t, seat.hist, leader, seat.serial);
    auto sp = std::make_shared<const Proposal>(std::move(prop));
    record(t, leader, "propose", sp->digest());
    broadcast_members(leader, SimPayload{EvProposal{sp}});
}

void Simulation::equivocate(Node& leader, Seat& seat, Tick t) {
    // Two proposals with identical transactions but distinct identities, each
    // shown to one half of the committee; corrupted members vote for both but
    // deliver each vote only to the matching half. With f+1 or more seats in
    // on it, both variants can clear the quorum inside disjoint view sets.
    Proposal a = leader_propose(seat.pool, seat.cstate, t, seat.hist, leader.id, seat.serial);
    Proposal b = a;
    b.proposed_at += 1;
    b.sig = SigTag::sign(leader.id, b.digest());
    auto pa = std::make_shared<const Proposal>(std::move(a));
    auto pb = std::make_shared<const Proposal>(std::move(b));
    record(t, leader.id, "equivocate", pa->digest());

    // Alternate the honest members between the two variants so both sides
    // end up as close to half of the honest seats as possible, regardless of
    // where the corrupted labels sit.
    const auto& members = seat.term.members;
    std::vector<NodeId> half_a, half_b, corrupt;
    for (uint32_t label = 0; label < members.size(); ++label) {
        Node& m = nodes_.at(members[label]);
        if (corrupted_now(m)) {
            corrupt.push_back(m.id);
            continue;
        }
        const size_t honest_seen = half_a.size() + half_b.size();
        (honest_seen % 2 == 0 ? half_a : half_b).push_back(m.id);
    }
    broadcast(leader.id, SimPayload{EvProposal{pa}}, half_a);
    broadcast(leader.id, SimPayload{EvProposal{pb}}, half_b);
    broadcast(leader.id, SimPayload{EvProposal{pa}}, corrupt);

    for (NodeId c : corrupt) {
        Vote va = Vote::cast(c, pa->digest(), true);
        Vote vb = Vote::cast(c, pb->digest(), true);
        std::vector<NodeId> a_side = half_a;
        a_side.insert(a_side.end(), corrupt.begin(), corrupt.end());
        broadcast(c, SimPayload{EvVote{va}}, a_side);
        broadcast(c, SimPayload{EvVote{vb}}, half_b);
    }
}

// ---------------------------------------------------------------------------
// Mining and clients
// ---------------------------------------------------------------------------

void Simulation::mine_tick(Tick t) {
    if (cfg_.mode == SimMode::MiningOnly) {
        // Fabricated committee output: a steady serial stream every node
        // hears, so the fruit pipeline never starves.
        const uint64_t per_tick =
            std::max<uint64_t>(1, (2ull * cfg_.fruits_per_block + cfg_.block_interval - 1) /
                                      cfg_.block_interval);
        for (uint64_t k = 0; k < per_tick; ++k) {
            const Serial s = 1 + t * per_tick + k;
            Encoder e;
            e.u64(s);
            const Digest256 d = digest_concat(digest_of_string("fastmsg"), digest(e.out()));
            for (auto& n : nodes_) n.dir.learn(s, d);
            selfish_dir_.learn(s, d);
        }
    }

    for (auto& n : nodes_) {
        if (muted(n)) continue;
        const bool selfish =
            selfish_active_ && corrupted_now(n) && cfg_.adversary.strategy == Strategy::WithholdBlocks;
        ChainView& view = selfish ? selfish_view_ : n.view;
        MessageDirectory& dir = selfish ? selfish_dir_ : n.dir;
        for (uint64_t w = 0; w < n.weight; ++w) {
            view.owner = n.id;  // attribution for coalition mining
            auto th = truehash_at_tip(view.blocks, initial_th_);
            MineOutcome out = mine_step(view, mparams_, th, dir, t, *n.rng);
            if (out.fruit) {
                record(t, n.id, "fruit", out.fruit->hash);
                on_hear_fruit(view, *out.fruit, mparams_, th, dir);
                // Fruits travel publicly regardless of block strategy.
                broadcast_all(n.id, SimPayload{EvFruit{*out.fruit}});
            }
            if (out.block) {
                record(t, n.id, "block", out.block->hash);
                append_block(view, *out.block);
                if (!selfish) {
                    auto chain = std::make_shared<const std::vector<SnailBlock>>(view.blocks);
                    broadcast_all(n.id, SimPayload{EvChain{chain}});
                }
            }
        }
    }
}

Transaction Simulation::make_client_tx(Tick t) {
    const uint64_t k = t / cfg_.tx_interval;
    const uint32_t from = static_cast<uint32_t>(k % clients_.size());
    const uint32_t to = static_cast<uint32_t>((from + 1) % clients_.size());
    Transaction tx;
    tx.sender = clients_[from].addr;
    tx.account_nonce = clients_[from].nonce++;
    tx.gas_price = 1;
    tx.gas_limit = 1;
    tx.recipient = clients_[to].addr;
    tx.payload = 1 + k % 50;
    tx.physical_timestamp = static_cast<int64_t>(t);
    tx.sequence_number = client_seq_++;
    tx.sig = SigTag::sign(tx.sender, tx.body_digest());
    return tx;
}

void Simulation::client_tick(Tick t) {
    if (clients_.size() < 2) return;
    if (t % cfg_.tx_interval != 0) return;
    Transaction tx = make_client_tx(t);
    tx_track_[tx.id()] = TxTrack{t, 0, {}};
    record(t, 0, "submit", tx.id());
    // Clients sit off the mesh; their submissions enter through the default
    // delay band attributed to node 0's uplink.
    broadcast_all(0, SimPayload{EvClientTx{tx}});
}

void Simulation::shard_workload() {
    if (!cfg_.sharding_enabled || cfg_.shard_txs_per_term == 0) return;
    ShardingParams sp;
    sp.shards = cfg_.shards;
    sp.shard_size = cfg_.shard_size;
    sp.t_o = cfg_.shard_t_o;
    sp.batch_timeout = cfg_.batch_timeout;
    ShardCluster cluster(sp, shard_rng_.next_u64());
    for (uint32_t i = 0; i < cfg_.shard_txs_per_term; ++i) {
        const auto tp = static_cast<int64_t>(term_id_ * 1000 + i);
        auto tx = cluster.begin(tp, static_cast<uint32_t>(shard_rng_.below(cfg_.shards)));
        const uint32_t ops = 1 + static_cast<uint32_t>(shard_rng_.below(3));
        bool dead = false;
        for (uint32_t o = 0; o < ops && !dead; ++o) {
            // Mid-slice address of a random shard, salted for variety.
            const uint32_t shard = static_cast<uint32_t>(shard_rng_.below(cfg_.shards));
            const unsigned __int128 span = (static_cast<unsigned __int128>(1) << 64);
            const Address addr = static_cast<Address>(
                (span * (2 * shard + 1)) / (2 * cfg_.shards) + shard_rng_.below(5));
            if (shard_rng_.below(2)) {
                dead = !cluster.tx_read(tx, addr).has_value();
            } else {
                const uint64_t v = shard_rng_.next_u64();
                Bytes value(8);
                for (int b = 0; b < 8; ++b) value[b] = static_cast<uint8_t>(v >> (8 * b));
                dead = !cluster.tx_write(tx, addr, value);
            }
        }
        if (!dead && cluster.tx_finish(tx))
            ++shard_committed_;
        else
            ++shard_aborted_;
    }
}

// ---------------------------------------------------------------------------
// Main loop
// ---------------------------------------------------------------------------

void Simulation::step() {
    const Tick t = now_;
    if (cfg_.mode == SimMode::Full && t % cfg_.term_ticks == 0) start_term(t);
    activate_corruptions(t);
    deliver_due(t);
    if (cfg_.mode == SimMode::Full && t % cfg_.round_ticks == 0) run_round(t);
    mine_tick(t);
    if (cfg_.mode == SimMode::Full) client_tick(t);
    ++now_;
}

MetricsReport Simulation::run() {
    if (cfg_.mode == SimMode::Nakamoto) return run_nakamoto();
    while (now_ < cfg_.ticks) step();
    return finalize();
}

// ---------------------------------------------------------------------------
// Nakamoto block race: the selfish coalition plays lead-based withholding
// against a gamma = 1 network (honest hash extends the attacker's branch in
// every tie). One draw is one block event; network latency is abstracted.
// ---------------------------------------------------------------------------

MetricsReport Simulation::run_nakamoto() {
    MetricsReport m;
    const uint64_t W = total_weight();
    uint64_t S = 0;
    for (const auto& n : nodes_)
        if (n.planned) S += n.weight;
    const bool attack = cfg_.adversary.strategy == Strategy::WithholdBlocks && S > 0;

    uint64_t pub_honest = 0, pub_selfish = 0;
    uint64_t lead = 0;
    bool fork = false;
    for (Tick t = 0; t < cfg_.ticks; ++t) {
        const bool selfish_found = net_rng_.below(W) < S;
        if (!attack) {
            (selfish_found ? pub_selfish : pub_honest) += 1;
            continue;
        }
        if (selfish_found) {
            if (fork) {
                pub_selfish += 2;  // wins the race: its tie block plus the new one
                fork = false;
            } else {
                ++lead;
            }
        } else {
            if (fork) {
                pub_selfish += 1;  // honest extends the attacker's tie branch
                pub_honest += 1;
                fork = false;
            } else if (lead == 0) {
                pub_honest += 1;
            } else if (lead == 1) {
                fork = true;  // publish the withheld block; race
                lead = 0;
            } else if (lead == 2) {
                pub_selfish += 2;  // override: both withheld blocks land
                lead = 0;
            } else {
                pub_selfish += 1;  // reveal one, keep outpacing
                lead -= 1;
            }
        }
    }
    if (fork) pub_selfish += 1;
    pub_selfish += lead;  // final flush of the private branch

    const uint64_t total = pub_honest + pub_selfish;
    m.selfish_block_share =
        total ? static_cast<double>(pub_selfish) / static_cast<double>(total) : 0.0;
    m.snail_height = total;
    m.corrupted_nodes = cfg_.adversary.corrupted.size();
    m.liveness_bound = 0;
    return m;
}

// ---------------------------------------------------------------------------
// Finalization
// ---------------------------------------------------------------------------

void Simulation::finalize_consistency(MetricsReport& m) {
    // Fast layer: honest members of every term must agree on the day log,
    // position by position, over their common prefix.
    for (const auto& r : retired_) {
        const std::vector<Digest256>* base = nullptr;
        NodeId base_id = 0;
        for (const auto& [id, digs] : r.log_digests) {
            if (!r.member_honest.at(id)) continue;
            if (!base) {
                base = &digs;
                base_id = id;
                continue;
            }
            const size_t common = std::min(base->size(), digs.size());
            for (size_t i = 0; i < common; ++i) {
                if ((*base)[i] != digs[i]) {
                    consistency_violated_ = true;
                    violations_.push_back("day-log divergence in term " +
                                          std::to_string(r.term_id) + " at position " +
                                          std::to_string(i) + " between members " +
                                          std::to_string(base_id) + " and " +
                                          std::to_string(id));
                    break;
                }
            }
        }
    }

    // Snail layer: honest chains must share every block deeper than lambda.
    const auto honest = honest_nodes();
    uint64_t max_height = 0;
    for (NodeId id : honest) max_height = std::max(max_height, nodes_[id].view.height());
    uint64_t deepest = 0;
    for (size_t i = 0; i < honest.size(); ++i) {
        for (size_t j = i + 1; j < honest.size(); ++j) {
            const auto& a = nodes_[honest[i]].view.blocks;
            const auto& b = nodes_[honest[j]].view.blocks;
            const size_t common = std::min(a.size(), b.size());
            size_t agree = 0;
            while (agree < common && a[agree].hash == b[agree].hash) ++agree;
            const uint64_t depth = max_height + 1 - agree;
            deepest = std::max(deepest, depth);
        }
    }
    m.divergence_depth = honest.size() > 1 ? deepest : 0;
    if (m.divergence_depth > cfg_.lambda) {
        consistency_violated_ = true;
        violations_.push_back("snail divergence depth " + std::to_string(m.divergence_depth) +
                              " exceeds the recency window");
    }
    m.consistency_ok = !consistency_violated_;
}

void Simulation::finalize_liveness(MetricsReport& m) {
    m.liveness_bound = cfg_.csize * cfg_.round_ticks + 2 * cfg_.d_max + cfg_.tx_interval +
                       2 * cfg_.round_ticks;
    if (cfg_.adversary.strategy == Strategy::LeakAddresses)
        m.liveness_bound += cfg_.adversary.ddos_duration;
    const Tick horizon = cfg_.ticks > m.liveness_bound ? cfg_.ticks - m.liveness_bound : 0;
    uint64_t stranded = 0;
    Tick first_stranded = 0;
    for (const auto& [id, track] : tx_track_) {
        ++m.submitted_txs;
        if (track.included) {
            ++m.committed_txs;
            const Tick lag = track.included - track.submitted;
            m.liveness_tau = std::max(m.liveness_tau, lag);
            if (lag > m.liveness_bound) m.liveness_ok = false;
        } else if (track.submitted < horizon) {
            m.liveness_ok = false;
            if (stranded == 0 || track.submitted < first_stranded)
                first_stranded = track.submitted;
            ++stranded;
        } else {
            ++m.pending_txs;
        }
    }
    if (stranded)
        violations_.push_back(std::to_string(stranded) +
                              " transactions never joined the log, the earliest submitted at "
                              "tick " +
                              std::to_string(first_stranded));
    m.throughput = cfg_.ticks ? static_cast<double>(m.committed_txs) /
                                    static_cast<double>(cfg_.ticks)
                              : 0.0;
}

MetricsReport Simulation::finalize() {
    if (cfg_.mode == SimMode::Full) retire_current(now_);

    MetricsReport m;
    finalize_consistency(m);
    if (cfg_.mode == SimMode::Full) finalize_liveness(m);

    // Chain attribution over the reference honest view.
    const ChainView& ref = reference_view();
    m.snail_height = ref.height();
    uint64_t corrupt_fruit = 0, corrupt_block = 0;
    for (size_t h = 1; h < ref.blocks.size(); ++h) {
        const auto& b = ref.blocks[h];
        m.blocks_by_miner[b.miner()] += 1;
        if (nodes_.at(b.miner()).planned) ++corrupt_block;
        for (const auto& f : b.fruits) {
            m.fruits_by_miner[f.header.miner] += 1;
            m.total_fruits += 1;
            if (nodes_.at(f.header.miner).planned) ++corrupt_fruit;
        }
    }
    m.selfish_fruit_share =
        m.total_fruits ? static_cast<double>(corrupt_fruit) / static_cast<double>(m.total_fruits)
                       : 0.0;
    if (cfg_.mode != SimMode::Full)
        m.selfish_block_share = m.snail_height ? static_cast<double>(corrupt_block) /
                                                     static_cast<double>(m.snail_height)
                                               : 0.0;

    // Honest share of the last lambda snail blocks.
    {
        uint64_t honest = 0, counted = 0;
        for (size_t h = ref.blocks.size(); h-- > 1 && counted < cfg_.lambda;) {
            ++counted;
            if (!nodes_.at(ref.blocks[h].miner()).planned) ++honest;
        }
        m.q_snail = counted ? static_cast<double>(honest) / static_cast<double>(counted) : 1.0;
    }

    for (const auto& r : retired_) {
        m.q_fast.push_back(r.q_fast);
        m.term_rows.push_back(TermRow{r.term_id, r.start_tick, r.q_fast, r.commits,
                                      r.failed_rounds});
    }
    m.terms = retired_.size();
    m.failed_rounds = failed_rounds_;

    // Fast height and value conservation, judged per honest seat.
    const Amount initial = static_cast<Amount>(clients_.size()) * cfg_.initial_balance;
    for (const auto& [id, seat] : seats_) {
        if (nodes_.at(id).planned) continue;
        m.fast_height = std::max(m.fast_height, seat.serial - 1);
        if (seat.cstate.total_balance() != initial + seat.minted) {
            m.conservation_ok = false;
            violations_.push_back("token conservation failed at member " + std::to_string(id));
        }
        m.minted = std::max(m.minted, seat.minted);
    }

    m.budget_exceeded = budget_exceeded_;
    m.corrupted_nodes = cfg_.adversary.corrupted.size();
    m.leaked_addresses = leaked_.size();
    m.ddos_muted_nodes = ddos_muted_count_;
    m.shard_committed = shard_committed_;
    m.shard_aborted = shard_aborted_;
    m.violations = violations_;
    return m;
}

}  // namespace hybridsim
