#include "hybridsim/rewards.hpp"

#include <algorithm>

namespace hybridsim {

std::string to_string(RewardError) { return "invalid alpha"; }

Result<RewardSplit, RewardError> reward_split(uint64_t n, uint64_t alpha, Amount total) {
    if (alpha <= 1) return RewardError::InvalidAlpha;
    RewardSplit s;
    s.bft = static_cast<Amount>((static_cast<unsigned __int128>(total) * n) / (alpha + n));
    s.pow = total - s.bft;
    return s;
}

std::map<NodeId, Amount> distribute_block_reward(const SnailBlock& block, Amount reward,
                                                 const BlockRewardParams& params) {
    std::map<NodeId, Amount> payouts;
    const NodeId miner = block.miner();

    Amount base = std::min(params.base_block_reward, reward);
    Amount pool = reward - base;
    Amount miner_cut =
        static_cast<Amount>((static_cast<unsigned __int128>(pool) * params.beta_num) /
                            params.beta_den);
    Amount shared = pool - miner_cut;

    const size_t fruits = block.fruits.size();
    Amount per_fruit = fruits ? shared / fruits : 0;
    Amount distributed = per_fruit * fruits;

    payouts[miner] += base + miner_cut + (shared - distributed);  // remainders to the miner
    for (const auto& f : block.fruits) payouts[f.header.miner] += per_fruit;
    return payouts;
}

Amount GasPool::total() const {
    Amount t = 0;
    for (const auto& [id, c] : contributions) t += c;
    return t;
}

double GasPool::mu() const {
    return contributions.empty()
               ? 0.0
               : static_cast<double>(total()) / static_cast<double>(contributions.size());
}

std::map<NodeId, Amount> equal_split(Amount total, const std::vector<NodeId>& ids) {
    std::map<NodeId, Amount> shares;
    if (ids.empty()) return shares;
    std::vector<NodeId> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    Amount each = total / sorted.size();
    Amount leftover = total % sorted.size();
    for (size_t i = 0; i < sorted.size(); ++i) shares[sorted[i]] = each + (i < leftover);
    return shares;
}

GasSettlement settle_gas_pool(const GasPool& pool) {
    GasSettlement out;
    if (pool.contributions.empty()) return out;

    // Integer-equalized targets: the exact mean when it divides evenly,
    // otherwise floor with the remainder spread to the lowest ids.
    std::vector<NodeId> ids;
    for (const auto& [id, c] : pool.contributions) ids.push_back(id);
    auto targets = equal_split(pool.total(), ids);

    // debts: spent less than target; credits: spent more
    std::vector<std::pair<Amount, NodeId>> debts, credits;
    for (const auto& [id, c] : pool.contributions) {
        Amount t = targets.at(id);
        if (c < t) debts.emplace_back(t - c, id);
        if (c > t) credits.emplace_back(c - t, id);
    }
    auto heavier = [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    };
    std::sort(debts.begin(), debts.end(), heavier);
    std::sort(credits.begin(), credits.end(), heavier);

    size_t di = 0, ci = 0;
    while (di < debts.size() && ci < credits.size()) {
        Amount amount = std::min(debts[di].first, credits[ci].first);
        out.transfers.push_back({debts[di].second, credits[ci].second, amount});
        debts[di].first -= amount;
        credits[ci].first -= amount;
        if (debts[di].first == 0) ++di;
        if (credits[ci].first == 0) ++ci;
    }

    out.principal_shares = equal_split(pool.total(), ids);
    return out;
}

void PoolTrend::push(double mu) {
    recent.push_back(mu);
    while (recent.size() > window) recent.pop_front();
}

double PoolTrend::mean() const {
    if (recent.empty()) return 0.0;
    double sum = 0;
    for (double m : recent) sum += m;
    return sum / static_cast<double>(recent.size());
}

ScaleDecision PoolTrend::decide(double spawn_above, double retire_below) const {
    if (recent.empty()) return ScaleDecision::Hold;
    double m = mean();
    if (m > spawn_above) return ScaleDecision::Spawn;
    if (m < retire_below) return ScaleDecision::Retire;
    return ScaleDecision::Hold;
}

}  // namespace hybridsim
