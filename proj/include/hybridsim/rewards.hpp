#pragma once

#include <deque>
#include <map>
#include <vector>

#include "hybridsim/types.hpp"
#include "hybridsim/util.hpp"

namespace hybridsim {

enum class RewardError { InvalidAlpha };
std::string to_string(RewardError e);

// Split of one minted reward between the committee side and the mining side:
// the committee share grows with the number of active committees n as
// n/(alpha+n); division remainders stay on the mining side.
struct RewardSplit {
    Amount bft = 0;
    Amount pow = 0;
};
Result<RewardSplit, RewardError> reward_split(uint64_t n, uint64_t alpha, Amount total);

// Carve-up of one snail block's reward: the block miner keeps the base plus
// a beta cut of the fruit pool and every integer remainder; the rest of the
// pool splits equally per fruit. Payouts always sum to `reward` exactly.
struct BlockRewardParams {
    Amount base_block_reward = 0;  // taken off the top for the block miner
    uint32_t beta_num = 1;         // miner's cut of the fruit pool
    uint32_t beta_den = 10;
};
std::map<NodeId, Amount> distribute_block_reward(const SnailBlock& block, Amount reward,
                                                 const BlockRewardParams& params = {});

// Per-member gas spending for one committee period.
struct GasPool {
    uint64_t committee_id = 0;
    std::map<NodeId, Amount> contributions;

    Amount total() const;
    double mu() const;  // average cost per gas, for display and trend tracking
};

struct GasTransfer {
    NodeId from = 0;
    NodeId to = 0;
    Amount amount = 0;
};

// Equalization: members below the average pay members above it, matched
// greedily largest debt to largest credit; afterwards everyone's effective
// spend equals the integer-equalized target, and members receive the pool
// principal back in equal shares. Everything sums exactly.
struct GasSettlement {
    std::vector<GasTransfer> transfers;
    std::map<NodeId, Amount> principal_shares;
};
GasSettlement settle_gas_pool(const GasPool& pool);

// Exact integer equal split of `total` over the ids: floor share each, the
// remainder spread one token apiece to the lowest ids.
std::map<NodeId, Amount> equal_split(Amount total, const std::vector<NodeId>& ids);

// Windowed mean of settled gas averages, driving committee scaling.
enum class ScaleDecision { Hold, Spawn, Retire };

struct PoolTrend {
    uint32_t window = 8;
    std::deque<double> recent;

    void push(double mu);
    double mean() const;
    ScaleDecision decide(double spawn_above, double retire_below) const;
};

}  // namespace hybridsim
