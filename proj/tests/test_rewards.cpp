#include "doctest.h"
#include "hybridsim/rewards.hpp"
#include "hybridsim/rng.hpp"

using namespace hybridsim;

namespace {

SnailBlock block_with(NodeId miner, const std::vector<NodeId>& fruit_miners) {
    SnailBlock b;
    b.header.miner = miner;
    Serial s = 1;
    for (NodeId m : fruit_miners) {
        Fruit f;
        f.header.miner = m;
        f.header.fast_number = s++;
        b.fruits.push_back(f);
    }
    return b;
}

Amount sum_payouts(const std::map<NodeId, Amount>& payouts) {
    Amount t = 0;
    for (const auto& [id, a] : payouts) t += a;
    return t;
}

}  // namespace

TEST_CASE("reward split follows n over alpha plus n") {
    SUBCASE("n equal to alpha is an exact fifty-fifty") {
        auto s = reward_split(4, 4, 1000);
        REQUIRE(s.ok());
        CHECK(s.value().bft == 500);
        CHECK(s.value().pow == 500);
    }
    SUBCASE("no committees means mining gets everything") {
        auto s = reward_split(0, 4, 777);
        REQUIRE(s.ok());
        CHECK(s.value().bft == 0);
        CHECK(s.value().pow == 777);
    }
    SUBCASE("two committees at alpha four on 600") {
        auto s = reward_split(2, 4, 600);
        REQUIRE(s.ok());
        CHECK(s.value().bft == 200);
        CHECK(s.value().pow == 400);
    }
    SUBCASE("alpha at or below one is invalid") {
        CHECK(reward_split(2, 1, 600).error() == RewardError::InvalidAlpha);
        CHECK(reward_split(2, 0, 600).error() == RewardError::InvalidAlpha);
    }
    SUBCASE("integer remainders stay on the mining side") {
        auto s = reward_split(1, 2, 100);  // 100/3 = 33.33
        REQUIRE(s.ok());
        CHECK(s.value().bft == 33);
        CHECK(s.value().pow == 67);
        CHECK(s.value().bft + s.value().pow == 100);
    }
}

TEST_CASE("committee share grows strictly with the committee count") {
    const Amount total = 1'000'000'000'000;
    Amount prev = 0;
    for (uint64_t n = 0; n <= 50; ++n) {
        auto s = reward_split(n, 4, total);
        REQUIRE(s.ok());
        CHECK(s.value().bft + s.value().pow == total);
        if (n > 0) CHECK(s.value().bft > prev);
        prev = s.value().bft;
    }
}

TEST_CASE("reward split conserves for random inputs") {
    DetRng rng(55);
    for (int i = 0; i < 500; ++i) {
        uint64_t n = rng.below(40);
        uint64_t alpha = 2 + rng.below(20);
        Amount total = rng.below(1'000'000'000);
        auto s = reward_split(n, alpha, total);
        REQUIRE(s.ok());
        CHECK(s.value().bft + s.value().pow == total);
    }
}

TEST_CASE("a fruitless block pays its miner in full") {
    auto payouts = distribute_block_reward(block_with(9, {}), 12345);
    REQUIRE(payouts.size() == 1);
    CHECK(payouts.at(9) == 12345);
}

TEST_CASE("a sole miner of block and fruits collects the full reward") {
    auto payouts = distribute_block_reward(block_with(9, std::vector<NodeId>(10, 9)), 1000);
    REQUIRE(payouts.size() == 1);
    CHECK(payouts.at(9) == 1000);
}

TEST_CASE("the fruit pool splits per fruit after the miner's cut") {
    // reward 1000, base 100 -> pool 900; beta cut 90; 810 over 4 fruits
    // -> 202 each, remainder 2 back to the block miner
    BlockRewardParams params;
    params.base_block_reward = 100;
    auto payouts = distribute_block_reward(block_with(9, {1, 1, 2, 3}), 1000, params);
    CHECK(payouts.at(9) == 100 + 90 + 2);
    CHECK(payouts.at(1) == 404);
    CHECK(payouts.at(2) == 202);
    CHECK(payouts.at(3) == 202);
    CHECK(sum_payouts(payouts) == 1000);
}

TEST_CASE("block payouts conserve exactly over exhaustive small cases") {
    for (Amount reward = 0; reward <= 120; ++reward)
        for (int fruits = 0; fruits <= 5; ++fruits) {
            std::vector<NodeId> miners;
            for (int i = 0; i < fruits; ++i) miners.push_back(1 + (i % 3));
            BlockRewardParams params;
            params.base_block_reward = reward / 7;
            auto payouts = distribute_block_reward(block_with(42, miners), reward, params);
            CHECK(sum_payouts(payouts) == reward);
        }
}

TEST_CASE("block payouts conserve for random large cases") {
    DetRng rng(66);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<NodeId> miners;
        size_t n = rng.below(60);
        for (size_t i = 0; i < n; ++i) miners.push_back(1 + rng.below(8));
        BlockRewardParams params;
        params.base_block_reward = rng.below(1000);
        params.beta_num = 1 + rng.below(3);
        params.beta_den = 10;
        Amount reward = rng.below(1'000'000'000);
        auto payouts = distribute_block_reward(block_with(99, miners), reward, params);
        CHECK(sum_payouts(payouts) == reward);
    }
}

TEST_CASE("equal split spreads remainders to the lowest ids") {
    auto shares = equal_split(10, {5, 2, 9});
    CHECK(shares.at(2) == 4);
    CHECK(shares.at(5) == 3);
    CHECK(shares.at(9) == 3);
    CHECK(equal_split(0, {1, 2}).at(1) == 0);
    CHECK(equal_split(7, {}).empty());
}

TEST_CASE("gas pool settles the worked arithmetic example") {
    GasPool pool;
    pool.contributions = {{1, 3}, {2, 5}};
    CHECK(pool.mu() == doctest::Approx(4.0));
    auto s = settle_gas_pool(pool);
    REQUIRE(s.transfers.size() == 1);
    CHECK(s.transfers[0].from == 1);
    CHECK(s.transfers[0].to == 2);
    CHECK(s.transfers[0].amount == 1);
}

TEST_CASE("equal contributions settle with no transfers") {
    GasPool pool;
    pool.contributions = {{1, 7}, {2, 7}, {3, 7}};
    CHECK(settle_gas_pool(pool).transfers.empty());
}

TEST_CASE("greedy matching pairs the largest debt with the largest credit") {
    GasPool pool;
    pool.contributions = {{1, 0}, {2, 1}, {3, 5}, {4, 6}};  // targets 3,3,3,3
    auto s = settle_gas_pool(pool);
    REQUIRE(s.transfers.size() == 2);
    CHECK(s.transfers[0].from == 1);
    CHECK(s.transfers[0].to == 4);
    CHECK(s.transfers[0].amount == 3);
    CHECK(s.transfers[1].from == 2);
    CHECK(s.transfers[1].to == 3);
    CHECK(s.transfers[1].amount == 2);
}

TEST_CASE("random pools settle to zero net flow and full equalization") {
    DetRng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        GasPool pool;
        size_t members = 1 + rng.below(20);
        for (size_t i = 0; i < members; ++i) pool.contributions[NodeId(i + 1)] = rng.below(50);
        auto s = settle_gas_pool(pool);

        std::map<NodeId, int64_t> effective;
        int64_t before = 0, after = 0;
        for (const auto& [id, c] : pool.contributions) {
            effective[id] = int64_t(c);
            before += int64_t(c);
        }
        for (const auto& t : s.transfers) {
            effective[t.from] += int64_t(t.amount);  // payer's spend rises
            effective[t.to] -= int64_t(t.amount);    // receiver is reimbursed
        }
        for (const auto& [id, eff] : effective) after += eff;
        CHECK(after == before);  // transfers only move cost, never create it

        auto targets = equal_split(pool.total(), [&] {
            std::vector<NodeId> ids;
            for (const auto& [id, c] : pool.contributions) ids.push_back(id);
            return ids;
        }());
        for (const auto& [id, eff] : effective) CHECK(eff == int64_t(targets.at(id)));

        Amount principal = 0;
        for (const auto& [id, share] : s.principal_shares) principal += share;
        CHECK(principal == pool.total());
    }
}

TEST_CASE("pool trend window drives scaling decisions") {
    PoolTrend trend;
    trend.window = 3;
    CHECK(trend.decide(10.0, 2.0) == ScaleDecision::Hold);  // empty history
    trend.push(12.0);
    CHECK(trend.mean() == doctest::Approx(12.0));
    CHECK(trend.decide(10.0, 2.0) == ScaleDecision::Spawn);
    trend.push(1.0);
    trend.push(1.0);
    trend.push(1.0);  // evicts the 12
    CHECK(trend.mean() == doctest::Approx(1.0));
    CHECK(trend.decide(10.0, 2.0) == ScaleDecision::Retire);
    trend.push(5.0);
    CHECK(trend.decide(10.0, 2.0) == ScaleDecision::Hold);
}
