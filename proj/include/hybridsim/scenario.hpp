#pragma once

#include <map>
#include <string>
#include <vector>

#include "hybridsim/types.hpp"
#include "hybridsim/util.hpp"

namespace hybridsim {

enum class SimMode { Full, MiningOnly, Nakamoto };
enum class Strategy { None, ByzantineVote, WithholdBlocks, Silent, LeakAddresses };

std::string to_string(SimMode m);
std::string to_string(Strategy s);

struct LinkOverride {
    uint32_t from = 0;
    uint32_t to = 0;
    Tick delay = 0;
    auto operator<=>(const LinkOverride&) const = default;
};

struct AdversaryPlan {
    Strategy strategy = Strategy::None;
    std::vector<uint32_t> corrupted;  // node ids
    Tick tau = 1;                     // effect delay after election; never 0
    double budget = 1.0;              // max corrupted fraction of the committee
    Tick ddos_duration = 50;
    auto operator<=>(const AdversaryPlan&) const = default;
};

// Everything a run needs, grouped the way the scenario file sections are.
struct ScenarioConfig {
    // [run]
    uint64_t seed = 1;
    Tick ticks = 4000;
    std::string label = "scenario";
    SimMode mode = SimMode::Full;

    // [nodes]
    uint32_t miners = 35;
    uint32_t clients = 8;
    Amount initial_balance = 1'000'000;
    Tick tx_interval = 5;                // one client transaction every N ticks
    std::vector<uint64_t> weights;       // hash weights; empty = all 1

    // [committee]
    uint32_t csize = 31;
    uint32_t gsize = 4;
    uint64_t nu = 5;
    uint32_t window = 144;
    int64_t timestamp_window = 30;
    Tick term_ticks = 2000;
    Tick round_ticks = 8;

    // [snail]
    uint32_t lambda = 17;
    uint32_t kappa = 17;
    Tick block_interval = 60;
    uint32_t fruits_per_block = 10;
    uint32_t epoch_length = 10;
    uint32_t truehash_n = 16;

    // [sharding]
    bool sharding_enabled = false;
    uint32_t shards = 2;
    uint32_t shard_size = 4;
    Tick shard_t_o = 10;
    Tick batch_timeout = 50;
    uint32_t shard_txs_per_term = 12;

    // [rewards]
    uint64_t alpha = 4;
    Amount block_reward = 1000;
    Amount base_block_reward = 100;
    uint64_t beta_num = 1;
    uint64_t beta_den = 10;
    uint32_t active_committees = 1;

    // [network]
    Tick d_min = 1;
    Tick d_max = 3;
    std::vector<LinkOverride> links;

    // [adversary]
    AdversaryPlan adversary;

    auto operator<=>(const ScenarioConfig&) const = default;
};

struct ConfigError {
    std::string field;  // section.key
    std::string message;
};

struct LoadedScenario {
    ScenarioConfig config;
    std::vector<std::string> warnings;
};

// Structured-text scenario format: [section] headers, key = value lines,
// '#' or ';' comments, repeated `link = from,to,delay` lines accumulate.
// Unknown sections or keys are field-level errors, as are all module
// parameter violations.
Result<LoadedScenario, ConfigError> parse_scenario(const std::string& text);
Result<LoadedScenario, ConfigError> load_scenario_file(const std::string& path);
std::string serialize_scenario(const ScenarioConfig& cfg);

}  // namespace hybridsim
