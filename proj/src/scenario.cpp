#include "hybridsim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hybridsim {

std::string to_string(SimMode m) {
    switch (m) {
        case SimMode::Full: return "full";
        case SimMode::MiningOnly: return "mining_only";
        case SimMode::Nakamoto: return "nakamoto";
    }
    return "full";
}

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::None: return "none";
        case Strategy::ByzantineVote: return "byzantine_vote";
        case Strategy::WithholdBlocks: return "withhold_blocks";
        case Strategy::Silent: return "silent";
        case Strategy::LeakAddresses: return "leak_addresses";
    }
    return "none";
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct Parser {
    const ScenarioConfig defaults;
    ScenarioConfig cfg;
    std::vector<std::string> warnings;
    std::optional<ConfigError> err;

    void fail(const std::string& field, const std::string& message) {
        if (!err) err = ConfigError{field, message};
    }

    bool parse_u64(const std::string& field, const std::string& v, uint64_t& out) {
        auto t = trim(v);
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
        if (ec != std::errc() || p != t.data() + t.size()) {
            fail(field, "expected unsigned integer, got '" + v + "'");
            return false;
        }
        return true;
    }

    bool parse_u32(const std::string& field, const std::string& v, uint32_t& out) {
        uint64_t wide = 0;
        if (!parse_u64(field, v, wide)) return false;
        if (wide > UINT32_MAX) {
            fail(field, "value out of range");
            return false;
        }
        out = static_cast<uint32_t>(wide);
        return true;
    }

    bool parse_i64(const std::string& field, const std::string& v, int64_t& out) {
        auto t = trim(v);
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
        if (ec != std::errc() || p != t.data() + t.size()) {
            fail(field, "expected integer, got '" + v + "'");
            return false;
        }
        return true;
    }

    bool parse_bool(const std::string& field, const std::string& v, bool& out) {
        auto t = trim(v);
        if (t == "true" || t == "1") { out = true; return true; }
        if (t == "false" || t == "0") { out = false; return true; }
        fail(field, "expected true/false, got '" + v + "'");
        return false;
    }

    bool parse_double(const std::string& field, const std::string& v, double& out) {
        auto t = trim(v);
        try {
            size_t pos = 0;
            out = std::stod(t, &pos);
            if (pos != t.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            fail(field, "expected number, got '" + v + "'");
            return false;
        }
        return true;
    }

    template <typename T, typename Fn>
    bool parse_list(const std::string& field, const std::string& v, std::vector<T>& out, Fn one) {
        out.clear();
        auto t = trim(v);
        if (t.empty()) return true;
        std::stringstream ss(t);
        std::string item;
        while (std::getline(ss, item, ',')) {
            T x{};
            if (!(this->*one)(field, item, x)) return false;
            out.push_back(x);
        }
        return true;
    }

    void handle(const std::string& section, const std::string& key, const std::string& value) {
        const std::string field = section + "." + key;
        auto unknown = [&] { fail(field, "unknown key"); };

        if (section == "run") {
            if (key == "seed") parse_u64(field, value, cfg.seed);
            else if (key == "ticks") parse_u64(field, value, cfg.ticks);
            else if (key == "label") cfg.label = trim(value);
            else if (key == "mode") {
                auto t = trim(value);
                if (t == "full") cfg.mode = SimMode::Full;
                else if (t == "mining_only") cfg.mode = SimMode::MiningOnly;
                else if (t == "nakamoto") cfg.mode = SimMode::Nakamoto;
                else fail(field, "expected full|mining_only|nakamoto, got '" + value + "'");
            } else unknown();
        } else if (section == "nodes") {
            if (key == "miners") parse_u32(field, value, cfg.miners);
            else if (key == "clients") parse_u32(field, value, cfg.clients);
            else if (key == "initial_balance") parse_u64(field, value, cfg.initial_balance);
            else if (key == "tx_interval") parse_u64(field, value, cfg.tx_interval);
            else if (key == "weights") parse_list(field, value, cfg.weights, &Parser::parse_u64);
            else unknown();
        } else if (section == "committee") {
            if (key == "csize") parse_u32(field, value, cfg.csize);
            else if (key == "gsize") parse_u32(field, value, cfg.gsize);
            else if (key == "nu") parse_u64(field, value, cfg.nu);
            else if (key == "window") parse_u32(field, value, cfg.window);
            else if (key == "timestamp_window") parse_i64(field, value, cfg.timestamp_window);
            else if (key == "term_ticks") parse_u64(field, value, cfg.term_ticks);
            else if (key == "round_ticks") parse_u64(field, value, cfg.round_ticks);
            else unknown();
        } else if (section == "snail") {
            if (key == "lambda") parse_u32(field, value, cfg.lambda);
            else if (key == "kappa") parse_u32(field, value, cfg.kappa);
            else if (key == "block_interval") parse_u64(field, value, cfg.block_interval);
            else if (key == "fruits_per_block") parse_u32(field, value, cfg.fruits_per_block);
            else if (key == "epoch_length") parse_u32(field, value, cfg.epoch_length);
            else if (key == "truehash_n") parse_u32(field, value, cfg.truehash_n);
            else unknown();
        } else if (section == "sharding") {
            if (key == "enabled") parse_bool(field, value, cfg.sharding_enabled);
            else if (key == "shards") parse_u32(field, value, cfg.shards);
            else if (key == "shard_size") parse_u32(field, value, cfg.shard_size);
            else if (key == "t_o") parse_u64(field, value, cfg.shard_t_o);
            else if (key == "batch_timeout") parse_u64(field, value, cfg.batch_timeout);
            else if (key == "txs_per_term") parse_u32(field, value, cfg.shard_txs_per_term);
            else unknown();
        } else if (section == "rewards") {
            if (key == "alpha") parse_u64(field, value, cfg.alpha);
            else if (key == "block_reward") parse_u64(field, value, cfg.block_reward);
            else if (key == "base_block_reward") parse_u64(field, value, cfg.base_block_reward);
            else if (key == "beta_num") parse_u64(field, value, cfg.beta_num);
            else if (key == "beta_den") parse_u64(field, value, cfg.beta_den);
            else if (key == "active_committees") parse_u32(field, value, cfg.active_committees);
            else unknown();
        } else if (section == "network") {
            if (key == "d_min") parse_u64(field, value, cfg.d_min);
            else if (key == "d_max") parse_u64(field, value, cfg.d_max);
            else if (key == "link") {
                std::vector<uint64_t> parts;
                if (parse_list(field, value, parts, &Parser::parse_u64)) {
                    if (parts.size() != 3) {
                        fail(field, "expected from,to,delay");
                    } else if (parts[0] > UINT32_MAX || parts[1] > UINT32_MAX) {
                        fail(field, "node id out of range");
                    } else {
                        cfg.links.push_back({static_cast<uint32_t>(parts[0]),
                                             static_cast<uint32_t>(parts[1]), parts[2]});
                    }
                }
            } else unknown();
        } else if (section == "adversary") {
            if (key == "strategy") {
                auto t = trim(value);
                if (t == "none") cfg.adversary.strategy = Strategy::None;
                else if (t == "byzantine_vote") cfg.adversary.strategy = Strategy::ByzantineVote;
                else if (t == "withhold_blocks") cfg.adversary.strategy = Strategy::WithholdBlocks;
                else if (t == "silent") cfg.adversary.strategy = Strategy::Silent;
                else if (t == "leak_addresses") cfg.adversary.strategy = Strategy::LeakAddresses;
                else fail(field, "unknown strategy '" + value + "'");
            } else if (key == "corrupted") {
                parse_list(field, value, cfg.adversary.corrupted, &Parser::parse_u32);
            } else if (key == "tau") {
                parse_u64(field, value, cfg.adversary.tau);
            } else if (key == "budget") {
                parse_double(field, value, cfg.adversary.budget);
            } else if (key == "ddos_duration") {
                parse_u64(field, value, cfg.adversary.ddos_duration);
            } else unknown();
        } else {
            fail(section.empty() ? key : section, "unknown section");
        }
    }

    void validate() {
        auto need = [&](bool okay, const std::string& field, const std::string& message) {
            if (!okay) fail(field, message);
        };

        need(cfg.ticks >= 1, "run.ticks", "must be at least 1");
        need(!cfg.label.empty(), "run.label", "must not be empty");

        need(cfg.miners >= 1, "nodes.miners", "must be at least 1");
        need(cfg.tx_interval >= 1, "nodes.tx_interval", "must be at least 1");
        if (!cfg.weights.empty()) {
            need(cfg.weights.size() == cfg.miners, "nodes.weights",
                 "must list one weight per miner");
            for (auto w : cfg.weights)
                need(w >= 1, "nodes.weights", "weights must be positive");
        }

        need(cfg.csize >= 1, "committee.csize", "must be at least 1");
        need(cfg.csize <= cfg.miners, "committee.csize", "cannot exceed the node count");
        need(cfg.gsize >= 1, "committee.gsize", "must be at least 1");
        need(cfg.gsize < cfg.csize, "committee.gsize",
             "must be smaller than the committee size");
        need(cfg.nu >= 1, "committee.nu", "must be at least 1");
        need(cfg.window >= 1, "committee.window", "must be at least 1");
        need(cfg.timestamp_window >= 1, "committee.timestamp_window", "must be at least 1");
        need(cfg.round_ticks >= 1, "committee.round_ticks", "must be at least 1");
        need(cfg.term_ticks >= cfg.round_ticks, "committee.term_ticks",
             "must cover at least one round");

        need(cfg.lambda >= 1, "snail.lambda", "must be at least 1");
        need(cfg.kappa >= 1, "snail.kappa", "must be at least 1");
        need(cfg.block_interval >= 1, "snail.block_interval", "must be at least 1");
        need(cfg.fruits_per_block >= 1, "snail.fruits_per_block", "must be at least 1");
        need(cfg.epoch_length >= 1, "snail.epoch_length", "must be at least 1");
        need(cfg.truehash_n >= 2, "snail.truehash_n", "must be at least 2");

        need(cfg.shards >= 1, "sharding.shards", "must be at least 1");
        need(cfg.shard_size >= 1, "sharding.shard_size", "must be at least 1");
        need(cfg.shard_t_o >= 1, "sharding.t_o", "must be at least 1");
        need(cfg.batch_timeout >= 1, "sharding.batch_timeout", "must be at least 1");

        need(cfg.alpha > 1, "rewards.alpha", "must be greater than 1");
        need(cfg.beta_den >= 1, "rewards.beta_den", "must be at least 1");
        need(cfg.beta_num <= cfg.beta_den, "rewards.beta_num",
             "fraction must not exceed 1");
        need(cfg.active_committees >= 1, "rewards.active_committees", "must be at least 1");

        need(cfg.d_min >= 1, "network.d_min", "must be at least 1");
        need(cfg.d_min <= cfg.d_max, "network.d_max", "must be at least d_min");
        for (const auto& l : cfg.links) {
            need(l.from < cfg.miners && l.to < cfg.miners, "network.link",
                 "node id out of range");
            need(l.delay >= 1, "network.link", "delay must be at least 1");
        }

        auto& adv = cfg.adversary;
        need(adv.budget >= 0.0 && adv.budget <= 1.0, "adversary.budget",
             "must be a fraction in [0, 1]");
        {
            std::vector<uint32_t> sorted = adv.corrupted;
            std::sort(sorted.begin(), sorted.end());
            for (size_t i = 0; i < sorted.size(); ++i) {
                need(sorted[i] < cfg.miners, "adversary.corrupted", "node id out of range");
                if (i > 0)
                    need(sorted[i] != sorted[i - 1], "adversary.corrupted",
                         "duplicate node id");
            }
        }
        if (adv.tau == 0) {
            adv.tau = 1;
            warnings.push_back(
                "adversary.tau: corruption cannot take effect at election time; "
                "clamped to 1 tick after");
        }
        if (adv.strategy != Strategy::None && !adv.corrupted.empty()) {
            const auto allowed =
                static_cast<uint64_t>(std::ceil(adv.budget * static_cast<double>(cfg.csize)));
            need(adv.corrupted.size() <= allowed, "adversary.corrupted",
                 "BudgetExceeded: plan corrupts " + std::to_string(adv.corrupted.size()) +
                     " nodes but the budget allows at most " + std::to_string(allowed));
        }
        if (cfg.round_ticks < 2 * cfg.d_max + 1 && cfg.mode == SimMode::Full) {
            warnings.push_back(
                "committee.round_ticks: shorter than a propose/vote round trip at d_max; "
                "rounds may straddle and liveness will reflect it");
        }
        if (adv.strategy == Strategy::LeakAddresses &&
            cfg.timestamp_window <
                static_cast<int64_t>(adv.ddos_duration + 2 * cfg.d_max + cfg.round_ticks)) {
            warnings.push_back(
                "committee.timestamp_window: shorter than the denial-of-service outage; "
                "transactions queued across the outage may age past the guard");
        }
    }
};

}  // namespace

Result<LoadedScenario, ConfigError> parse_scenario(const std::string& text) {
    Parser p;
    std::string section;
    std::stringstream ss(text);
    std::string raw;
    size_t lineno = 0;
    while (std::getline(ss, raw)) {
        ++lineno;
        auto line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                return ConfigError{"line " + std::to_string(lineno), "malformed section header"};
            section = trim(line.substr(1, line.size() - 2));
            if (section != "run" && section != "nodes" && section != "committee" &&
                section != "snail" && section != "sharding" && section != "rewards" &&
                section != "network" && section != "adversary")
                return ConfigError{section, "unknown section"};
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            return ConfigError{"line " + std::to_string(lineno), "expected key = value"};
        auto key = trim(line.substr(0, eq));
        auto value = line.substr(eq + 1);
        if (key.empty())
            return ConfigError{"line " + std::to_string(lineno), "empty key"};
        if (section.empty())
            return ConfigError{key, "key outside any section"};
        p.handle(section, key, value);
        if (p.err) return *p.err;
    }
    p.validate();
    if (p.err) return *p.err;
    return LoadedScenario{p.cfg, p.warnings};
}

Result<LoadedScenario, ConfigError> load_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return ConfigError{"file", "cannot open '" + path + "'"};
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string serialize_scenario(const ScenarioConfig& cfg) {
    std::ostringstream out;
    auto list = [](const auto& v) {
        std::ostringstream s;
        for (size_t i = 0; i < v.size(); ++i) {
            if (i) s << ",";
            s << v[i];
        }
        return s.str();
    };

    out << "[run]\n";
    out << "seed = " << cfg.seed << "\n";
    out << "ticks = " << cfg.ticks << "\n";
    out << "label = " << cfg.label << "\n";
    out << "mode = " << to_string(cfg.mode) << "\n";

    out << "\n[nodes]\n";
    out << "miners = " << cfg.miners << "\n";
    out << "clients = " << cfg.clients << "\n";
    out << "initial_balance = " << cfg.initial_balance << "\n";
    out << "tx_interval = " << cfg.tx_interval << "\n";
    if (!cfg.weights.empty()) out << "weights = " << list(cfg.weights) << "\n";

    out << "\n[committee]\n";
    out << "csize = " << cfg.csize << "\n";
    out << "gsize = " << cfg.gsize << "\n";
    out << "nu = " << cfg.nu << "\n";
    out << "window = " << cfg.window << "\n";
    out << "timestamp_window = " << cfg.timestamp_window << "\n";
    out << "term_ticks = " << cfg.term_ticks << "\n";
    out << "round_ticks = " << cfg.round_ticks << "\n";

    out << "\n[snail]\n";
    out << "lambda = " << cfg.lambda << "\n";
    out << "kappa = " << cfg.kappa << "\n";
    out << "block_interval = " << cfg.block_interval << "\n";
    out << "fruits_per_block = " << cfg.fruits_per_block << "\n";
    out << "epoch_length = " << cfg.epoch_length << "\n";
    out << "truehash_n = " << cfg.truehash_n << "\n";

    out << "\n[sharding]\n";
    out << "enabled = " << (cfg.sharding_enabled ? "true" : "false") << "\n";
    out << "shards = " << cfg.shards << "\n";
    out << "shard_size = " << cfg.shard_size << "\n";
    out << "t_o = " << cfg.shard_t_o << "\n";
    out << "batch_timeout = " << cfg.batch_timeout << "\n";
    out << "txs_per_term = " << cfg.shard_txs_per_term << "\n";

    out << "\n[rewards]\n";
    out << "alpha = " << cfg.alpha << "\n";
    out << "block_reward = " << cfg.block_reward << "\n";
    out << "base_block_reward = " << cfg.base_block_reward << "\n";
    out << "beta_num = " << cfg.beta_num << "\n";
    out << "beta_den = " << cfg.beta_den << "\n";
    out << "active_committees = " << cfg.active_committees << "\n";

    out << "\n[network]\n";
    out << "d_min = " << cfg.d_min << "\n";
    out << "d_max = " << cfg.d_max << "\n";
    for (const auto& l : cfg.links)
        out << "link = " << l.from << "," << l.to << "," << l.delay << "\n";

    out << "\n[adversary]\n";
    out << "strategy = " << to_string(cfg.adversary.strategy) << "\n";
    if (!cfg.adversary.corrupted.empty())
        out << "corrupted = " << list(cfg.adversary.corrupted) << "\n";
    out << "tau = " << cfg.adversary.tau << "\n";
    {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", cfg.adversary.budget);
        out << "budget = " << buf << "\n";
    }
    out << "ddos_duration = " << cfg.adversary.ddos_duration << "\n";
    return out.str();
}

}  // namespace hybridsim
