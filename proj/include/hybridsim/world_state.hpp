#pragma once

#include <map>

#include "hybridsim/types.hpp"
#include "hybridsim/util.hpp"

namespace hybridsim {

enum class TxError { BadNonce, InsufficientBalance, UnknownSender };
const char* to_string(TxError e);

// Immutable account snapshot. The root is a pure function of the account
// mapping, so equal mappings always yield equal roots, and a StateStore can
// re-materialize any retained snapshot by root.
class WorldState {
public:
    WorldState() = default;
    explicit WorldState(std::map<Address, AccountState> accounts);

    const std::map<Address, AccountState>& accounts() const { return accounts_; }
    const Digest256& root() const { return root_; }

    const AccountState* find(Address a) const;
    Amount total_balance() const;

    // Returns the post-state. Sender pays payload + gas; recipient receives
    // payload; the fee difference is settled by the block-level application
    // (see apply_block in the committee logic), not here.
    Result<WorldState, TxError> apply_transaction(const Transaction& tx) const;

    // Flat per-transfer gas; execution beyond transfers is out of scope.
    static constexpr Amount kGasPerTransfer = 1;
    static Amount fee_of(const Transaction& tx) { return kGasPerTransfer * tx.gas_price; }

    WorldState credit(Address a, Amount amount) const;  // mintless add, creates account

private:
    void recompute_root();
    std::map<Address, AccountState> accounts_;
    Digest256 root_;
};

// Archive of retained snapshots keyed by root.
class StateStore {
public:
    void put(const WorldState& s) { by_root_[s.root()] = s; }
    const WorldState* get(const Digest256& root) const {
        auto it = by_root_.find(root);
        return it == by_root_.end() ? nullptr : &it->second;
    }
    size_t size() const { return by_root_.size(); }

private:
    std::map<Digest256, WorldState> by_root_;
};

}  // namespace hybridsim
