#include "hybridsim/world_state.hpp"

#include "hybridsim/merkle.hpp"

namespace hybridsim {

const char* to_string(TxError e) {
    switch (e) {
        case TxError::BadNonce: return "BadNonce";
        case TxError::InsufficientBalance: return "InsufficientBalance";
        case TxError::UnknownSender: return "UnknownSender";
    }
    return "?";
}

WorldState::WorldState(std::map<Address, AccountState> accounts)
    : accounts_(std::move(accounts)) {
    recompute_root();
}

void WorldState::recompute_root() {
    // std::map iterates in address order, so the leaf list is canonical.
    std::vector<Bytes> leaves;
    leaves.reserve(accounts_.size());
    for (const auto& [addr, acct] : accounts_) {
        Encoder e;
        e.u64(addr);
        acct.encode(e);
        leaves.push_back(e.out());
    }
    root_ = merkle_root(leaves);
}

const AccountState* WorldState::find(Address a) const {
    auto it = accounts_.find(a);
    return it == accounts_.end() ? nullptr : &it->second;
}

Amount WorldState::total_balance() const {
    Amount t = 0;
    for (const auto& [_, acct] : accounts_) t += acct.balance;
    return t;
}

Result<WorldState, TxError> WorldState::apply_transaction(const Transaction& tx) const {
    auto sit = accounts_.find(tx.sender);
    if (sit == accounts_.end()) return TxError::UnknownSender;
    if (sit->second.nonce != tx.account_nonce) return TxError::BadNonce;
    Amount cost = tx.payload + fee_of(tx);
    if (sit->second.balance < cost) return TxError::InsufficientBalance;

    std::map<Address, AccountState> next = accounts_;
    next[tx.sender].balance -= cost;
    next[tx.sender].nonce += 1;
    next[tx.recipient].balance += tx.payload;  // creates the account if absent
    return WorldState(std::move(next));
}

WorldState WorldState::credit(Address a, Amount amount) const {
    std::map<Address, AccountState> next = accounts_;
    next[a].balance += amount;
    return WorldState(std::move(next));
}

}  // namespace hybridsim
