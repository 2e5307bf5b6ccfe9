#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hybridsim/digest.hpp"
#include "hybridsim/encoding.hpp"

namespace hybridsim {

using NodeId = uint32_t;
using Address = uint64_t;
using Amount = uint64_t;
using Tick = uint64_t;
using Serial = uint64_t;

// Signature stand-in: a verifiable (signer, payload digest) tag. No real
// crypto anywhere in the simulator; the tag is checkable and forgeable only
// by construction, which is all the protocol logic needs.
struct SigTag {
    uint64_t signer = 0;
    Digest256 payload;

    auto operator<=>(const SigTag&) const = default;
    static SigTag sign(uint64_t signer, const Digest256& payload) { return {signer, payload}; }
    bool verify(uint64_t expected_signer, const Digest256& expected_payload) const {
        return signer == expected_signer && payload == expected_payload;
    }
};

struct Transaction {
    Address sender = 0;
    uint64_t account_nonce = 0;
    Amount gas_price = 0;
    Amount gas_limit = 0;
    Address recipient = 0;
    Amount payload = 0;       // token amount transferred
    Bytes code;               // carried, not executed
    Bytes data;               // carried, not executed
    int64_t physical_timestamp = 0;  // T_p, creator's clock
    uint64_t sequence_number = 0;    // creation order tie-break
    SigTag sig;

    void encode_body(Encoder& e) const;  // everything but sig
    void encode(Encoder& e) const;
    static std::optional<Transaction> decode(Decoder& d);

    Digest256 body_digest() const;
    Digest256 id() const;  // digest over the full encoding
    bool sig_ok() const { return sig.verify(sender, body_digest()); }
};

struct AccountState {
    uint64_t nonce = 0;
    Amount balance = 0;
    Digest256 code_hash;
    Digest256 storage_root;

    auto operator<=>(const AccountState&) const = default;
    void encode(Encoder& e) const;
};

struct FastBlock {
    Digest256 parent_hash;
    Digest256 state_root;
    Digest256 transactions_root;
    Digest256 receipt_hash;  // carried
    Digest256 bloom;         // carried
    Digest256 snail_hash;    // snail block whose reward this block pays
    uint64_t snail_number = 0;
    NodeId proposer = 0;
    uint64_t number = 0;
    Amount gas_limit = 0;
    Amount gas_used = 0;
    Tick time = 0;
    Bytes extra;
    std::vector<Transaction> transactions;

    // Height and serial are the same number; serial() is the name the PoW
    // side uses for it.
    Serial serial() const { return number; }

    void encode(Encoder& e) const;
    static std::optional<FastBlock> decode(Decoder& d);
    Digest256 digest() const;
};

// Header fields a single mining draw commits to; shared verbatim between a
// fruit and a snail block so one draw can yield either or both.
struct MiningHeader {
    Digest256 parent_hash;     // tip at draw time; doubles as fruit recency anchor
    Digest256 pointer_hash;    // block kappa back, carried into the block header
    uint64_t pointer_number = 0;
    Digest256 fruitset_digest;  // merkle root of the candidate fruitset
    Digest256 fast_hash;        // fastchain message: block digest
    Serial fast_number = 0;     // fastchain message: serial
    NodeId miner = 0;
    uint64_t nonce = 0;

    auto operator<=>(const MiningHeader&) const = default;
    void encode(Encoder& e) const;
    Bytes encoded() const;
};

struct Fruit {
    MiningHeader header;
    uint64_t fruit_difficulty = 0;  // suffix threshold it was mined under
    Digest256 hash;                 // mining hash over header

    Serial serial() const { return header.fast_number; }
    const Digest256& anchor() const { return header.parent_hash; }

    auto operator<=>(const Fruit&) const = default;
    void encode(Encoder& e) const;
    static std::optional<Fruit> decode(Decoder& d);
    Digest256 id() const;
};

struct SnailBlock {
    MiningHeader header;
    uint64_t number = 0;
    uint64_t difficulty = 0;        // prefix threshold
    uint64_t fruit_difficulty = 0;  // suffix threshold in force
    Digest256 sign_hash;            // digest of the committee vote tags, carried
    Digest256 mix_digest;           // digest of the referenced fast block
    bool to_elect = false;
    Tick time = 0;
    std::vector<Fruit> fruits;
    Digest256 hash;  // mining hash over header (genesis: digest of encoding)

    void encode(Encoder& e) const;
    static std::optional<SnailBlock> decode(Decoder& d);

    NodeId miner() const { return header.miner; }
};

}  // namespace hybridsim
