#include "hybridsim/types.hpp"

#include "hybridsim/merkle.hpp"

namespace hybridsim {

void Transaction::encode_body(Encoder& e) const {
    e.u64(sender);
    e.u64(account_nonce);
    e.u64(gas_price);
    e.u64(gas_limit);
    e.u64(recipient);
    e.u64(payload);
    e.bytes(code);
    e.bytes(data);
    e.i64(physical_timestamp);
    e.u64(sequence_number);
}

void Transaction::encode(Encoder& e) const {
    encode_body(e);
    e.u64(sig.signer);
    e.dig(sig.payload);
}

std::optional<Transaction> Transaction::decode(Decoder& d) {
    Transaction t;
    auto sender = d.u64(), nonce = d.u64(), gp = d.u64(), gl = d.u64(), rcpt = d.u64(),
         pay = d.u64();
    auto code = d.bytes(), data = d.bytes();
    auto tp = d.i64();
    auto seq = d.u64(), signer = d.u64();
    auto sig_payload = d.dig();
    if (!sender || !nonce || !gp || !gl || !rcpt || !pay || !code || !data || !tp || !seq ||
        !signer || !sig_payload)
        return std::nullopt;
    t.sender = *sender;
    t.account_nonce = *nonce;
    t.gas_price = *gp;
    t.gas_limit = *gl;
    t.recipient = *rcpt;
    t.payload = *pay;
    t.code = std::move(*code);
    t.data = std::move(*data);
    t.physical_timestamp = *tp;
    t.sequence_number = *seq;
    t.sig = {*signer, *sig_payload};
    return t;
}

Digest256 Transaction::body_digest() const {
    Encoder e;
    encode_body(e);
    return e.hash();
}

Digest256 Transaction::id() const {
    Encoder e;
    encode(e);
    return e.hash();
}

void AccountState::encode(Encoder& e) const {
    e.u64(nonce);
    e.u64(balance);
    e.dig(code_hash);
    e.dig(storage_root);
}

void FastBlock::encode(Encoder& e) const {
    e.dig(parent_hash);
    e.dig(state_root);
    e.dig(transactions_root);
    e.dig(receipt_hash);
    e.dig(bloom);
    e.dig(snail_hash);
    e.u64(snail_number);
    e.u32(proposer);
    e.u64(number);
    e.u64(gas_limit);
    e.u64(gas_used);
    e.u64(time);
    e.bytes(extra);
    e.seq(transactions, [](Encoder& ee, const Transaction& t) { t.encode(ee); });
}

std::optional<FastBlock> FastBlock::decode(Decoder& d) {
    FastBlock b;
    auto ph = d.dig(), sr = d.dig(), tr = d.dig(), rh = d.dig(), bl = d.dig(), sh = d.dig();
    auto sn = d.u64();
    auto prop = d.u32();
    auto num = d.u64(), gl = d.u64(), gu = d.u64(), time = d.u64();
    auto extra = d.bytes();
    auto txs = d.seq<Transaction>([](Decoder& dd) { return Transaction::decode(dd); });
    if (!ph || !sr || !tr || !rh || !bl || !sh || !sn || !prop || !num || !gl || !gu || !time ||
        !extra || !txs)
        return std::nullopt;
    b.parent_hash = *ph;
    b.state_root = *sr;
    b.transactions_root = *tr;
    b.receipt_hash = *rh;
    b.bloom = *bl;
    b.snail_hash = *sh;
    b.snail_number = *sn;
    b.proposer = *prop;
    b.number = *num;
    b.gas_limit = *gl;
    b.gas_used = *gu;
    b.time = *time;
    b.extra = std::move(*extra);
    b.transactions = std::move(*txs);
    return b;
}

Digest256 FastBlock::digest() const {
    Encoder e;
    encode(e);
    return e.hash();
}

void MiningHeader::encode(Encoder& e) const {
    e.dig(parent_hash);
    e.dig(pointer_hash);
    e.u64(pointer_number);
    e.dig(fruitset_digest);
    e.dig(fast_hash);
    e.u64(fast_number);
    e.u32(miner);
    e.u64(nonce);
}

Bytes MiningHeader::encoded() const {
    Encoder e;
    encode(e);
    return e.out();
}

void Fruit::encode(Encoder& e) const {
    header.encode(e);
    e.u64(fruit_difficulty);
    e.dig(hash);
}

std::optional<Fruit> Fruit::decode(Decoder& d) {
    Fruit f;
    auto ph = d.dig(), pth = d.dig();
    auto ptn = d.u64();
    auto fsd = d.dig(), fh = d.dig();
    auto fn = d.u64();
    auto miner = d.u32();
    auto nonce = d.u64(), fd = d.u64();
    auto h = d.dig();
    if (!ph || !pth || !ptn || !fsd || !fh || !fn || !miner || !nonce || !fd || !h)
        return std::nullopt;
    f.header = {*ph, *pth, *ptn, *fsd, *fh, *fn, *miner, *nonce};
    f.fruit_difficulty = *fd;
    f.hash = *h;
    return f;
}

Digest256 Fruit::id() const {
    Encoder e;
    encode(e);
    return e.hash();
}

void SnailBlock::encode(Encoder& e) const {
    header.encode(e);
    e.u64(number);
    e.u64(difficulty);
    e.u64(fruit_difficulty);
    e.dig(sign_hash);
    e.dig(mix_digest);
    e.boolean(to_elect);
    e.u64(time);
    e.seq(fruits, [](Encoder& ee, const Fruit& f) { f.encode(ee); });
    e.dig(hash);
}

std::optional<SnailBlock> SnailBlock::decode(Decoder& d) {
    SnailBlock b;
    auto ph = d.dig(), pth = d.dig();
    auto ptn = d.u64();
    auto fsd = d.dig(), fh = d.dig();
    auto fn = d.u64();
    auto miner = d.u32();
    auto nonce = d.u64();
    auto num = d.u64(), diff = d.u64(), fdiff = d.u64();
    auto sh = d.dig(), mix = d.dig();
    auto elect = d.boolean();
    auto time = d.u64();
    auto fruits = d.seq<Fruit>([](Decoder& dd) { return Fruit::decode(dd); });
    auto hash = d.dig();
    if (!ph || !pth || !ptn || !fsd || !fh || !fn || !miner || !nonce || !num || !diff ||
        !fdiff || !sh || !mix || !elect || !time || !fruits || !hash)
        return std::nullopt;
    b.header = {*ph, *pth, *ptn, *fsd, *fh, *fn, *miner, *nonce};
    b.number = *num;
    b.difficulty = *diff;
    b.fruit_difficulty = *fdiff;
    b.sign_hash = *sh;
    b.mix_digest = *mix;
    b.to_elect = *elect;
    b.time = *time;
    b.fruits = std::move(*fruits);
    b.hash = *hash;
    return b;
}

}  // namespace hybridsim
