#include "hybridsim/encoding.hpp"

#include <cstring>

namespace hybridsim {

void Encoder::field(const Bytes& payload) {
    uint32_t len = static_cast<uint32_t>(payload.size());
    out_.push_back(static_cast<uint8_t>(len >> 24));
    out_.push_back(static_cast<uint8_t>(len >> 16));
    out_.push_back(static_cast<uint8_t>(len >> 8));
    out_.push_back(static_cast<uint8_t>(len));
    out_.insert(out_.end(), payload.begin(), payload.end());
}

void Encoder::u32(uint32_t v) {
    Bytes b(4);
    for (int i = 0; i < 4; ++i) b[i] = static_cast<uint8_t>(v >> (24 - 8 * i));
    field(b);
}

void Encoder::u64(uint64_t v) {
    Bytes b(8);
    for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(v >> (56 - 8 * i));
    field(b);
}

void Encoder::i64(int64_t v) { u64(static_cast<uint64_t>(v)); }

std::optional<Bytes> Decoder::field() {
    if (pos_ + 4 > data_.size()) return std::nullopt;
    uint32_t len = (uint32_t(data_[pos_]) << 24) | (uint32_t(data_[pos_ + 1]) << 16) |
                   (uint32_t(data_[pos_ + 2]) << 8) | uint32_t(data_[pos_ + 3]);
    pos_ += 4;
    if (pos_ + len > data_.size()) return std::nullopt;
    Bytes out(data_.begin() + pos_, data_.begin() + pos_ + len);
    pos_ += len;
    return out;
}

std::optional<uint8_t> Decoder::u8() {
    auto f = field();
    if (!f || f->size() != 1) return std::nullopt;
    return (*f)[0];
}

std::optional<uint32_t> Decoder::u32() {
    auto f = field();
    if (!f || f->size() != 4) return std::nullopt;
    uint32_t v = 0;
    for (auto b : *f) v = (v << 8) | b;
    return v;
}

std::optional<uint64_t> Decoder::u64() {
    auto f = field();
    if (!f || f->size() != 8) return std::nullopt;
    uint64_t v = 0;
    for (auto b : *f) v = (v << 8) | b;
    return v;
}

std::optional<int64_t> Decoder::i64() {
    auto v = u64();
    if (!v) return std::nullopt;
    return static_cast<int64_t>(*v);
}

std::optional<bool> Decoder::boolean() {
    auto v = u8();
    if (!v || *v > 1) return std::nullopt;
    return *v == 1;
}

std::optional<Digest256> Decoder::dig() {
    auto f = field();
    if (!f || f->size() != 32) return std::nullopt;
    Digest256 d;
    std::memcpy(d.bytes.data(), f->data(), 32);
    return d;
}

std::optional<Bytes> Decoder::bytes() { return field(); }

std::optional<std::string> Decoder::str() {
    auto f = field();
    if (!f) return std::nullopt;
    return std::string(f->begin(), f->end());
}

}  // namespace hybridsim
