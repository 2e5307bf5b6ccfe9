#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hybridsim/digest.hpp"

namespace hybridsim {

// Canonical byte encoding, the preimage format for every digest in the
// system: fields are concatenated in declaration order, each as a u32
// big-endian byte length followed by the payload. Integer payloads are
// fixed-width big-endian; digests are the raw 32 bytes; sequences are a u64
// count followed by the length-prefixed element encodings. docs/formats.md
// carries the normative description.
class Encoder {
public:
    void u8(uint8_t v) { field({v}); }
    void u32(uint32_t v);
    void u64(uint64_t v);
    void i64(int64_t v);  // two's complement, fixed width
    void boolean(bool v) { u8(v ? 1 : 0); }
    void dig(const Digest256& d) { field(Bytes(d.bytes.begin(), d.bytes.end())); }
    void bytes(const Bytes& b) { field(b); }
    void str(const std::string& s) { field(Bytes(s.begin(), s.end())); }

    template <typename T, typename Fn>
    void seq(const std::vector<T>& items, Fn encode_item) {
        Encoder inner;
        inner.u64(items.size());
        for (const auto& it : items) {
            Encoder e;
            encode_item(e, it);
            inner.field(e.out_);
        }
        field(inner.out_);
    }

    const Bytes& out() const { return out_; }
    Digest256 hash() const { return digest(out_); }

private:
    void field(const Bytes& payload);
    Bytes out_;
};

// Mirror of Encoder; every read checks bounds and returns nullopt on
// malformed input so dump loading can reject bad files cleanly.
class Decoder {
public:
    explicit Decoder(const Bytes& data) : data_(data) {}

    std::optional<uint8_t> u8();
    std::optional<uint32_t> u32();
    std::optional<uint64_t> u64();
    std::optional<int64_t> i64();
    std::optional<bool> boolean();
    std::optional<Digest256> dig();
    std::optional<Bytes> bytes();
    std::optional<std::string> str();

    template <typename T, typename Fn>
    std::optional<std::vector<T>> seq(Fn decode_item) {
        auto raw = bytes();
        if (!raw) return std::nullopt;
        Decoder inner(*raw);
        auto n = inner.u64();
        if (!n) return std::nullopt;
        std::vector<T> out;
        out.reserve(*n);
        for (uint64_t i = 0; i < *n; ++i) {
            auto elem = inner.bytes();
            if (!elem) return std::nullopt;
            Decoder d(*elem);
            auto v = decode_item(d);
            if (!v) return std::nullopt;
            out.push_back(std::move(*v));
        }
        if (!inner.done()) return std::nullopt;
        return out;
    }

    bool done() const { return pos_ == data_.size(); }

private:
    std::optional<Bytes> field();
    const Bytes& data_;
    size_t pos_ = 0;
};

}  // namespace hybridsim
