#!/usr/bin/env python3
# Independent reference implementation for core hashing/encoding expectations.
# Values printed here are frozen into tests/test_core.cpp.
import hashlib

def sha3(b): return hashlib.sha3_256(b).digest()

def leaf(x): return sha3(b"\x00" + x)
def node(l, r): return sha3(b"\x01" + l + r)

def merkle(leaves):
    if not leaves: return b"\x00" * 32
    level = [leaf(x) for x in leaves]
    while len(level) > 1:
        nxt = []
        for i in range(0, len(level), 2):
            r = level[i+1] if i+1 < len(level) else level[i]
            nxt.append(node(level[i], r))
        level = nxt
    return level[0]

# canonical encoding: each field = u32 BE length || payload
def field(p): return len(p).to_bytes(4, "big") + p
def u64(v): return field(v.to_bytes(8, "big"))
def u32(v): return field(v.to_bytes(4, "big"))
def i64(v): return field((v & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "big"))
def u8(v): return field(bytes([v]))
def raw(b): return field(b)

print("merkle [a]          :", merkle([b"a"]).hex())
print("merkle [a,b]        :", merkle([b"a", b"b"]).hex())
print("merkle [a,b,c]      :", merkle([b"a", b"b", b"c"]).hex())
print("merkle [a..e]       :", merkle([b"a", b"b", b"c", b"d", b"e"]).hex())

# Transaction body: sender,nonce,gas_price,gas_limit,recipient,payload,code,data,T_p,seq
body = u64(7) + u64(0) + u64(1) + u64(21000) + u64(9) + u64(10) + raw(b"") + raw(b"\x01\x02") + i64(-5) + u64(3)
body_digest = sha3(body)
print("tx body digest      :", body_digest.hex())
full = body + u64(7) + raw(body_digest)
print("tx id               :", sha3(full).hex())

# pad_header chunks: field(header) + u64(nonce) + u32(counter), sliced to u64 BE lanes
hdr = b"hdr"
def pad(header, nonce, n):
    out = []
    c = 0
    while len(out) < n:
        d = sha3(raw(header) + u64(nonce) + u32(c)); c += 1
        for i in range(4):
            if len(out) < n:
                out.append(int.from_bytes(d[8*i:8*i+8], "big"))
    return out
v = pad(hdr, 42, 16)
print("pad_header[0]       :", hex(v[0]))
print("pad_header[15]      :", hex(v[15]))
# truehash with identity permutation = sha3 of the 16 u64 BE concatenation
buf = b"".join(x.to_bytes(8, "big") for x in v)
print("truehash identity   :", sha3(buf).hex())
# permutation [1,0,3,2,...] applied as v'[g(i)] = v[i]
g = [(i + 1 if i % 2 == 0 else i - 1) for i in range(16)]
vp = [0]*16
for i in range(16): vp[g[i]] = v[i]
print("truehash swapped    :", sha3(b"".join(x.to_bytes(8, "big") for x in vp)).hex())
