#!/usr/bin/env python3
"""Writes the DRSM v1 golden fixtures.

Hand-packs every byte with `struct`; shares no code with the C++ encoder.
Each NAME.bin is one payload (no outer length prefix). expected.json
describes the decoded content of every fixture.
"""
import json
import struct
from pathlib import Path

HERE = Path(__file__).resolve().parent

DTYPES = {"u8": (0x00, "B", 1), "f32": (0x01, "<f", 4), "i64": (0x02, "<q", 8)}


def entry(key, tag, body):
    k = key.encode("utf-8")
    return struct.pack("<B", len(k)) + k + struct.pack("<B", tag) + body


def u64(key, v):
    return entry(key, 0x01, struct.pack("<Q", v)), {"key": key, "type": "u64", "value": v}


def i64(key, v):
    return entry(key, 0x02, struct.pack("<q", v)), {"key": key, "type": "i64", "value": v}


def f64(key, v):
    raw = struct.pack("<d", v)
    return entry(key, 0x03, raw), {"key": key, "type": "f64", "bits": raw[::-1].hex()}


def string(key, s):
    b = s.encode("utf-8")
    return entry(key, 0x04, struct.pack("<I", len(b)) + b), {"key": key, "type": "str", "value": s}


def blob(key, b):
    return entry(key, 0x05, struct.pack("<I", len(b)) + b), {"key": key, "type": "blob", "hex": b.hex()}


def tensor(key, dtype, dims, values):
    code, fmt, _ = DTYPES[dtype]
    data = b"".join(struct.pack(fmt, v) for v in values)
    body = struct.pack("<BB", code, len(dims)) + b"".join(struct.pack("<I", d) for d in dims) + data
    return entry(key, 0x06, body), {"key": key, "type": "tensor", "dtype": dtype, "dims": dims, "hex": data.hex()}


def message(*entries):
    payload = b"DR" + struct.pack("<BH", 1, len(entries))
    payload += b"".join(e[0] for e in entries)
    return payload, [e[1] for e in entries]


FIXTURES = {
    "header_only": message(u64("btid", 7), u64("frame", 0)),
    "tensor_u8_2x2": message(u64("btid", 1), u64("frame", 2), tensor("t", "u8", [2, 2], [1, 2, 3, 4])),
    "all_types": message(
        u64("btid", 3),
        u64("frame", 123456789),
        i64("i", -5),
        f64("f", 3.25),
        string("s", "héllo"),
        blob("b", bytes([0x00, 0xFF, 0x10])),
        tensor("tf", "f32", [3], [1.5, -2.0, 0.0]),
        tensor("ti", "i64", [2, 1], [-1, 1 << 40]),
    ),
    "zero_sized_tensor": message(
        u64("btid", 0), u64("frame", 1), tensor("bboxes", "f32", [0, 4], []), tensor("cids", "i64", [0], [])
    ),
    "control_set_class_probs": message(
        string("cmd", "set_class_probs"), tensor("class_probs", "f32", [4], [0.25, 0.25, 0.25, 0.25])
    ),
    "empty": message(),
}


def main():
    expected = {}
    for name, (payload, entries) in FIXTURES.items():
        (HERE / f"{name}.bin").write_bytes(payload)
        expected[name] = {"size": len(payload), "entries": entries}
    (HERE / "expected.json").write_text(json.dumps(expected, indent=2, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
