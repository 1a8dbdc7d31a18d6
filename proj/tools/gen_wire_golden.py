#!/usr/bin/env python3
"""Writes testdata/wire/*.bin with struct.pack, independent of the C++ encoder.

Frame: "DLPS" | u32 type | 16B job id | u32 learner | u32 partition |
u64 clock | u64 payload_len | payload (little-endian).
"""
import os
import struct
import sys

JOB = b"0123456789ab".ljust(16, b"\0")

FRAMES = [
    # name, type, learner, partition, clock, payload
    ("join", 1, 1, 0, 0, b""),
    ("leave", 2, 1, 0, 0, b""),
    ("push", 3, 2, 1, 7, struct.pack("<3d", 1.0, -2.5, 0.1)),
    ("push_abstain", 3, 3, 0, 7, b""),
    ("push_ack", 4, 2, 1, 7, b""),
    ("push_ack_easgd", 4, 0, 0, 1, struct.pack("<1d", 1.0)),
    ("pull", 5, 2, 1, 8, b""),
    ("pull_resp", 6, 2, 1, 8, struct.pack("<2d", 2.0, 4.0)),
    ("pull_resp_drained", 6, 0, 0, 12, b""),
    ("error", 7, 2, 0, 0, b"STALE_CLOCK push for clock 3, shard is at 4"),
]


def frame(t, learner, partition, clock, payload):
    return b"DLPS" + struct.pack("<I", t) + JOB + struct.pack(
        "<IIQQ", learner, partition, clock, len(payload)) + payload


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(__file__), "..", "testdata", "wire")
    os.makedirs(out, exist_ok=True)
    for name, t, learner, partition, clock, payload in FRAMES:
        with open(os.path.join(out, name + ".bin"), "wb") as f:
            f.write(frame(t, learner, partition, clock, payload))


if __name__ == "__main__":
    main()
