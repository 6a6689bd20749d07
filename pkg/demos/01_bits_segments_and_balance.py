#!/usr/bin/env python3
"""Bit-vector algebra walkthrough: XOR, inner products, segments, and the
balance property that makes the whole protocol tick."""

import numpy as np

from dpvqss.bitvec import (
    BitVector,
    SegmentedVector,
    cip_census,
    concat_segments,
    extend_segment,
)

rng = np.random.default_rng(1)

print("== Bit vectors ==")
x = BitVector.from_string("1011")
y = BitVector.from_string("0110")
print(f"x          = {x}")
print(f"y          = {y}")
print(f"x ^ y      = {x ^ y}")
print(f"x . y      = {x.dot(y)}   (inner product mod 2)")

print()
print("== Segments ==")
# A 3-agent layout with 4-bit slices: segment 0 is least significant.
parts = [BitVector.random(4, rng) for _ in range(3)]
s = concat_segments(parts)
seg = SegmentedVector(s, n=3, m=4)
print(f"slices (s2, s1, s0) = {parts[2]}, {parts[1]}, {parts[0]}")
print(f"aggregated          = {s}")
for i in range(3):
    print(f"  segment {i}         = {seg.segment(i)}")

acc = BitVector.zeros(12)
for i, part in enumerate(parts):
    acc = acc ^ extend_segment(part, i, 3)
print(f"XOR of extended slices reproduces the aggregate: {acc == s}")

print()
print("== The balance property ==")
print("For any nonzero c, the inner product c.x splits {0,1}^p exactly in half:")
for text in ("0000", "0001", "1010", "1111"):
    c = BitVector.from_string(text)
    zeros, ones = cip_census(c)
    print(f"  c = {c}: {zeros} vectors give 0, {ones} give 1")
print("This balance is why measuring one register alone reveals nothing,")
print("while the XOR of all registers pins down the encoded secret exactly.")
