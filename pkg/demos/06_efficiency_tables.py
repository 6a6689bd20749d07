#!/usr/bin/env python3
"""Qubit-efficiency ratios per phase, exactly, and how they scale."""

from fractions import Fraction

from dpvqss.metrics import eta1, eta2, eta3

print("== Per-phase efficiency (useful classical bits / qubits consumed) ==")
print(f"{'n':>3} {'m':>5} {'eta1':>10} {'eta2':>10} {'eta3':>10}")
for n in (2, 3, 5, 10):
    for m in (1, 16, 256):
        print(f"{n:>3} {m:>5} {str(eta1(n, m)):>10} {str(eta2(n, m)):>10} "
              f"{str(eta3(m)):>10}")

print()
print("== Scaling ==")
print("The consolidation ratio m/(m+1) approaches 1 as slices widen:")
for m in (1, 10, 100, 1000):
    print(f"  m = {m:>4}: eta3 = {float(eta3(m)):.4f}")

print()
print("The first two phases pay for n+1 registers, so with n fixed both")
print("ratios climb toward 1/(n+1); 'about 1/n' is the many-agent view:")
for n in (2, 5, 10):
    e = eta1(n, 1 << 10)
    print(f"  n = {n:>2}: eta1(m=1024) = {float(e):.5f}, "
          f"1/(n+1) = {float(Fraction(1, n + 1)):.5f}, "
          f"1/n = {1 / n:.5f}")
