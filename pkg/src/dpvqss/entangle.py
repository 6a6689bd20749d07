"""Entanglement distribution, decoy handling, and the correlated-outcome sampler.

A batch models r parties holding p-qubit registers whose j-th qubits form one
GHZ_r tuple (a Bell pair when r = 2).  Two backings expose the same API:

- oracle: one dense statevector over every register qubit, phase-oracle
  targets and eavesdropper ancillas; exact but bounded at 22 qubits.
- sampler: the measurement statistics without exponential state.  Untapped
  rounds draw all but one register uniformly and solve the last from the XOR
  constraint (the solved register is chosen uniformly per draw); rounds with
  an active tap are simulated tuple-by-tuple on a small statevector, which
  reproduces the exact post-attack statistics at any register width.

Decoy qubits are independent single-qubit systems interleaved into each
transmitted sequence; they are simulated only when an eavesdropper actually
touches the channel, since an untouched eigenstate can never mismatch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .bitvec import BitVector, CapacityError, DimensionError
from .qsim import BASIS_LABELS, MAX_QUBITS, StateVector

TAP_KINDS = ("measure_resend", "intercept_resend", "entangle_measure")


class IntegrityError(ValueError):
    """Transmission plan and source records disagree."""


@dataclass(frozen=True)
class ChannelTap:
    """An eavesdropper action applied to every qubit crossing one channel."""

    kind: str
    basis: str = "computational"  # intercept_resend only: computational | random

    def __post_init__(self):
        if self.kind not in TAP_KINDS:
            raise ValueError(f"unknown tap kind {self.kind!r}")
        if self.basis not in ("computational", "random"):
            raise ValueError(f"unknown interception basis {self.basis!r}")


@dataclass(frozen=True)
class DecoySpec:
    """How many decoys to interleave into each transmitted channel."""

    count_per_channel: int = 16

    def __post_init__(self):
        if self.count_per_channel < 0:
            raise ValueError("decoy count must be nonnegative")


@dataclass
class Decoy:
    channel: int
    slot: int
    label: str
    # One- or two-qubit statevector, materialized only on tapped channels
    # (qubit 0 is the decoy, qubit 1 an entangling ancilla if present).
    state: StateVector | None = None


@dataclass
class TransmissionPlan:
    """Per-channel ordered slots of payload qubits and interleaved decoys."""

    slots: dict[int, list[tuple[str, int]]]  # channel -> [("payload", pos) | ("decoy", id)]
    decoys: list[Decoy]
    records: list[tuple[int, int, str]]  # source-retained (channel, slot, label)
    tapped_channels: set[int] = field(default_factory=set)

    def dump(self) -> list[str]:
        """Test format: "channel, slot, kind, state-label" per transmitted item."""
        lines = []
        for ch in sorted(self.slots):
            for slot, (kind, ref) in enumerate(self.slots[ch]):
                label = f"pos{ref}" if kind == "payload" else self.decoys[ref].label
                lines.append(f"{ch}, {slot}, {kind}, {label}")
        return lines


@dataclass
class OutcomeTuple:
    """Measured register contents of one round: Alice's a, the agents' b's,
    and any eavesdropper outcomes keyed by tapped channel."""

    a: BitVector
    b: list[BitVector]
    e: dict[int, BitVector] | None = None


@dataclass
class RoundOutcome:
    registers: list[BitVector]
    eve: dict[int, BitVector]


class EntangledBatch:
    """r registers of p positions backed by an oracle state or the sampler."""

    def __init__(self, r, p, mode, taps, transmitted, encoders):
        if r < 2:
            raise ValueError("need at least two entangled registers")
        if p < 1:
            raise ValueError("need at least one tuple position")
        if mode not in ("oracle", "sampler"):
            raise ValueError(f"unknown backing {mode!r}")
        self.r = r
        self.p = p
        self.mode = mode
        self.taps = dict(taps)
        self.transmitted = tuple(transmitted)
        self.encoders = tuple(encoders)
        for ch in self.taps:
            if ch not in self.transmitted:
                raise ValueError(f"tap on channel {ch} which is never transmitted")
        self.sealed = False
        self.consumed = False
        # Eavesdropper bits captured during transmission (oracle mode).
        self._transit_eve: dict[int, list[int]] = {}

        if mode == "oracle":
            ent_taps = [
                ch for ch, tap in sorted(self.taps.items())
                if tap.kind == "entangle_measure"
            ]
            q = r * p + len(self.encoders) + len(ent_taps) * p
            if q > MAX_QUBITS:
                raise CapacityError(
                    f"oracle backing needs {q} qubits, over the {MAX_QUBITS} bound"
                )
            self.state = StateVector(q)
            self.registers = [
                tuple(range(i * p, (i + 1) * p)) for i in range(r)
            ]
            base = r * p
            self.targets = {
                enc: base + i for i, enc in enumerate(self.encoders)
            }
            base += len(self.encoders)
            self.eve_ancillas = {
                ch: tuple(range(base + i * p, base + (i + 1) * p))
                for i, ch in enumerate(ent_taps)
            }
            for j in range(p):
                self.state.prepare_ghz([reg[j] for reg in self.registers])
        else:
            self.state = None

    # -- transmission -------------------------------------------------------

    def _tap_payload_oracle(self, tap: ChannelTap, channel: int, pos: int, rng):
        qubit = self.registers[channel][pos]
        if tap.kind == "entangle_measure":
            self.state.apply_cnot(qubit, self.eve_ancillas[channel][pos])
            return
        if tap.kind == "intercept_resend" and tap.basis == "random" and rng.integers(2):
            # X-basis interception: the collapsed eigenstate is what she forwards.
            bit = self.state.measure_hadamard_basis(qubit, rng)
            self.state.apply_h(qubit)
        else:
            bit = self.state.measure_qubit(qubit, rng)
        self._transit_eve.setdefault(channel, [0] * self.p)[pos] = bit

    def transmit_channel(self, channel: int, plan: TransmissionPlan, rng):
        """Invoke the tap hook (if any) over one channel's full slot sequence."""
        tap = self.taps.get(channel)
        if tap is None:
            return
        plan.tapped_channels.add(channel)
        for kind, ref in plan.slots[channel]:
            if kind == "decoy":
                _tap_decoy(plan.decoys[ref], tap, rng)
            elif self.mode == "oracle":
                self._tap_payload_oracle(tap, channel, ref, rng)
            # Sampler payload taps take effect during outcome simulation.

    # -- outcome generation ---------------------------------------------------

    def _phase_vectors(self, phase_bits: dict[int, BitVector]) -> dict[int, BitVector]:
        out = {}
        for enc, vec in phase_bits.items():
            if enc not in self.encoders:
                raise ValueError(f"register {enc} has no oracle target allocated")
            if vec.length != self.p:
                raise DimensionError(
                    f"phase vector for register {enc} has length {vec.length}, "
                    f"expected {self.p}"
                )
            out[enc] = vec
        return out

    def _mark_consumed(self):
        if self.consumed:
            raise RuntimeError("batch already measured")
        if not self.sealed:
            if self.taps:
                raise RuntimeError("taps registered but batch never transmitted")
            self.sealed = True
        self.consumed = True

    def encode_and_measure(self, phase_bits: dict[int, BitVector], rng) -> RoundOutcome:
        """Apply the encoders' phase oracles, the Hadamard layers, and measure."""
        phase_bits = self._phase_vectors(phase_bits)
        self._mark_consumed()
        if self.mode == "oracle":
            return self._oracle_round(phase_bits, rng, collapse=True)
        return self._sampler_round(phase_bits, rng)

    def sample_outcomes(
        self, phase_bits: dict[int, BitVector], shots: int, rng
    ) -> list[RoundOutcome]:
        """Draw many independent final-measurement outcomes of the same round.

        Oracle mode builds the pre-measurement state once and Born-samples it,
        which is only valid while nothing has collapsed mid-circuit; batches
        carrying measuring taps are refused.
        """
        phase_bits = self._phase_vectors(phase_bits)
        self._mark_consumed()
        if self.mode == "sampler":
            return [self._sampler_round(phase_bits, rng) for _ in range(shots)]
        if any(tap.kind != "entangle_measure" for tap in self.taps.values()):
            raise ValueError("cannot batch-sample a batch with measuring taps")
        return self._oracle_sample(phase_bits, shots, rng)

    def final_state(self, phase_bits: dict[int, BitVector]) -> StateVector:
        """Oracle mode only: encode, apply the Hadamard layers, and return the
        pre-measurement state for exact inspection."""
        if self.mode != "oracle":
            raise ValueError("final_state requires the oracle backing")
        phase_bits = self._phase_vectors(phase_bits)
        self._mark_consumed()
        self._apply_encoding(phase_bits)
        return self.state

    def _apply_encoding(self, phase_bits):
        for enc in self.encoders:
            target = self.targets[enc]
            self.state.prepare_basis("-", target)
            vec = phase_bits.get(enc)
            if vec is not None:
                self.state.apply_phase_oracle(vec, self.registers[enc], target)
        for reg in self.registers:
            self.state.apply_h_register(reg)

    def _oracle_round(self, phase_bits, rng, collapse) -> RoundOutcome:
        self._apply_encoding(phase_bits)
        bits = [self.state.measure_register(reg, rng) for reg in self.registers]
        eve = {
            ch: BitVector.from_bits(vals) for ch, vals in self._transit_eve.items()
        }
        for ch, ancillas in self.eve_ancillas.items():
            vals = [self.state.measure_hadamard_basis(qb, rng) for qb in ancillas]
            eve[ch] = BitVector.from_bits(vals)
        return RoundOutcome(bits, eve)

    def _oracle_sample(self, phase_bits, shots, rng) -> list[RoundOutcome]:
        self._apply_encoding(phase_bits)
        anc_order = sorted(self.eve_ancillas)
        for ch in anc_order:
            for qb in self.eve_ancillas[ch]:
                self.state.apply_h(qb)
        qubits = [qb for reg in self.registers for qb in reg]
        for ch in anc_order:
            qubits.extend(self.eve_ancillas[ch])
        packed = self.state.sample_register(qubits, shots, rng)
        p, r = self.p, self.r
        mask = (1 << p) - 1
        out = []
        for raw in packed:
            raw = int(raw)
            regs = [BitVector((raw >> (i * p)) & mask, p) for i in range(r)]
            eve = {}
            for i, ch in enumerate(anc_order):
                eve[ch] = BitVector((raw >> ((r + i) * p)) & mask, p)
            out.append(RoundOutcome(regs, eve))
        return out

    def _sampler_round(self, phase_bits, rng) -> RoundOutcome:
        if not self.taps:
            return self._sampler_honest(phase_bits, rng)
        return self._sampler_tapped(phase_bits, rng)

    def _sampler_honest(self, phase_bits, rng) -> RoundOutcome:
        constraint = BitVector.zeros(self.p)
        for vec in phase_bits.values():
            constraint = constraint ^ vec
        solved = int(rng.integers(self.r))
        bits: list[BitVector | None] = [None] * self.r
        acc = constraint
        for i in range(self.r):
            if i == solved:
                continue
            v = BitVector.random(self.p, rng)
            bits[i] = v
            acc = acc ^ v
        bits[solved] = acc
        total = BitVector.zeros(self.p)
        for v in bits:
            total = total ^ v
        assert total == constraint, "sampler violated its own XOR constraint"
        return RoundOutcome(bits, {})

    def _sampler_tapped(self, phase_bits, rng) -> RoundOutcome:
        reg_bits = [[0] * self.p for _ in range(self.r)]
        eve_bits = {ch: [0] * self.p for ch in self.taps}
        for j in range(self.p):
            z_bits = {
                enc: vec.bit(j) for enc, vec in phase_bits.items() if vec.bit(j)
            }
            tuple_bits, tuple_eve = _simulate_tuple(self.r, z_bits, self.taps, rng)
            for i in range(self.r):
                reg_bits[i][j] = tuple_bits[i]
            for ch, bit in tuple_eve.items():
                eve_bits[ch][j] = bit
        return RoundOutcome(
            [BitVector.from_bits(v) for v in reg_bits],
            {ch: BitVector.from_bits(v) for ch, v in eve_bits.items()},
        )


def _simulate_tuple(
    r: int, z_bits: dict[int, int], taps: dict[int, ChannelTap], rng
) -> tuple[list[int], dict[int, int]]:
    """Exact one-tuple simulation: GHZ_r, channel taps, phase kicks, H, measure."""
    ent_channels = [
        ch for ch, tap in sorted(taps.items()) if tap.kind == "entangle_measure"
    ]
    target = r
    q = r + 1 + len(ent_channels)
    sv = StateVector(q)
    sv.prepare_ghz(range(r))
    eve: dict[int, int] = {}
    for ch, tap in sorted(taps.items()):
        if tap.kind == "entangle_measure":
            sv.apply_cnot(ch, target + 1 + ent_channels.index(ch))
        elif tap.kind == "intercept_resend" and tap.basis == "random" and rng.integers(2):
            eve[ch] = sv.measure_hadamard_basis(ch, rng)
            sv.apply_h(ch)
        else:
            eve[ch] = sv.measure_qubit(ch, rng)
    sv.prepare_basis("-", target)
    for reg, bit in sorted(z_bits.items()):
        if bit:
            sv.apply_cnot(reg, target)
    for reg in range(r):
        sv.apply_h(reg)
    bits = [sv.measure_qubit(reg, rng) for reg in range(r)]
    for i, ch in enumerate(ent_channels):
        eve[ch] = sv.measure_hadamard_basis(target + 1 + i, rng)
    return bits, eve


def distribute(
    r: int,
    p: int,
    mode: str = "sampler",
    taps: dict[int, ChannelTap] | None = None,
    transmitted: Sequence[int] | None = None,
    encoders: Sequence[int] | None = None,
) -> EntangledBatch:
    """Prepare a batch of p GHZ_r tuples (Bell pairs at r = 2).

    `transmitted` lists the registers that traverse a channel (and may be
    tapped); `encoders` lists the registers that will apply a phase oracle,
    which in oracle mode costs one |-> target qubit each.
    """
    if transmitted is None:
        transmitted = range(r)
    if encoders is None:
        encoders = range(r)
    return EntangledBatch(r, p, mode, taps or {}, transmitted, encoders)


def insert_decoys(batch: EntangledBatch, spec: DecoySpec, rng) -> TransmissionPlan:
    """Interleave per-channel decoys at seeded random positions."""
    slots: dict[int, list[tuple[str, int]]] = {}
    decoys: list[Decoy] = []
    records = []
    d = spec.count_per_channel
    for ch in sorted(batch.transmitted):
        total = batch.p + d
        if d:
            decoy_slots = set(
                int(s) for s in rng.choice(total, size=d, replace=False)
            )
            labels = [BASIS_LABELS[i] for i in rng.integers(0, 4, size=d)]
        else:
            decoy_slots = set()
            labels = []
        channel_slots = []
        pos = 0
        label_idx = 0
        for slot in range(total):
            if slot in decoy_slots:
                label = labels[label_idx]
                label_idx += 1
                decoys.append(Decoy(ch, slot, label))
                records.append((ch, slot, label))
                channel_slots.append(("decoy", len(decoys) - 1))
            else:
                channel_slots.append(("payload", pos))
                pos += 1
        slots[ch] = channel_slots
    return TransmissionPlan(slots, decoys, records)


def transmit(batch: EntangledBatch, plan: TransmissionPlan, rng):
    """Send every channel through its (possibly tapped) route and seal the batch."""
    if batch.sealed:
        raise RuntimeError("batch already transmitted")
    for ch in sorted(batch.transmitted):
        batch.transmit_channel(ch, plan, rng)
    batch.sealed = True


def _tap_decoy(decoy: Decoy, tap: ChannelTap, rng):
    if tap.kind == "entangle_measure":
        sv = StateVector(2)
        sv.prepare_basis(decoy.label, 0)
        sv.apply_cnot(0, 1)
    else:
        sv = StateVector(1)
        sv.prepare_basis(decoy.label, 0)
        if tap.kind == "intercept_resend" and tap.basis == "random" and rng.integers(2):
            sv.measure_hadamard_basis(0, rng)
            sv.apply_h(0)
        else:
            sv.measure_qubit(0, rng)
    decoy.state = sv


def verify_decoys(
    plan: TransmissionPlan, records: Sequence[tuple[int, int, str]], rng
) -> tuple[int, str]:
    """Measure every decoy in its preparation basis; any mismatch aborts."""
    plan_records = [(d.channel, d.slot, d.label) for d in plan.decoys]
    if sorted(records) != sorted(plan_records):
        raise IntegrityError("source records do not match the received plan")
    mismatches = 0
    for decoy in plan.decoys:
        expected = {"0": 0, "1": 1, "+": 0, "-": 1}[decoy.label]
        if decoy.state is None:
            # Untouched eigenstate: measuring in the preparation basis can
            # never err, so the simulation is skipped.
            continue
        if decoy.label in ("0", "1"):
            got = decoy.state.measure_qubit(0, rng)
        else:
            got = decoy.state.measure_hadamard_basis(0, rng)
        if got != expected:
            mismatches += 1
    return mismatches, ("abort" if mismatches else "proceed")


def sample_idpqc_outcomes(s: BitVector, n: int, m: int, rng) -> OutcomeTuple:
    """One honest information-distribution round: uniform over all tuples with
    a XOR b_{n-1} XOR ... XOR b_0 = s; every proper subset is marginally uniform."""
    if s.length != n * m:
        raise DimensionError(f"secret length {s.length} != n*m = {n * m}")
    batch = distribute(
        n + 1, n * m, "sampler", transmitted=range(n), encoders=(n,)
    )
    out = batch.encode_and_measure({n: s}, rng)
    return OutcomeTuple(a=out.registers[n], b=out.registers[:n])


def sample_icpqc_outcomes(
    s_i: BitVector, s_j: BitVector, rng
) -> tuple[BitVector, BitVector]:
    """One honest pairwise-consolidation round: uniform pairs with
    b_i XOR b_j = s_i XOR s_j."""
    if s_i.length != s_j.length:
        raise DimensionError(
            f"partial vectors of lengths {s_i.length} and {s_j.length}"
        )
    batch = distribute(2, s_i.length, "sampler", encoders=(0, 1))
    out = batch.encode_and_measure({0: s_i, 1: s_j}, rng)
    return out.registers[0], out.registers[1]
