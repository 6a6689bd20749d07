"""The three protocol phases and the end-to-end run orchestrator.

Phase 1 (distribution): the source and the n agents share GHZ_(n+1) tuples
over n*m positions; the source phases the aggregated secret into her
register, everyone applies Hadamards and measures, and one parallel
classical round fans the per-segment outcomes out so that agent i can
solve for his own m-bit slice.

Phase 2 (verification): a fresh batch; every agent phases his received
slice (zero-extended to his segment) into his own circuit, the source
collects all reported outcomes in one parallel round and checks that the
XOR chain reproduces the original secret.  Any discrepancy aborts.

Phase 3 (consolidation): every unordered pair of agents runs an
independent Bell-pair exchange; a single parallel round carries all
n(n-1) directed reports, after which each agent robustly decodes his n
collected shares.

Classical rounds are unordered message sets; permuting messages within a
round never changes the run report.  All randomness flows through one
injected generator, so a (config, secret, plan, seed) tuple reproduces a
byte-identical report.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import __version__
from .adversary import AdversaryPlan, HONEST_PLAN, falsify, rogue_transform
from .bitvec import BitVector, SegmentedVector, concat_segments, extend_segment
from .entangle import (
    DecoySpec,
    distribute,
    insert_decoys,
    transmit,
    verify_decoys,
)
from .metrics import efficiency_report
from .threshold import (
    AmbiguousDecodeError,
    Share,
    SplitConfig,
    bytes_to_elements,
    robust_decode,
    split,
)

MAX_ORACLE_QUBITS = 22


@dataclass(frozen=True)
class ProtocolConfig:
    n: int
    k: int
    m: int
    w: int = 8
    backing: str = "sampler"
    decoys: int = 16
    source: str = "alice"
    seed: int | None = None

    def __post_init__(self):
        SplitConfig(self.k, self.n, self.w)  # reuse the k > n/2 etc. checks
        if self.m < 1:
            raise ValueError(f"need m >= 1, got m={self.m}")
        if self.backing not in ("oracle", "sampler"):
            raise ValueError(f"unknown backing {self.backing!r}")
        if self.source not in ("alice", "third_party"):
            raise ValueError(f"unknown source {self.source!r}")
        if self.decoys < 0:
            raise ValueError("decoy count must be nonnegative")
        if self.backing == "oracle":
            q = (self.n + 1) * self.n * self.m + 1
            if q > MAX_ORACLE_QUBITS:
                raise ValueError(
                    f"oracle backing needs {q} qubits for phase 1, "
                    f"over the {MAX_ORACLE_QUBITS} bound"
                )

    @property
    def split_config(self) -> SplitConfig:
        return SplitConfig(self.k, self.n, self.w)

    @property
    def elements(self) -> int:
        if self.m % self.w:
            raise ValueError(
                f"share-backed runs need w | m, got m={self.m}, w={self.w}"
            )
        return self.m // self.w

    def to_dict(self) -> dict:
        return {
            "n": self.n, "k": self.k, "m": self.m, "w": self.w,
            "backing": self.backing, "decoys": self.decoys,
            "source": self.source,
        }


@dataclass(frozen=True)
class Message:
    sender: str
    receiver: str
    payload: BitVector | None
    phase: str


@dataclass
class Round:
    phase: str
    kind: str  # quantum | classical
    messages: tuple[Message, ...]  # an unordered set; order carries no meaning


@dataclass
class Transcript:
    rounds: list[Round] = field(default_factory=list)

    def add(self, phase: str, kind: str, messages) -> Round:
        rnd = Round(phase, kind, tuple(messages))
        self.rounds.append(rnd)
        return rnd

    def summary(self) -> list[dict]:
        return [
            {"phase": r.phase, "kind": r.kind, "messages": len(r.messages)}
            for r in self.rounds
        ]


@dataclass
class AbortInfo:
    phase: str
    cause: str
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"phase": self.phase, "cause": self.cause, "detail": self.detail}


def elements_to_hex(elements, w: int) -> str:
    """Hex rendering of a field-element vector, element 0 rightmost."""
    digits = (w + 3) // 4
    return "".join(format(e, f"0{digits}x") for e in reversed(elements))


@dataclass
class AgentResult:
    index: int
    loyal: bool
    s_i: BitVector | None = None
    claimed_shares: list[Share] = field(default_factory=list)
    reconstructed: tuple[int, ...] | None = None
    support: int | None = None
    ambiguous: bool = False

    def to_dict(self, true_elements, w: int) -> dict:
        recovered = (
            self.reconstructed is not None
            and tuple(self.reconstructed) == tuple(true_elements)
        )
        return {
            "loyal": self.loyal,
            "s_i": str(self.s_i) if self.s_i is not None else None,
            "claimed_shares": [sh.token() for sh in self.claimed_shares],
            "reconstructed": (
                elements_to_hex(self.reconstructed, w)
                if self.reconstructed is not None else None
            ),
            "support": self.support,
            "ambiguous": self.ambiguous,
            "recovered_secret": recovered,
        }


@dataclass
class RunReport:
    config: ProtocolConfig
    plan: AdversaryPlan
    secret_elements: tuple[int, ...]
    verdict: str
    abort: AbortInfo | None
    agents: list[AgentResult]
    detection_events: list[dict]
    transcript: Transcript
    seed: int | None = None
    trial: int | None = None
    leakage: dict | None = None

    def to_dict(self) -> dict:
        cfg = self.config
        return {
            "schema": "dpvqss.run.v1",
            "version": __version__,
            "seed": self.seed,
            "trial": self.trial,
            "config": cfg.to_dict(),
            "config_hash": config_hash(cfg, self.plan),
            "adversary": plan_to_dict(self.plan),
            "secret": elements_to_hex(self.secret_elements, cfg.w),
            "verdict": self.verdict,
            "abort": self.abort.to_dict() if self.abort else None,
            "detection_events": self.detection_events,
            "agents": {
                str(a.index): a.to_dict(self.secret_elements, cfg.w)
                for a in self.agents
            },
            "rounds": self.transcript.summary(),
            "metrics": efficiency_report(cfg.n, cfg.m).to_dict(),
            "leakage": self.leakage,
        }

    def to_json_line(self) -> str:
        return canonical_json(self.to_dict())


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def plan_to_dict(plan: AdversaryPlan) -> dict:
    return {
        "eve": {
            "kind": plan.eve.kind,
            "basis": plan.eve.basis,
            "phases": list(plan.eve.phases),
            "channel": plan.eve.channel,
        },
        "rogues": {
            "agents": list(plan.rogues.agents),
            "actions": list(plan.rogues.actions),
            "mode": plan.rogues.mode,
            "fixed_value": (
                str(plan.rogues.fixed_value)
                if plan.rogues.fixed_value is not None else None
            ),
        },
    }


@lru_cache(maxsize=1024)
def config_hash(cfg: ProtocolConfig, plan: AdversaryPlan) -> str:
    blob = canonical_json({"config": cfg.to_dict(), "adversary": plan_to_dict(plan)})
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _agent_name(i: int) -> str:
    return f"bob{i}"


def _run_quantum_round(cfg, plan, rng, *, phase, r, p, encoders, phase_bits,
                       detection, pair=None):
    """Distribute, interleave decoys, transmit through taps, verify, measure.

    Returns (RoundOutcome, AbortInfo | None, transmission messages).
    """
    if cfg.source == "alice" and pair is None:
        transmitted = tuple(range(r - 1))  # the source keeps her own register
    else:
        transmitted = tuple(range(r))
    taps = plan.eve.taps_for(phase, transmitted)
    batch = distribute(r, p, cfg.backing, taps=taps, transmitted=transmitted,
                       encoders=encoders)

    suffix = "" if pair is None else f":pair{pair[0]}-{pair[1]}"
    source_name = "alice" if cfg.source == "alice" else "source"
    tx_messages = [
        Message(source_name, _channel_owner(ch, r, pair), None,
                f"phase{phase}{suffix}")
        for ch in transmitted
    ]

    if taps:
        dplan = insert_decoys(batch, DecoySpec(cfg.decoys), rng)
        transmit(batch, dplan, rng)
        mismatches, verdict = verify_decoys(dplan, dplan.records, rng)
        if mismatches:
            detection.append({
                "phase": f"phase{phase}", "kind": "decoy_mismatch",
                "count": mismatches, "pair": list(pair) if pair else None,
            })
        if verdict == "abort":
            abort = AbortInfo(
                f"phase{phase}", "decoy_mismatch",
                {"mismatches": mismatches, "pair": list(pair) if pair else None},
            )
            return None, abort, tx_messages
    # Untapped rounds skip decoy bookkeeping entirely: an untouched
    # eigenstate can never mismatch, so the statistics are unchanged.
    return batch.encode_and_measure(phase_bits, rng), None, tx_messages


def _channel_owner(ch, r, pair):
    if pair is not None:
        return _agent_name(pair[ch])
    return _agent_name(ch) if ch < r - 1 else "alice"


def phase1_distribute(cfg: ProtocolConfig, s: BitVector, plan: AdversaryPlan,
                      rng, transcript: Transcript | None = None):
    """Run the distribution circuit plus its one parallel classical round.

    Returns (per-agent received vectors | None, transcript, abort, detection).
    """
    n, m = cfg.n, cfg.m
    if s.length != n * m:
        raise ValueError(f"secret length {s.length} != n*m = {n * m}")
    transcript = transcript if transcript is not None else Transcript()
    detection: list[dict] = []

    outcome, abort, tx = _run_quantum_round(
        cfg, plan, rng, phase=1, r=n + 1, p=n * m, encoders=(n,),
        phase_bits={n: s}, detection=detection,
    )
    transcript.add("phase1", "quantum", tx)
    if abort:
        return None, transcript, abort, detection

    a = SegmentedVector(outcome.registers[n], n, m)
    bobs = [SegmentedVector(outcome.registers[i], n, m) for i in range(n)]
    if not plan.eve.is_active_in(1):
        total = outcome.registers[n]
        for i in range(n):
            total = total ^ outcome.registers[i]
        assert total == s, "distribution round broke its XOR constraint"

    # One parallel round: alice and every agent j send segment i to agent i.
    messages = []
    received: dict[int, dict[str, BitVector]] = {i: {} for i in range(n)}
    for i in range(n):
        payload = a.segment(i)
        messages.append(Message("alice", _agent_name(i), payload, "phase1"))
        received[i]["alice"] = payload
        for j in range(n):
            if j == i:
                continue
            payload = rogue_transform(
                plan.rogues, j, "lie_phase1_comms", bobs[j].segment(i), rng
            )
            messages.append(Message(_agent_name(j), _agent_name(i), payload,
                                    "phase1"))
            received[i][_agent_name(j)] = payload
    transcript.add("phase1", "classical", messages)

    inputs = []
    for i in range(n):
        acc = received[i]["alice"] ^ bobs[i].segment(i)
        for j in range(n):
            if j != i:
                acc = acc ^ received[i][_agent_name(j)]
        inputs.append(acc)
    return inputs, transcript, None, detection


def phase2_verify(cfg: ProtocolConfig, agent_inputs, s: BitVector,
                  plan: AdversaryPlan, rng,
                  transcript: Transcript | None = None):
    """Every agent phases his extended slice into a fresh batch; the source
    checks the XOR chain against the original secret.

    Returns (verdict, transcript, abort, detection); an XOR mismatch is the
    verdict "abort", not an error.
    """
    n, m = cfg.n, cfg.m
    if len(agent_inputs) != n:
        raise ValueError(f"need one input vector per agent, got {len(agent_inputs)}")
    transcript = transcript if transcript is not None else Transcript()
    detection: list[dict] = []

    phase_bits = {
        i: extend_segment(agent_inputs[i], i, n) for i in range(n)
    }
    outcome, abort, tx = _run_quantum_round(
        cfg, plan, rng, phase=2, r=n + 1, p=n * m, encoders=tuple(range(n)),
        phase_bits=phase_bits, detection=detection,
    )
    transcript.add("phase2", "quantum", tx)
    if abort:
        return "abort", transcript, abort, detection

    messages = []
    reported = []
    for i in range(n):
        payload = rogue_transform(
            plan.rogues, i, "lie_phase2_report", outcome.registers[i], rng
        )
        messages.append(Message(_agent_name(i), "alice", payload, "phase2"))
        reported.append(payload)
    transcript.add("phase2", "classical", messages)

    computed = outcome.registers[n]
    for payload in reported:
        computed = computed ^ payload
    if computed == s:
        return "proceed", transcript, None, detection
    detection.append({"phase": "phase2", "kind": "xor_mismatch",
                      "computed": str(computed), "expected": str(s)})
    return "abort", transcript, AbortInfo(
        "phase2", "verification_failed",
        {"computed": str(computed), "expected": str(s)},
    ), detection


def phase3_consolidate(cfg: ProtocolConfig, agent_inputs, plan: AdversaryPlan,
                       rng, transcript: Transcript | None = None):
    """All pairwise exchanges plus one parallel round of n(n-1) reports,
    then per-agent robust decoding.

    Returns (agent results | None, transcript, abort, detection).
    """
    n, m = cfg.n, cfg.m
    transcript = transcript if transcript is not None else Transcript()
    detection: list[dict] = []

    # What each agent embeds: honest agents their received slice, phase-3
    # oracle liars a falsified vector (fresh per pair in random mode).
    measured: dict[tuple[int, int], BitVector] = {}
    embedded: dict[tuple[int, int], BitVector] = {}
    all_tx = []
    for i in range(n):
        for j in range(i + 1, n):
            emb_i = agent_inputs[i]
            if plan.rogues.lies(i, "lie_phase3_oracle"):
                emb_i = falsify(emb_i, plan.rogues.mode,
                                plan.rogues.fixed_value, rng)
            emb_j = agent_inputs[j]
            if plan.rogues.lies(j, "lie_phase3_oracle"):
                emb_j = falsify(emb_j, plan.rogues.mode,
                                plan.rogues.fixed_value, rng)
            outcome, abort, tx = _run_quantum_round(
                cfg, plan, rng, phase=3, r=2, p=m, encoders=(0, 1),
                phase_bits={0: emb_i, 1: emb_j},
                detection=detection, pair=(i, j),
            )
            all_tx.extend(tx)
            if abort:
                transcript.add("phase3", "quantum", all_tx)
                return None, transcript, abort, detection
            measured[(i, j)] = outcome.registers[0]
            measured[(j, i)] = outcome.registers[1]
            embedded[(i, j)] = emb_i
            embedded[(j, i)] = emb_j
    transcript.add("phase3", "quantum", all_tx)

    # One parallel classical round carrying all n(n-1) directed reports.
    messages = []
    reported: dict[tuple[int, int], BitVector] = {}
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            payload = rogue_transform(
                plan.rogues, i, "lie_phase3_report", measured[(i, j)], rng
            )
            messages.append(Message(_agent_name(i), _agent_name(j), payload,
                                    "phase3"))
            reported[(i, j)] = payload
    transcript.add("phase3", "classical", messages)

    results = []
    for i in range(n):
        loyal = i not in plan.rogues.agents
        res = AgentResult(i, loyal, s_i=agent_inputs[i])
        claimed = []
        for j in range(n):
            if j == i:
                # His own slice; a liar still privately knows what he embedded.
                vec = agent_inputs[i]
            else:
                vec = measured[(i, j)] ^ reported[(j, i)] ^ embedded[(i, j)]
            claimed.append(Share.from_bits(vec, j, cfg.w))
        res.claimed_shares = claimed
        try:
            decoded, support = robust_decode(claimed, cfg.split_config)
            res.reconstructed = decoded
            res.support = support
        except AmbiguousDecodeError as err:
            res.ambiguous = True
            res.support = err.support
            detection.append({"phase": "phase3", "kind": "ambiguous_decode",
                              "agent": i, "support": err.support})
        results.append(res)
    return results, transcript, None, detection


def run_protocol(cfg: ProtocolConfig, secret: bytes, plan: AdversaryPlan = HONEST_PLAN,
                 rng=None, seed: int | None = None,
                 trial: int | None = None, audit: bool = False) -> RunReport:
    """Split, distribute, verify, consolidate; deterministic given
    (config, secret, plan, seed).

    With audit=True (and enumerable sizes) the report carries a leakage
    block: exact total-variation distances of the eavesdropper's view
    between this run's secret and the all-zero reference secret.
    """
    if rng is None:
        seed = cfg.seed if seed is None else seed
        rng = np.random.default_rng(seed)
    plan.validate(cfg.n, cfg.k)
    elements = bytes_to_elements(secret, cfg.w)
    if len(elements) != cfg.elements:
        raise ValueError(
            f"secret encodes {len(elements)} field elements, "
            f"but m={cfg.m}, w={cfg.w} requires {cfg.elements}"
        )

    shares = split(elements, cfg.split_config, rng)
    s_vectors = [sh.to_bits() for sh in shares]
    s = concat_segments(s_vectors)

    transcript = Transcript()
    agents = [
        AgentResult(i, i not in plan.rogues.agents) for i in range(cfg.n)
    ]
    leakage = _leakage_block(cfg, plan, s) if audit else None

    def report(verdict, abort, detection, results=None):
        if results is not None:
            final_agents = results
        else:
            final_agents = agents
        return RunReport(
            config=cfg, plan=plan, secret_elements=tuple(elements),
            verdict=verdict, abort=abort, agents=final_agents,
            detection_events=detection, transcript=transcript,
            seed=seed, trial=trial, leakage=leakage,
        )

    inputs, transcript, abort, det1 = phase1_distribute(
        cfg, s, plan, rng, transcript
    )
    if abort:
        return report("abort", abort, det1)
    for agent, vec in zip(agents, inputs):
        agent.s_i = vec

    verdict, transcript, abort, det2 = phase2_verify(
        cfg, inputs, s, plan, rng, transcript
    )
    detection = det1 + det2
    if verdict != "proceed":
        return report("abort", abort, detection)

    results, transcript, abort, det3 = phase3_consolidate(
        cfg, inputs, plan, rng, transcript
    )
    detection += det3
    if abort:
        return report("abort", abort, detection)
    return report("proceed", None, detection, results)


def _leakage_block(cfg: ProtocolConfig, plan: AdversaryPlan, s: BitVector):
    """Exact view-distance audit of this run's secret against the zero secret."""
    from .adversary import leakage_audit

    zero = BitVector.zeros(s.length)
    block: dict = {"reference": "zero-secret"}
    for phase in (1, 2, 3):
        try:
            tv = leakage_audit(plan.eve, cfg, s, zero, phase=phase)
            block[f"phase{phase}_tv"] = f"{tv.numerator}/{tv.denominator}"
        except ValueError as err:  # capacity bound or unmodeled basis
            block[f"phase{phase}_tv"] = None
            block[f"phase{phase}_note"] = str(err)
    return block


def random_secret(cfg: ProtocolConfig, rng) -> bytes:
    """A uniformly random secret of the byte length cfg requires."""
    n_elements = cfg.elements
    if cfg.w == 4 and n_elements % 2:
        raise ValueError("nibble-width secrets need an even element count")
    n_bytes = n_elements if cfg.w == 8 else n_elements // 2
    return bytes(rng.bytes(n_bytes))
