"""Distributed, parallel, verifiable (k, n)-threshold quantum secret sharing.

Library layout:

- bitvec     bit-vector and segment algebra
- qsim       exact statevector simulator (ground-truth oracle)
- threshold  (k, n) Shamir sharing over GF(2^w) with robust decoding
- entangle   entanglement distribution, decoys, scalable outcome sampler
- adversary  eavesdropper strategies, rogue agents, leakage audits
- protocol   the three protocol phases and the run orchestrator
- metrics    qubit-efficiency ratios and empirical statistics
- cli        experiment driver (run / sweep / oracle-check / metrics / report)
"""

__version__ = "0.1.0"

from .bitvec import BitVector, SegmentedVector  # noqa: F401
from .qsim import RegisterLayout, StateVector  # noqa: F401
from .threshold import Share, SplitConfig, reconstruct, robust_decode, split  # noqa: F401
from .adversary import AdversaryPlan, EveStrategy, RogueBehavior, leakage_audit  # noqa: F401
from .protocol import ProtocolConfig, RunReport, run_protocol  # noqa: F401
from .metrics import efficiency_report, empirical_stats  # noqa: F401
