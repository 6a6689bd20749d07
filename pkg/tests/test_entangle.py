import math
from collections import Counter

import numpy as np
import pytest

from dpvqss.bitvec import BitVector, CapacityError
from dpvqss.entangle import (
    ChannelTap,
    DecoySpec,
    IntegrityError,
    distribute,
    insert_decoys,
    sample_icpqc_outcomes,
    sample_idpqc_outcomes,
    transmit,
    verify_decoys,
)
from dpvqss.metrics import chi_square_homogeneity

SQRT1_2 = 1.0 / math.sqrt(2.0)


def bv(text):
    return BitVector.from_string(text)


def xor_all(vectors):
    acc = BitVector.zeros(vectors[0].length)
    for v in vectors:
        acc = acc ^ v
    return acc


def outcome_key(outcome):
    key = 0
    width = 0
    for reg in outcome.registers:
        key |= reg.value << width
        width += reg.length
    for ch in sorted(outcome.eve):
        key |= outcome.eve[ch].value << width
        width += outcome.eve[ch].length
    return key


class TestDistributeOracle:
    def test_bell_pair(self):
        batch = distribute(2, 1, "oracle", encoders=())
        assert batch.state.amplitude(0b00) == pytest.approx(SQRT1_2)
        assert batch.state.amplitude(0b11) == pytest.approx(SQRT1_2)

    def test_tensor_power_of_ghz3(self):
        # Two GHZ_3 tuples across three 2-qubit registers: amplitude 1/2 on
        # every |x>|x>|x> pattern.
        batch = distribute(3, 2, "oracle", encoders=())
        for xv in range(4):
            idx = xv | (xv << 2) | (xv << 4)
            assert batch.state.amplitude(idx) == pytest.approx(0.5)
        assert batch.state.amplitude(0b000001) == pytest.approx(0.0)

    def test_oracle_capacity_refusal(self):
        with pytest.raises(CapacityError):
            distribute(5, 8, "oracle", encoders=(4,))


class TestHonestSampler:
    def test_constraint_holds_in_every_draw(self):
        rng = np.random.default_rng(40)
        s = bv("1011")
        for _ in range(100_000):
            out = sample_idpqc_outcomes(s, n=2, m=2, rng=rng)
            assert xor_all([out.a] + out.b) == s

    def test_small_case_uniform_support(self):
        rng = np.random.default_rng(41)
        counts = Counter()
        trials = 4000
        for _ in range(trials):
            out = sample_idpqc_outcomes(bv("1"), n=1, m=1, rng=rng)
            counts[(out.a.value, out.b[0].value)] += 1
        assert set(counts) == {(0, 1), (1, 0)}
        for c in counts.values():
            assert abs(c / trials - 0.5) < 0.05

    def test_zero_secret_restates_constraint(self):
        rng = np.random.default_rng(42)
        s = BitVector.zeros(6)
        for _ in range(200):
            out = sample_idpqc_outcomes(s, n=3, m=2, rng=rng)
            assert xor_all(out.b) == out.a


class TestIcpqcSampler:
    def test_single_bit_difference(self):
        rng = np.random.default_rng(43)
        counts = Counter()
        for _ in range(2000):
            bi, bj = sample_icpqc_outcomes(bv("0"), bv("1"), rng)
            counts[(bi.value, bj.value)] += 1
        assert set(counts) == {(0, 1), (1, 0)}

    def test_equal_vectors_give_equal_outcomes(self):
        rng = np.random.default_rng(44)
        s = bv("1101")
        for _ in range(200):
            bi, bj = sample_icpqc_outcomes(s, s, rng)
            assert bi == bj

    def test_xor_matches_in_every_draw(self):
        rng = np.random.default_rng(45)
        si, sj = bv("10110101"), bv("01110010")
        for _ in range(100_000):
            bi, bj = sample_icpqc_outcomes(si, sj, rng)
            assert bi ^ bj == si ^ sj


class TestSamplerOracleEquivalence:
    def idpqc_oracle_counts(self, s, n, m, shots, rng):
        batch = distribute(
            n + 1, n * m, "oracle", transmitted=range(n), encoders=(n,)
        )
        outs = batch.sample_outcomes({n: s}, shots, rng)
        violations = sum(
            1 for o in outs if xor_all(o.registers) != s
        )
        return Counter(outcome_key(o) for o in outs), violations

    def test_distributions_match(self):
        rng = np.random.default_rng(46)
        n, m, shots = 2, 1, 10_000
        for s in (bv("01"), bv("11")):
            oracle_counts, violations = self.idpqc_oracle_counts(s, n, m, shots, rng)
            assert violations == 0
            sampler_counts = Counter()
            for _ in range(shots):
                out = sample_idpqc_outcomes(s, n, m, rng)
                key = 0
                width = 0
                for reg in out.b + [out.a]:
                    key |= reg.value << width
                    width += reg.length
                sampler_counts[key] += 1
            # Oracle support must sit inside the sampler's constraint set.
            support = set(sampler_counts)
            assert set(oracle_counts) <= support
            p = chi_square_homogeneity(oracle_counts, sampler_counts)
            assert p > 0.001

    def test_subset_marginals_exactly_uniform(self):
        # From the exact pre-measurement state, every proper register subset
        # is uniform no matter the secret.
        for s in (bv("00"), bv("10"), bv("11")):
            batch = distribute(3, 2, "oracle", transmitted=(0, 1), encoders=(2,))
            state = batch.final_state({2: s})
            probs = np.abs(state.amps.reshape([2] * state.q)) ** 2
            # Register i occupies qubits [2i, 2i+1]; axes are reversed.
            for keep in ((0,), (1,), (2,), (0, 1), (0, 2), (1, 2)):
                axes_keep = set()
                for reg in keep:
                    axes_keep |= {state.q - 1 - (2 * reg), state.q - 1 - (2 * reg + 1)}
                drop = tuple(ax for ax in range(state.q) if ax not in axes_keep)
                marg = probs.sum(axis=drop).reshape(-1)
                assert np.allclose(marg, 1.0 / len(marg), atol=1e-9)

    def test_sampler_subset_independent_of_secret(self):
        rng = np.random.default_rng(47)
        trials = 100_000
        dists = []
        for s in (bv("00"), bv("11")):
            counts = Counter()
            for _ in range(trials):
                out = sample_idpqc_outcomes(s, n=1, m=2, rng=rng)
                counts[out.b[0].value] += 1
            dists.append({k: v / trials for k, v in counts.items()})
        tv = sum(
            abs(dists[0].get(k, 0) - dists[1].get(k, 0))
            for k in set(dists[0]) | set(dists[1])
        ) / 2
        assert tv < 0.02


class TestTapPhysics:
    """Cross-validate the sampler's per-tuple attack model against the oracle."""

    def joint_counts(self, mode, tap, s, n, m, shots, rng):
        counts = Counter()
        for _ in range(shots):
            batch = distribute(
                n + 1, n * m, mode,
                taps={0: tap}, transmitted=range(n), encoders=(n,),
            )
            transmit(batch, insert_decoys(batch, DecoySpec(0), rng), rng)
            out = batch.encode_and_measure({n: s}, rng)
            counts[outcome_key(out)] += 1
        return counts

    def joint_counts_oracle_batched(self, tap, s, n, m, shots, rng):
        batch = distribute(
            n + 1, n * m, "oracle",
            taps={0: tap}, transmitted=range(n), encoders=(n,),
        )
        transmit(batch, insert_decoys(batch, DecoySpec(0), rng), rng)
        outs = batch.sample_outcomes({n: s}, shots, rng)
        return Counter(outcome_key(o) for o in outs)

    @pytest.mark.parametrize(
        "tap",
        [
            ChannelTap("measure_resend"),
            ChannelTap("intercept_resend", "computational"),
            ChannelTap("intercept_resend", "random"),
        ],
    )
    def test_measuring_taps_match_oracle(self, tap):
        rng = np.random.default_rng(48)
        s, n, m, shots = bv("10"), 1, 2, 6000
        oracle = self.joint_counts("oracle", tap, s, n, m, shots, rng)
        sampler = self.joint_counts("sampler", tap, s, n, m, shots, rng)
        assert chi_square_homogeneity(oracle, sampler) > 0.001

    def test_entangle_tap_matches_oracle(self):
        rng = np.random.default_rng(49)
        tap = ChannelTap("entangle_measure")
        s, n, m, shots = bv("10"), 2, 1, 8000
        oracle = self.joint_counts_oracle_batched(tap, s, n, m, shots, rng)
        sampler = self.joint_counts("sampler", tap, s, n, m, shots, rng)
        assert chi_square_homogeneity(oracle, sampler) > 0.001

    def test_entangle_tap_extends_constraint(self):
        # With one entangling ancilla per tuple the XOR constraint gains
        # Eve's vector, which stays marginally uniform.
        rng = np.random.default_rng(50)
        s = bv("1001")
        ones = 0
        trials = 4000
        for _ in range(trials):
            batch = distribute(
                3, 4, "sampler",
                taps={0: ChannelTap("entangle_measure")},
                transmitted=(0, 1), encoders=(2,),
            )
            transmit(batch, insert_decoys(batch, DecoySpec(0), rng), rng)
            out = batch.encode_and_measure({2: s}, rng)
            e = out.eve[0]
            assert xor_all(out.registers) ^ e == s
            ones += e.weight()
        freq = ones / (trials * 4)
        assert abs(freq - 0.5) < 0.02


class TestDecoys:
    def make_batch(self, taps=None, r=2, p=4):
        return distribute(r, p, "sampler", taps=taps, transmitted=(0,), encoders=(1,))

    def test_zero_decoys_is_identity(self):
        rng = np.random.default_rng(51)
        batch = self.make_batch()
        plan = insert_decoys(batch, DecoySpec(0), rng)
        assert plan.decoys == []
        assert [kind for kind, _ in plan.slots[0]] == ["payload"] * 4

    def test_seeded_positions_reproducible(self):
        batch = self.make_batch()
        plan_a = insert_decoys(batch, DecoySpec(4), np.random.default_rng(52))
        plan_b = insert_decoys(self.make_batch(), DecoySpec(4), np.random.default_rng(52))
        assert plan_a.records == plan_b.records
        assert plan_a.dump() == plan_b.dump()

    def test_labels_uniform(self):
        rng = np.random.default_rng(53)
        counts = Counter()
        for _ in range(2500):
            plan = insert_decoys(self.make_batch(), DecoySpec(4), rng)
            for d in plan.decoys:
                counts[d.label] += 1
        total = sum(counts.values())
        assert total == 10_000
        for label in "01+-":
            assert abs(counts[label] / total - 0.25) < 0.02

    def test_dump_format(self):
        rng = np.random.default_rng(54)
        plan = insert_decoys(self.make_batch(), DecoySpec(2), rng)
        lines = plan.dump()
        assert len(lines) == 6
        assert all(line.startswith("0, ") for line in lines)
        assert sum(", decoy, " in line for line in lines) == 2

    def test_untouched_channel_never_mismatches(self):
        rng = np.random.default_rng(55)
        for _ in range(200):
            batch = self.make_batch()
            plan = insert_decoys(batch, DecoySpec(8), rng)
            transmit(batch, plan, rng)
            mismatches, verdict = verify_decoys(plan, plan.records, rng)
            assert (mismatches, verdict) == (0, "proceed")

    def detection_rate(self, tap, d, trials, seed):
        rng = np.random.default_rng(seed)
        aborts = 0
        for _ in range(trials):
            batch = self.make_batch(taps={0: tap})
            plan = insert_decoys(batch, DecoySpec(d), rng)
            transmit(batch, plan, rng)
            _, verdict = verify_decoys(plan, plan.records, rng)
            aborts += verdict == "abort"
        return aborts / trials

    def test_intercept_resend_detection(self):
        rate = self.detection_rate(ChannelTap("intercept_resend"), 16, 1000, 56)
        assert rate >= 0.98

    def test_measure_resend_matches_intercept_z(self):
        a = self.detection_rate(ChannelTap("measure_resend"), 8, 800, 57)
        b = self.detection_rate(ChannelTap("intercept_resend"), 8, 800, 58)
        # Same physics: both collapse decoys in the computational basis.
        assert abs(a - b) < 0.05

    def test_entangle_tap_detected_at_same_rate(self):
        rate = self.detection_rate(ChannelTap("entangle_measure"), 16, 500, 59)
        assert rate >= 0.98

    def test_record_mismatch_raises(self):
        rng = np.random.default_rng(60)
        batch = self.make_batch()
        plan = insert_decoys(batch, DecoySpec(4), rng)
        transmit(batch, plan, rng)
        bad = list(plan.records)
        bad[0] = (bad[0][0], bad[0][1], "0" if bad[0][2] != "0" else "1")
        with pytest.raises(IntegrityError):
            verify_decoys(plan, bad, rng)


class TestBatchLifecycle:
    def test_double_measurement_rejected(self):
        rng = np.random.default_rng(61)
        batch = distribute(2, 2, "sampler", encoders=(1,))
        batch.encode_and_measure({1: bv("10")}, rng)
        with pytest.raises(RuntimeError):
            batch.encode_and_measure({1: bv("10")}, rng)

    def test_tapped_batch_requires_transmission(self):
        rng = np.random.default_rng(62)
        batch = distribute(
            2, 2, "sampler", taps={0: ChannelTap("measure_resend")},
            transmitted=(0,), encoders=(1,),
        )
        with pytest.raises(RuntimeError):
            batch.encode_and_measure({1: bv("10")}, rng)

    def test_tap_on_untransmitted_channel_rejected(self):
        with pytest.raises(ValueError):
            distribute(
                2, 2, "sampler", taps={1: ChannelTap("measure_resend")},
                transmitted=(0,), encoders=(1,),
            )
