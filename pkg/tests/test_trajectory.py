import math
import random

import numpy as np
import pytest

from spinpair.collective_spin import SampleSpec
from spinpair.entanglement import maximally_entangled_state
from spinpair.errors import ParameterRegimeError
from spinpair.photon_channel import ClampMode, ClampPolicy, PhysicalParams
from spinpair.trajectory import (
    Protocol,
    ProtocolKind,
    _Moments,
    child_seed,
    rng_stream,
    run_ensemble,
    run_trajectory,
)

IDEAL = PhysicalParams(0.1, 0.0)
SCATTERING = PhysicalParams(0.1, 1.0 / 150.0)


def record_fields(rec):
    return (
        rec.event_index,
        rec.channel,
        rec.theta,
        rec.entropy_bits,
        rec.overlap_psi0,
        rec.mean_jz_sum,
        rec.variance_jz_sum,
        rec.p_plus,
        rec.p_minus,
        rec.p_scatter,
    )


class TestProtocol:
    def test_validation(self):
        with pytest.raises(ValueError):
            Protocol(ProtocolKind.CONSECUTIVE_ZY, 10, 11)
        with pytest.raises(ValueError):
            Protocol(ProtocolKind.CONSECUTIVE_ZY, -1)
        with pytest.raises(ValueError):
            Protocol(ProtocolKind.CONTINUOUS_ROTATION, 5, 0, math.inf)

    def test_factories(self):
        p = Protocol.consecutive_zy(5000, 2500)
        assert p.rotation_angle == math.pi / 2
        q = Protocol.continuous_rotation(5000)
        assert q.rotation_angle == math.pi / 5


class TestRngStream:
    def test_reproducible(self):
        a = rng_stream(42).random(1000)
        b = rng_stream(42).random(1000)
        np.testing.assert_array_equal(a, b)

    def test_split_streams_distinct(self):
        draws = [rng_stream(7, i).random(10_000) for i in range(8)]
        for i in range(8):
            for j in range(i + 1, 8):
                assert not np.array_equal(draws[i], draws[j])

    def test_child_seed_stable_and_distinct(self):
        assert child_seed(1, 0) == child_seed(1, 0)
        assert child_seed(1, 0) != child_seed(1, 1)
        assert child_seed(2, 0) != child_seed(1, 0)

    def test_uniform_mean(self):
        draws = rng_stream(2024).random(1_000_000)
        # 3 sigma with sigma = (1/sqrt(12)) / 1000
        assert abs(draws.mean() - 0.5) <= 0.002


class TestRunTrajectory:
    def test_zero_photons(self):
        rec = run_trajectory(
            SampleSpec(1), SampleSpec(1), IDEAL, Protocol.consecutive_zy(0, 0), seed=1
        )
        assert rec.counts == (0, 0, 0)
        assert rec.n_recorded == 0
        assert rec.final_entropy <= 1e-10
        assert rec.final_norm == pytest.approx(1.0, abs=1e-12)

    def test_deterministic_given_seed(self):
        args = (SampleSpec(10), SampleSpec(10), SCATTERING, Protocol.consecutive_zy(300, 150))
        a = run_trajectory(*args, seed=9)
        b = run_trajectory(*args, seed=9)
        for fa, fb in zip(record_fields(a), record_fields(b)):
            np.testing.assert_array_equal(fa, fb)
        assert a.seed == b.seed
        c = run_trajectory(*args, seed=10)
        assert not np.array_equal(a.channel, c.channel)

    def test_counts_sum_to_total(self):
        rec = run_trajectory(
            SampleSpec(12), SampleSpec(12), SCATTERING, Protocol.continuous_rotation(400), seed=3
        )
        assert sum(rec.counts) == 400

    def test_ideal_never_scatters(self):
        rec = run_trajectory(
            SampleSpec(12), SampleSpec(12), IDEAL, Protocol.consecutive_zy(2000, 1000), seed=4
        )
        assert rec.counts[2] == 0
        assert np.all(rec.p_scatter == 0.0)
        assert not np.any(rec.channel == "S")

    def test_psi0_injection_entropy_constant(self):
        psi0 = maximally_entangled_state(SampleSpec(20))
        for protocol in (Protocol.consecutive_zy(600, 300), Protocol.continuous_rotation(600)):
            rec = run_trajectory(
                SampleSpec(20),
                SampleSpec(20),
                SCATTERING,
                protocol,
                seed=11,
                snapshot_stride=50,
                initial_state=psi0,
            )
            np.testing.assert_allclose(rec.entropy_bits, math.log2(21), atol=1e-9)
            np.testing.assert_allclose(rec.overlap_psi0, 1.0, atol=1e-9)

    def test_snapshot_stride_and_boundary(self):
        rec = run_trajectory(
            SampleSpec(6), SampleSpec(6), IDEAL, Protocol.consecutive_zy(100, 55), seed=5,
            snapshot_stride=20,
        )
        # strided events plus the pre-rotation boundary and the final event
        assert list(rec.event_index) == [20, 40, 55, 60, 80, 100]

    def test_strict_mode_raises_with_event_index(self):
        with pytest.raises(ParameterRegimeError) as err:
            run_trajectory(
                SampleSpec(20),
                SampleSpec(20),
                SCATTERING,
                Protocol.consecutive_zy(10, 5),
                ClampPolicy(ClampMode.STRICT),
                seed=6,
            )
        assert err.value.event_index == 1
        assert "event 1" in str(err.value)

    def test_entropy_bound_every_snapshot(self):
        rec = run_trajectory(
            SampleSpec(8), SampleSpec(8), SCATTERING, Protocol.continuous_rotation(500), seed=12
        )
        assert np.all(rec.entropy_bits <= math.log2(9) + 1e-9)
        assert np.all(rec.entropy_bits >= 0.0)
        assert np.all(rec.overlap_psi0 >= 0.0)

    def test_unequal_samples_supported(self):
        rec = run_trajectory(
            SampleSpec(4), SampleSpec(7), SCATTERING, Protocol.consecutive_zy(50, 25), seed=13
        )
        assert rec.overlap_psi0 is None
        assert rec.final_overlap is None
        assert sum(rec.counts) == 50


class TestMoments:
    def test_merge_matches_sequential(self):
        rng = np.random.default_rng(0)
        rows = rng.normal(size=(30, 5))
        seq = _Moments.empty(5)
        for row in rows:
            seq.push(row)
        left = _Moments.empty(5)
        right = _Moments.empty(5)
        for row in rows[:11]:
            left.push(row)
        for row in rows[11:]:
            right.push(row)
        merged = left.merge(right)
        np.testing.assert_allclose(merged.mean, seq.mean, atol=1e-12)
        np.testing.assert_allclose(merged.variance, seq.variance, atol=1e-12)
        np.testing.assert_allclose(merged.mean, rows.mean(axis=0), atol=1e-12)
        np.testing.assert_allclose(merged.variance, rows.var(axis=0, ddof=1), atol=1e-12)

    def test_merge_order_independent(self):
        rng = np.random.default_rng(1)
        chunks = [rng.normal(size=(rng.integers(1, 6), 3)) for _ in range(6)]
        moments = []
        for chunk in chunks:
            m = _Moments.empty(3)
            for row in chunk:
                m.push(row)
            moments.append(m)
        ref = moments[0]
        for m in moments[1:]:
            ref = ref.merge(m)
        shuffled = moments[:]
        random.Random(3).shuffle(shuffled)
        alt = shuffled[0]
        for m in shuffled[1:]:
            alt = alt.merge(m)
        np.testing.assert_allclose(alt.mean, ref.mean, atol=1e-12)
        np.testing.assert_allclose(alt.variance, ref.variance, atol=1e-12)


class TestRunEnsemble:
    def test_single_trajectory_stats(self):
        stats, records = run_ensemble(
            SampleSpec(6), SampleSpec(6), IDEAL, Protocol.consecutive_zy(80, 40), 1, base_seed=21
        )
        assert stats.n_trajectories == 1
        np.testing.assert_array_equal(stats.mean_entropy, records[0].entropy_bits)
        np.testing.assert_array_equal(stats.std_entropy, np.zeros_like(records[0].entropy_bits))

    def test_parallelism_identical(self):
        args = (SampleSpec(8), SampleSpec(8), SCATTERING, Protocol.consecutive_zy(120, 60), 6)
        stats1, recs1 = run_ensemble(*args, base_seed=33, parallelism=1)
        stats2, recs2 = run_ensemble(*args, base_seed=33, parallelism=3)
        np.testing.assert_array_equal(stats1.mean_entropy, stats2.mean_entropy)
        np.testing.assert_array_equal(stats1.std_entropy, stats2.std_entropy)
        for a, b in zip(recs1, recs2):
            np.testing.assert_array_equal(a.channel, b.channel)
            np.testing.assert_array_equal(a.entropy_bits, b.entropy_bits)

    def test_seeds_are_split_streams(self):
        _, records = run_ensemble(
            SampleSpec(4), SampleSpec(4), IDEAL, Protocol.consecutive_zy(30, 15), 3, base_seed=5
        )
        assert [r.seed for r in records] == [child_seed(5, i) for i in range(3)]
        direct = run_trajectory(
            SampleSpec(4), SampleSpec(4), IDEAL, Protocol.consecutive_zy(30, 15),
            seed=5, stream_index=1,
        )
        np.testing.assert_array_equal(direct.channel, records[1].channel)

    def test_requires_at_least_one(self):
        with pytest.raises(ValueError):
            run_ensemble(
                SampleSpec(2), SampleSpec(2), IDEAL, Protocol.consecutive_zy(4, 2), 0
            )


class TestVarianceCollapse:
    def test_paper_scale_phase_one_typical_trajectory(self):
        # pinned seed; the typical-case collapse is below 0.01 from an
        # initial variance of 10 (a small fraction of seeds retain one
        # unresolved occupancy pair and end higher; see the acceptance
        # suite for the ensemble-level bound)
        rec = run_trajectory(
            SampleSpec(20),
            SampleSpec(20),
            IDEAL,
            Protocol.consecutive_zy(2500, 2500),
            seed=31415,
            snapshot_stride=2500,
        )
        assert rec.variance_jz_sum[-1] < 0.01

    def test_phase_one_shrinks_variance(self):
        # short ensemble version of the measurement-collapse behavior
        stats, records = run_ensemble(
            SampleSpec(10),
            SampleSpec(10),
            IDEAL,
            Protocol.consecutive_zy(800, 800),
            5,
            base_seed=99,
            snapshot_stride=800,
        )
        initial_variance = 10.0 / 2.0  # two samples of N/4 each
        for rec in records:
            assert rec.variance_jz_sum[-1] < 0.05 * initial_variance
