"""Trajectory and ensemble drivers for the two measurement protocols.

Protocol "consecutive": detect a first block of photons (projecting
toward an eigenstate of the z-projection sum), rotate the samples by
opposite 90-degree angles, then detect the remaining photons, which
effectively measures the y-projection difference.

Protocol "continuous": apply the same small opposite rotation between
every pair of detection events, continuously exchanging the measured
spin combinations; the first photon sees the unrotated state.

Trajectories are deterministic functions of (configuration, seed):
stream i of a run derives from counter-based splitting of the base seed
(Philox keyed by SeedSequence(base_seed, spawn_key=(i,))), so ensembles
reproduce bit-for-bit at any parallelism.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .collective_spin import (
    JointState,
    SampleSpec,
    apply_counter_rotation,
    binomial_initial_state,
    norm,
)
from .entanglement import compute_snapshot, entropy_of_entanglement, overlap_psi0
from .errors import SimulationError
from .photon_channel import (
    Channel,
    ClampMode,
    ClampPolicy,
    PhysicalParams,
    detection_step,
)

__all__ = [
    "ProtocolKind",
    "Protocol",
    "TrajectoryRecord",
    "EnsembleStats",
    "rng_stream",
    "child_seed",
    "run_trajectory",
    "run_ensemble",
]


class ProtocolKind(enum.Enum):
    CONSECUTIVE_ZY = "consecutive"
    CONTINUOUS_ROTATION = "continuous"


@dataclass(frozen=True)
class Protocol:
    kind: ProtocolKind
    n_photons_total: int
    n_photons_before_rotation: int = 0  # consecutive only
    rotation_angle: float = math.pi / 2

    def __post_init__(self):
        if self.n_photons_total < 0:
            raise ValueError("n_photons_total must be nonnegative")
        if not (0 <= self.n_photons_before_rotation <= self.n_photons_total):
            raise ValueError(
                "n_photons_before_rotation must lie in [0, n_photons_total]"
            )
        if not np.isfinite(self.rotation_angle):
            raise ValueError("rotation_angle must be finite")

    @classmethod
    def consecutive_zy(
        cls, n_total: int, n_before: int, angle: float = math.pi / 2
    ) -> "Protocol":
        return cls(ProtocolKind.CONSECUTIVE_ZY, n_total, n_before, angle)

    @classmethod
    def continuous_rotation(cls, n_total: int, angle: float = math.pi / 5) -> "Protocol":
        return cls(ProtocolKind.CONTINUOUS_ROTATION, n_total, 0, angle)


def rng_stream(seed: int, index: int | None = None) -> np.random.Generator:
    """Deterministic uniform-[0,1) stream, splittable by counter.

    Philox (counter-based, platform-independent bit stream) keyed by
    SeedSequence(seed) or, for split streams, SeedSequence(seed,
    spawn_key=(index,)).
    """
    if index is None:
        ss = np.random.SeedSequence(seed)
    else:
        ss = np.random.SeedSequence(seed, spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed: int, index: int) -> int:
    """64-bit identity of the split stream (seed, index); labels records."""
    ss = np.random.SeedSequence(seed, spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class TrajectoryRecord:
    """Per-event observables of one trajectory, stored as column arrays."""

    seed: int  # split-stream identity (see child_seed)
    base_seed: int
    stream_index: int
    event_index: np.ndarray  # recorded events, 1-based
    channel: np.ndarray  # '+', '-', 'S'
    theta: np.ndarray  # NaN unless scatter
    entropy_bits: np.ndarray
    overlap_psi0: np.ndarray | None
    mean_jz_sum: np.ndarray
    variance_jz_sum: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray
    p_scatter: np.ndarray
    counts: tuple[int, int, int]  # (n_plus, n_minus, n_scatter)
    clamp_events: int
    final_norm: float
    final_entropy: float
    final_overlap: float | None

    @property
    def n_recorded(self) -> int:
        return int(self.event_index.size)


def run_trajectory(
    spec1: SampleSpec,
    spec2: SampleSpec,
    params: PhysicalParams,
    protocol: Protocol,
    policy: ClampPolicy | None = None,
    seed: int = 0,
    *,
    stream_index: int = 0,
    snapshot_stride: int = 1,
    initial_state: JointState | None = None,
) -> TrajectoryRecord:
    """Run one full trajectory and record strided per-event snapshots.

    Starts from the binomial product state unless `initial_state` is
    injected. Snapshots are taken at every event index divisible by
    `snapshot_stride`, plus the final event and (for the consecutive
    protocol) the last pre-rotation event. Channel counts cover every
    event regardless of stride. Deterministic given (arguments, seed).
    """
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")
    policy = policy if policy is not None else ClampPolicy()
    rng = rng_stream(seed, stream_index)
    state = initial_state.copy() if initial_state is not None else binomial_initial_state(spec1, spec2)

    idx_rows: list[int] = []
    chan_rows: list[str] = []
    theta_rows: list[float] = []
    ent_rows: list[float] = []
    ovl_rows: list[float] = []
    mean_rows: list[float] = []
    var_rows: list[float] = []
    pp_rows: list[float] = []
    pm_rows: list[float] = []
    ps_rows: list[float] = []
    n_plus = n_minus = n_scatter = 0
    equal_sizes = spec1.n_atoms == spec2.n_atoms

    consecutive = protocol.kind is ProtocolKind.CONSECUTIVE_ZY
    boundary = protocol.n_photons_before_rotation
    total = protocol.n_photons_total

    for event in range(1, total + 1):
        if consecutive and event == boundary + 1:
            state = apply_counter_rotation(state, protocol.rotation_angle)
        elif not consecutive and event > 1:
            state = apply_counter_rotation(state, protocol.rotation_angle)
        try:
            state, outcome = detection_step(state, params, policy, rng)
        except SimulationError as exc:
            exc.args = (f"event {event}: {exc.args[0]}",) + exc.args[1:]
            exc.event_index = event
            raise
        if outcome.channel is Channel.D_PLUS:
            n_plus += 1
        elif outcome.channel is Channel.D_MINUS:
            n_minus += 1
        else:
            n_scatter += 1
        record_now = (
            event % snapshot_stride == 0
            or event == total
            or (consecutive and event == boundary)
        )
        if record_now:
            snap = compute_snapshot(state, event, outcome.channel)
            idx_rows.append(event)
            chan_rows.append(outcome.channel.value)
            theta_rows.append(outcome.theta if outcome.theta is not None else math.nan)
            ent_rows.append(snap.entropy_bits)
            if equal_sizes:
                ovl_rows.append(snap.overlap_psi0)
            mean_rows.append(snap.mean_jz_sum)
            var_rows.append(snap.variance_jz_sum)
            pp_rows.append(outcome.p_plus)
            pm_rows.append(outcome.p_minus)
            ps_rows.append(outcome.p_scatter)

    final_entropy = ent_rows[-1] if idx_rows and idx_rows[-1] == total else entropy_of_entanglement(state)
    if equal_sizes:
        final_overlap = ovl_rows[-1] if idx_rows and idx_rows[-1] == total else overlap_psi0(state)
    else:
        final_overlap = None
    return TrajectoryRecord(
        seed=child_seed(seed, stream_index),
        base_seed=seed,
        stream_index=stream_index,
        event_index=np.asarray(idx_rows, dtype=np.int64),
        channel=np.asarray(chan_rows, dtype="<U1"),
        theta=np.asarray(theta_rows, dtype=np.float64),
        entropy_bits=np.asarray(ent_rows, dtype=np.float64),
        overlap_psi0=np.asarray(ovl_rows, dtype=np.float64) if equal_sizes else None,
        mean_jz_sum=np.asarray(mean_rows, dtype=np.float64),
        variance_jz_sum=np.asarray(var_rows, dtype=np.float64),
        p_plus=np.asarray(pp_rows, dtype=np.float64),
        p_minus=np.asarray(pm_rows, dtype=np.float64),
        p_scatter=np.asarray(ps_rows, dtype=np.float64),
        counts=(n_plus, n_minus, n_scatter),
        clamp_events=policy.clamp_events,
        final_norm=norm(state),
        final_entropy=final_entropy,
        final_overlap=final_overlap,
    )


@dataclass
class _Moments:
    """Streaming mean/M2 per recorded event index (Welford, mergeable)."""

    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def empty(cls, size: int) -> "_Moments":
        return cls(0, np.zeros(size), np.zeros(size))

    def push(self, values: np.ndarray) -> None:
        self.count += 1
        delta = values - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (values - self.mean)

    def merge(self, other: "_Moments") -> "_Moments":
        if self.count == 0:
            return _Moments(other.count, other.mean.copy(), other.m2.copy())
        if other.count == 0:
            return _Moments(self.count, self.mean.copy(), self.m2.copy())
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        m2 = self.m2 + other.m2 + delta * delta * (self.count * other.count / n)
        return _Moments(n, mean, m2)

    @property
    def variance(self) -> np.ndarray:
        """Unbiased variance; zero when fewer than two samples."""
        if self.count < 2:
            return np.zeros_like(self.mean)
        return np.maximum(self.m2 / (self.count - 1), 0.0)


@dataclass
class EnsembleStats:
    """Across-trajectory statistics at each recorded event index."""

    event_index: np.ndarray
    n_trajectories: int
    entropy: _Moments
    overlap: _Moments | None
    variance_jz: _Moments

    @property
    def mean_entropy(self) -> np.ndarray:
        return self.entropy.mean

    @property
    def std_entropy(self) -> np.ndarray:
        return np.sqrt(self.entropy.variance)

    @property
    def mean_overlap(self) -> np.ndarray | None:
        return None if self.overlap is None else self.overlap.mean

    @property
    def std_overlap(self) -> np.ndarray | None:
        return None if self.overlap is None else np.sqrt(self.overlap.variance)

    @property
    def mean_variance_jz(self) -> np.ndarray:
        return self.variance_jz.mean

    @classmethod
    def from_records(cls, records: list[TrajectoryRecord]) -> "EnsembleStats":
        if not records:
            raise ValueError("at least one trajectory record is required")
        index = records[0].event_index
        for rec in records[1:]:
            if not np.array_equal(rec.event_index, index):
                raise ValueError("records disagree on recorded event indices")
        with_overlap = all(rec.overlap_psi0 is not None for rec in records)
        entropy = _Moments.empty(index.size)
        overlap = _Moments.empty(index.size) if with_overlap else None
        variance_jz = _Moments.empty(index.size)
        for rec in records:  # fixed order => bit-reproducible aggregation
            entropy.push(rec.entropy_bits)
            if overlap is not None:
                overlap.push(rec.overlap_psi0)
            variance_jz.push(rec.variance_jz_sum)
        return cls(index.copy(), len(records), entropy, overlap, variance_jz)


@dataclass(frozen=True)
class _TrajectoryTask:
    spec1: SampleSpec
    spec2: SampleSpec
    params: PhysicalParams
    protocol: Protocol
    clamp_mode: ClampMode
    base_seed: int
    snapshot_stride: int


def _run_task(task: _TrajectoryTask, index: int) -> TrajectoryRecord:
    return run_trajectory(
        task.spec1,
        task.spec2,
        task.params,
        task.protocol,
        ClampPolicy(task.clamp_mode),
        task.base_seed,
        stream_index=index,
        snapshot_stride=task.snapshot_stride,
    )


def run_ensemble(
    spec1: SampleSpec,
    spec2: SampleSpec,
    params: PhysicalParams,
    protocol: Protocol,
    n_trajectories: int,
    base_seed: int = 0,
    parallelism: int = 1,
    *,
    clamp_mode: ClampMode = ClampMode.PERMISSIVE,
    snapshot_stride: int = 1,
    progress=None,
) -> tuple[EnsembleStats, list[TrajectoryRecord]]:
    """Run seeded trajectories 0..n-1 and aggregate streaming statistics.

    Trajectory i uses the split stream (base_seed, i); records are merged
    in stream order, so the result is identical for any parallelism. Any
    trajectory failure aborts the ensemble with the failing stream index
    in the message. `progress` is an optional callable taking the number
    of finished trajectories.
    """
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be >= 1")
    task = _TrajectoryTask(
        spec1, spec2, params, protocol, clamp_mode, base_seed, snapshot_stride
    )
    records: list[TrajectoryRecord] = []
    if parallelism <= 1:
        for i in range(n_trajectories):
            records.append(_run_task(task, i))
            if progress is not None:
                progress(len(records))
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            chunk = max(1, n_trajectories // (parallelism * 4))
            for rec in pool.map(
                _run_task,
                [task] * n_trajectories,
                range(n_trajectories),
                chunksize=chunk,
            ):
                records.append(rec)
                if progress is not None:
                    progress(len(records))
    records.sort(key=lambda r: r.stream_index)
    return EnsembleStats.from_records(records), records
