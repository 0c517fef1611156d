"""Observables tracked along trajectories.

Entropy of entanglement (base-2 von Neumann entropy of either reduced
density matrix, computed from the Schmidt spectrum of the amplitude
grid), overlap with the maximally entangled state, and the mean/variance
of the z-projection sum, bundled into per-event snapshots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .collective_spin import JointState, SampleSpec, mean_and_variance_jz_sum
from .numerics import singular_values
from .photon_channel import Channel

__all__ = [
    "MetricsSnapshot",
    "entropy_of_entanglement",
    "maximally_entangled_state",
    "overlap_psi0",
    "compute_snapshot",
]

# Schmidt weights below this contribute nothing to the entropy sum
_ENTROPY_FLOOR = 1e-15


@dataclass(frozen=True)
class MetricsSnapshot:
    """Observables recorded after one detection event."""

    n_detected: int
    channel: Channel | None
    entropy_bits: float
    overlap_psi0: float | None  # None when the samples differ in size
    mean_jz_sum: float
    variance_jz_sum: float


def entropy_of_entanglement(state: JointState) -> float:
    """Base-2 entropy of the Schmidt spectrum of the amplitude grid.

    Zero for a product state, log2(min(N1, N2) + 1) for a maximally
    entangled state.
    """
    sv = singular_values(state.amp)
    lam = sv * sv
    lam = lam[lam >= _ENTROPY_FLOOR]
    if lam.size == 0:
        return 0.0
    return max(float(-np.sum(lam * np.log2(lam))), 0.0)


def maximally_entangled_state(spec: SampleSpec) -> JointState:
    """Uniform superposition over opposite projections, sum_M |M,-M>.

    The unique joint null eigenstate of the counter-rotated spin
    combinations, and a fixed point of every photodetection update; only
    defined for equally sized samples.
    """
    d = spec.dim
    amp = np.zeros((d, d), dtype=np.complex128)
    idx = np.arange(d)
    amp[idx, d - 1 - idx] = 1.0 / math.sqrt(d)
    return JointState(spec, spec, amp)


def overlap_psi0(state: JointState) -> float:
    """Squared overlap with the maximally entangled state."""
    if state.spec1.n_atoms != state.spec2.n_atoms:
        raise ValueError(
            "overlap with the maximally entangled state requires equal sample sizes"
        )
    d = state.spec1.dim
    idx = np.arange(d)
    inner = state.amp[idx, d - 1 - idx].sum() / math.sqrt(d)
    return float(abs(inner) ** 2)


def compute_snapshot(
    state: JointState, n_detected: int, channel: Channel | None
) -> MetricsSnapshot:
    """Evaluate all tracked observables; enforces the entropy bound."""
    entropy = entropy_of_entanglement(state)
    bound = math.log2(min(state.spec1.dim, state.spec2.dim))
    if entropy > bound + 1e-9:
        raise AssertionError(
            f"entropy {entropy} exceeds the bound log2(min dim) = {bound}"
        )
    overlap = None
    if state.spec1.n_atoms == state.spec2.n_atoms:
        overlap = overlap_psi0(state)
    mean, var = mean_and_variance_jz_sum(state)
    return MetricsSnapshot(
        n_detected=n_detected,
        channel=channel,
        entropy_bits=entropy,
        overlap_psi0=overlap,
        mean_jz_sum=mean,
        variance_jz_sum=var,
    )
