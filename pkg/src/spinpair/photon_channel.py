"""One photodetection event: branch probabilities, sampling, state updates.

A probe photon traversing the interferometer either reaches detector
D+ (bright port), detector D- (dark port), or is spontaneously scattered
into a direction resolved by a surrounding spherical detector. All three
updates are diagonal in the product basis and depend on a cell only
through the occupancy n of the probed level:

    D+/D-:   amp *= (1 +/- s(n) e^{-i delta_tau n}) / 2
    scatter: amp *= n (direction-independent after normalization)

with the no-scattering amplitude s(n) = sqrt(1 - xi n^2) and the
per-photon scattering scale xi = delta_tau * gamma_over_delta. The
second-order treatment behind these factors requires xi n^2 << 1; cells
that violate it are handled by the clamp policy.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .collective_spin import JointState, normalize, occupancy_weights
from .errors import DegenerateBranchError, ParameterRegimeError

__all__ = [
    "PhysicalParams",
    "Channel",
    "BranchOutcome",
    "ClampMode",
    "ClampPolicy",
    "branch_probabilities",
    "apply_detection_plus",
    "apply_detection_minus",
    "sample_scatter_direction",
    "apply_scatter",
    "detection_step",
]

# amplitudes below this weight cannot trigger the strict regime check
_SUPPORT_EPS = 1e-300


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensionless interaction knobs.

    delta_tau: phase imprinted on the probe per atom in the probed level.
    gamma_over_delta: linewidth-to-detuning ratio; 0 disables scattering.
    The derived scatter_scale = delta_tau * gamma_over_delta is the
    per-photon, per-atom-squared spontaneous-scattering probability.
    """

    delta_tau: float
    gamma_over_delta: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.delta_tau < math.pi):
            raise ValueError(f"delta_tau must lie in (0, pi), got {self.delta_tau}")
        if not (0.0 <= self.gamma_over_delta < 1.0):
            raise ValueError(
                f"gamma_over_delta must lie in [0, 1), got {self.gamma_over_delta}"
            )

    @property
    def scatter_scale(self) -> float:
        return self.delta_tau * self.gamma_over_delta


class Channel(enum.Enum):
    D_PLUS = "+"
    D_MINUS = "-"
    SCATTER = "S"


class ClampMode(enum.Enum):
    STRICT = "strict"
    PERMISSIVE = "permissive"


@dataclass
class ClampPolicy:
    """What to do when xi * n^2 > 1 on a populated cell.

    Strict refuses the parameter set; Permissive clamps the radicand at
    zero, caps the per-cell scatter weight at one, renormalizes the
    probability triple, and counts the events for reporting.
    """

    mode: ClampMode = ClampMode.PERMISSIVE
    clamp_events: int = 0


@dataclass(frozen=True)
class BranchOutcome:
    """Record of one photodetection event."""

    channel: Channel
    p_plus: float
    p_minus: float
    p_scatter: float
    theta: float | None = None  # angle from the dipole axis, scatter only
    phi: float | None = None  # uniform azimuth, recorded only

    @property
    def probabilities(self) -> tuple[float, float, float]:
        return (self.p_plus, self.p_minus, self.p_scatter)


def _clamped_radicand(state: JointState, params: PhysicalParams, policy: ClampPolicy):
    """Shared clamp handling: returns (occupancy, xi*n^2 capped at 1, clamp fired)."""
    occ = occupancy_weights(state)
    xi_n2 = params.scatter_scale * occ * occ
    over = xi_n2 > 1.0
    fired = False
    if over.any():
        populated = np.abs(state.amp) ** 2 > _SUPPORT_EPS
        if (over & populated).any():
            if policy.mode is ClampMode.STRICT:
                n_max = float(occ[over & populated].max())
                raise ParameterRegimeError(
                    "second-order update invalid: scatter_scale * n^2 = "
                    f"{params.scatter_scale * n_max ** 2:.4g} > 1 at occupancy {n_max:.0f} "
                    "(strict clamp mode)"
                )
            fired = True
        xi_n2 = np.minimum(xi_n2, 1.0)
    return occ, xi_n2, fired


def branch_probabilities(
    state: JointState, params: PhysicalParams, policy: ClampPolicy
) -> tuple[float, float, float]:
    """Probabilities (p_plus, p_minus, p_scatter) for the next photon.

    p+- sums |amp|^2 |1 +- s e^{-i phase}|^2 / 4 over the grid and the
    scatter probability sums |amp|^2 min(xi n^2, 1) / 2; the triple sums
    to one. In permissive mode the triple is renormalized by its sum
    whenever a clamp fired.
    """
    occ, xi_n2, fired = _clamped_radicand(state, params, policy)
    w = np.abs(state.amp) ** 2
    s = np.sqrt(1.0 - xi_n2)
    cos_phase = np.cos(params.delta_tau * occ)
    # |1 +- s e^{-i phase}|^2 / 4 = (1 + s^2 +- 2 s cos phase) / 4
    base = 0.25 * (1.0 + s * s)
    cross = 0.5 * s * cos_phase
    p_plus = float(np.sum(w * (base + cross)))
    p_minus = float(np.sum(w * (base - cross)))
    p_scatter = float(np.sum(w * (0.5 * xi_n2)))
    if fired:
        policy.clamp_events += 1
        total = p_plus + p_minus + p_scatter
        p_plus /= total
        p_minus /= total
        p_scatter /= total
    return p_plus, p_minus, p_scatter


def _detector_factors(
    state: JointState, params: PhysicalParams, policy: ClampPolicy, sign: float
) -> np.ndarray:
    occ, xi_n2, _ = _clamped_radicand(state, params, policy)
    s = np.sqrt(1.0 - xi_n2)
    return 0.5 * (1.0 + sign * s * np.exp(-1j * params.delta_tau * occ))


def apply_detection_plus(
    state: JointState, params: PhysicalParams, policy: ClampPolicy
) -> JointState:
    """Conditional state after a click in D+ (normalized).

    The pre-normalization squared norm equals p_plus.
    """
    amp = state.amp * _detector_factors(state, params, policy, +1.0)
    return normalize(JointState(state.spec1, state.spec2, amp))


def apply_detection_minus(
    state: JointState, params: PhysicalParams, policy: ClampPolicy
) -> JointState:
    """Conditional state after a click in D- (normalized).

    Cells with zero occupancy are annihilated: a non-interacting state
    never reaches the dark port.
    """
    amp = state.amp * _detector_factors(state, params, policy, -1.0)
    return normalize(JointState(state.spec1, state.spec2, amp))


def sample_scatter_direction(rng: np.random.Generator) -> tuple[float, float]:
    """Draw (theta, phi) from the dipole radiation pattern.

    theta (angle from the dipole axis) has density (3/4) sin^3 theta on
    [0, pi]; the cubic CDF inverts in closed form. phi is uniform. Draw
    order is theta first, then phi.
    """
    r = rng.random()
    u = 2.0 * math.cos(math.acos(2.0 * r - 1.0) / 3.0 + 4.0 * math.pi / 3.0)
    theta = math.acos(min(1.0, max(-1.0, u)))
    phi = 2.0 * math.pi * rng.random()
    return theta, phi


def apply_scatter(
    state: JointState, params: PhysicalParams, theta: float, policy: ClampPolicy
) -> JointState:
    """Conditional state after a scattered photon is detected.

    The direction-dependent factor is common to every cell, so the
    normalized state is amp * n / ||amp * n|| independent of theta. A
    state supported only on zero occupancy cannot scatter; selecting this
    branch there signals a sampler bug.
    """
    occ = occupancy_weights(state)
    amp = state.amp * occ
    try:
        return normalize(JointState(state.spec1, state.spec2, amp))
    except DegenerateBranchError:
        raise DegenerateBranchError(
            "scatter branch selected but all weight sits on zero occupancy"
        ) from None


def detection_step(
    state: JointState,
    params: PhysicalParams,
    policy: ClampPolicy,
    rng: np.random.Generator,
) -> tuple[JointState, BranchOutcome]:
    """Sample one photodetection event and apply its update.

    Two uniforms drive the selection: r1 decides scatter vs detector,
    then r2 decides D+ vs D- through the conditional probability
    p_plus / (1 - p_scatter). A scatter consumes two additional uniforms
    for (theta, phi). This draw order is part of the reproducibility
    contract.
    """
    p_plus, p_minus, p_scatter = branch_probabilities(state, params, policy)
    r1 = rng.random()
    if r1 < p_scatter:
        theta, phi = sample_scatter_direction(rng)
        new_state = apply_scatter(state, params, theta, policy)
        outcome = BranchOutcome(Channel.SCATTER, p_plus, p_minus, p_scatter, theta, phi)
    else:
        p_plus_cond = p_plus / (1.0 - p_scatter)
        r2 = rng.random()
        if r2 < p_plus_cond:
            new_state = apply_detection_plus(state, params, policy)
            outcome = BranchOutcome(Channel.D_PLUS, p_plus, p_minus, p_scatter)
        else:
            new_state = apply_detection_minus(state, params, policy)
            outcome = BranchOutcome(Channel.D_MINUS, p_plus, p_minus, p_scatter)
    return new_state, outcome
