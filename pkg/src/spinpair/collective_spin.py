"""Joint state of two atomic samples on the Dicke product grid.

Each sample of N two-level atoms is restricted to its symmetric sector
with total spin J = N/2; the joint pure state is a complex amplitude
grid over the product basis |M1, M2> with M_i = -J_i..J_i. Row/column
index i maps to M = i - J. This module provides the binomial initial
state (every atom in the balanced superposition of the two stable
levels), spin observables of the z-projection sum, the occupancy of the
probed level, and opposite x-axis rotations of the two samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateBranchError, UnsupportedSizeError
from .numerics import SymTridiag, eig_sym_tridiag

__all__ = [
    "SampleSpec",
    "JointState",
    "binomial_initial_state",
    "occupancy_weights",
    "norm",
    "normalize",
    "mean_and_variance_jz_sum",
    "jx_matrix",
    "wigner_rotation",
    "apply_counter_rotation",
    "fidelity",
]

_MAX_ATOMS = 10_000


@dataclass(frozen=True)
class SampleSpec:
    """One atomic sample: N atoms, spin J = N/2, basis dimension N + 1."""

    n_atoms: int

    def __post_init__(self):
        if not isinstance(self.n_atoms, (int, np.integer)) or self.n_atoms < 1:
            raise ValueError(f"n_atoms must be a positive integer, got {self.n_atoms!r}")
        object.__setattr__(self, "n_atoms", int(self.n_atoms))

    @property
    def j(self) -> float:
        return self.n_atoms / 2.0

    @property
    def dim(self) -> int:
        return self.n_atoms + 1

    def m_values(self) -> np.ndarray:
        """Spin projections M = i - J for basis index i."""
        return np.arange(self.dim) - self.j


@dataclass(eq=False)
class JointState:
    """Pure state of the two samples: complex amplitudes amp[i1, i2].

    Kept unit-norm by every public operation that returns a state.
    """

    spec1: SampleSpec
    spec2: SampleSpec
    amp: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amp, dtype=np.complex128)
        if amp.shape != (self.spec1.dim, self.spec2.dim):
            raise ValueError(
                f"amplitude grid shape {amp.shape} does not match specs "
                f"({self.spec1.dim}, {self.spec2.dim})"
            )
        self.amp = amp

    def copy(self) -> "JointState":
        return JointState(self.spec1, self.spec2, self.amp.copy())


def binomial_initial_state(spec1: SampleSpec, spec2: SampleSpec) -> JointState:
    """Product state with every atom in the balanced superposition.

    Per sample the amplitudes are (1/2)^J sqrt((2J)! / ((J+M)!(J-M)!)),
    i.e. the populations of the probed level follow a binomial
    distribution with probability 1/2. Computed with log-factorials so
    large N does not overflow.
    """
    amp = np.outer(_binomial_amplitudes(spec1.n_atoms), _binomial_amplitudes(spec2.n_atoms))
    amp = amp.astype(np.complex128)
    amp /= np.linalg.norm(amp)
    return JointState(spec1, spec2, amp)


@lru_cache(maxsize=32)
def _binomial_amplitudes(n_atoms: int) -> np.ndarray:
    if n_atoms > _MAX_ATOMS:
        raise UnsupportedSizeError(
            f"n_atoms={n_atoms} exceeds the supported maximum {_MAX_ATOMS}"
        )
    # index i = J + M runs 0..N; amplitude^2 = 2^-N binom(N, i)
    log_fact = np.array([math.lgamma(k + 1) for k in range(n_atoms + 1)])
    log_amp = (
        0.5 * (log_fact[-1] - log_fact - log_fact[::-1])
        - 0.5 * n_atoms * math.log(2.0)
    )
    out = np.exp(log_amp)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=64)
def _occupancy_grid(n1: int, n2: int) -> np.ndarray:
    # occupancy of the probed level: (N1+N2)/2 - (M1+M2) = N1+N2 - i1 - i2
    i1 = np.arange(n1 + 1, dtype=np.float64)
    i2 = np.arange(n2 + 1, dtype=np.float64)
    grid = (n1 + n2) - np.add.outer(i1, i2)
    grid.flags.writeable = False
    return grid


@lru_cache(maxsize=64)
def _m_sum_grid(n1: int, n2: int) -> np.ndarray:
    m1 = np.arange(n1 + 1, dtype=np.float64) - n1 / 2.0
    m2 = np.arange(n2 + 1, dtype=np.float64) - n2 / 2.0
    grid = np.add.outer(m1, m2)
    grid.flags.writeable = False
    return grid


def occupancy_weights(state: JointState) -> np.ndarray:
    """Number of atoms in the probed level for every basis cell.

    Constant along anti-diagonals M1 + M2 = const; ranges 0..N1+N2.
    """
    return _occupancy_grid(state.spec1.n_atoms, state.spec2.n_atoms)


def norm(state: JointState) -> float:
    return float(np.linalg.norm(state.amp))


def normalize(state: JointState) -> JointState:
    """Unit-norm copy; direction preserved.

    Raises DegenerateBranchError when the norm vanishes, which signals
    that a zero-probability measurement branch was selected upstream.
    """
    nrm = np.linalg.norm(state.amp)
    if not np.isfinite(nrm) or nrm <= 0.0:
        raise DegenerateBranchError(f"cannot normalize state with norm {nrm}")
    return JointState(state.spec1, state.spec2, state.amp / nrm)


def mean_and_variance_jz_sum(state: JointState) -> tuple[float, float]:
    """Mean and variance of M1 + M2 in the current state (unit norm)."""
    w = np.abs(state.amp) ** 2
    m12 = _m_sum_grid(state.spec1.n_atoms, state.spec2.n_atoms)
    mean = float(np.sum(w * m12))
    var = float(np.sum(w * m12 * m12)) - mean * mean
    return mean, max(var, 0.0)


def jx_matrix(spec: SampleSpec) -> SymTridiag:
    """Collective x spin component in the |J, M> basis.

    (J+ + J-)/2 is real symmetric tridiagonal with zero diagonal and
    off-diagonal sqrt(J(J+1) - M(M+1))/2 linking M and M+1.
    """
    j = spec.j
    m = np.arange(spec.n_atoms) - j  # M for the lower index of each pair
    off = 0.5 * np.sqrt(j * (j + 1.0) - m * (m + 1.0))
    return SymTridiag(np.zeros(spec.dim), off)


@lru_cache(maxsize=32)
def _jx_eig(n_atoms: int) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = eig_sym_tridiag(jx_matrix(SampleSpec(n_atoms)))
    vals.flags.writeable = False
    vecs.flags.writeable = False
    return vals, vecs


def wigner_rotation(spec: SampleSpec, alpha: float) -> np.ndarray:
    """Matrix elements <J,M| exp(-i alpha Jx) |J,M'>.

    Built spectrally: V exp(-i alpha L) V^T from the tridiagonal
    eigendecomposition of Jx. Unitary, and symmetric because Jx is real
    symmetric in this basis.
    """
    if not np.isfinite(alpha):
        raise ValueError(f"rotation angle must be finite, got {alpha!r}")
    vals, vecs = _jx_eig(spec.n_atoms)
    return (vecs * np.exp(-1j * alpha * vals)) @ vecs.T


@lru_cache(maxsize=128)
def _rotation_pair(n1: int, n2: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    d1 = wigner_rotation(SampleSpec(n1), alpha)
    d2t = wigner_rotation(SampleSpec(n2), -alpha).T
    d1.flags.writeable = False
    d2t.flags.writeable = False
    return d1, d2t


def apply_counter_rotation(state: JointState, alpha: float) -> JointState:
    """Rotate the samples by opposite angles around their x axes.

    Sample 1 gets the rotation by +alpha, sample 2 by -alpha, turning a
    subsequent population measurement into one of the mixed-axis spin
    combination. Unitary, so the norm is preserved to round-off.
    """
    d1, d2t = _rotation_pair(state.spec1.n_atoms, state.spec2.n_atoms, float(alpha))
    return JointState(state.spec1, state.spec2, d1 @ state.amp @ d2t)


def fidelity(a: JointState, b: JointState) -> float:
    """|<a|b>|^2; the phase-insensitive way to compare states."""
    return float(np.abs(np.vdot(a.amp, b.amp)) ** 2)
