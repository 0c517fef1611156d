"""Dense linear-algebra kernels used by the physics modules.

Two primitives are provided: eigendecomposition of real symmetric
tridiagonal matrices (implicit-shift QL with accumulated rotations) and
singular values of complex matrices (Householder reduction of the
Hermitian Gram matrix to tridiagonal form, then QL on the result). The
matrices encountered here are small, at most a few hundred rows, so the
implementation favors robustness and reproducibility over asymptotics;
the scalar inner loops are JIT-compiled with numba.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import NumericsError

__all__ = ["SymTridiag", "eig_sym_tridiag", "singular_values"]

_EPS = float(np.finfo(np.float64).eps)
_MAX_QL_SWEEPS = 50
# Gram eigenvalues below this are round-off; clamp before the square root.
_GRAM_CLAMP = 1e-14


@dataclass(frozen=True)
class SymTridiag:
    """Real symmetric tridiagonal matrix stored as (diagonal, off-diagonal)."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        diag = np.ascontiguousarray(self.diag, dtype=np.float64)
        offdiag = np.ascontiguousarray(self.offdiag, dtype=np.float64)
        if diag.ndim != 1 or offdiag.ndim != 1:
            raise ValueError("diag and offdiag must be one-dimensional")
        if diag.size == 0:
            raise ValueError("matrix dimension must be at least 1")
        if offdiag.size != diag.size - 1:
            raise ValueError(
                f"offdiag length {offdiag.size} does not match diag length {diag.size}"
            )
        if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(offdiag))):
            raise ValueError("matrix entries must be finite")
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag", offdiag)

    @property
    def n(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        m = np.diag(self.diag)
        if self.n > 1:
            m += np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)
        return m


@numba.njit(cache=True)
def _tqli(d, e, z):  # pragma: no cover - exercised through the wrappers
    """Implicit-shift QL sweeps on a symmetric tridiagonal matrix.

    `d` (length n) holds the diagonal and `e` (length n, last entry
    workspace) the off-diagonal; both are overwritten, eigenvalues end up
    in `d` in no particular order. If `z` is (n, n) the plane rotations
    are accumulated into its columns (pass the identity to obtain
    eigenvectors, or a (0, 0) array to skip). Returns 0 on success, 1 if
    an eigenvalue failed to converge within the sweep limit.
    """
    n = d.shape[0]
    accumulate = z.shape[0] == n and z.shape[1] == n
    if n == 1:
        return 0
    anorm = 0.0
    for i in range(n):
        t = abs(d[i])
        if i < n - 1:
            t += abs(e[i])
        if t > anorm:
            anorm = t
    if anorm == 0.0:
        return 0
    for l in range(n):
        sweeps = 0
        while True:
            m = n - 1
            for mm in range(l, n - 1):
                # deflate when negligible locally or at the matrix scale;
                # the absolute branch is what keeps exponentially graded
                # round-off tails (rank-deficient Gram matrices) from
                # stalling the sweep in underflowed rotations
                dd = abs(d[mm]) + abs(d[mm + 1])
                thr = _EPS * (dd if dd > anorm else anorm)
                if abs(e[mm]) <= thr:
                    m = mm
                    break
            if m == l:
                break
            sweeps += 1
            if sweeps > _MAX_QL_SWEEPS:
                return 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            sg = r if g >= 0.0 else -r
            g = d[m] - d[l] + e[l] / (g + sg)
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    # rotation underflowed; deflate and restart the sweep
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if accumulate:
                    for k in range(n):
                        f2 = z[k, i + 1]
                        z[k, i + 1] = s * z[k, i] + c * f2
                        z[k, i] = c * z[k, i] - s * f2
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return 0


@numba.njit(cache=True)
def _hermitian_tridiagonalize(a):  # pragma: no cover - exercised via wrappers
    """Reduce a Hermitian matrix to real symmetric tridiagonal form.

    Two-sided Householder reflections zero the sub-subdiagonal columns;
    the trailing diagonal phase similarity (implicit in taking moduli of
    the subdiagonal) makes the off-diagonal real and nonnegative. Each
    column is rescaled by its 1-norm before the reflector is formed (the
    reflector only depends on the direction), so columns at denormal
    magnitude neither overflow `2/v.v` nor poison the update with NaNs.
    `a` is destroyed; transforms are not accumulated because callers need
    eigenvalues only.
    """
    n = a.shape[0]
    d = np.empty(n)
    e = np.empty(max(n - 1, 0))
    v = np.zeros(n, dtype=np.complex128)
    w = np.zeros(n, dtype=np.complex128)
    for k in range(n - 2):
        scale = 0.0
        for i in range(k + 1, n):
            x = a[i, k]
            scale += abs(x.real) + abs(x.imag)
        if scale == 0.0:
            continue
        xnorm2 = 0.0
        for i in range(k + 1, n):
            v[i] = a[i, k] / scale
            vi = v[i]
            xnorm2 += vi.real * vi.real + vi.imag * vi.imag
        if xnorm2 == 0.0:
            continue
        xnorm = math.sqrt(xnorm2)
        x0 = v[k + 1]
        ax0 = abs(x0)
        if ax0 > 0.0:
            phase = x0 / ax0
        else:
            phase = complex(1.0, 0.0)
        beta = -phase * xnorm  # scaled units until written back
        v[k + 1] -= beta
        vv = 0.0
        for i in range(k + 1, n):
            vi = v[i]
            vv += vi.real * vi.real + vi.imag * vi.imag
        if vv == 0.0:
            continue
        c2 = 2.0 / vv
        # w = c2 * A v on the trailing block, then the rank-two update
        # A <- A - w v^H - v w^H with w shifted so the similarity is exact
        for i in range(k + 1, n):
            acc = complex(0.0, 0.0)
            for j in range(k + 1, n):
                acc += a[i, j] * v[j]
            w[i] = c2 * acc
        alpha = complex(0.0, 0.0)
        for i in range(k + 1, n):
            alpha += v[i].conjugate() * w[i]
        half = 0.5 * c2 * alpha
        for i in range(k + 1, n):
            w[i] -= half * v[i]
        for i in range(k + 1, n):
            wi = w[i]
            vi = v[i]
            for j in range(k + 1, n):
                a[i, j] -= wi * v[j].conjugate() + vi * w[j].conjugate()
        a[k + 1, k] = beta * scale
        for i in range(k + 2, n):
            a[i, k] = 0.0
    for i in range(n):
        d[i] = a[i, i].real
    for i in range(n - 1):
        e[i] = abs(a[i + 1, i])
    return d, e


def eig_sym_tridiag(m: SymTridiag) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of a real symmetric tridiagonal matrix.

    Returns (eigenvalues ascending, V) with orthonormal eigenvector
    columns, so that V @ diag(vals) @ V.T reconstructs the input.
    """
    n = m.n
    d = m.diag.copy()
    e = np.zeros(n)
    if n > 1:
        e[: n - 1] = m.offdiag
    z = np.eye(n)
    if _tqli(d, e, z) != 0:
        raise NumericsError(f"QL iteration did not converge for n={n}")
    order = np.argsort(d, kind="stable")
    return d[order], np.ascontiguousarray(z[:, order])


def _gram_eigenvalues(g: np.ndarray) -> np.ndarray:
    """Eigenvalues of a Hermitian (Gram) matrix, unordered."""
    n = g.shape[0]
    if n == 1:
        return np.array([g[0, 0].real])
    work = np.ascontiguousarray(g, dtype=np.complex128).copy()
    d, e = _hermitian_tridiagonalize(work)
    e_ext = np.zeros(n)
    e_ext[: n - 1] = e
    if _tqli(d, e_ext, np.empty((0, 0))) != 0:
        raise NumericsError(f"QL iteration did not converge for Gram matrix n={n}")
    return d


def singular_values(a: np.ndarray) -> np.ndarray:
    """Singular values of a complex matrix, descending and nonnegative.

    Computed from the eigenvalues of the Gram matrix on the smaller side;
    eigenvalues below the round-off clamp are zeroed before the square
    root. The sum of squares equals the squared Frobenius norm.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("expected a nonempty two-dimensional matrix")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError("matrix entries must be finite")
    if a.shape[0] <= a.shape[1]:
        g = a @ a.conj().T
    else:
        g = a.conj().T @ a
    g = 0.5 * (g + g.conj().T)  # symmetrize away round-off
    lam = _gram_eigenvalues(g)
    lam[lam < _GRAM_CLAMP] = 0.0
    sv = np.sqrt(lam)
    sv[::-1].sort()
    return sv
