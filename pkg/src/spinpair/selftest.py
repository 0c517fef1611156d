"""Built-in invariant and oracle checks, runnable without pytest.

Each check returns (name, passed, detail); the CLI `selftest` subcommand
runs them all and exits nonzero on any failure. They are intentionally
fast (a few seconds total) and independent of the test suite.
"""

from __future__ import annotations

import math

import numpy as np

from .collective_spin import (
    JointState,
    SampleSpec,
    apply_counter_rotation,
    binomial_initial_state,
    fidelity,
    wigner_rotation,
)
from .entanglement import entropy_of_entanglement, maximally_entangled_state, overlap_psi0
from .numerics import SymTridiag, eig_sym_tridiag, singular_values
from .photon_channel import (
    ClampPolicy,
    PhysicalParams,
    branch_probabilities,
    detection_step,
    sample_scatter_direction,
)
from .trajectory import rng_stream

__all__ = ["run_selftest", "CHECKS"]


def _random_state(rng, n1=20, n2=20) -> JointState:
    a = rng.normal(size=(n1 + 1, n2 + 1)) + 1j * rng.normal(size=(n1 + 1, n2 + 1))
    a /= np.linalg.norm(a)
    return JointState(SampleSpec(n1), SampleSpec(n2), a)


def check_tridiag_eigensolver():
    rng = np.random.default_rng(101)
    worst = 0.0
    for n in (1, 2, 7, 40):
        m = SymTridiag(rng.normal(size=n), rng.normal(size=max(n - 1, 0)))
        vals, vecs = eig_sym_tridiag(m)
        scale = max(np.abs(m.to_dense()).max(), 1.0)
        worst = max(
            worst,
            np.abs((vecs * vals) @ vecs.T - m.to_dense()).max() / scale,
            np.abs(vecs.T @ vecs - np.eye(n)).max(),
        )
    return worst < 1e-10, f"max error {worst:.2e}"


def check_singular_values():
    rng = np.random.default_rng(102)
    a = rng.normal(size=(9, 13)) + 1j * rng.normal(size=(9, 13))
    sv = singular_values(a)
    frob = abs(float(np.sum(sv**2)) - np.linalg.norm(a) ** 2) / np.linalg.norm(a) ** 2
    d = wigner_rotation(SampleSpec(8), 0.37)
    sv2 = singular_values(d @ a[:, :9])
    sv1 = singular_values(a[:, :9])
    uni = np.abs(sv2 - sv1).max()
    ok = frob < 1e-12 and uni < 1e-10
    return ok, f"frobenius {frob:.2e}, unitary invariance {uni:.2e}"


def check_probability_conservation():
    rng = np.random.default_rng(103)
    params = PhysicalParams(0.1, 1.0 / 150.0)
    policy = ClampPolicy()
    worst = 0.0
    for _ in range(200):
        p = branch_probabilities(_random_state(rng), params, policy)
        worst = max(worst, abs(sum(p) - 1.0))
    return worst < 1e-12, f"max |sum - 1| = {worst:.2e} over 200 random states"


def check_entropy_oracle():
    rng = np.random.default_rng(104)
    worst = 0.0
    for _ in range(20):
        state = _random_state(rng, 4, 4)
        rho1 = state.amp @ state.amp.conj().T
        lam = np.clip(np.linalg.eigvalsh(rho1), 0.0, None)
        lam = lam[lam > 1e-15]
        brute = float(-np.sum(lam * np.log2(lam)))
        worst = max(worst, abs(entropy_of_entanglement(state) - brute))
    return worst < 1e-9, f"max |schmidt - partial trace| = {worst:.2e}"


def check_fixed_point():
    params = PhysicalParams(0.1, 1.0 / 150.0)
    policy = ClampPolicy()
    rng = rng_stream(99)
    psi0 = maximally_entangled_state(SampleSpec(20))
    state = psi0
    for _ in range(200):
        state, _ = detection_step(state, params, policy, rng)
    fid = fidelity(psi0, state)
    return fid > 1.0 - 1e-9, f"fidelity after 200 events = {fid:.12f}"


def check_rotation_invariance():
    state = binomial_initial_state(SampleSpec(20), SampleSpec(20))
    rotated = apply_counter_rotation(state, math.pi / 5)
    fid = fidelity(state, rotated)
    ent = abs(entropy_of_entanglement(rotated) - entropy_of_entanglement(state))
    ok = fid > 1.0 - 1e-9 and ent < 1e-9
    return ok, f"+x product state fidelity {fid:.12f}, entropy drift {ent:.2e}"


def check_scatter_sampler():
    rng = rng_stream(7)
    n = 100_000
    cos2 = np.empty(n)
    for i in range(n):
        theta, _ = sample_scatter_direction(rng)
        cos2[i] = math.cos(theta) ** 2
    mean = cos2.mean()
    # Var(cos^2) = E[cos^4] - 1/25 = 3/35 - 1/25
    sigma = math.sqrt((3.0 / 35.0 - 1.0 / 25.0) / n)
    ok = abs(mean - 0.2) < 4.0 * sigma
    return ok, f"mean cos^2 theta = {mean:.5f} (expect 0.2 +- {3*sigma:.5f})"


def check_rng_determinism():
    a = rng_stream(42, 3).random(100)
    b = rng_stream(42, 3).random(100)
    c = rng_stream(42, 4).random(100)
    ok = np.array_equal(a, b) and not np.array_equal(a, c)
    return ok, "split streams reproducible and distinct"


def check_ideal_reduction():
    state = binomial_initial_state(SampleSpec(12), SampleSpec(12))
    params = PhysicalParams(0.1, 0.0)
    from .photon_channel import _detector_factors  # noqa: PLC0415

    occ = (24 - np.add.outer(np.arange(13), np.arange(13))).astype(float)
    ideal = 0.5 * (1.0 + np.exp(-1j * 0.1 * occ))
    got = _detector_factors(state, params, ClampPolicy(), +1.0)
    ok = np.array_equal(ideal, got)
    p = branch_probabilities(state, params, ClampPolicy())
    ok = ok and p[2] == 0.0
    return ok, "detector factors bitwise equal to the ideal scheme, p_scatter == 0"


def check_overlap_metric():
    psi0 = maximally_entangled_state(SampleSpec(20))
    binom = binomial_initial_state(SampleSpec(1), SampleSpec(1))
    ok = (
        abs(overlap_psi0(psi0) - 1.0) < 1e-12
        and abs(overlap_psi0(binom) - 0.5) < 1e-12
        and abs(entropy_of_entanglement(psi0) - math.log2(21)) < 1e-10
    )
    return ok, "psi0 overlap 1, one-atom binomial overlap 1/2, entropy log2(21)"


CHECKS = [
    ("tridiag-eigensolver", check_tridiag_eigensolver),
    ("singular-values", check_singular_values),
    ("probability-conservation", check_probability_conservation),
    ("entropy-oracle", check_entropy_oracle),
    ("psi0-fixed-point", check_fixed_point),
    ("rotation-invariance", check_rotation_invariance),
    ("scatter-sampler", check_scatter_sampler),
    ("rng-determinism", check_rng_determinism),
    ("ideal-scheme-reduction", check_ideal_reduction),
    ("overlap-metric", check_overlap_metric),
]


def run_selftest(report=print) -> bool:
    """Run every check; report one line each; True iff all passed."""
    all_ok = True
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_ok &= ok
        report(f"{'ok  ' if ok else 'FAIL'} {name}: {detail}")
    return all_ok
