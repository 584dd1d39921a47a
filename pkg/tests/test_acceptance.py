"""Acceptance criteria 1-10, one test each, at the stated counts and tolerances.

Each test prints one ``ACCEPTANCE <n> PASS|FAIL`` line. Run this file
directly (``python3 tests/test_acceptance.py``) for the same lines without
pytest.
"""
import math
import sys
import time

import numpy as np
import pytest

from cohroof import verify as V
from cohroof.convexroof import (
    RoofProblem,
    estimate_roof,
    exact_qubit_lcn,
    l1_lower_bound,
    range_factor,
)
from cohroof.states import make_noisy_mcs, random_density

SEED = 0
CFG = V.VerifyConfig(seed=SEED)


def _line(n, ok, detail):
    return f"ACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}  {detail}"


def _outcomes_ok(outcomes):
    ok = all(o.failures == 0 for o in outcomes)
    detail = "; ".join(f"{o.property_id}: {o.failures}/{o.trials} failures" for o in outcomes)
    return ok, detail


# --- brute-force grid oracle for the qubit closed form ---------------------------

def _support_counts(x, eps=1e-9):
    mod = np.abs(x)
    top = mod.max(axis=-2, keepdims=True)
    return (mod > eps * np.where(top > 0, top, 1.0)).sum(axis=-2)


def grid_qubit_lcn(rho, n=400):
    """Minimum roof objective over an n x n grid of 2 x 4 mixers.

    The mixer columns are sqrt(s0) t0, sqrt(s1) t1 and the two columns of
    sqrt(I - s0 t0 t0^dag - s1 t1 t1^dag), where A t0 has no |1> component
    and A t1 has no |0> component. Every feasible grid point is a genuine
    decomposition; its objective is scored from the member supports.
    """
    a = range_factor(rho)
    assert a.shape == (2, 2), "grid oracle expects a full-rank qubit"
    t0 = np.array([a[1, 1], -a[1, 0]])
    t1 = np.array([a[0, 1], -a[0, 0]])
    t0, t1 = t0 / np.linalg.norm(t0), t1 / np.linalg.norm(t1)
    s = np.linspace(0.0, 1.0, n)
    s0, s1 = (g.ravel() for g in np.meshgrid(s, s, indexing="ij"))
    rem = (np.eye(2)[None] - s0[:, None, None] * np.outer(t0, t0.conj())[None]
           - s1[:, None, None] * np.outer(t1, t1.conj())[None])
    w, v = np.linalg.eigh(rem)
    feasible = w[:, 0] >= -1e-12
    root = v * np.sqrt(np.clip(w, 0, None))[:, None, :]
    mixer = np.concatenate([
        np.sqrt(s0)[:, None, None] * t0[None, :, None],
        np.sqrt(s1)[:, None, None] * t1[None, :, None],
        root @ np.swapaxes(v.conj(), 1, 2),
    ], axis=2)
    np.testing.assert_allclose((mixer @ np.swapaxes(mixer.conj(), 1, 2))[feasible], np.broadcast_to(np.eye(2), (feasible.sum(), 2, 2)), atol=1e-9)
    x = a[None] @ mixer
    weights = (np.abs(x) ** 2).sum(axis=1)
    counts = _support_counts(x)
    scores = np.where(weights > 1e-15, np.log2(np.maximum(counts, 1)), 0.0)
    objective = (weights * scores).sum(axis=1)
    return float(objective[feasible].min()), int(s0.size)


# --- criteria ------------------------------------------------------------------------

def criterion_1():
    worst_err, worst_time = 0.0, 0.0
    ok = True
    for d in (2, 3, 4):
        for lam in (0.0, 0.25, 0.5, 0.75, 1.0):
            start = time.perf_counter()
            rho = make_noisy_mcs(d, lam)
            upper = estimate_roof(RoofProblem(rho)).value
            lower = l1_lower_bound(rho).value
            elapsed = time.perf_counter() - start
            target = lam * math.log2(d)
            err = max(abs(upper - target), abs(lower - target))
            worst_err, worst_time = max(worst_err, err), max(worst_time, elapsed)
            ok &= err <= 1e-3 and elapsed < 60
    return ok, f"15 instances, max error {worst_err:.2e}, slowest {worst_time:.2f}s"


def criterion_2():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(200):
        rho = random_density(2, seed=rng)
        worst = max(worst, abs(estimate_roof(RoofProblem(rho)).value - exact_qubit_lcn(rho).value))
    grid_worst, points, below = 0.0, 0, False
    for k in range(20):
        rho = random_density(2, seed=np.random.default_rng([SEED, 7, k]))
        value, points = grid_qubit_lcn(rho.matrix)
        exact = exact_qubit_lcn(rho).value
        # grid points are genuine decompositions, so none may beat the closed form
        below |= value < exact - 1e-9
        grid_worst = max(grid_worst, abs(value - exact))
    ok = worst <= 1e-3 and grid_worst <= 5e-3 and points >= 10**5 and not below
    return ok, f"search vs closed form max {worst:.2e} (200 states); grid ({points} points) vs closed form max {grid_worst:.2e} (20 states)"


def criterion_3():
    return _outcomes_ok([V.superposition_random(CFG, 1000), V.superposition_cases(V.VerifyConfig(seed=SEED, trials=30))])


def criterion_4():
    return _outcomes_ok([V.strong_monotonicity_pure(CFG, 500), V.kraus_rank_monotonicity(CFG, 500)])


def criterion_5():
    return _outcomes_ok([V.pure_additivity(CFG, 200), V.mixed_subadditivity(CFG, 50)])


def criterion_6():
    return _outcomes_ok([V.superadditivity_2x2(CFG, 500), V.entanglement_chain_2x2(CFG, 500),
                         V.tripartite_2x2x2(CFG, 200)])


def criterion_7():
    return _outcomes_ok([V.quantum_incoherent(CFG, 50)])


def criterion_8():
    return _outcomes_ok([V.conversion_pure(CFG, 200), V.conversion_mixed_qubit(CFG, 100),
                         V.decomposition_correspondence(CFG, 100)])


def criterion_9():
    return _outcomes_ok([V.discontinuity_witness(CFG)])


def criterion_10():
    return _outcomes_ok([V.channel_validity(CFG, 1000)])


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.slow
@pytest.mark.parametrize("n", range(1, 11))
def test_acceptance(n, capsys):
    ok, detail = CRITERIA[n - 1]()
    with capsys.disabled():
        print("\n" + _line(n, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for n, crit in enumerate(CRITERIA, 1):
        ok, detail = crit()
        failed += not ok
        print(_line(n, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
