"""Exact qubit solver and lower bounds for the logarithmic coherence number."""
import numpy as np
from scipy.optimize import linprog

from ..measures import MeasureResult, l1_coherence, relative_entropy_coherence
from ..numerics import DimensionError
from ..states import DensityMatrix, Ensemble


def _matrix(rho):
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)


def exact_qubit_lcn(rho) -> MeasureResult:
    """Exact logarithmic coherence number of a qubit.

    The roof equals the least weight that any decomposition puts on coherent
    members, i.e. 1 - max{tr D : D diagonal >= 0, rho - D >= 0}. When
    |rho_01| <= min(rho_00, rho_11) the optimum subtracts |rho_01| from both
    diagonal entries; otherwise the smaller diagonal entry is left whole.
    """
    m = _matrix(rho)
    if m.shape != (2, 2):
        raise DimensionError(f"exact_qubit_lcn needs a 2x2 state, got {m.shape}")
    a, b = float(m[0, 0].real), float(m[1, 1].real)
    c = abs(m[0, 1])
    if c == 0.0:
        members = [(p, np.eye(2)[:, i]) for i, p in enumerate((a, b)) if p > 0]
        cert = Ensemble.from_vectors(np.stack([np.sqrt(p) * v for p, v in members], axis=1))
        return MeasureResult(0.0, "exact", cert)
    if c <= min(a, b):
        diag = (a - c, b - c)
        value = 2 * c
    elif a <= b:
        diag = (0.0, b - c * c / a)
        value = a + c * c / a
    else:
        diag = (a - c * c / b, 0.0)
        value = b + c * c / b
    remainder = m - np.diag(diag)
    # remainder is rank one by construction: take its dominant eigenvector
    w, v = np.linalg.eigh(remainder)
    cols = [np.sqrt(max(w[-1], 0.0)) * v[:, -1]]
    cols += [np.sqrt(p) * np.eye(2)[:, i] for i, p in enumerate(diag) if p > 0]
    return MeasureResult(value, "exact", Ensemble.from_vectors(np.stack(cols, axis=1)))


def _dual_value(slope: float, l1: float, d: int) -> float:
    ks = np.arange(1, d + 1)
    offset = float(np.min(np.log2(ks) - slope * (ks - 1)))
    return offset + slope * l1


def l1_lower_bound(rho) -> MeasureResult:
    """Lower bound from the l1 coherence.

    A pure state with support k has l1 coherence at most k - 1, and l1 is
    convex, so any decomposition with support profile p_k satisfies
    sum_k p_k (k - 1) >= l1(rho). Minimizing sum_k p_k log2 k under that
    constraint is a linear program. The reported value is the dual objective
    at the solver's multiplier, which is a valid bound for any nonnegative
    multiplier and so does not depend on solver tolerances.
    """
    m = _matrix(rho)
    d = m.shape[0]
    l1 = min(l1_coherence(m), d - 1.0)
    if d == 1 or l1 <= 0.0:
        return MeasureResult(0.0, "lower-bound", {"method": "l1-lp", "l1": max(l1, 0.0), "slope": 0.0, "profile": []})
    ks = np.arange(1, d + 1)
    res = linprog(
        c=np.log2(ks),
        A_ub=-(ks - 1.0).reshape(1, -1),
        b_ub=[-l1],
        A_eq=np.ones((1, d)),
        b_eq=[1.0],
        bounds=[(0, None)] * d,
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"l1 lower-bound LP failed: {res.message}")
    slope = max(-float(res.ineqlin.marginals[0]), 0.0)
    value = max(_dual_value(slope, l1, d), 0.0)
    profile = [[int(k), float(p)] for k, p in zip(ks, res.x) if p > 1e-12]
    return MeasureResult(value, "lower-bound",
                         {"method": "l1-lp", "l1": l1, "slope": slope, "primal": float(res.fun), "profile": profile})


def relative_entropy_lower_bound(rho) -> MeasureResult:
    value = relative_entropy_coherence(_matrix(rho))
    return MeasureResult(value, "lower-bound", {"method": "relative-entropy", "value": value})


def best_lower_bound(rho) -> MeasureResult:
    """Largest available certified lower bound on the coherence roof."""
    m = _matrix(rho)
    cands = [l1_lower_bound(m), relative_entropy_lower_bound(m)]
    if m.shape == (2, 2):
        exact = exact_qubit_lcn(m)
        cands.append(MeasureResult(exact.value, "lower-bound", {"method": "exact-qubit", "value": exact.value}))
    return max(cands, key=lambda r: r.value)

