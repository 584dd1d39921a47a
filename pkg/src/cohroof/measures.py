"""Closed-form coherence and entanglement functionals (no convex roof).

All logarithms are base 2.
"""
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .numerics import (
    DEFAULT_TOL,
    CohroofError,
    InvariantError,
    ToleranceConfig,
    count_support,
    numerical_rank,
    support_mask,
)
from .states import BipartiteView, DensityMatrix, PureState

KINDS = ("exact", "upper-bound", "lower-bound")


@dataclass(frozen=True)
class MeasureResult:
    """A measure value with its bound type and the object proving it.

    Upper bounds carry an :class:`Ensemble`; lower bounds carry a dict
    describing the dual/LP data.
    """

    value: float
    kind: str
    certificate: Any = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvariantError("kind must be one of " + ", ".join(KINDS), repr(self.kind))
        value = float(self.value)
        if not math.isfinite(value) or value < -1e-12:
            raise InvariantError("measure value must be finite and nonnegative", repr(value))
        object.__setattr__(self, "value", max(value, 0.0))


def coherence_rank(psi: PureState, tol: ToleranceConfig = DEFAULT_TOL) -> int:
    return count_support(psi.amplitudes, tol)


def log_coherence_rank(psi: PureState, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    return math.log2(coherence_rank(psi, tol))


def superposition_bounds(psi: PureState, phi: PureState, tol: ToleranceConfig = DEFAULT_TOL):
    """Integer (lower, upper) bounds on the coherence rank of any a|psi> + b|phi>.

    The upper bound is clamped to the dimension; the lower bound is left
    unclamped so that exact cancellation (rank 0 impossible, but a lower
    bound of 0 is vacuous) stays visible.
    """
    if psi.dim != phi.dim:
        raise CohroofError("states must share one dimension")
    r1, r2 = coherence_rank(psi, tol), coherence_rank(phi, tol)
    return abs(r1 - r2), min(r1 + r2, psi.dim)


def _bipartite(psi, dims):
    return BipartiteView.of(psi, dims)


def schmidt_coefficients(psi: PureState, dims) -> np.ndarray:
    return np.linalg.svd(_bipartite(psi, dims).coeffs, compute_uv=False)


def schmidt_rank(psi: PureState, dims, tol: ToleranceConfig = DEFAULT_TOL) -> int:
    return numerical_rank(schmidt_coefficients(psi, dims), tol)


def log_schmidt_rank(psi: PureState, dims, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    return math.log2(schmidt_rank(psi, dims, tol))


def row_col_support(psi: PureState, dims, tol: ToleranceConfig = DEFAULT_TOL):
    """(r_S, r_A): rows and columns of the coefficient matrix that carry support."""
    coeffs = _bipartite(psi, dims).coeffs
    mask = support_mask(coeffs, tol).reshape(coeffs.shape)
    return int(mask.any(axis=1).sum()), int(mask.any(axis=0).sum())


def _matrix(rho):
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)


def l1_coherence(rho) -> float:
    m = _matrix(rho)
    return float(np.abs(m).sum() - np.abs(np.diag(m)).sum())


def _entropy_bits(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 1e-300]
    return float(-(p * np.log2(p)).sum())


def von_neumann_entropy(rho) -> float:
    w = np.linalg.eigvalsh(_matrix(rho))
    return _entropy_bits(np.clip(w, 0.0, None))


def relative_entropy_coherence(rho) -> float:
    """S(diag rho) - S(rho) in bits."""
    m = _matrix(rho)
    diag = np.clip(np.diag(m).real, 0.0, None)
    return max(_entropy_bits(diag) - von_neumann_entropy(m), 0.0)


def coherence_number_lower(rho) -> int:
    """Smallest k with l1(rho) <= k - 1; a support-k pure state has l1 <= k - 1."""
    l1 = l1_coherence(rho)
    return max(1, math.ceil(l1 - 1e-9) + 1)


def coherence_number_bounds(rho: DensityMatrix, engine=None):
    """(lower, upper) bounds on the coherence number.

    ``engine`` maps a density matrix to a roof solution minimizing the
    largest coherence rank; the default is the convex-roof search.
    """
    lower = coherence_number_lower(rho)
    if engine is None:
        from .convexroof import coherence_number

        engine = coherence_number
    upper = round(engine(rho).result.value)
    return lower, max(upper, lower)
