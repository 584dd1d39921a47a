"""Pure-state decompositions of a density matrix and per-member scores.

Every size-m decomposition of rho arises as the columns of ``A @ T`` where
``A @ A^dag = rho`` (``A`` built from the eigendecomposition) and ``T`` is an
``r x m`` matrix with orthonormal rows, r = rank(rho). ``T`` is the *mixer*.
"""
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..numerics import (
    DEFAULT_TOL,
    CohroofError,
    DimensionError,
    InvariantError,
    ToleranceConfig,
    count_support,
    numerical_rank,
    polar_factor,
    support_mask,
)
from ..states import ZERO_WEIGHT, DensityMatrix, Ensemble, random_mixer

# eigenvalues at or below this are treated as outside the range of rho
RANK_CUTOFF = 1e-12
AP_MAX_ITER = 2000
AP_THRESHOLD = 1e-10

SCORE_KINDS = ("log-coherence-rank", "log-schmidt-rank", "max-coherence-rank")


@dataclass(frozen=True)
class Score:
    kind: str = "log-coherence-rank"
    dims: tuple | None = None

    def __post_init__(self):
        if self.kind not in SCORE_KINDS:
            raise CohroofError(f"unknown score {self.kind!r}")
        if self.kind == "log-schmidt-rank":
            if self.dims is None or len(self.dims) != 2:
                raise CohroofError("log-schmidt-rank needs dims=(d_S, d_A)")
            object.__setattr__(self, "dims", tuple(int(x) for x in self.dims))

    @property
    def is_max(self) -> bool:
        return self.kind == "max-coherence-rank"

    @property
    def is_schmidt(self) -> bool:
        return self.kind == "log-schmidt-rank"


LOG_COHERENCE = Score("log-coherence-rank")
MAX_COHERENCE = Score("max-coherence-rank")


def member_score(x, score: Score, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Score of the (possibly unnormalized) ket ``x``."""
    if score.is_schmidt:
        d_s, d_a = score.dims
        s = np.linalg.svd(np.asarray(x).reshape(d_s, d_a), compute_uv=False)
        return math.log2(numerical_rank(s, tol))
    k = count_support(x, tol)
    return float(k) if score.is_max else math.log2(k)


def _aggregate(weights, scores, score: Score) -> float:
    live = weights > ZERO_WEIGHT
    if not np.any(live):
        return 0.0
    if score.is_max:
        return float(np.max(scores[live]))
    return math.fsum(weights[live] * scores[live])


def roof_objective(e: Ensemble, score: Score = LOG_COHERENCE, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Ensemble average of the score (largest member score for the max score)."""
    weights = e.weights
    scores = np.array([member_score(s.amplitudes, score, tol) for s in e.states])
    return _aggregate(weights, scores, score)


def vectors_objective(x, score: Score, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    weights = np.einsum("ij,ij->j", x.conj(), x).real
    scores = np.array([member_score(col, score, tol) if w > ZERO_WEIGHT else 0.0
                       for col, w in zip(x.T, weights)])
    return _aggregate(weights, scores, score)


def _as_density(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)


def range_factor(rho) -> np.ndarray:
    """d x r matrix A with A A^dag = rho restricted to eigenvalues above RANK_CUTOFF."""
    w, v = np.linalg.eigh(_as_density(rho))
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    keep = w > RANK_CUTOFF
    if not np.any(keep):
        raise InvariantError("density matrix has no positive eigenvalue")
    return v[:, keep] * np.sqrt(w[keep])


def check_mixer(mixer, r: int, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    t = np.asarray(mixer, dtype=np.complex128)
    if t.ndim != 2 or t.shape[0] != r:
        raise DimensionError(f"mixer must have {r} rows, got shape {t.shape}")
    if np.abs(t @ t.conj().T - np.eye(r)).max() > tol.ortho_eps:
        raise InvariantError("mixer rows must be orthonormal")
    return t


def parametrize_decomposition(rho, m: int, mixer, tol: ToleranceConfig = DEFAULT_TOL) -> Ensemble:
    """Ensemble given by the columns of ``A @ mixer``; zero-weight members dropped."""
    a = range_factor(rho)
    t = check_mixer(mixer, a.shape[1], tol)
    if t.shape[1] != m:
        raise DimensionError(f"mixer has {t.shape[1]} columns, expected m={m}")
    return Ensemble.from_vectors(a @ t)


def mixer_from_vectors(a, x) -> np.ndarray:
    """Mixer reproducing kets ``x`` as closely as possible (exactly if x x^dag = a a^dag)."""
    r = a.shape[1]
    t = np.linalg.pinv(a) @ x
    if t.shape[1] < r:
        t = np.concatenate([t, np.zeros((r, r - t.shape[1]), dtype=t.dtype)], axis=1)
    return polar_factor(t)


def pattern_mask(pattern, d: int) -> np.ndarray:
    """Boolean support mask from a bitmask int or a collection of indices."""
    mask = np.zeros(d, dtype=bool)
    if isinstance(pattern, (int, np.integer)):
        for i in range(d):
            mask[i] = bool((int(pattern) >> i) & 1)
    else:
        mask[list(pattern)] = True
    if not mask.any():
        raise CohroofError("support pattern must be nonempty")
    return mask


def to_bitmask(mask) -> int:
    return int(sum(1 << int(i) for i in np.flatnonzero(mask)))


def support_patterns(x, tol: ToleranceConfig = DEFAULT_TOL) -> list:
    """Bitmask of each nonzero column of ``x``."""
    weights = np.einsum("ij,ij->j", x.conj(), x).real
    return [to_bitmask(support_mask(col, tol)) for col, w in zip(x.T, weights) if w > ZERO_WEIGHT]


def _null_basis(b: np.ndarray, r: int) -> np.ndarray:
    if b.shape[0] == 0:
        return np.eye(r, dtype=np.complex128)
    _, s, vh = np.linalg.svd(b, full_matrices=True)
    rank = int((s > 1e-12 * max(s.max(), 1e-300)).sum()) if s.size else 0
    return vh[rank:].conj().T


def refine_with_patterns(rho, patterns: Sequence, tol: ToleranceConfig = DEFAULT_TOL,
                         init=None, seed=0, max_iter: int = AP_MAX_ITER,
                         threshold: float = AP_THRESHOLD) -> Ensemble | None:
    """Find a decomposition whose member i is supported inside ``patterns[i]``.

    Alternates between the per-column linear constraint (mixer column i
    orthogonal to the rows of A at indices outside pattern i) and the
    orthonormal-row constraint (polar factor). Returns None when the
    residual does not fall below ``threshold`` within ``max_iter`` steps.
    """
    a = range_factor(rho)
    d, r = a.shape
    m = len(patterns)
    if m < r:
        return None
    bases = []
    for pat in patterns:
        forbidden = ~pattern_mask(pat, d)
        bases.append(_null_basis(a[forbidden], r))
    if sum(q.shape[1] for q in bases) < r:
        return None
    if init is None:
        t = random_mixer(r, m, seed)
    else:
        t = np.asarray(init, dtype=np.complex128)
        if t.shape != (r, m):
            raise DimensionError(f"init mixer must have shape {(r, m)}, got {t.shape}")

    def project(t):
        out = np.empty_like(t)
        for i, q in enumerate(bases):
            out[:, i] = q @ (q.conj().T @ t[:, i])
        return out

    eye = np.eye(r)
    for _ in range(max_iter):
        p = project(t)
        resid = np.abs(p @ p.conj().T - eye).max()
        if resid < threshold:
            x = a @ p
            for i, pat in enumerate(patterns):
                x[~pattern_mask(pat, d), i] = 0.0
            if np.abs(x @ x.conj().T - _as_density(rho)).max() > 1e-8:
                return None
            return Ensemble.from_vectors(x)
        t = polar_factor(p)
    return None
