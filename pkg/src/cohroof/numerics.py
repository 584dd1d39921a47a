"""Dense complex linear algebra and the numerical tolerance policy.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Every function
here is pure; inputs are never modified.
"""
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np


class CohroofError(ValueError):
    """Base class for invalid input to any cohroof routine."""


class DimensionError(CohroofError):
    pass


class InvariantError(CohroofError):
    """A value failed one of its type invariants; ``invariant`` names it."""

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        msg = invariant if not detail else f"{invariant}: {detail}"
        super().__init__(msg)


@dataclass(frozen=True)
class ToleranceConfig:
    """Thresholds used to decide 'zero' in finite precision.

    support_eps is relative to the largest modulus of the vector being
    inspected; psd_eps and ortho_eps are absolute.
    """

    support_eps: float = 1e-9
    psd_eps: float = 1e-9
    ortho_eps: float = 1e-9

    def __post_init__(self):
        for name in ("support_eps", "psd_eps", "ortho_eps"):
            value = getattr(self, name)
            if not (0.0 < value < 1e-3):
                raise InvariantError(f"{name} must lie in (0, 1e-3)", repr(value))


DEFAULT_TOL = ToleranceConfig()


def as_matrix(m, name="matrix") -> np.ndarray:
    """Validate and return a finite 2-D complex array (a copy)."""
    arr = np.array(m, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvariantError(f"{name} entries must be finite")
    return arr


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product. 1-D inputs are treated as kets and give a 1-D ket."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.ndim == 1 and b.ndim == 1:
        return np.kron(a, b)
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def _keep_indices(keep, n):
    if isinstance(keep, str):
        keep = {"S": 0, "A": 1}[keep]
    if isinstance(keep, (int, np.integer)):
        keep = (int(keep),)
    keep = tuple(sorted({int(k) for k in keep}))
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"subsystem index out of range: {keep}")
    return keep


def partial_trace(m, dims: Sequence[int], keep=0) -> np.ndarray:
    """Reduce ``m`` on the tensor product of ``dims`` to subsystems ``keep``.

    ``keep`` is a subsystem index, a collection of indices, or "S"/"A" for
    the first/second factor of a bipartition.
    """
    m = as_matrix(m)
    dims = tuple(int(x) for x in dims)
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise DimensionError(f"matrix shape {m.shape} does not match dims {dims}")
    keep = _keep_indices(keep, len(dims))
    n = len(dims)
    tensor = m.reshape(dims + dims)
    # einsum labels: row subsystem k -> letter k, column -> letter n+k (or k if traced)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = [letters[k] for k in range(n)]
    col = [letters[n + k] if k in keep else letters[k] for k in range(n)]
    out = [letters[k] for k in keep] + [letters[n + k] for k in keep]
    expr = "".join(row) + "".join(col) + "->" + "".join(out)
    kept = int(np.prod([dims[k] for k in keep])) if keep else 1
    return np.einsum(expr, tensor).reshape(kept, kept)


def hermitian_eig(m, tol: ToleranceConfig = DEFAULT_TOL):
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvectors as columns.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"hermitian_eig needs a square matrix, got {m.shape}")
    if np.abs(m - m.conj().T).max() > tol.ortho_eps:
        raise InvariantError("matrix is not Hermitian")
    herm = (m + m.conj().T) / 2
    w, v = np.linalg.eigh(herm)
    return w[::-1].copy(), v[:, ::-1].copy()


def svd(m):
    """Full SVD ``m = U @ diag(s) @ V`` with singular values descending."""
    m = as_matrix(m)
    u, s, vh = np.linalg.svd(m, full_matrices=True)
    return u, s, vh


def support_mask(v, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Boolean mask of entries whose modulus exceeds support_eps * max modulus."""
    mod = np.abs(np.asarray(v, dtype=np.complex128).ravel())
    top = mod.max() if mod.size else 0.0
    if top == 0.0:
        raise CohroofError("support of the zero vector is undefined")
    return mod > tol.support_eps * top


def count_support(v, tol: ToleranceConfig = DEFAULT_TOL) -> int:
    """Number of entries of ``v`` that are nonzero up to the relative threshold."""
    return int(support_mask(v, tol).sum())


def numerical_rank(singulars, tol: ToleranceConfig = DEFAULT_TOL) -> int:
    s = np.asarray(singulars, dtype=float)
    if s.size == 0 or s.max() == 0.0:
        return 0
    return int((s > tol.support_eps * s.max()).sum())


def polar_factor(m) -> np.ndarray:
    """Nearest matrix with orthonormal rows (or columns) in Frobenius norm."""
    u, _, vh = np.linalg.svd(m, full_matrices=False)
    return u @ vh
