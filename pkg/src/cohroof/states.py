"""State types, standard state families, seeded sampling and the JSON state format.

Random sampling uses numpy's ``default_rng`` (PCG64 bit generator). Every
sampler takes an integer seed, or a ``numpy.random.Generator`` when the
caller manages its own stream.
"""
import json
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .numerics import (
    DEFAULT_TOL,
    CohroofError,
    DimensionError,
    InvariantError,
    ToleranceConfig,
    as_matrix,
)

NORM_TOL = 1e-10
# members lighter than this are dropped when building ensembles from vectors
ZERO_WEIGHT = 1e-15


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _frozen(arr):
    arr = np.array(arr, dtype=np.complex128)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=np.complex128)
        if amp.ndim != 1 or amp.size == 0:
            raise InvariantError("amplitudes must be a non-empty vector", f"shape {amp.shape}")
        if not np.all(np.isfinite(amp)):
            raise InvariantError("amplitudes must be finite")
        norm2 = float(np.vdot(amp, amp).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise InvariantError("squared-modulus sum must equal 1", f"got {norm2!r}")
        object.__setattr__(self, "amplitudes", _frozen(amp))

    @classmethod
    def from_vector(cls, v) -> "PureState":
        """Normalize ``v`` and wrap it."""
        v = np.asarray(v, dtype=np.complex128).ravel()
        norm = np.linalg.norm(v)
        if norm == 0.0:
            raise CohroofError("cannot normalize the zero vector")
        return cls(v / norm)

    @classmethod
    def basis(cls, d: int, i: int) -> "PureState":
        v = np.zeros(d, dtype=np.complex128)
        v[i] = 1.0
        return cls(v)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.projector())


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray
    tol: ToleranceConfig = DEFAULT_TOL

    def __post_init__(self):
        m = as_matrix(self.matrix, "density matrix")
        if m.shape[0] != m.shape[1]:
            raise InvariantError("density matrix must be square", f"shape {m.shape}")
        if np.abs(m - m.conj().T).max() > self.tol.ortho_eps:
            raise InvariantError("density matrix must be Hermitian")
        m = (m + m.conj().T) / 2
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > NORM_TOL:
            raise InvariantError("trace must equal 1", f"got {tr!r}")
        low = float(np.linalg.eigvalsh(m)[0])
        if low < -self.tol.psd_eps:
            raise InvariantError("density matrix must be positive semidefinite", f"min eigenvalue {low!r}")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_incoherent(self) -> bool:
        off = self.matrix - np.diag(np.diag(self.matrix))
        return float(np.abs(off).max()) <= self.tol.support_eps * float(np.abs(self.matrix).max())


@dataclass(frozen=True, eq=False)
class Ensemble:
    """A weighted list of pure states; ``members`` holds (weight, PureState) pairs."""

    members: tuple

    def __post_init__(self):
        members = tuple((float(p), s) for p, s in self.members)
        if not members:
            raise InvariantError("ensemble must have at least one member")
        dims = {s.dim for _, s in members}
        if len(dims) != 1:
            raise InvariantError("all ensemble states must share one dimension", str(sorted(dims)))
        weights = np.array([p for p, _ in members])
        if np.any(weights <= 0):
            raise InvariantError("ensemble weights must be positive")
        if abs(weights.sum() - 1.0) > NORM_TOL:
            raise InvariantError("ensemble weights must sum to 1", f"got {weights.sum()!r}")
        object.__setattr__(self, "members", members)

    @classmethod
    def from_vectors(cls, x) -> "Ensemble":
        """Build from unnormalized kets, one per column: weight = squared norm."""
        x = np.asarray(x, dtype=np.complex128)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        members = []
        for col in x.T:
            w = float(np.vdot(col, col).real)
            if w > ZERO_WEIGHT:
                members.append((w, PureState(col / np.sqrt(w))))
        return cls(tuple(members))

    @property
    def dim(self) -> int:
        return self.members[0][1].dim

    @property
    def weights(self) -> np.ndarray:
        return np.array([p for p, _ in self.members])

    @property
    def states(self) -> list:
        return [s for _, s in self.members]

    def vectors(self) -> np.ndarray:
        """d x m matrix whose columns are sqrt(p_i) |psi_i>."""
        return np.stack([np.sqrt(p) * s.amplitudes for p, s in self.members], axis=1)

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True, eq=False)
class BipartiteView:
    dims: tuple
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        dims = tuple(int(x) for x in self.dims)
        if c.shape != dims:
            raise InvariantError("coefficient matrix shape must equal dims", f"{c.shape} vs {dims}")
        fro = float(np.linalg.norm(c))
        if abs(fro - 1.0) > NORM_TOL:
            raise InvariantError("Frobenius norm must equal 1", f"got {fro!r}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "coeffs", _frozen(c))

    @classmethod
    def of(cls, psi: PureState, dims) -> "BipartiteView":
        d_s, d_a = (int(x) for x in dims)
        if d_s * d_a != psi.dim:
            raise DimensionError(f"dimension {psi.dim} does not factor as {d_s}x{d_a}")
        return cls((d_s, d_a), psi.amplitudes.reshape(d_s, d_a))


# --- generators -------------------------------------------------------------

def make_maximally_coherent(d: int, phases=None) -> PureState:
    if d < 1:
        raise CohroofError("dimension must be at least 1")
    phases = np.zeros(d) if phases is None else np.asarray(phases, dtype=float)
    if phases.shape != (d,):
        raise CohroofError(f"need {d} phases, got {phases.shape}")
    return PureState(np.exp(1j * phases) / np.sqrt(d))


def make_noisy_mcs(d: int, lam: float) -> DensityMatrix:
    """lam |psi_M><psi_M| + (1 - lam) I/d with all phases zero."""
    if not 0.0 <= lam <= 1.0:
        raise CohroofError(f"lambda must lie in [0, 1], got {lam}")
    psi = make_maximally_coherent(d)
    return DensityMatrix(lam * psi.projector() + (1 - lam) * np.eye(d) / d)


def make_quantum_incoherent(weights: Sequence[float], blocks: Sequence) -> DensityMatrix:
    """sum_i p_i |i><i| (x) rho_i on C^len(weights) (x) C^dim(block)."""
    weights = np.asarray(weights, dtype=float)
    blocks = [b.matrix if isinstance(b, DensityMatrix) else DensityMatrix(b).matrix for b in blocks]
    if len(weights) != len(blocks) or len(blocks) == 0:
        raise CohroofError("weights and blocks must have the same nonzero length")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > NORM_TOL:
        raise CohroofError("weights must be a probability vector")
    d_a = {b.shape[0] for b in blocks}
    if len(d_a) != 1:
        raise CohroofError("all blocks must share one dimension")
    d_s = len(blocks)
    out = np.zeros((d_s * blocks[0].shape[0],) * 2, dtype=np.complex128)
    for i, (p, b) in enumerate(zip(weights, blocks)):
        proj = np.zeros((d_s, d_s))
        proj[i, i] = 1.0
        out += p * np.kron(proj, b)
    return DensityMatrix(out)


def make_discontinuity_state(d: int, eps: float) -> PureState:
    """sqrt(1-eps)|0> + sqrt(eps/(d-1)) sum_{i>0} |i>: close to |0> yet full support."""
    if d < 2 or not 0.0 < eps < 1.0:
        raise CohroofError(f"need d >= 2 and 0 < eps < 1, got d={d}, eps={eps}")
    v = np.full(d, np.sqrt(eps / (d - 1)), dtype=np.complex128)
    v[0] = np.sqrt(1 - eps)
    return PureState.from_vector(v)


def random_pure(d: int, seed=None) -> PureState:
    """Haar-random pure state."""
    rng = _rng(seed)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return PureState.from_vector(v)


def random_density(d: int, rank: int | None = None, seed=None) -> DensityMatrix:
    """Normalized Wishart matrix G G^dag with G of shape d x rank."""
    rank = d if rank is None else rank
    if not 1 <= rank <= d:
        raise CohroofError(f"rank must lie in [1, {d}], got {rank}")
    rng = _rng(seed)
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_mixer(r: int, m: int, seed=None) -> np.ndarray:
    """r x m matrix with orthonormal rows, from a QR of a complex Gaussian."""
    if m < r:
        raise CohroofError(f"mixer needs m >= r, got m={m}, r={r}")
    rng = _rng(seed)
    g = rng.normal(size=(m, r)) + 1j * rng.normal(size=(m, r))
    q, rr = np.linalg.qr(g)
    q = q * (np.diag(rr) / np.abs(np.diag(rr)))
    return q.conj().T


def random_ensemble(rho: DensityMatrix, m: int, seed=None) -> Ensemble:
    from .convexroof import parametrize_decomposition, range_factor

    a = range_factor(rho)
    r = a.shape[1]
    if m < r:
        raise CohroofError(f"ensemble size {m} is below rank {r}")
    return parametrize_decomposition(rho, m, random_mixer(r, m, seed))


def ensemble_to_density(e: Ensemble) -> DensityMatrix:
    x = e.vectors()
    return DensityMatrix(x @ x.conj().T)


def superpose(a: complex, psi: PureState, b: complex, phi: PureState) -> PureState:
    if psi.dim != phi.dim:
        raise DimensionError("superposed states must share one dimension")
    v = a * psi.amplitudes + b * phi.amplitudes
    if np.linalg.norm(v) < 1e-12:
        raise CohroofError("superposition cancels to the zero vector")
    return PureState.from_vector(v)


# --- file format -------------------------------------------------------------

def _encode(values):
    return [[float(z.real), float(z.imag)] for z in np.asarray(values).ravel()]


def _decode(pairs, shape):
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvariantError("complex entries must be [re, im] pairs")
    flat = arr[:, 0] + 1j * arr[:, 1]
    if flat.size != int(np.prod(shape)):
        raise InvariantError("entry count must match dim", f"{flat.size} entries for shape {shape}")
    return flat.reshape(shape)


def state_to_json(state) -> dict:
    if isinstance(state, PureState):
        return {"dim": state.dim, "kind": "pure", "data": _encode(state.amplitudes)}
    if isinstance(state, DensityMatrix):
        return {"dim": state.dim, "kind": "density", "data": _encode(state.matrix)}
    raise TypeError(f"cannot serialize {type(state).__name__}")


def state_from_json(obj: dict, tol: ToleranceConfig = DEFAULT_TOL):
    try:
        dim = int(obj["dim"])
        kind = obj["kind"]
        data = obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvariantError("state object needs dim, kind and data", str(exc)) from None
    if kind == "pure":
        return PureState(_decode(data, (dim,)))
    if kind == "density":
        return DensityMatrix(_decode(data, (dim, dim)), tol)
    raise InvariantError("kind must be 'pure' or 'density'", repr(kind))


def write_state(path, state) -> None:
    with open(path, "w") as fh:
        json.dump(state_to_json(state), fh, indent=1)
        fh.write("\n")


def read_state(path, tol: ToleranceConfig = DEFAULT_TOL):
    with open(path) as fh:
        obj = json.load(fh)
    return state_from_json(obj, tol)


def ensemble_to_json(e: Ensemble) -> dict:
    return {
        "dim": e.dim,
        "kind": "ensemble",
        "members": [{"weight": p, "amplitudes": _encode(s.amplitudes)} for p, s in e.members],
    }
