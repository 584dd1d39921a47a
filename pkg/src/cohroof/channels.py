"""Incoherent operations in Kraus form and the coherence-to-entanglement maps."""
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .convexroof import Budget, RoofProblem, estimate_roof, schmidt_measure
from .numerics import CohroofError, DimensionError, InvariantError
from .states import DensityMatrix, PureState, _decode, _encode, _rng

COMPLETENESS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class IncoherentKraus:
    """K = sum_i c_i |f(i)><i|."""

    dim_in: int
    dim_out: int
    index_map: tuple
    coeffs: np.ndarray

    def __post_init__(self):
        fmap = tuple(int(x) for x in self.index_map)
        coeffs = np.array(self.coeffs, dtype=np.complex128).ravel()
        if len(fmap) != self.dim_in or coeffs.size != self.dim_in:
            raise InvariantError("index map and coefficients need one entry per input index")
        if any(not 0 <= f < self.dim_out for f in fmap):
            raise InvariantError("index map must land inside the output basis")
        if np.any(np.abs(coeffs) > 1 + 1e-12):
            raise InvariantError("coefficient moduli must not exceed 1")
        coeffs.flags.writeable = False
        object.__setattr__(self, "index_map", fmap)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_matrix(cls, k, atol: float = 1e-12) -> "IncoherentKraus":
        """Read the index map off a matrix with at most one nonzero per column."""
        k = np.asarray(k, dtype=np.complex128)
        fmap, coeffs = [], []
        for col in k.T:
            nz = np.flatnonzero(np.abs(col) > atol)
            if nz.size > 1:
                raise InvariantError("each column of an incoherent Kraus operator has one nonzero entry")
            f = int(nz[0]) if nz.size else 0
            fmap.append(f)
            coeffs.append(col[f] if nz.size else 0.0)
        return cls(k.shape[1], k.shape[0], tuple(fmap), np.array(coeffs))

    def matrix(self) -> np.ndarray:
        k = np.zeros((self.dim_out, self.dim_in), dtype=np.complex128)
        k[list(self.index_map), np.arange(self.dim_in)] = self.coeffs
        return k


@dataclass(frozen=True, eq=False)
class IncoherentChannel:
    kraus: tuple

    def __post_init__(self):
        kraus = tuple(self.kraus)
        if not kraus:
            raise InvariantError("a channel needs at least one Kraus operator")
        shapes = {(k.dim_in, k.dim_out) for k in kraus}
        if len(shapes) != 1:
            raise InvariantError("all Kraus operators must share input and output dimensions")
        object.__setattr__(self, "kraus", kraus)

    @classmethod
    def from_unitary(cls, u) -> "IncoherentChannel":
        return cls((IncoherentKraus.from_matrix(u),))

    @property
    def dim_in(self) -> int:
        return self.kraus[0].dim_in

    @property
    def dim_out(self) -> int:
        return self.kraus[0].dim_out

    def matrices(self) -> list:
        return [k.matrix() for k in self.kraus]


@dataclass
class ValidationReport:
    completeness_residual: float
    leakage: list = field(default_factory=list)
    tol: float = COMPLETENESS_TOL

    @property
    def ok(self) -> bool:
        return self.completeness_residual <= self.tol and all(x <= self.tol for x in self.leakage)

    def failures(self) -> list:
        out = []
        if self.completeness_residual > self.tol:
            out.append(f"completeness residual {self.completeness_residual:.3e}")
        out += [f"Kraus {n} leaks {x:.3e} off the diagonal" for n, x in enumerate(self.leakage) if x > self.tol]
        return out


def _kraus_matrices(ch) -> list:
    if isinstance(ch, IncoherentChannel):
        return ch.matrices()
    return [np.asarray(k, dtype=np.complex128) for k in ch]


def validate_incoherent(ch) -> ValidationReport:
    """Check completeness and that every basis projector maps to a diagonal matrix.

    ``ch`` may be an :class:`IncoherentChannel` or any list of Kraus matrices.
    """
    mats = _kraus_matrices(ch)
    d_in = mats[0].shape[1]
    total = sum(k.conj().T @ k for k in mats)
    resid = float(np.abs(total - np.eye(d_in)).max())
    leakage = []
    for k in mats:
        worst = 0.0
        for i in range(d_in):
            col = k[:, i]
            out = np.outer(col, col.conj())
            worst = max(worst, float(np.abs(out - np.diag(np.diag(out))).max()))
        leakage.append(worst)
    return ValidationReport(resid, leakage)


def random_incoherent_channel(dim: int, n_kraus: int, seed=None, phases: bool = True) -> IncoherentChannel:
    """Random incoherent channel on C^dim with ``n_kraus`` Kraus operators.

    Index maps are uniform random functions and, for each input index, the
    squared moduli over Kraus operators are Dirichlet distributed. When two
    inputs share an output under some map, completeness also needs their
    coefficient vectors to be orthogonal on those operators; the later
    input's vector is projected accordingly and renormalized, and the maps
    are redrawn if that leaves nothing.
    """
    if n_kraus < 1 or dim < 1:
        raise CohroofError("need dim >= 1 and n_kraus >= 1")
    rng = _rng(seed)
    if n_kraus == 1:
        perm = rng.permutation(dim)
        c = np.exp(2j * np.pi * rng.random(dim)) if phases else np.ones(dim)
        return IncoherentChannel((IncoherentKraus(dim, dim, tuple(perm), c),))
    for _ in range(1000):
        maps = rng.integers(dim, size=(n_kraus, dim))
        coeffs = np.empty((n_kraus, dim), dtype=np.complex128)
        ok = True
        for i in range(dim):
            c = np.sqrt(rng.dirichlet(np.ones(n_kraus))).astype(np.complex128)
            if phases:
                c *= np.exp(2j * np.pi * rng.random(n_kraus))
            cons = [np.where(maps[:, j] == maps[:, i], coeffs[:, j], 0) for j in range(i)]
            cons = [v for v in cons if np.any(v)]
            if cons:
                q, _ = np.linalg.qr(np.stack(cons, axis=1))
                c = c - q @ (q.conj().T @ c)
            norm = np.linalg.norm(c)
            if norm < 1e-6:
                ok = False
                break
            coeffs[:, i] = c / norm
        if ok:
            kraus = tuple(IncoherentKraus(dim, dim, tuple(maps[n]), coeffs[n]) for n in range(n_kraus))
            return IncoherentChannel(kraus)
    raise CohroofError("could not sample a complete incoherent channel")


def _density(state):
    if isinstance(state, PureState):
        return state.projector()
    if isinstance(state, DensityMatrix):
        return state.matrix
    return np.asarray(state, dtype=np.complex128)


def apply_channel(ch, state) -> DensityMatrix:
    mats = _kraus_matrices(ch)
    rho = _density(state)
    if rho.shape[0] != mats[0].shape[1]:
        raise DimensionError(f"state dimension {rho.shape[0]} does not match channel input {mats[0].shape[1]}")
    out = sum(k @ rho @ k.conj().T for k in mats)
    return DensityMatrix(out / np.trace(out).real)


def selective_outcomes(ch, state, min_prob: float = 1e-14) -> list:
    """(q_n, state_n) for each Kraus operator with nonzero outcome probability.

    Pure inputs give pure outcomes K_n|psi>/sqrt(q_n).
    """
    mats = _kraus_matrices(ch)
    d_in = mats[0].shape[1]
    out = []
    if isinstance(state, PureState):
        if state.dim != d_in:
            raise DimensionError(f"state dimension {state.dim} does not match channel input {d_in}")
        for k in mats:
            v = k @ state.amplitudes
            q = float(np.vdot(v, v).real)
            if q > min_prob:
                out.append((q, PureState(v / math.sqrt(q))))
        return out
    rho = _density(state)
    if rho.shape[0] != d_in:
        raise DimensionError(f"state dimension {rho.shape[0]} does not match channel input {d_in}")
    for k in mats:
        m = k @ rho @ k.conj().T
        q = float(np.trace(m).real)
        if q > min_prob:
            out.append((q, DensityMatrix(m / q)))
    return out


def conversion_unitary(d: int) -> np.ndarray:
    """Generalized CNOT on C^d (x) C^d: |i>|j> -> |i>|i+j mod d>."""
    if d < 1:
        raise CohroofError("dimension must be at least 1")
    u = np.zeros((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            u[i * d + (i + j) % d, i * d + j] = 1.0
    return u


def attach_ancilla_isometry(d: int) -> np.ndarray:
    """W = U (I (x) |0>): the d^2 x d isometry |i> -> |i>|i>."""
    ket0 = np.zeros((d, 1))
    ket0[0, 0] = 1.0
    return conversion_unitary(d) @ np.kron(np.eye(d), ket0)


def attach_ancilla(state, d_anc: int | None = None) -> np.ndarray:
    """rho (x) |0><0| on the doubled space (ancilla dimension defaults to dim)."""
    rho = _density(state)
    d_anc = rho.shape[0] if d_anc is None else d_anc
    zero = np.zeros((d_anc, d_anc))
    zero[0, 0] = 1.0
    return np.kron(rho, zero)


@dataclass
class GenerationReport:
    coherence_upper: float
    coherence_lower: float
    entanglement_upper: float
    entanglement_lower: float
    output: DensityMatrix

    @property
    def holds(self) -> bool:
        return self.entanglement_lower <= self.coherence_upper + 1e-9

    def to_dict(self) -> dict:
        return {
            "coherence": {"lower": self.coherence_lower, "upper": self.coherence_upper},
            "entanglement": {"lower": self.entanglement_lower, "upper": self.entanglement_upper},
            "holds": self.holds,
        }


def entanglement_generation_check(rho, ch, budget=None) -> GenerationReport:
    """Bound L_C(rho) and L_E(ch(rho (x) |0><0|)) and compare them.

    ``ch`` acts on the doubled space; it may be an IncoherentChannel, a
    list of Kraus matrices or a single unitary matrix.
    """
    budget = budget or Budget()
    rho = rho if isinstance(rho, DensityMatrix) else DensityMatrix(_density(rho))
    d = rho.dim
    if isinstance(ch, np.ndarray) and ch.ndim == 2:
        ch = [ch]
    mats = _kraus_matrices(ch)
    if mats[0].shape[1] != d * d:
        raise DimensionError(f"channel must act on dimension {d * d}, got {mats[0].shape[1]}")
    out = apply_channel(mats, attach_ancilla(rho))
    coh = estimate_roof(RoofProblem(rho, budget=budget))
    ent = schmidt_measure(out, (d, d), budget)
    return GenerationReport(coh.value, coh.lower.value, ent.value, ent.lower.value, out)


# --- file format -------------------------------------------------------------

def channel_to_json(ch: IncoherentChannel) -> dict:
    return {
        "dim": ch.dim_in,
        "kraus": [{"map": list(k.index_map), "coeffs": _encode(k.coeffs)} for k in ch.kraus],
    }


def channel_from_json(obj: dict) -> IncoherentChannel:
    try:
        dim = int(obj["dim"])
        kraus = tuple(
            IncoherentKraus(dim, dim, tuple(k["map"]), _decode(k["coeffs"], (dim,))) for k in obj["kraus"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvariantError("channel object needs dim and kraus[map, coeffs]", str(exc)) from None
    return IncoherentChannel(kraus)


def write_channel(path, ch: IncoherentChannel) -> None:
    with open(path, "w") as fh:
        json.dump(channel_to_json(ch), fh, indent=1)
        fh.write("\n")


def read_channel(path) -> IncoherentChannel:
    with open(path) as fh:
        return channel_from_json(json.load(fh))
