"""Convex-roof estimation: seeded multi-restart annealing plus structure polish."""
import cmath
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from ..measures import MeasureResult, coherence_number_lower
from ..numerics import (
    DEFAULT_TOL,
    CohroofError,
    DimensionError,
    ToleranceConfig,
    support_mask,
)
from ..states import ZERO_WEIGHT, DensityMatrix, Ensemble, random_mixer
from .bounds import best_lower_bound, exact_qubit_lcn
from .decomposition import (
    LOG_COHERENCE,
    MAX_COHERENCE,
    Score,
    member_score,
    mixer_from_vectors,
    range_factor,
    roof_objective,
    support_patterns,
    to_bitmask,
    vectors_objective,
)
from .polish import (
    all_patterns,
    block_program,
    blocks_to_certificate,
    candidate_program,
)

DEFAULT_MAX_DIM = 8
EXACT_GAP = 1e-6
# above this many subsets the max-rank feasibility step uses harvested patterns only
MAX_ENUMERATED_PATTERNS = 300


class UnsupportedDimension(DimensionError):
    pass


@dataclass(frozen=True)
class Budget:
    restarts: int = 4
    iterations: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.iterations < 0:
            raise CohroofError("search budget must have at least one restart")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "Budget":
        """Parse ``"restarts:iterations"``."""
        try:
            restarts, iterations = (int(x) for x in text.split(":"))
        except ValueError:
            raise CohroofError(f"budget must look like RESTARTS:ITERS, got {text!r}") from None
        return cls(restarts, iterations, seed)


@dataclass(frozen=True, eq=False)
class RoofProblem:
    rho: DensityMatrix
    score: Score = LOG_COHERENCE
    m: int | None = None
    tol: ToleranceConfig = DEFAULT_TOL
    budget: Budget = Budget()
    seeds: Sequence[Ensemble] = ()
    max_dim: int = DEFAULT_MAX_DIM
    exhaustive: bool = False
    polish_rounds: int = 4
    workers: int = 1

    def __post_init__(self):
        if not isinstance(self.rho, DensityMatrix):
            object.__setattr__(self, "rho", DensityMatrix(self.rho, self.tol))
        if self.score.is_schmidt and int(np.prod(self.score.dims)) != self.rho.dim:
            raise DimensionError(f"dimension {self.rho.dim} does not factor as {self.score.dims}")
        if self.m is not None and self.m < 1:
            raise CohroofError("ensemble size must be positive")
        object.__setattr__(self, "seeds", tuple(self.seeds))


@dataclass(frozen=True)
class RoofSolution:
    result: MeasureResult
    lower: MeasureResult
    stats: dict = field(default_factory=dict)

    @property
    def value(self) -> float:
        return self.result.value

    @property
    def exact(self) -> bool:
        return self.result.kind == "exact"


# --- member scoring used inside the annealing loop ----------------------------

class _Scorer:
    def __init__(self, score: Score, tol: ToleranceConfig, d: int):
        self.score = score
        self.tol = tol
        if score.is_schmidt:
            self.worst = math.log2(min(score.dims))
        else:
            self.worst = float(d) if score.is_max else math.log2(d)

    def __call__(self, x) -> float:
        return member_score(x, self.score, self.tol)

    def objective(self, weights, scores) -> float:
        live = weights > ZERO_WEIGHT
        if not np.any(live):
            return 0.0
        if self.score.is_max:
            return float(scores[live].max())
        return float(np.dot(weights[live], scores[live]))

    def target(self, xi, xj, rng) -> complex | None:
        """Coefficient t such that xi + t*xj has a smaller score than xi, if one is cheap to find."""
        if self.score.is_schmidt:
            return self._schmidt_target(xi, xj, rng)
        common = np.flatnonzero(support_mask(xi, self.tol) & support_mask(xj, self.tol))
        if common.size == 0:
            return None
        k = common[rng.integers(common.size)]
        return -xi[k] / xj[k]

    def _schmidt_target(self, xi, xj, rng):
        d_s, d_a = self.score.dims
        mi, mj = xi.reshape(d_s, d_a), xj.reshape(d_s, d_a)
        s = np.linalg.svd(mi, compute_uv=False)
        q = int((s > self.tol.support_eps * s.max()).sum())
        if q < 2:
            return None
        u = np.linalg.svd(np.concatenate([mi, mj], axis=1))[0][:, :q]
        vh = np.linalg.svd(np.concatenate([mi, mj], axis=0))[2][:q]
        ci, cj = u.conj().T @ mi @ vh.conj().T, u.conj().T @ mj @ vh.conj().T
        with np.errstate(all="ignore"):
            roots = scipy.linalg.eigvals(ci, -cj)
        roots = roots[np.isfinite(roots)]
        if roots.size == 0:
            return None
        return complex(roots[rng.integers(roots.size)])


def _rotate(x, t, i, j, c_, s_):
    xi, xj = x[:, i].copy(), x[:, j].copy()
    x[:, i] = c_ * xi + s_ * xj
    x[:, j] = -np.conj(s_) * xi + c_ * xj
    ti, tj = t[:, i].copy(), t[:, j].copy()
    t[:, i] = c_ * ti + s_ * tj
    t[:, j] = -np.conj(s_) * ti + c_ * tj


def _anneal(a, t0, scorer: _Scorer, rng, iterations: int, harvest: list):
    """Metropolis annealing over mixers with two-column rotations.

    Half the proposals are targeted: the rotation angle is chosen so one
    member loses a support index (or a Schmidt coefficient), which moves
    the piecewise-constant objective between plateaus.
    """
    t = t0.copy()
    x = a @ t
    m = x.shape[1]
    weights = np.einsum("ij,ij->j", x.conj(), x).real
    scores = np.array([scorer(col) if w > ZERO_WEIGHT else 0.0 for col, w in zip(x.T, weights)])
    current = scorer.objective(weights, scores)
    best, best_t = current, t.copy()
    accepted = 0
    temp0, temp1 = 0.3, 1e-4
    for step in range(iterations):
        if m < 2:
            break
        temp = temp0 * (temp1 / temp0) ** (step / max(iterations - 1, 1))
        i, j = rng.choice(m, size=2, replace=False)
        coef = None
        if rng.random() < 0.5 and weights[i] > ZERO_WEIGHT and weights[j] > ZERO_WEIGHT:
            coef = scorer.target(x[:, i], x[:, j], rng)
        if coef is not None and cmath.isfinite(coef):
            norm = math.hypot(1.0, abs(coef))
            c_, s_ = 1.0 / norm, coef / norm
        else:
            theta = rng.uniform(0.0, math.pi / 2)
            c_ = math.cos(theta)
            s_ = math.sin(theta) * np.exp(1j * rng.uniform(0.0, 2 * math.pi))
        old = (x[:, [i, j]].copy(), t[:, [i, j]].copy(), weights[[i, j]].copy(), scores[[i, j]].copy())
        _rotate(x, t, i, j, c_, s_)
        for k in (i, j):
            weights[k] = float(np.vdot(x[:, k], x[:, k]).real)
            scores[k] = scorer(x[:, k]) if weights[k] > ZERO_WEIGHT else 0.0
        proposed = scorer.objective(weights, scores)
        delta = proposed - current
        if delta <= 0 or rng.random() < math.exp(-delta / temp):
            current = proposed
            accepted += 1
            for k in (i, j):
                if weights[k] > ZERO_WEIGHT and scores[k] < scorer.worst:
                    harvest.append(x[:, k] / math.sqrt(weights[k]))
            if current < best - 1e-15:
                best, best_t = current, t.copy()
        else:
            x[:, [i, j]], t[:, [i, j]], weights[[i, j]], scores[[i, j]] = old
    return best_t, accepted


def _restart_rng(seed: int, index: int):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _check_certificate(rho, ens: Ensemble) -> bool:
    x = ens.vectors()
    return float(np.abs(x @ x.conj().T - rho).max()) <= 1e-8


# --- main entry points ----------------------------------------------------------

def estimate_roof(p: RoofProblem) -> RoofSolution:
    """Upper and lower bounds on the convex roof of ``p.score`` at ``p.rho``.

    Reduction steps that are exact are applied first: incoherent and pure
    inputs, splitting a coherence roof over disconnected blocks of rho, and
    quantum-incoherent inputs for the Schmidt score.
    """
    rho = p.rho.matrix
    d = p.rho.dim
    if d > p.max_dim:
        raise UnsupportedDimension(f"dimension {d} exceeds the configured cap {p.max_dim}")
    a = range_factor(rho)
    if a.shape[1] == 1:
        return _pure_solution(p, a[:, 0])
    if p.score.is_schmidt:
        qi = _quantum_incoherent_certificate(rho, p.score.dims, p.tol)
        if qi is not None:
            zero = MeasureResult(0.0, "exact", qi)
            return RoofSolution(zero, MeasureResult(0.0, "lower-bound", {"method": "quantum-incoherent"}),
                                {"reduction": "quantum-incoherent"})
        return _search(p, rho)
    if p.rho.is_incoherent():
        return _incoherent_solution(p, rho)
    comps = _components(rho, p.tol)
    if len(comps) > 1:
        return _split_solution(p, rho, comps)
    return _search(p, rho)


def _exact_pair(value, cert, note):
    return RoofSolution(MeasureResult(value, "exact", cert),
                        MeasureResult(value, "lower-bound", {"method": note}), {"reduction": note})


def _pure_solution(p, vec):
    ens = Ensemble.from_vectors(vec.reshape(-1, 1))
    return _exact_pair(roof_objective(ens, p.score, p.tol), ens, "pure")


def _incoherent_solution(p, rho):
    diag = np.clip(np.diag(rho).real, 0.0, None)
    ens = Ensemble.from_vectors(np.diag(np.sqrt(diag / diag.sum())))
    return _exact_pair(roof_objective(ens, p.score, p.tol), ens, "incoherent")


def _components(rho, tol):
    graph = np.abs(rho) > tol.support_eps * np.abs(rho).max()
    n, labels = connected_components(graph, directed=False)
    return [np.flatnonzero(labels == k) for k in range(n)]


def _split_solution(p: RoofProblem, rho, comps) -> RoofSolution:
    """Coherence roofs are additive over blocks with no coupling between them.

    A member psi = a (+) b spanning two blocks splits into members a, b; by
    concavity of log2, |a|^2 log2|S_a| + |b|^2 log2|S_b| <= log2(|S_a|+|S_b|),
    so restricting to single blocks never costs more.
    """
    d = rho.shape[0]
    cols, lowers, parts = [], [], []
    all_exact = True
    for k, idx in enumerate(comps):
        sub = rho[np.ix_(idx, idx)]
        weight = float(np.trace(sub).real)
        if weight <= ZERO_WEIGHT:
            continue
        seeds = []
        for seed in p.seeds:
            xs = seed.vectors()[idx]
            if float(np.linalg.norm(xs)) ** 2 > ZERO_WEIGHT:
                seeds.append(Ensemble.from_vectors(xs / math.sqrt(weight)))
        sub_p = RoofProblem(
            DensityMatrix(sub / weight, p.tol), p.score, p.m, p.tol,
            Budget(p.budget.restarts, p.budget.iterations, p.budget.seed + 7919 * k),
            seeds, p.max_dim, p.exhaustive, p.polish_rounds, p.workers,
        )
        sol = estimate_roof(sub_p)
        all_exact &= sol.exact
        lowers.append((weight, sol.lower.value))
        parts.append({"indices": idx.tolist(), "weight": weight, "upper": sol.value, "lower": sol.lower.value})
        for w, s in sol.result.certificate.members:
            v = np.zeros(d, dtype=np.complex128)
            v[idx] = s.amplitudes
            cols.append(math.sqrt(w * weight) * v)
    ens = Ensemble.from_vectors(np.stack(cols, axis=1))
    value = roof_objective(ens, p.score, p.tol)
    if p.score.is_max:
        lower = max(lv for _, lv in lowers)
    else:
        lower = math.fsum(w * lv for w, lv in lowers)
    kind = "exact" if all_exact or value - lower <= EXACT_GAP else "upper-bound"
    return RoofSolution(MeasureResult(value, kind, ens),
                        MeasureResult(lower, "lower-bound", {"method": "block-split", "parts": parts}),
                        {"reduction": "block-split", "blocks": len(parts)})


def _quantum_incoherent_certificate(rho, dims, tol):
    """Product-state decomposition if rho is block diagonal on S (or on A)."""
    d_s, d_a = dims
    t = rho.reshape(d_s, d_a, d_s, d_a)
    scale = tol.support_eps * np.abs(rho).max()
    for side in (0, 1):
        n = (d_s, d_a)[side]
        off = t.copy()
        for i in range(n):
            if side == 0:
                off[i, :, i, :] = 0
            else:
                off[:, i, :, i] = 0
        if np.abs(off).max() > scale:
            continue
        cols = []
        for i in range(n):
            block = t[i, :, i, :] if side == 0 else t[:, i, :, i]
            w, v = np.linalg.eigh(block)
            e = np.zeros(n)
            e[i] = 1.0
            for lam, vec in zip(w, v.T):
                if lam > ZERO_WEIGHT:
                    ket = np.kron(e, vec) if side == 0 else np.kron(vec, e)
                    cols.append(math.sqrt(lam) * ket)
        return Ensemble.from_vectors(np.stack(cols, axis=1))
    return None


def _lower_bound(p: RoofProblem, rho) -> MeasureResult:
    if p.score.is_schmidt:
        return MeasureResult(0.0, "lower-bound", {"method": "trivial"})
    if p.score.is_max:
        k = coherence_number_lower(rho)
        return MeasureResult(float(k), "lower-bound", {"method": "l1-support"})
    return best_lower_bound(rho)


def _search(p: RoofProblem, rho) -> RoofSolution:
    d = rho.shape[0]
    a = range_factor(rho)
    r = a.shape[1]
    m = p.m if p.m is not None else r * r
    m = max(m, r)
    scorer = _Scorer(p.score, p.tol, d)

    def run(index):
        rng = _restart_rng(p.budget.seed, index)
        if index == 0:
            t0 = np.concatenate([np.eye(r), np.zeros((r, m - r))], axis=1).astype(np.complex128)
        else:
            t0 = random_mixer(r, m, rng)
        harvest = []
        t, accepted = _anneal(a, t0, scorer, rng, p.budget.iterations, harvest)
        x = a @ t
        return vectors_objective(x, p.score, p.tol), x, harvest, accepted

    indices = range(p.budget.restarts)
    if p.workers > 1:
        with ThreadPoolExecutor(p.workers) as pool:
            runs = list(pool.map(run, indices))
    else:
        runs = [run(i) for i in indices]

    candidates = [(val, k, x) for k, (val, x, _, _) in enumerate(runs)]
    for k, seed in enumerate(p.seeds):
        x = seed.vectors()
        if x.shape[0] != d:
            raise DimensionError("seed ensemble dimension does not match rho")
        # re-express through a mixer so the candidate mixes exactly to rho
        t = mixer_from_vectors(a, x)
        xs = a @ t
        candidates.append((vectors_objective(xs, p.score, p.tol), p.budget.restarts + k, xs))
    best_val, best_idx, best_x = min(candidates, key=lambda c: (c[0], c[1]))
    harvest = [v for run_ in runs for v in run_[2]]
    stats = {
        "restarts": p.budget.restarts,
        "iterations": p.budget.iterations,
        "ensemble_size": m,
        "accepted": [run_[3] for run_ in runs],
        "best_restart": int(best_idx),
        "anneal_best": float(best_val),
    }

    best_ens = Ensemble.from_vectors(best_x)
    if p.score.is_schmidt:
        best_ens, rounds = _polish_schmidt(rho, best_ens, harvest, scorer, p)
    elif p.score.is_max:
        best_ens, rounds = _polish_max(rho, best_ens, harvest, p)
    else:
        best_ens, rounds = _polish_patterns(rho, best_ens, harvest, p)
    stats["polish_rounds"] = rounds

    value = roof_objective(best_ens, p.score, p.tol)
    lower = _lower_bound(p, rho)
    kind = "exact" if value - lower.value <= EXACT_GAP else "upper-bound"
    return RoofSolution(MeasureResult(value, kind, best_ens), lower, stats)


def _drops(pattern: int, d: int):
    bits = [i for i in range(d) if (pattern >> i) & 1]
    if len(bits) < 2:
        return []
    return [pattern & ~(1 << i) for i in bits]


def _polish_patterns(rho, ens: Ensemble, harvest, p: RoofProblem):
    """Re-weight over the support patterns seen so far, plus one-index drops."""
    d = rho.shape[0]
    best_val = roof_objective(ens, LOG_COHERENCE, p.tol)
    seen = {to_bitmask(support_mask(v, p.tol)) for v in harvest}
    rounds = 0
    for _ in range(p.polish_rounds):
        if p.exhaustive:
            pats = all_patterns(d)
        else:
            current = set(support_patterns(ens.vectors(), p.tol))
            pats = set(current) | seen
            for pat in current:
                pats.update(_drops(pat, d))
            pats.update(1 << i for i in range(d))
            pats.add((1 << d) - 1)
            pats = sorted(pats)
        blocks = block_program(rho, pats)
        rounds += 1
        if blocks is None:
            break
        cand = blocks_to_certificate(rho, blocks, p.tol)
        if cand is None or not _check_certificate(rho, cand):
            break
        val = roof_objective(cand, LOG_COHERENCE, p.tol)
        if val < best_val - 1e-12:
            ens, best_val = cand, val
        else:
            break
        if p.exhaustive:
            break
    return ens, rounds


def _polish_max(rho, ens: Ensemble, harvest, p: RoofProblem):
    """Smallest k for which rho splits into members of support at most k."""
    d = rho.shape[0]
    best = round(roof_objective(ens, MAX_COHERENCE, p.tol))
    k = coherence_number_lower(rho)
    seen = {to_bitmask(support_mask(v, p.tol)) for v in harvest}
    rounds = 0
    while k < best:
        if math.comb(d, k) <= MAX_ENUMERATED_PATTERNS:
            pats = [q for q in all_patterns(d, k) if (q).bit_count() == k]
        else:
            pats = sorted(q for q in seen if (q).bit_count() <= k)
        rounds += 1
        if pats:
            blocks = block_program(rho, pats, costs=[0.0] * len(pats))
            if blocks is not None:
                cand = blocks_to_certificate(rho, blocks, p.tol)
                if cand is not None and _check_certificate(rho, cand):
                    return cand, rounds
        k += 1
    return ens, rounds


def _polish_schmidt(rho, ens: Ensemble, harvest, scorer: _Scorer, p: RoofProblem):
    """Re-weight over the low-Schmidt-rank members found during the search."""
    pool = []
    for v in list(harvest) + [s.amplitudes for s in ens.states]:
        if scorer(v) >= scorer.worst:
            continue
        if any(abs(np.vdot(u, v)) > 1 - 1e-9 for u in pool):
            continue
        pool.append(v)
        if len(pool) >= 200:
            break
    if not pool:
        return ens, 0
    x = candidate_program(rho, pool, [scorer(v) for v in pool], scorer.worst)
    if x is None:
        return ens, 1
    cand = Ensemble.from_vectors(x)
    if _check_certificate(rho, cand) and roof_objective(cand, p.score, p.tol) < roof_objective(ens, p.score, p.tol) - 1e-12:
        return cand, 1
    return ens, 1


def schmidt_measure(rho, dims, budget: Budget = Budget(), **kwargs) -> RoofSolution:
    """Convex roof of log2(Schmidt rank) across the cut dims = (d_S, d_A)."""
    return estimate_roof(RoofProblem(rho, Score("log-schmidt-rank", tuple(dims)), budget=budget, **kwargs))


def coherence_number(rho, budget: Budget = Budget(), **kwargs) -> RoofSolution:
    """Min over decompositions of the largest member coherence rank."""
    return estimate_roof(RoofProblem(rho, MAX_COHERENCE, budget=budget, **kwargs))


def log_coherence_number(rho, budget: Budget = Budget(), **kwargs) -> RoofSolution:
    return estimate_roof(RoofProblem(rho, LOG_COHERENCE, budget=budget, **kwargs))


def lcn_quantum_incoherent(weights, blocks, engine=None) -> MeasureResult:
    """sum_i p_i L_C(rho_i) for the state sum_i p_i |i><i| (x) rho_i.

    Blocks that are incoherent, pure or qubits are solved exactly; others
    go through ``engine`` (default :func:`log_coherence_number`) and make
    the total an upper bound.
    """
    engine = engine or log_coherence_number
    weights = np.asarray(weights, dtype=float)
    blocks = [b if isinstance(b, DensityMatrix) else DensityMatrix(b) for b in blocks]
    d_s = len(blocks)
    total, exact, cols = [], True, []
    for i, (w, block) in enumerate(zip(weights, blocks)):
        if w <= 0:
            continue
        if block.is_incoherent() or range_factor(block.matrix).shape[1] == 1:
            res = estimate_roof(RoofProblem(block)).result
        elif block.dim == 2:
            res = exact_qubit_lcn(block)
        else:
            res = engine(block).result
        exact &= res.kind == "exact"
        total.append(w * res.value)
        e = np.zeros(d_s)
        e[i] = 1.0
        for q, s in res.certificate.members:
            cols.append(math.sqrt(w * q) * np.kron(e, s.amplitudes))
    cert = Ensemble.from_vectors(np.stack(cols, axis=1))
    return MeasureResult(math.fsum(total), "exact" if exact else "upper-bound", cert)
