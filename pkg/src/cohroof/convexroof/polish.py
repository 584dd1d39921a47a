"""Weight optimization for a fixed family of member structures.

Grouping the members of a decomposition by their support S, the members in
group S sum to a PSD block C_S living on S x S, and any PSD block on S splits
back into members supported inside S. So for a fixed family of supports the
best decomposition solves

    minimize   sum_S cost(S) tr C_S
    subject to sum_S C_S = rho,  C_S >= 0 on S x S,

a small semidefinite program. Its solution is turned into an exact
certificate by :func:`refine_with_patterns`.

For Schmidt-rank scores the analogous program runs over a pool of candidate
pure states (found by the annealing search) plus one PSD remainder.
"""
import itertools
import logging
import warnings

import cvxpy as cp
import numpy as np

from ..numerics import DEFAULT_TOL, ToleranceConfig
from .decomposition import (
    RANK_CUTOFF,
    mixer_from_vectors,
    pattern_mask,
    range_factor,
    refine_with_patterns,
)

log = logging.getLogger(__name__)

SOLVER = "CLARABEL"
# blocks lighter than this are treated as solver noise when re-solving
PRUNE_WEIGHT = 1e-7


def _solve(problem) -> bool:
    try:
        with warnings.catch_warnings():
            # inaccurate solutions are still snapped and checked downstream
            warnings.simplefilter("ignore", UserWarning)
            problem.solve(solver=SOLVER)
    except cp.error.SolverError as exc:
        log.debug("SDP solver failed: %s", exc)
        return False
    return problem.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE)


def all_patterns(d: int, max_size: int | None = None) -> list:
    max_size = d if max_size is None else max_size
    return [sum(1 << i for i in c) for k in range(1, max_size + 1)
            for c in itertools.combinations(range(d), k)]


def block_program(rho, patterns, costs=None):
    """Solve the support-block program; returns [(pattern, block)] or None.

    ``costs`` defaults to log2|S|; pass zeros for a pure feasibility check.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    d = rho.shape[0]
    patterns = list(dict.fromkeys(int(p) for p in patterns))
    masks = [pattern_mask(p, d) for p in patterns]
    if costs is None:
        costs = [np.log2(mask.sum()) for mask in masks]
    total = 0
    objective = 0
    constraints = []
    blocks = []
    for mask, cost in zip(masks, costs):
        idx = np.flatnonzero(mask)
        k = idx.size
        embed = np.zeros((d, k))
        embed[idx, np.arange(k)] = 1.0
        if k == 1:
            var = cp.Variable(nonneg=True)
            total = total + var * np.outer(embed[:, 0], embed[:, 0])
            objective = objective + cost * var
        else:
            var = cp.Variable((k, k), hermitian=True)
            constraints.append(var >> 0)
            total = total + embed @ var @ embed.T
            objective = objective + cost * cp.real(cp.trace(var))
        blocks.append((var, idx))
    constraints.append(total == rho)
    problem = cp.Problem(cp.Minimize(objective), constraints)
    if not _solve(problem):
        return None
    out = []
    for pat, (var, idx) in zip(patterns, blocks):
        val = np.atleast_2d(np.asarray(var.value, dtype=np.complex128))
        block = np.zeros((d, d), dtype=np.complex128)
        block[np.ix_(idx, idx)] = (val + val.conj().T) / 2
        out.append((pat, block))
    return out


def _split_blocks(blocks):
    cols, pats = [], []
    for pat, block in blocks:
        w, v = np.linalg.eigh(block)
        for lam, vec in zip(w, v.T):
            if lam > RANK_CUTOFF:
                cols.append(np.sqrt(lam) * vec)
                pats.append(pat)
    return cols, pats


def _snap(rho, blocks, tol):
    cols, pats = _split_blocks(blocks)
    a = range_factor(rho)
    if len(cols) < a.shape[1]:
        return None
    init = mixer_from_vectors(a, np.stack(cols, axis=1))
    return refine_with_patterns(rho, pats, tol, init=init)


def blocks_to_certificate(rho, blocks, tol: ToleranceConfig = DEFAULT_TOL):
    """Split solved blocks into members and snap them to an exact decomposition.

    Interior-point solutions leave traces of order 1e-9 on unused patterns,
    which can stall the snapping step. If it fails, the program is re-solved
    over the patterns that carry real weight and snapped again.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    cert = _snap(rho, blocks, tol)
    if cert is not None:
        return cert
    keep = [pat for pat, block in blocks if np.trace(block).real > PRUNE_WEIGHT]
    if not keep or len(keep) == len(blocks):
        return None
    pruned = block_program(rho, keep)
    return None if pruned is None else _snap(rho, pruned, tol)


def candidate_program(rho, candidates, scores, remainder_score: float):
    """Best mixture of fixed candidate kets plus a PSD remainder.

    ``candidates`` are unit kets inside the range of rho. Returns the
    unnormalized member kets (d x m) of an exact decomposition, or None.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    a = range_factor(rho)
    r = a.shape[1]
    lam = np.einsum("ij,ij->j", a.conj(), a).real
    basis = a / np.sqrt(lam)
    if not candidates:
        return None
    # work in the eigenbasis of the range, where rho is diag(lam)
    coords = np.stack([basis.conj().T @ c for c in candidates], axis=1)
    outers = [np.outer(col, col.conj()) for col in coords.T]
    w = cp.Variable(len(candidates), nonneg=True)
    rem = np.diag(lam).astype(np.complex128) - sum(w[j] * outers[j] for j in range(len(outers)))
    rem_var = cp.Variable((r, r), hermitian=True)
    constraints = [rem_var == rem, rem_var >> 0]
    objective = cp.Minimize(np.asarray(scores) @ w + remainder_score * cp.real(cp.trace(rem_var)))
    problem = cp.Problem(objective, constraints)
    if not _solve(problem):
        return None
    weights = np.clip(np.asarray(w.value, dtype=float), 0.0, None)
    used = sum(p * o for p, o in zip(weights, outers))
    # shrink the candidate weights until the remainder is PSD in floating point
    gamma, step = 1.0, 1e-10
    while np.linalg.eigvalsh(np.diag(lam) - gamma * used)[0] < -1e-13:
        if gamma == 0.0:
            return None
        gamma = max(1.0 - step, 0.0)
        step *= 4
    ev, evec = np.linalg.eigh(np.diag(lam) - gamma * used)
    cols = [np.sqrt(gamma * p) * (basis @ coords[:, j]) for j, p in enumerate(weights) if gamma * p > 1e-15]
    cols += [np.sqrt(e) * (basis @ evec[:, i]) for i, e in enumerate(ev) if e > 1e-15]
    return np.stack(cols, axis=1)
