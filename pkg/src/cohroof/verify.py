"""Randomized property suites behind ``cohroof verify``.

Each property runs ``trials`` independent trials; trial k draws from its own
PRNG stream derived from (seed, property id, k), so results do not depend on
execution order. A failing trial is reported by its index; the witness kept
is the one with the smallest index.
"""
import hashlib
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .channels import (
    attach_ancilla_isometry,
    conversion_unitary,
    random_incoherent_channel,
    selective_outcomes,
    validate_incoherent,
)
from .convexroof import (
    Budget,
    RoofProblem,
    estimate_roof,
    exact_qubit_lcn,
    l1_lower_bound,
    roof_objective,
    schmidt_measure,
)
from .measures import (
    coherence_rank,
    log_coherence_rank,
    log_schmidt_rank,
    superposition_bounds,
)
from .numerics import CohroofError, partial_trace, tensor_product
from .states import (
    DensityMatrix,
    Ensemble,
    PureState,
    ensemble_to_density,
    make_discontinuity_state,
    make_noisy_mcs,
    make_quantum_incoherent,
    random_density,
    random_pure,
)

SUITES = ("prop1", "axioms", "additivity", "noisy-mcs", "superadditivity", "qi", "conversion")


@dataclass
class PropertyOutcome:
    property_id: str
    trials: int
    failures: int = 0
    skipped: int = 0
    worst: dict | None = None
    max_error: float = 0.0

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        return {
            "property": self.property_id,
            "trials": self.trials,
            "failures": self.failures,
            "skipped": self.skipped,
            "max_error": self.max_error,
            "worst_witness": self.worst,
        }


@dataclass
class VerifyConfig:
    seed: int = 0
    trials: int | None = None
    budget: Budget = field(default_factory=Budget)
    dims: tuple = (2, 3, 4)


def trial_rng(seed: int, property_id: str, k: int):
    tag = int.from_bytes(hashlib.sha256(property_id.encode()).digest()[:4], "little")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tag, k)))


def run_property(property_id: str, trials: int, seed: int, trial: Callable) -> PropertyOutcome:
    """Run ``trial(rng) -> (passed, error, detail)``; None from trial means skipped."""
    out = PropertyOutcome(property_id, trials)
    for k in range(trials):
        res = trial(trial_rng(seed, property_id, k))
        if res is None:
            out.skipped += 1
            continue
        passed, error, detail = res
        out.max_error = max(out.max_error, float(error))
        if not passed:
            out.failures += 1
            if out.worst is None:
                out.worst = {"trial": k, "seed": seed, "error": float(error), **detail}
    return out


def _n(cfg: VerifyConfig, default: int) -> int:
    return default if cfg.trials is None else cfg.trials


def random_sparse_pure(d: int, rng, k: int | None = None) -> PureState:
    """Haar amplitudes on a uniformly random support of size k (random if None)."""
    k = int(rng.integers(1, d + 1)) if k is None else k
    support = rng.choice(d, size=k, replace=False)
    v = np.zeros(d, dtype=np.complex128)
    v[support] = rng.normal(size=k) + 1j * rng.normal(size=k)
    return PureState.from_vector(v)


def random_sparse_ensemble(d: int, m: int, rng) -> Ensemble:
    weights = rng.dirichlet(np.ones(m))
    return Ensemble(tuple((float(p), random_sparse_pure(d, rng)) for p in weights))


def _cvec(v):
    return [[float(z.real), float(z.imag)] for z in np.asarray(v).ravel()]


# --- superposition bounds -------------------------------------------------------------------------

def superposition_random(cfg: VerifyConfig, trials: int = 1000) -> PropertyOutcome:
    def trial(rng):
        d = int(rng.integers(2, 7))
        psi, phi = random_sparse_pure(d, rng), random_sparse_pure(d, rng)
        theta = rng.uniform(0, math.pi / 2)
        a = math.cos(theta) * np.exp(2j * math.pi * rng.random())
        b = math.sin(theta) * np.exp(2j * math.pi * rng.random())
        v = a * psi.amplitudes + b * phi.amplitudes
        if np.linalg.norm(v) < 1e-12:
            return None
        rank = coherence_rank(PureState.from_vector(v))
        lo, hi = superposition_bounds(psi, phi)
        ok = lo <= rank <= hi
        return ok, 0.0 if ok else 1.0, {"psi": _cvec(psi.amplitudes), "phi": _cvec(phi.amplitudes)}

    return run_property("superposition-rank-random", trials, cfg.seed, trial)


def _sup(d, idx, rng):
    v = np.zeros(d, dtype=np.complex128)
    v[list(idx)] = rng.normal(size=len(idx)) + 1j * rng.normal(size=len(idx))
    return PureState.from_vector(v)


def superposition_cases(cfg: VerifyConfig) -> PropertyOutcome:
    """Disjoint, overlapping and nested supports."""
    cases = [
        ("disjoint", (0, 1), (2, 3), lambda r, r1, r2: r == r1 + r2),
        ("overlapping", (0, 1, 2), (2, 3), lambda r, r1, r2: abs(r1 - r2) <= r <= r1 + r2),
        ("nested", (0,), (0, 1, 2), lambda r, r1, r2: r >= r2 - r1),
    ]

    def trial(rng):
        name, s1, s2, check = cases[int(rng.integers(len(cases)))]
        psi, phi = _sup(4, s1, rng), _sup(4, s2, rng)
        a = rng.uniform(0.1, 0.9)
        v = math.sqrt(a) * psi.amplitudes + math.sqrt(1 - a) * phi.amplitudes
        r = coherence_rank(PureState.from_vector(v))
        r1, r2 = coherence_rank(psi), coherence_rank(phi)
        lo, hi = superposition_bounds(psi, phi)
        ok = check(r, r1, r2) and lo <= r <= hi
        return ok, 0.0 if ok else 1.0, {"case": name}

    return run_property("superposition-rank-cases", max(3, _n(cfg, 30)), cfg.seed, trial)


# --- axioms -------------------------------------------------------------------------

def strong_monotonicity_pure(cfg: VerifyConfig, trials: int = 500) -> PropertyOutcome:
    """sum_n q_n L(K_n psi / sqrt q_n) <= L(psi), compared term by term."""

    def trial(rng):
        d = int(rng.integers(2, 7))
        psi = random_sparse_pure(d, rng)
        ch = random_incoherent_channel(d, int(rng.integers(2, 5)), rng)
        r = coherence_rank(psi)
        outcomes = selective_outcomes(ch, psi)
        ranks = [coherence_rank(s) for _, s in outcomes]
        qs = [q for q, _ in outcomes]
        lhs = math.fsum(q * math.log2(k) for q, k in zip(qs, ranks))
        rhs = math.fsum(qs) * math.log2(r)
        ok = all(k <= r for k in ranks) and lhs <= rhs + 1e-12
        return ok, max(lhs - rhs, 0.0), {"psi": _cvec(psi.amplitudes), "ranks": ranks}

    return run_property("strong-monotonicity-pure", trials, cfg.seed, trial)


def kraus_rank_monotonicity(cfg: VerifyConfig, trials: int = 500) -> PropertyOutcome:
    def trial(rng):
        d = int(rng.integers(2, 7))
        psi = random_sparse_pure(d, rng)
        ch = random_incoherent_channel(d, int(rng.integers(2, 5)), rng)
        r = coherence_rank(psi)
        worst = 0
        for k in ch.matrices():
            v = k @ psi.amplitudes
            if np.linalg.norm(v) > 1e-12:
                worst = max(worst, coherence_rank(PureState.from_vector(v)) - r)
        return worst <= 0, float(max(worst, 0)), {"psi": _cvec(psi.amplitudes)}

    return run_property("kraus-rank-monotonicity", trials, cfg.seed, trial)


def pushforward_monotonicity(cfg: VerifyConfig, trials: int = 200) -> PropertyOutcome:
    """The channel's pushforward of an ensemble never scores more, member by member or in total."""

    def trial(rng):
        d = int(rng.integers(2, 5))
        ens = random_sparse_ensemble(d, int(rng.integers(1, 5)), rng)
        ch = random_incoherent_channel(d, int(rng.integers(2, 4)), rng)
        worst = 0.0
        pushed = []
        for k in ch.matrices():
            for _, s in ens.members:
                v = k @ s.amplitudes
                if np.linalg.norm(v) > 1e-12:
                    worst = max(worst, log_coherence_rank(PureState.from_vector(v)) - log_coherence_rank(s))
            pushed.append(k @ ens.vectors())
        total = roof_objective(Ensemble.from_vectors(np.concatenate(pushed, axis=1)))
        worst = max(worst, total - roof_objective(ens))
        return worst <= 1e-12, max(worst, 0.0), {"d": d}

    return run_property("pushforward-monotonicity", trials, cfg.seed, trial)


def faithfulness(cfg: VerifyConfig, trials: int = 20) -> PropertyOutcome:
    """Zero exactly on incoherent states, certified positive on coherent ones."""

    def trial(rng):
        d = int(rng.integers(2, 5))
        diag = rng.dirichlet(np.ones(d))
        inc = estimate_roof(RoofProblem(DensityMatrix(np.diag(diag)), budget=cfg.budget))
        coh = estimate_roof(RoofProblem(random_density(d, int(rng.integers(1, d + 1)), rng), budget=cfg.budget))
        ok = inc.value == 0.0 and inc.exact and coh.lower.value > 0
        return ok, inc.value, {"d": d}

    return run_property("faithfulness", _n(cfg, trials), cfg.seed, trial)


def convexity(cfg: VerifyConfig, trials: int = 10) -> PropertyOutcome:
    def trial(rng):
        d = int(rng.integers(2, 4))
        r1 = random_density(d, int(rng.integers(1, d + 1)), rng)
        r2 = random_density(d, int(rng.integers(1, d + 1)), rng)
        lam = float(rng.uniform(0.1, 0.9))
        s1 = estimate_roof(RoofProblem(r1, budget=cfg.budget))
        s2 = estimate_roof(RoofProblem(r2, budget=cfg.budget))
        union = Ensemble(tuple((lam * p, s) for p, s in s1.result.certificate.members)
                         + tuple(((1 - lam) * p, s) for p, s in s2.result.certificate.members))
        mix = DensityMatrix(lam * r1.matrix + (1 - lam) * r2.matrix)
        sm = estimate_roof(RoofProblem(mix, budget=cfg.budget, seeds=(union,)))
        gap = sm.value - (lam * s1.value + (1 - lam) * s2.value)
        return gap <= 1e-6, max(gap, 0.0), {"lambda": lam}

    return run_property("convexity", _n(cfg, trials), cfg.seed, trial)


def unitary_invariance(cfg: VerifyConfig, trials: int = 1000) -> PropertyOutcome:
    def trial(rng):
        d = int(rng.integers(1, 9))
        psi = random_sparse_pure(d, rng)
        phases = np.exp(1j * rng.uniform(0, 2 * math.pi, size=d))
        rotated = PureState(phases * psi.amplitudes)
        ok = coherence_rank(rotated) == coherence_rank(psi)
        return ok, 0.0 if ok else 1.0, {"psi": _cvec(psi.amplitudes)}

    return run_property("unitary-incoherent-invariance", trials, cfg.seed, trial)


def channel_validity(cfg: VerifyConfig, trials: int = 1000) -> PropertyOutcome:
    def trial(rng):
        d = int(rng.integers(1, 7))
        n = int(rng.integers(1, 5))
        rep = validate_incoherent(random_incoherent_channel(d, n, rng))
        err = max([rep.completeness_residual] + rep.leakage)
        return rep.ok, err, {"dim": d, "n_kraus": n}

    return run_property("channel-validity", trials, cfg.seed, trial)


def discontinuity_witness(cfg: VerifyConfig) -> PropertyOutcome:
    def trial(rng):
        psi = make_discontinuity_state(4, 1e-6)
        overlap = abs(psi.amplitudes[0]) ** 2
        ok = log_coherence_rank(psi) == 2.0 and overlap > 1 - 1e-6 - 1e-15
        return ok, 2.0 - log_coherence_rank(psi), {"overlap": overlap}

    return run_property("discontinuity-witness", 1, cfg.seed, trial)


# --- additivity -----------------------------------------------------------------------

def pure_additivity(cfg: VerifyConfig, trials: int = 200) -> PropertyOutcome:
    def trial(rng):
        d1, d2 = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        p1, p2 = random_sparse_pure(d1, rng), random_sparse_pure(d2, rng)
        prod = PureState(tensor_product(p1.amplitudes, p2.amplitudes))
        ok = coherence_rank(prod) == coherence_rank(p1) * coherence_rank(p2)
        err = abs(log_coherence_rank(prod) - log_coherence_rank(p1) - log_coherence_rank(p2))
        return ok and err <= 1e-12, err, {"d1": d1, "d2": d2}

    return run_property("pure-additivity", trials, cfg.seed, trial)


def product_ensemble(e1: Ensemble, e2: Ensemble) -> Ensemble:
    # each factor may sum to 1 only within tolerance, and the product doubles the drift
    pairs = [(p * q, np.kron(s.amplitudes, t.amplitudes)) for p, s in e1.members for q, t in e2.members]
    total = math.fsum(w for w, _ in pairs)
    return Ensemble(tuple((w / total, PureState(v)) for w, v in pairs))


def mixed_subadditivity(cfg: VerifyConfig, trials: int = 50) -> PropertyOutcome:
    def trial(rng):
        d1, d2 = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        r1 = random_density(d1, int(rng.integers(1, d1 + 1)), rng)
        r2 = random_density(d2, int(rng.integers(1, d2 + 1)), rng)
        s1 = estimate_roof(RoofProblem(r1, budget=cfg.budget))
        s2 = estimate_roof(RoofProblem(r2, budget=cfg.budget))
        seed = product_ensemble(s1.result.certificate, s2.result.certificate)
        prod = DensityMatrix(np.kron(r1.matrix, r2.matrix))
        sp = estimate_roof(RoofProblem(prod, budget=cfg.budget, seeds=(seed,), max_dim=9, polish_rounds=1))
        gap = sp.value - s1.value - s2.value
        return gap <= 1e-6, max(gap, 0.0), {"d1": d1, "d2": d2, "search_gap": gap}

    return run_property("mixed-subadditivity", _n(cfg, trials), cfg.seed, trial)


# --- noisy maximally coherent ---------------------------------------------------------

def noisy_mcs(cfg: VerifyConfig, lambdas=(0.0, 0.25, 0.5, 0.75, 1.0)) -> PropertyOutcome:
    grid = [(d, lam) for d in cfg.dims for lam in lambdas]

    def trial_for(d, lam):
        rho = make_noisy_mcs(d, lam)
        target = lam * math.log2(d)
        upper = estimate_roof(RoofProblem(rho, budget=cfg.budget)).value
        lower = l1_lower_bound(rho).value
        err = max(abs(upper - target), abs(lower - target))
        return err <= 1e-3, err, {"d": d, "lambda": lam, "upper": upper, "lower": lower}

    out = PropertyOutcome("noisy-mcs-closed-form", len(grid))
    for k, (d, lam) in enumerate(grid):
        passed, err, detail = trial_for(d, lam)
        out.max_error = max(out.max_error, err)
        if not passed:
            out.failures += 1
            if out.worst is None:
                out.worst = {"trial": k, **detail}
    return out


# --- super-additivity -----------------------------------------------------------------

def _marginals(psi: PureState, dims):
    rho = psi.projector()
    return partial_trace(rho, dims, 0), partial_trace(rho, dims, 1)


def superadditivity_2x2(cfg: VerifyConfig, trials: int = 500) -> PropertyOutcome:
    def trial(rng):
        psi = random_pure(4, rng)
        rs, ra = _marginals(psi, (2, 2))
        lhs = exact_qubit_lcn(rs).value + exact_qubit_lcn(ra).value
        rhs = log_coherence_rank(psi)
        return lhs <= rhs + 1e-12, max(lhs - rhs, 0.0), {"psi": _cvec(psi.amplitudes)}

    return run_property("marginal-superadditivity-2x2", trials, cfg.seed, trial)


def entanglement_chain_2x2(cfg: VerifyConfig, trials: int = 500) -> PropertyOutcome:
    def trial(rng):
        psi = random_pure(4, rng)
        rs, ra = _marginals(psi, (2, 2))
        lhs = max(exact_qubit_lcn(rs).value, exact_qubit_lcn(ra).value) + log_schmidt_rank(psi, (2, 2))
        rhs = log_coherence_rank(psi)
        return lhs <= rhs + 1e-12, max(lhs - rhs, 0.0), {"psi": _cvec(psi.amplitudes)}

    return run_property("marginal-entanglement-chain-2x2", trials, cfg.seed, trial)


def tripartite_2x2x2(cfg: VerifyConfig, trials: int = 200) -> PropertyOutcome:
    """L_E(S|A1A2) + L_C(rho_A1) + L_C(rho_A2) <= L_C(psi) with certified sides."""

    def trial(rng):
        psi = random_pure(8, rng)
        rho = psi.projector()
        ent = schmidt_measure(rho, (2, 4))
        l_a1 = exact_qubit_lcn(partial_trace(rho, (2, 2, 2), 1))
        l_a2 = exact_qubit_lcn(partial_trace(rho, (2, 2, 2), 2))
        lhs = ent.lower.value + l_a1.value + l_a2.value
        rhs = log_coherence_rank(psi)
        return lhs <= rhs + 1e-12, max(lhs - rhs, 0.0), {"psi": _cvec(psi.amplitudes)}

    return run_property("tripartite-chain-2x2x2", trials, cfg.seed, trial)


# --- quantum-incoherent ---------------------------------------------------------------

def quantum_incoherent(cfg: VerifyConfig, trials: int = 50) -> PropertyOutcome:
    def trial(rng):
        n = int(rng.integers(2, 4))
        weights = rng.dirichlet(np.ones(n))
        blocks = [random_density(2, int(rng.integers(1, 3)), rng) for _ in range(n)]
        chi = make_quantum_incoherent(weights, blocks)
        target = math.fsum(w * exact_qubit_lcn(b).value for w, b in zip(weights, blocks))
        roof = estimate_roof(RoofProblem(chi, budget=cfg.budget)).value
        ent = schmidt_measure(chi, (n, 2), cfg.budget).value
        err = abs(roof - target)
        return err <= 1e-3 and ent <= 1e-6, max(err, ent), {"blocks": n, "roof": roof, "target": target, "schmidt": ent}

    return run_property("quantum-incoherent-additivity", _n(cfg, trials), cfg.seed, trial)


# --- conversion ---------------------------------------------------------------------

def conversion_pure(cfg: VerifyConfig, trials: int = 200) -> PropertyOutcome:
    def trial(rng):
        d = int(rng.integers(1, 7))
        psi = random_sparse_pure(d, rng)
        zero = np.zeros(d)
        zero[0] = 1.0
        out = PureState(conversion_unitary(d) @ np.kron(psi.amplitudes, zero))
        lc, le = log_coherence_rank(psi), log_schmidt_rank(out, (d, d))
        return lc == le, abs(lc - le), {"psi": _cvec(psi.amplitudes)}

    return run_property("pure-conversion", trials, cfg.seed, trial)


def conversion_mixed_qubit(cfg: VerifyConfig, trials: int = 100) -> PropertyOutcome:
    w = attach_ancilla_isometry(2)

    def trial(rng):
        rho = random_density(2, 2, rng)
        out = DensityMatrix(w @ rho.matrix @ w.conj().T)
        lc = exact_qubit_lcn(rho).value
        le = schmidt_measure(out, (2, 2), cfg.budget).value
        err = abs(lc - le)
        return err <= 1e-3, err, {"lc": lc, "le": le}

    return run_property("mixed-qubit-conversion", _n(cfg, trials), cfg.seed, trial)


def decomposition_correspondence(cfg: VerifyConfig, trials: int = 100) -> PropertyOutcome:
    def trial(rng):
        d = int(rng.integers(2, 5))
        ens = random_sparse_ensemble(d, int(rng.integers(1, 6)), rng)
        w = attach_ancilla_isometry(d)
        rho = ensemble_to_density(ens).matrix
        mapped = Ensemble(tuple((p, PureState(w @ s.amplitudes)) for p, s in ens.members))
        mix_err = float(np.abs(ensemble_to_density(mapped).matrix - w @ rho @ w.conj().T).max())
        same = all(log_coherence_rank(s) == log_schmidt_rank(t, (d, d))
                   for (_, s), (_, t) in zip(ens.members, mapped.members))
        return same and mix_err <= 1e-10, mix_err, {"d": d}

    return run_property("decomposition-correspondence", trials, cfg.seed, trial)


def generation_bound(cfg: VerifyConfig, trials: int = 20) -> PropertyOutcome:
    """Certified lower bound on generated entanglement never exceeds the coherence upper bound."""
    from .channels import entanglement_generation_check

    def trial(rng):
        rho = random_density(2, int(rng.integers(1, 3)), rng)
        if rng.random() < 0.5:
            ch = conversion_unitary(2)
        else:
            ch = random_incoherent_channel(4, int(rng.integers(1, 4)), rng)
        rep = entanglement_generation_check(rho, ch, cfg.budget)
        return rep.holds, max(rep.entanglement_lower - rep.coherence_upper, 0.0), {}

    return run_property("generation-bound", _n(cfg, trials), cfg.seed, trial)


# --- suite registry ---------------------------------------------------------------------

def _scaled(fn, default):
    return lambda cfg: fn(cfg, _n(cfg, default))


REGISTRY = {
    "prop1": [_scaled(superposition_random, 1000), superposition_cases],
    "axioms": [
        faithfulness,
        _scaled(strong_monotonicity_pure, 500),
        _scaled(kraus_rank_monotonicity, 500),
        _scaled(pushforward_monotonicity, 200),
        convexity,
        _scaled(unitary_invariance, 1000),
        _scaled(channel_validity, 1000),
        discontinuity_witness,
    ],
    "additivity": [_scaled(pure_additivity, 200), mixed_subadditivity],
    "noisy-mcs": [noisy_mcs],
    "superadditivity": [
        _scaled(superadditivity_2x2, 500),
        _scaled(entanglement_chain_2x2, 500),
        _scaled(tripartite_2x2x2, 200),
    ],
    "qi": [quantum_incoherent],
    "conversion": [
        _scaled(conversion_pure, 200),
        conversion_mixed_qubit,
        _scaled(decomposition_correspondence, 100),
        generation_bound,
    ],
}


def run_suite(name: str, cfg: VerifyConfig) -> list:
    if name == "all":
        return [o for s in SUITES for o in run_suite(s, cfg)]
    if name not in REGISTRY:
        raise CohroofError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    return [fn(cfg) for fn in REGISTRY[name]]
