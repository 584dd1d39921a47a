"""Command-line front end.

Every command prints one JSON report on stdout (sorted keys, so equal runs
give equal bytes apart from ``timing``) and a short human summary on stderr.

Exit codes: 0 success, 1 verification failures, 2 unreadable input, bad
parameters or unknown suite, 3 invariant violation, 4 dimension over cap.
"""
import argparse
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import verify as V
from .channels import attach_ancilla_isometry, conversion_unitary
from .convexroof import (
    Budget,
    RoofProblem,
    UnsupportedDimension,
    coherence_number,
    estimate_roof,
    exact_qubit_lcn,
    schmidt_measure,
)
from .convexroof.search import DEFAULT_MAX_DIM
from .measures import (
    MeasureResult,
    coherence_rank,
    l1_coherence,
    log_coherence_rank,
    log_schmidt_rank,
    relative_entropy_coherence,
    schmidt_rank,
)
from .numerics import CohroofError, InvariantError, ToleranceConfig
from .states import (
    DensityMatrix,
    Ensemble,
    PureState,
    ensemble_to_json,
    make_discontinuity_state,
    make_maximally_coherent,
    make_noisy_mcs,
    make_quantum_incoherent,
    random_density,
    read_state,
    state_to_json,
    write_state,
)

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_INVARIANT, EXIT_DIM = 0, 1, 2, 3, 4

MEASURES = (
    "coherence-rank", "log-coherence-rank", "lcn", "coherence-number",
    "schmidt-rank", "schmidt-measure", "l1", "rel-entropy",
)
FAMILIES = ("mcs", "noisy-mcs", "qi", "discontinuity")


class UsageError(CohroofError):
    """Bad command-line parameters."""


# --- argument helpers --------------------------------------------------------------

def parse_dims(text: str) -> tuple:
    try:
        dims = tuple(int(x) for x in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"--dims must look like 2x2 or 2x2x2, got {text!r}") from None
    if len(dims) < 2 or min(dims) < 1:
        raise UsageError(f"--dims needs at least two positive factors, got {text!r}")
    return dims


def parse_floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def default_seed() -> int:
    raw = os.environ.get("COHROOF_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"COHROOF_SEED must be an integer, got {raw!r}") from None


def _tol(args) -> ToleranceConfig:
    if args.tol is None:
        return ToleranceConfig()
    try:
        return ToleranceConfig(support_eps=args.tol)
    except CohroofError as exc:
        raise UsageError(f"--tol: {exc}") from None


def _budget(args) -> Budget:
    try:
        return Budget.parse(args.budget, args.seed) if args.budget else Budget(seed=args.seed)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"--budget must be restarts:iterations, got {args.budget!r}") from exc


def _digest(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


def _read_input(path: str, tol):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
        json.loads(raw)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read state file {path}: {exc}") from exc
    return read_state(path, tol), _digest(raw)


def _as_density(state) -> DensityMatrix:
    return DensityMatrix(state.projector()) if isinstance(state, PureState) else state


def _as_pure(state, measure: str) -> PureState:
    if isinstance(state, PureState):
        return state
    w, v = np.linalg.eigh(state.matrix)
    if w.size > 1 and w[-2] > 1e-12:
        raise UsageError(f"{measure} is defined for pure states; use the roof measure for mixed states")
    return PureState.from_vector(v[:, -1])


# --- report ------------------------------------------------------------------------------

def _certificate_json(cert):
    if isinstance(cert, Ensemble):
        return ensemble_to_json(cert)
    return cert


def result_entry(name: str, res: MeasureResult, cert_path: str | None = None) -> dict:
    entry = {"name": name, "value": float(res.value), "kind": res.kind}
    if res.certificate is not None:
        entry["certificate"] = {"path": cert_path} if cert_path else _certificate_json(res.certificate)
    return entry


def _write_certificate(path: str, cert) -> None:
    with open(path, "w") as fh:
        json.dump(_certificate_json(cert), fh, indent=1, sort_keys=True)
        fh.write("\n")


def _report(args, digest, results=(), suites=(), extra=None) -> dict:
    echo = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "json") and not k.startswith("_")}
    rep = {"command": echo, "inputs_digest": digest, "results": list(results), "suites": list(suites)}
    if extra:
        rep.update(extra)
    return rep


def _emit(rep: dict, started: float) -> None:
    rep["timing"] = {"seconds": round(time.perf_counter() - started, 3)}
    sys.stdout.write(json.dumps(rep, sort_keys=True, indent=1, allow_nan=False) + "\n")


def _say(args, text: str) -> None:
    if not args.json:
        print(text, file=sys.stderr)


# --- commands ---------------------------------------------------------------------------

def _roof_entries(name, sol, out):
    entries = [result_entry(name, sol.result, out), result_entry(f"{name}-lower", sol.lower)]
    if out:
        _write_certificate(out, sol.result.certificate)
    return entries


def cmd_compute(args) -> int:
    tol = _tol(args)
    state, digest = _read_input(args.state, tol)
    m = args.measure
    budget = _budget(args)
    dims = parse_dims(args.dims) if args.dims else None
    if m in ("schmidt-rank", "schmidt-measure") and dims is None:
        raise UsageError(f"{m} needs --dims")
    if dims and math.prod(dims) != state.dim:
        raise UsageError(f"--dims {args.dims} does not match state dimension {state.dim}")
    if dims and len(dims) > 2:
        # multipartite dims: first factor against the rest
        dims = (dims[0], math.prod(dims[1:]))

    if m == "coherence-rank":
        psi = _as_pure(state, m)
        entries = [result_entry(m, MeasureResult(float(coherence_rank(psi, tol)), "exact"))]
    elif m == "log-coherence-rank":
        psi = _as_pure(state, m)
        entries = [result_entry(m, MeasureResult(log_coherence_rank(psi, tol), "exact"))]
    elif m == "schmidt-rank":
        psi = _as_pure(state, m)
        entries = [result_entry(m, MeasureResult(float(schmidt_rank(psi, dims, tol)), "exact"))]
    elif m == "lcn":
        sol = estimate_roof(RoofProblem(_as_density(state), tol=tol, budget=budget))
        entries = _roof_entries(m, sol, args.out)
    elif m == "coherence-number":
        sol = coherence_number(_as_density(state), budget, tol=tol)
        entries = _roof_entries(m, sol, args.out)
    elif m == "schmidt-measure":
        sol = schmidt_measure(_as_density(state), dims, budget, tol=tol)
        entries = _roof_entries(m, sol, args.out)
    elif m == "l1":
        entries = [result_entry(m, MeasureResult(l1_coherence(_as_density(state).matrix), "exact"))]
    else:
        entries = [result_entry(m, MeasureResult(relative_entropy_coherence(_as_density(state).matrix), "exact"))]

    main = entries[0]
    where = args.out or ("embedded" if "certificate" in main else "none")
    _say(args, f"{m} = {main['value']:.10g} ({main['kind']}); certificate: {where}")
    if len(entries) > 1:
        _say(args, f"  certified lower bound {entries[1]['value']:.10g}")
    _emit(_report(args, digest, entries), args._started)
    return EXIT_OK


def _qi_blocks(args, n: int):
    if args.blocks:
        paths = [p for p in args.blocks.split(",") if p]
        if len(paths) != n:
            raise UsageError(f"--blocks lists {len(paths)} files for {n} weights")
        return [_as_density(_read_input(p, _tol(args))[0]) for p in paths]
    rng = np.random.default_rng(args.seed)
    return [random_density(2, 2, rng) for _ in range(n)]


def cmd_generate(args) -> int:
    fam = args.family
    expected = {}
    if fam in ("mcs", "noisy-mcs", "discontinuity") and (args.d is None or args.d < 1):
        raise UsageError(f"{fam} needs --d >= 1")
    if fam == "mcs":
        state = make_maximally_coherent(args.d)
        expected = {"coherence-rank": args.d, "lcn": math.log2(args.d)}
    elif fam == "noisy-mcs":
        lam = 1.0 if args.lam is None else args.lam
        if not 0.0 <= lam <= 1.0:
            raise UsageError("--lambda must lie in [0, 1]")
        state = make_noisy_mcs(args.d, lam)
        expected = {"lcn": lam * math.log2(args.d), "l1": lam * (args.d - 1)}
    elif fam == "qi":
        if not args.weights:
            raise UsageError("qi needs --weights p1,p2,...")
        weights = np.array(parse_floats(args.weights))
        if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-9:
            raise UsageError("--weights must be nonnegative and sum to 1")
        blocks = _qi_blocks(args, len(weights))
        state = make_quantum_incoherent(weights, blocks)
        if all(b.dim == 2 for b in blocks):
            expected = {"lcn": math.fsum(w * exact_qubit_lcn(b).value for w, b in zip(weights, blocks)),
                        "schmidt-measure": 0.0}
        expected["dims"] = f"{len(blocks)}x{blocks[0].dim}"
    else:
        eps = 1e-6 if args.eps is None else args.eps
        if not 0.0 < eps < 1.0:
            raise UsageError("--eps must lie in (0, 1)")
        state = make_discontinuity_state(args.d, eps)
        expected = {"coherence-rank": args.d, "overlap-with-incoherent": 1 - eps}

    payload = state_to_json(state)
    if args.out:
        write_state(args.out, state)
    digest = _digest(json.dumps(payload, sort_keys=True).encode())
    extra = {"expected": expected}
    if not args.out:
        extra["state"] = payload
    _say(args, f"generated {fam} state of dimension {state.dim}" + (f" -> {args.out}" if args.out else ""))
    for k, v in expected.items():
        _say(args, f"  expected {k}: {v}")
    _emit(_report(args, digest, extra=extra), args._started)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.suite not in V.SUITES + ("all",):
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(V.SUITES + ('all',))}")
    if args.trials is not None and args.trials < 1:
        raise UsageError("--trials must be positive")
    dims = tuple(int(x) for x in parse_floats(args.d)) if args.d else (2, 3, 4)
    if any(x < 1 or x > DEFAULT_MAX_DIM for x in dims):
        raise UsageError(f"--d entries must lie in 1..{DEFAULT_MAX_DIM}")
    cfg = V.VerifyConfig(seed=args.seed, trials=args.trials, budget=_budget(args), dims=dims)
    outcomes = V.run_suite(args.suite, cfg)
    failures = sum(o.failures for o in outcomes)
    digest = _digest(json.dumps({"suite": args.suite, "seed": args.seed, "trials": args.trials,
                                 "budget": args.budget, "d": dims}, sort_keys=True).encode())
    for o in outcomes:
        _say(args, f"{'PASS' if o.ok else 'FAIL'} {o.property_id}: {o.failures}/{o.trials} failures")
    _emit(_report(args, digest, suites=[o.to_dict() for o in outcomes],
                  extra={"total_failures": failures}), args._started)
    return EXIT_OK if failures == 0 else EXIT_FAILED


def cmd_convert(args) -> int:
    tol = _tol(args)
    state, digest = _read_input(args.state, tol)
    d = state.dim
    if d > DEFAULT_MAX_DIM:
        raise UnsupportedDimension(f"dimension {d} exceeds the cap {DEFAULT_MAX_DIM}")
    budget = _budget(args)
    if isinstance(state, PureState):
        zero = np.zeros(d)
        zero[0] = 1.0
        out = PureState(conversion_unitary(d) @ np.kron(state.amplitudes, zero))
        entries = [
            result_entry("lcn", MeasureResult(log_coherence_rank(state, tol), "exact")),
            result_entry("schmidt-measure", MeasureResult(log_schmidt_rank(out, (d, d), tol), "exact")),
        ]
    else:
        w = attach_ancilla_isometry(d)
        out = DensityMatrix(w @ state.matrix @ w.conj().T)
        coh = estimate_roof(RoofProblem(state, tol=tol, budget=budget))
        ent = schmidt_measure(out, (d, d), budget, tol=tol, max_dim=d * d)
        entries = [
            result_entry("lcn", coh.result), result_entry("lcn-lower", coh.lower),
            result_entry("schmidt-measure", ent.result), result_entry("schmidt-measure-lower", ent.lower),
        ]
    extra = {"output_dims": [d, d]}
    if args.out:
        write_state(args.out, out)
        extra["output"] = {"path": args.out}
    else:
        extra["output"] = state_to_json(out)
    vals = {e["name"]: e["value"] for e in entries}
    _say(args, f"converted dimension-{d} state; L_C = {vals['lcn']:.10g}, L_E = {vals['schmidt-measure']:.10g}")
    _emit(_report(args, digest, entries, extra=extra), args._started)
    return EXIT_OK


# --- entry point -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="PRNG seed (default: $COHROOF_SEED or 0)")
    common.add_argument("--budget", default=None, help="search budget as restarts:iterations")
    common.add_argument("--tol", type=float, default=None, help="relative support threshold")
    common.add_argument("--out", default=None, help="output path for the state or certificate")
    common.add_argument("--json", action="store_true", help="JSON report only, no summary on stderr")

    p = argparse.ArgumentParser(prog="cohroof", description="Rank-based coherence and entanglement measures.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", parents=[common], help="evaluate a measure on a state file")
    c.add_argument("state")
    c.add_argument("--measure", required=True, choices=MEASURES)
    c.add_argument("--dims", default=None, help="subsystem dimensions, e.g. 2x2")
    c.set_defaults(func=cmd_compute)

    g = sub.add_parser("generate", parents=[common], help="write a state from a named family")
    g.add_argument("family", choices=FAMILIES)
    g.add_argument("--d", type=int, default=None)
    g.add_argument("--lambda", dest="lam", type=float, default=None)
    g.add_argument("--weights", default=None, help="comma-separated weights for qi")
    g.add_argument("--blocks", default=None, help="comma-separated state files for qi blocks")
    g.add_argument("--eps", type=float, default=None)
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("verify", parents=[common], help="run a property suite")
    v.add_argument("suite")
    v.add_argument("--trials", type=int, default=None)
    v.add_argument("--d", default=None, help="comma-separated dimensions for noisy-mcs")
    v.set_defaults(func=cmd_verify)

    k = sub.add_parser("convert", parents=[common], help="map coherence to entanglement")
    k.add_argument("state")
    k.set_defaults(func=cmd_convert)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    args._started = time.perf_counter()
    try:
        if args.seed is None:
            args.seed = default_seed()
        return args.func(args)
    except UnsupportedDimension as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIM
    except InvariantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (CohroofError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
