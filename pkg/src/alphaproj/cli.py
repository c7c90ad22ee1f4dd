"""Command-line front end: read a JSON problem file, solve, print a JSON result.

Exit codes: 0 success, 2 malformed input, 3 infeasible constraints,
4 solver did not converge.  Every document carries the RNG seed.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .divergence import relative_alpha_entropy
from .errors import AlphaProjError, DimensionMismatch, Infeasible, NotConverged
from .families import LinearFamily, PowerLawFamily
from .forward_projection import SolverOptions, forward_project, pythagorean_check
from .measures import Alphabet, ProbMeasure
from .reverse_projection import SampleSet, binomial_family, mmple_fit, parametric_reverse_scan, reverse_project

MODES = ("divergence", "forward", "reverse", "mmple", "scan")
EXIT_OK, EXIT_MALFORMED, EXIT_INFEASIBLE, EXIT_NOT_CONVERGED = 0, 2, 3, 4


class MalformedInput(AlphaProjError, ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    d = SolverOptions()
    p = argparse.ArgumentParser(prog="alphaproj", description="Relative alpha-entropy projections.")
    p.add_argument("mode_pos", nargs="?", choices=MODES, metavar="mode",
                   help="one of: " + ", ".join(MODES))
    p.add_argument("--mode", choices=MODES, help="same as the positional mode")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", help="problem file (JSON)")
    src.add_argument("--example", help="bundled problem: support_shrinkage or bimodal_scan")
    p.add_argument("--scan-out", help="write the (theta, value) series here as two-column text")
    p.add_argument("--kkt-tol", type=float, default=d.kkt_tol)
    p.add_argument("--max-newton-iters", type=int, default=d.max_newton_iters)
    p.add_argument("--max-fallback-iters", type=int, default=d.max_fallback_iters)
    p.add_argument("--seed", type=int, default=d.rng_seed)
    p.add_argument("--multistart", type=int, default=d.multistart_count)
    p.add_argument("--grid-step", type=float, help="override the scan grid step")
    p.add_argument("--alpha", type=float, help="override the problem's alpha")
    return p


# ---------------------------------------------------------------------------
# ingestion


def _load_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"cannot read {path}: {exc}") from exc


def _vector(doc, key, n, base_dir, required=True):
    """A measure given inline or as a path to a result document holding ``Q``."""
    if key not in doc:
        if required:
            raise MalformedInput(f"missing '{key}'")
        return None
    v = doc[key]
    if isinstance(v, str):
        ref = _load_json((base_dir / v) if not Path(v).is_absolute() else Path(v))
        if "Q" not in ref:
            raise MalformedInput(f"'{key}' refers to a document without 'Q'")
        v = ref["Q"]
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError) as exc:
        raise MalformedInput(f"'{key}' is not numeric") from exc
    if arr.ndim != 1 or arr.size != n:
        raise MalformedInput(f"'{key}' must have {n} entries")
    try:
        return ProbMeasure(arr)
    except ValueError as exc:
        raise MalformedInput(f"'{key}': {exc}") from exc


def _alphabet(doc) -> Alphabet:
    a = doc.get("alphabet")
    try:
        if isinstance(a, list):
            return Alphabet(len(a), tuple(a))
        if isinstance(a, int):
            return Alphabet(a)
    except ValueError as exc:
        raise MalformedInput(str(exc)) from exc
    raise MalformedInput("'alphabet' must be a size or a list of labels")


def _constraints(doc, n):
    rows, rhs = [], []
    for i, c in enumerate(doc.get("constraints", [])):
        if not isinstance(c, dict) or "f" not in c:
            raise MalformedInput(f"constraint {i} needs an 'f' vector")
        f = np.asarray(c["f"], dtype=float)
        if f.shape != (n,):
            raise MalformedInput(f"constraint {i} must have {n} entries")
        rows.append(f)
        rhs.append(float(c.get("rhs", 0.0)))
    if not rows:
        return np.zeros((0, n))
    # sum P g = c  becomes  sum P (g - c) = 0
    return np.array(rows) - np.array(rhs)[:, None]


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _divergence_doc(v):
    return {"value": _num(v), "finite": bool(math.isfinite(v))}


def _theta_by_row(theta, rows, k):
    out = [0.0] * k
    for i, r in enumerate(rows):
        out[int(r)] = float(theta[i])
    return out


# ---------------------------------------------------------------------------
# modes


def _run_divergence(doc, alpha, opts, args, base_dir):
    n = _alphabet(doc).size
    P = _vector(doc, "P", n, base_dir)
    Q = _vector(doc, "Q", n, base_dir)
    return {"P": P.tolist(), "Q": Q.tolist(), "divergence": _divergence_doc(relative_alpha_entropy(P, Q, alpha))}


def _run_forward(doc, alpha, opts, args, base_dir):
    n = _alphabet(doc).size
    R = _vector(doc, "R", n, base_dir)
    F = _constraints(doc, n)
    L = LinearFamily(F, n)
    res = forward_project(L, R, alpha, opts)
    supp_L, _ = L.support()
    out = {
        "projection": "KL" if alpha == 1 else "relative_alpha_entropy",
        "Q": res.Q.tolist(),
        "theta_star": _theta_by_row(res.theta_star, L.rows, F.shape[0]),
        "dropped_constraints": sorted(set(range(F.shape[0])) - set(int(r) for r in L.rows)),
        "Z": res.Z,
        "support": sorted(res.active_support),
        "support_of_L": [int(i) for i in np.flatnonzero(supp_L)],
        "support_shrinkage": len(res.active_support) < int(supp_L.sum()),
        "kkt_residual": res.kkt_residual,
        "status": res.status.value,
        "iterations": res.iterations,
        "method": res.method,
        "divergence": _divergence_doc(res.divergence),
        "pythagorean_gap_bound": _num(res.pythagorean_gap_bound),
        "multistart_spread": res.multistart_spread,
    }
    P = _vector(doc, "P", n, base_dir, required=False)
    if P is not None:
        lhs, rhs = pythagorean_check(P, res)
        out["pythagorean_check"] = {"P": P.tolist(), "lhs": _num(lhs), "rhs": _num(rhs),
                                    "strict": bool(lhs > rhs + 1e-12)}
    if not res.converged:
        raise _NotConverged(out)
    return out


class _NotConverged(NotConverged):
    def __init__(self, partial):
        super().__init__("solver stopped before reaching the KKT tolerance")
        self.partial = partial


def _family(doc, alpha, n, base_dir):
    R = _vector(doc, "R", n, base_dir)
    return PowerLawFamily(alpha, R.weights, _constraints(doc, n))


def _reverse_doc(o, M):
    doc = {
        "case": o.case.value,
        "Q": o.Q.tolist(),
        "theta": None if o.theta is None else [float(t) for t in o.theta],
        "theta_tag": o.theta_tag,
        "divergence": _divergence_doc(o.divergence),
        "L_tilde": {"F": o.L_tilde.F.tolist(), "rows": [int(r) for r in o.L_tilde.rows]},
        "tau": [float(t) for t in o.tau],
        "forward_status": o.forward.status.value,
        "kkt_residual": o.forward.kkt_residual,
    }
    if o.closure is not None:
        doc["closure"] = {"rate": _num(o.closure["rate"]), "converged": o.closure["converged"],
                          "steps": [{"n": s["n"], "tv": _num(s["tv"]), "member": s["member"]}
                                    for s in o.closure["steps"]]}
    if o.extended_check is not None:
        doc["extended_member"] = bool(o.extended_check)
    return doc


def _run_reverse(doc, alpha, opts, args, base_dir):
    n = _alphabet(doc).size
    M = _family(doc, alpha, n, base_dir)
    P_hat = _vector(doc, "P_hat", n, base_dir)
    o = reverse_project(M, P_hat, opts)
    out = _reverse_doc(o, M)
    out["P_hat"] = P_hat.tolist()
    if not o.forward.converged:
        raise _NotConverged(out)
    return out


def _run_mmple(doc, alpha, opts, args, base_dir):
    n = _alphabet(doc).size
    if "c" not in doc:
        raise MalformedInput("mmple needs 'c'")
    c = float(doc["c"])
    if "samples" not in doc:
        raise MalformedInput("mmple needs 'samples' (CSV path)")
    path = Path(doc["samples"])
    path = path if path.is_absolute() else base_dir / path
    try:
        S = SampleSet.from_csv(path, n)
    except (OSError, ValueError) as exc:
        raise MalformedInput(f"cannot read samples: {exc}") from exc
    M = _family(doc, c + 1.0, n, base_dir)
    o = mmple_fit(M, S, c, opts)
    out = _reverse_doc(o, M)
    out.update({"c": c, "n_samples": len(S), "mean_power_likelihood": _num(o.mean_power_likelihood),
                "P_hat": S.empirical().tolist()})
    if not o.forward.converged:
        raise _NotConverged(out)
    return out


def _run_scan(doc, alpha, opts, args, base_dir):
    n = _alphabet(doc).size
    g = doc.get("grid")
    if not isinstance(g, dict) or not {"lo", "hi", "step"} <= set(g):
        raise MalformedInput("scan needs grid {lo, hi, step}")
    step = args.grid_step if args.grid_step else float(g["step"])
    grid = [(float(g["lo"]), float(g["hi"]), step)]
    kind = doc.get("family", "power_law")
    if kind == "binomial":
        if n != 3:
            raise MalformedInput("the binomial family lives on three symbols")
        family = binomial_family
    elif kind == "power_law":
        family = _family(doc, alpha, n, base_dir)
        if family.k != 1:
            raise MalformedInput("scan supports one constraint function")
    else:
        raise MalformedInput(f"unknown family '{kind}'")
    first = _vector(doc, "P_hat", n, base_dir, required=False)
    if first is None:
        first = _vector(doc, "R", n, base_dir)
    s = parametric_reverse_scan(family, first, grid, alpha=alpha)
    out = {
        "family": kind,
        "first_argument": first.tolist(),
        "grid": {"lo": grid[0][0], "hi": grid[0][1], "step": step},
        "n_points": int(s.values.size),
        "minima": [{"theta": float(t[0]), "value": float(v)} for t, v in s.minima],
        "global_minima": [{"theta": float(t[0]), "value": float(v)} for t, v in s.global_minima],
    }
    if args.scan_out:
        np.savetxt(args.scan_out, s.series(), fmt="%.17g", header="theta value")
        out["scan_out"] = str(args.scan_out)
    return out


RUNNERS = {
    "divergence": _run_divergence,
    "forward": _run_forward,
    "reverse": _run_reverse,
    "mmple": _run_mmple,
    "scan": _run_scan,
}


def _emit(doc, stream):
    stream.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def run(argv=None, stdout=None) -> int:
    """Run the CLI and return its exit code; the document goes to ``stdout``."""
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    head = {"seed": args.seed}
    try:
        if args.example:
            name = args.example if args.example.endswith(".json") else args.example + ".json"
            ref = resources.files("alphaproj") / "data" / name
            if not ref.is_file():
                raise MalformedInput(f"no bundled example '{args.example}'")
            with resources.as_file(ref) as path:
                doc, base_dir = _load_json(path), path.parent
        elif args.input:
            doc, base_dir = _load_json(Path(args.input)), Path(args.input).resolve().parent
        else:
            raise MalformedInput("give --input or --example")
        if not isinstance(doc, dict):
            raise MalformedInput("problem file must hold a JSON object")
        mode = args.mode_pos or args.mode or doc.get("mode")
        if mode not in MODES:
            raise MalformedInput(f"mode must be one of {MODES}, got {mode!r}")
        alpha = args.alpha if args.alpha is not None else doc.get("alpha")
        if mode != "mmple":
            if not isinstance(alpha, (int, float)) or not alpha > 0:
                raise MalformedInput("'alpha' must be a positive number")
            alpha = float(alpha)
        opts = SolverOptions(kkt_tol=args.kkt_tol, max_newton_iters=args.max_newton_iters,
                             max_fallback_iters=args.max_fallback_iters,
                             multistart_count=args.multistart, rng_seed=args.seed)
        head.update({"mode": mode, "alpha": alpha if mode != "mmple" else float(doc.get("c", 0)) + 1.0})
        out = RUNNERS[mode](doc, alpha, opts, args, base_dir)
    except _NotConverged as exc:
        _emit({**head, "error": {"type": "NotConverged", "message": str(exc)}, "result": exc.partial}, stdout)
        return EXIT_NOT_CONVERGED
    except NotConverged as exc:
        _emit({**head, "error": {"type": "NotConverged", "message": str(exc)}}, stdout)
        return EXIT_NOT_CONVERGED
    except Infeasible as exc:
        _emit({**head, "error": {"type": "Infeasible", "message": str(exc)}}, stdout)
        return EXIT_INFEASIBLE
    except (MalformedInput, DimensionMismatch, ValueError, TypeError, KeyError) as exc:
        _emit({**head, "error": {"type": "MalformedInput", "message": str(exc)}}, stdout)
        return EXIT_MALFORMED
    _emit({**head, **out}, stdout)
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
