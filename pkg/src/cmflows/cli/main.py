"""``cmflows`` command line.

Exit codes: 0 success, 1 internal error or failed verification, 2 usage or
parse error, 3 approximation target missed (a report is still written).
"""
from __future__ import annotations

import argparse
import io
import itertools
import json
import sys

import numpy as np

from ..errors import BudgetExhausted, CMError, DomainError, ParseError, TargetMiss
from ..flows import reference_flow
from ..jsonio import atomic_write, dumps, hat_point_from_json, triple_to_json
from ..phase import moment_real
from ..pipeline import ApproxRequest, Budget, approximate_flow, region_samples
from ..space import RealChart, chart_to_hat, chart_to_point, default_base_chart, trace_embedding, trace_pairs
from .grammar import parse_hamiltonian
from .suites import SUITES, TOLERANCES, run_suite

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_MISS = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _parse_tol(items):
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--tol expects KEY=VAL, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise UsageError(f"--tol {key}: {val!r} is not a number") from None
    return out


def _tolerances(args, allowed):
    tol = {k: TOLERANCES[k] for k in allowed if k in TOLERANCES}
    tol.update({k: v for k, v in (("epsilon", None),) if k in allowed})
    given = _parse_tol(args.tol)
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise UsageError(f"unknown tolerance key(s) {unknown}; allowed: {sorted(allowed)}")
    tol.update(given)
    return tol


def _emit(args, text):
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def _chart_from_args(args, n_default):
    if args.x is None and args.y is None:
        return default_base_chart(n_default)
    if args.x is None or args.y is None:
        raise UsageError("--x and --y go together")
    if len(args.x) != len(args.y):
        raise UsageError("--x and --y need the same number of values")
    return RealChart(np.array(args.x), np.array(args.y))


def _check_n(args, n):
    if args.n is not None and args.n != n:
        raise UsageError(f"--n {args.n} does not match the input size {n}")


# commands -------------------------------------------------------------------------

def cmd_chart(args):
    tol = _tolerances(args, {"chart"})
    if args.x is None or args.y is None:
        raise UsageError("chart needs --x and --y")
    c = _chart_from_args(args, None)
    _check_n(args, c.n)
    h = chart_to_point(c)
    defect = float(np.max(np.abs(moment_real(h) - 1j * np.eye(c.n))))
    out = {"n": c.n, "chart": c.to_json(), "triple": triple_to_json(h),
           "moment_defect": defect, "moment_ok": defect < tol["chart"]}
    _emit(args, dumps(out))
    return EXIT_OK


def _match_eigs(prev, cur):
    """Reorder ``cur`` to follow ``prev`` continuously."""
    n = len(cur)
    if n <= 6:
        best = min(itertools.permutations(range(n)),
                   key=lambda perm: float(np.sum(np.abs(cur[list(perm)] - prev))))
        return cur[list(best)]
    out = np.empty_like(cur)
    free = list(range(n))
    for k in range(n):
        j = min(free, key=lambda i: abs(cur[i] - prev[k]))
        out[k] = cur[j]
        free.remove(j)
    return out


def _sorted_desc(e):
    return e[np.lexsort((-e.imag, -e.real))]


def cmd_flow(args):
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    H = parse_hamiltonian(args.H)
    if args.point:
        with open(args.point, encoding="utf-8") as fh:
            p = hat_point_from_json(json.load(fh))
    else:
        p = chart_to_hat(_chart_from_args(args, args.n or 2))
    _check_n(args, p.n)
    d = args.degree or p.n * p.n
    if args.t == 0:
        traj, times = [p], [0.0]
    else:
        traj = reference_flow(H, args.t, p, args.steps, trajectory=True)
        times = [args.t * k / args.steps for k in range(args.steps + 1)]
    pairs = trace_pairs(d)
    header = ["time"]
    for j, k in pairs:
        header += [f"re_trX{j}Y{k}", f"im_trX{j}Y{k}"]
    header += [f"eig{i}_{part}" for i in range(p.n) for part in ("re", "im")]
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    prev = None
    for s, q in zip(times, traj):
        coords = trace_embedding(q, d).values
        eig = np.linalg.eigvals(q.X)
        eig = _sorted_desc(eig) if prev is None else _match_eigs(prev, eig)
        prev = eig
        row = [repr(float(s))]
        for v in coords:
            row += [repr(float(v.real)), repr(float(v.imag))]
        for v in eig:
            row += [repr(float(v.real)), repr(float(v.imag))]
        buf.write(",".join(row) + "\n")
    _emit(args, buf.getvalue())
    return EXIT_OK


def _load_request(path, args):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if "H" not in data or "t" not in data:
        raise UsageError("request needs 'H' and 't'")
    H = parse_hamiltonian(data["H"])
    if not H.is_tau_compatible():
        raise DomainError(f"Hamiltonian {data['H']!r} is not tau-compatible: coefficients must be real")
    n = int(data.get("n", args.n or 2))
    _check_n(args, n)
    seed = int(data.get("seed", args.seed))
    reg = data.get("region", {})
    if isinstance(reg, list):
        region = [hat_point_from_json(d) for d in reg]
    else:
        region = region_samples(n, float(reg.get("R", 5.0)), int(reg.get("count", 10)),
                                int(reg.get("seed", seed + 1)))
    budget = Budget(**data.get("budget", {}))
    tol = _tolerances(args, {"epsilon"})
    eps = tol["epsilon"] if tol["epsilon"] is not None else float(data.get("epsilon", 1e-2))
    return ApproxRequest(H, float(data["t"]), region, eps, budget, seed, args.threads)


def cmd_approx(args):
    req = _load_request(args.request, args)
    try:
        result = approximate_flow(req, raise_on_miss=False)
    except BudgetExhausted as e:
        _emit(args, dumps({"status": "budget_exhausted", "message": str(e), "closure": e.report}))
        return EXIT_MISS
    manifest = dict(result.manifest)
    manifest["status"] = "ok" if manifest["target_met"] else "target_miss"
    _emit(args, dumps(manifest))
    return EXIT_OK if manifest["target_met"] else EXIT_MISS


def cmd_verify(args):
    if args.suite != "all" and args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {sorted(SUITES) + ['all']}")
    tol = _tolerances(args, set(TOLERANCES))
    results = run_suite(args.suite, args.n or 2, args.seed, tol)
    failed = [r["name"] for r in results if not r["passed"]]
    _emit(args, dumps({"suite": args.suite, "seed": args.seed, "results": results,
                       "failed": failed, "passed": not failed}))
    for name in failed:
        print(f"FAILED: {name}", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_INTERNAL


# parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=None, help="matrix size")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", action="append", metavar="KEY=VAL", help="override a tolerance")
    common.add_argument("--out", default=None, metavar="PATH", help="output file (default stdout)")
    common.add_argument("--threads", type=int, default=1, metavar="K")

    ap = argparse.ArgumentParser(prog="cmflows", description="Calogero-Moser flows and approximations")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("chart", parents=[common], help="Hermitian triple from chart coordinates")
    p.add_argument("--x", type=float, nargs="+")
    p.add_argument("--y", type=float, nargs="+")
    p.set_defaults(func=cmd_chart)

    p = sub.add_parser("flow", parents=[common], help="CSV trajectory of a Hamiltonian flow")
    p.add_argument("--H", required=True, help='e.g. "1*tr(XY) + 0.5*tr(X)*tr(Y)"')
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--x", type=float, nargs="+")
    p.add_argument("--y", type=float, nargs="+")
    p.add_argument("--point", help="JSON point file instead of chart coordinates")
    p.add_argument("--degree", type=int, default=None, help="trace coordinate degree (default n^2)")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("approx", parents=[common], help="approximate a flow by generator programs")
    p.add_argument("request", help="request JSON file")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("verify", parents=[common], help="run an invariant suite")
    p.add_argument("suite", help=f"one of {', '.join(list(SUITES) + ['all'])}")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ParseError, DomainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except TargetMiss as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MISS
    except (CMError, OSError, ValueError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
