"""Command line front end: ``grapde gen|spectrum|solve|exhaust|check``.

Every subcommand writes one JSON report (stdout unless ``--out``) that
embeds a run manifest and validates against ``schema/report.schema.json``.
Exit codes: 0 converged or pass, 2 hypothesis violated, degenerate or
otherwise not converged, 1 usage and input errors.
"""

import argparse
import csv
import io as _io
import json
import sys
import time
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from types import SimpleNamespace

import jsonschema
import numpy as np

from . import __version__
from .energy import InadmissiblePair, ModelError, model_from_dict
from .graph import GraphError, generate, make_domain
from .io import InputError, dumps, graph_from_dict, graph_to_dict, read_domain, read_graph, read_json
from .solver import (
    HypothesisViolated,
    NoMountainGeometry,
    SolveConfig,
    exhaustion_solve,
    minimize_direct,
    mountain_pass,
)
from .spectral import eigenspace_power_identity, first_eigenvalue, sobolev_constant_cstar
from .verify import VIOLATED, embedding_audit, smp_check, solution_audit

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 1, 2
WINDOW_TOL = 1e-6


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    subcommand: str
    inputs: dict
    config: dict
    seed: int
    version: str
    wall_time: float = 0.0


def schema():
    text = resources.files("grapde").joinpath("schema/report.schema.json").read_text()
    return json.loads(text)


def comparable(report):
    """Copy of a report (dict or JSON text) with the wall time removed."""
    data = json.loads(report) if isinstance(report, str) else json.loads(dumps(report))
    data.get("manifest", {}).pop("wall_time", None)
    return data


# -- argument parsing ----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p, seed=True):
    p.add_argument("--out", help="report path (default: stdout)")
    if seed:
        p.add_argument("--seed", type=int, default=0)


def _solver_flags(p):
    p.add_argument("--tol", type=float, default=1e-8, help="gradient tolerance")
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--trace", action="store_true", help="include energy and gradient traces")


def build_parser():
    parser = _Parser(prog="grapde", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a graph")
    p.add_argument("--family", required=True,
                   choices=["path", "cycle", "complete", "star", "grid", "random"])
    p.add_argument("--n", required=True,
                   help="size: n, 'AxB' for grids, 'n,p' for random graphs")
    p.add_argument("--weight", type=float, default=1.0)
    _common(p)

    p = sub.add_parser("spectrum", help="first eigenvalue, eigenspace and C*")
    p.add_argument("--graph", required=True)
    p.add_argument("--origin", type=int, default=0)
    _common(p)

    p = sub.add_parser("solve", help="solve one model")
    p.add_argument("--graph", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--omega", help="domain JSON for Dirichlet models")
    p.add_argument("--method", choices=["auto", "direct", "mountain_pass"], default="auto")
    p.add_argument("--csv", help="per-vertex CSV output")
    _solver_flags(p)
    _common(p)

    p = sub.add_parser("exhaust", help="ball exhaustion for the Toda system")
    p.add_argument("--family", required=True, choices=["path", "grid"])
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--window", required=True,
                   help="path offsets '-1,0,1' or grid offsets '0:0,1:0'")
    p.add_argument("--model", help="model JSON with J1 parameters")
    _solver_flags(p)
    _common(p)

    p = sub.add_parser("check", help="run a checker")
    p.add_argument("--what", required=True, choices=["smp", "embedding", "solution"])
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--graph", help="graph file when the input does not embed one")
    p.add_argument("--tol", type=float, help="residual tolerance for solution audits")
    _common(p)
    return parser


def _parse_size(family, text):
    parts = text.replace("x", ",").split(",")
    try:
        if family == "random":
            return (int(parts[0]), float(parts[1]) if len(parts) > 1 else 0.5)
        if family == "grid":
            a = int(parts[0])
            return (a, int(parts[1]) if len(parts) > 1 else a)
        if len(parts) != 1:
            raise ValueError
        return (int(parts[0]),)
    except (ValueError, IndexError):
        raise UsageError(f"--n: cannot parse {text!r} for family {family}") from None


def _parse_window(family, text):
    try:
        items = [t for t in text.split(",") if t.strip()]
        if family == "path":
            return [int(t) for t in items]
        return [tuple(int(a) for a in t.split(":")) for t in items]
    except ValueError:
        raise UsageError(f"--window: cannot parse {text!r}") from None


# -- subcommands -------------------------------------------------------------

def _config(args):
    return SolveConfig(grad_tol=args.tol, max_iter=args.max_iter, seed=args.seed)


def cmd_gen(args):
    size = _parse_size(args.family, args.n)
    g = generate(args.family, *size, seed=args.seed, weight=args.weight)
    out = {"kind": "graph", **graph_to_dict(g)}
    cfg = {"family": args.family, "size": list(size), "weight": args.weight}
    return out, cfg, {}, EXIT_OK


def _spectrum(g, origin, seed):
    eig = first_eigenvalue(g, seed)
    cstar = {"origin": origin, "m": {}}
    for m in (1, 2):
        consts = {str(q): sobolev_constant_cstar(g, m, q, origin, eig) for q in (1, 2, 4)}
        cstar["m"][str(m)] = {"q": {k: c.value for k, c in consts.items()},
                              "inf": consts["2"].linf_value}
    psi = g.measure
    checks = {
        "rayleigh_vs_dense_rel": abs(eig.rayleigh_value - eig.lambda1) / eig.lambda1,
        "basis_mean_max": float(np.max(np.abs(psi @ eig.basis))),
        "power_identity": [eigenspace_power_identity(g, eig, m, seed=seed) for m in (1, 2, 3)],
    }
    return {"kind": "spectrum", "lambda1": eig.lambda1, "multiplicity": eig.multiplicity,
            "basis": eig.basis.T, "cstar": cstar, "checks": checks}


def cmd_spectrum(args):
    g = read_graph(args.graph)
    g.require_connected()
    if not 0 <= args.origin < g.n:
        raise UsageError(f"--origin {args.origin} is not a vertex")
    out = _spectrum(g, args.origin, args.seed)
    return out, {"origin": args.origin}, {"graph": args.graph}, EXIT_OK


def _csv_text(u, v, ru, rv):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["vertex", "u", "v", "residual_u", "residual_v"])
    for x in range(len(u)):
        w.writerow([x] + [format(float(a[x]), ".17g") for a in (u, v, ru, rv)])
    return buf.getvalue()


def cmd_solve(args):
    g = read_graph(args.graph)
    model_data = read_json(args.model)
    domain = read_domain(g, args.omega) if args.omega else None
    model = model_from_dict(model_data, g, domain)
    config = _config(args)
    method = args.method
    if method == "auto":
        method = "direct" if model.tag in ("J1_toda", "quadratic") else "mountain_pass"
    inputs = {"graph": args.graph, "model": args.model, "omega": args.omega}
    cfg = {"solver": config.to_dict(), "method": method, "model": model.to_dict()}
    base = {"kind": "solve", "graph": graph_to_dict(g), "model": model.to_dict()}
    try:
        report = (mountain_pass if method == "mountain_pass" else minimize_direct)(model, config)
    except HypothesisViolated as exc:
        return {**base, "status": VIOLATED, "error": str(exc),
                "hypotheses": exc.report}, cfg, inputs, EXIT_NOT_CONVERGED
    except NoMountainGeometry as exc:
        return {**base, "status": VIOLATED, "error": str(exc)}, cfg, inputs, EXIT_NOT_CONVERGED
    audit = solution_audit(model, report)
    out = {**base, "status": report.status, "report": report.to_dict(trace=args.trace),
           "audit": audit.to_dict()}
    if args.csv:
        u, v = report.solution
        Path(args.csv).write_text(_csv_text(u, v, report.el_residual["u"], report.el_residual["v"]))
    ok = report.status == "converged" and audit.passed
    return out, cfg, inputs, EXIT_OK if ok else EXIT_NOT_CONVERGED


def cmd_exhaust(args):
    if args.K < 1:
        raise UsageError("--K must be >= 1")
    window = _parse_window(args.family, args.window)
    params = {}
    if args.model:
        model_data = read_json(args.model)
        if model_data.get("tag", "J1_toda") != "J1_toda":
            raise UsageError("exhaustion runs the J1_toda model only")
        params = model_data.get("params", {})
    config = _config(args)
    res = exhaustion_solve(args.family, args.K, window, params, config)
    cauchy = res["final_difference"] is None or (
        res["eventually_decreasing"] and res["final_difference"] <= WINDOW_TOL)
    status = "converged" if res["status"] == "converged" and cauchy else "not-converged"
    out = {"kind": "exhaust", "status": status, "window_tol": WINDOW_TOL, "result": res}
    cfg = {"solver": config.to_dict(), "family": args.family, "K": args.K,
           "window": window, "params": params}
    inputs = {"model": args.model}
    return out, cfg, inputs, EXIT_OK if status == "converged" else EXIT_NOT_CONVERGED


def _graph_for_check(data, args):
    if "graph" in data:
        return graph_from_dict(data["graph"])
    if args.graph:
        return read_graph(args.graph)
    raise UsageError("input has no embedded graph; pass --graph")


def _q(value):
    return float("inf") if value in ("inf", "Infinity", float("inf")) else float(value)


def cmd_check(args):
    data = read_json(args.inp)
    if not isinstance(data, dict):
        raise InputError(f"{args.inp}: expected a JSON object")
    inputs = {"in": args.inp, "graph": args.graph}
    if args.what == "smp":
        g = _graph_for_check(data, args)
        try:
            kw = {k: data[k] for k in ("h1", "h2", "p", "q") if k in data}
            rep = smp_check(g, data["u"], data["v"], **kw)
        except KeyError as exc:
            raise InputError(f"{args.inp}: missing key {exc}") from None
        cfg = {"what": "smp", **kw}
    elif args.what == "embedding":
        g = _graph_for_check(data, args)
        m, q = int(data.get("m", 1)), _q(data.get("q", 2.0))
        samples, origin = int(data.get("samples", 200)), int(data.get("origin", 0))
        rep = embedding_audit(g, None, m, q, samples, args.seed, origin)
        cfg = {"what": "embedding", "m": m, "q": q, "samples": samples, "origin": origin}
    else:
        if data.get("kind") != "solve" or "report" not in data:
            raise InputError(f"{args.inp}: expected a converged solve report")
        g = graph_from_dict(data["graph"])
        model_data = data["model"]
        domain = make_domain(g, model_data["omega"]) if "omega" in model_data else None
        model = model_from_dict(model_data, g, domain)
        sol = data["report"]["solution"]
        grad_tol = data["manifest"]["config"]["solver"]["grad_tol"]
        shim = SimpleNamespace(solution=(np.asarray(sol["u"], float), np.asarray(sol["v"], float)),
                               config=SimpleNamespace(grad_tol=grad_tol))
        rep = solution_audit(model, shim, args.tol)
        cfg = {"what": "solution", "tol": args.tol if args.tol is not None else 10 * grad_tol}
    out = {"kind": "check", "status": rep.verdict, "check": rep.to_dict()}
    return out, cfg, inputs, EXIT_OK if rep.passed else EXIT_NOT_CONVERGED


COMMANDS = {"gen": cmd_gen, "spectrum": cmd_spectrum, "solve": cmd_solve,
            "exhaust": cmd_exhaust, "check": cmd_check}


def run(argv=None, stdout=None):
    """Run one subcommand; returns the exit code."""
    stdout = stdout or sys.stdout
    start = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        out, cfg, inputs, code = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (HypothesisViolated, ModelError) as exc:
        if isinstance(exc, ModelError) and not str(exc).startswith("parameter inequality"):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (InputError, GraphError, InadmissiblePair, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest = RunManifest(args.command, inputs, cfg, args.seed, __version__,
                           round(time.perf_counter() - start, 6))
    out["manifest"] = asdict(manifest)
    text = dumps(out)
    jsonschema.validate(json.loads(text), schema())
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    else:
        stdout.write(text)
    return code


def main(argv=None):
    return run(argv)
