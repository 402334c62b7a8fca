"""Command-line front end.

Exit statuses: 0 success, 1 a verification or reference-count check failed, 2 usage
error, 3-13 domain errors (see :mod:`symdisc.errors`).

Output paths given with ``--out`` are resolved against ``$SYMDISC_OUTPUT_DIR``
when that variable is set and the path is relative.
"""
from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import math
import operator
import os
import re
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DiscriminationError
from .experiment import SimConfig, run_trials
from .optics.compiler import (
    check_power_of_two,
    compile_from_coefficients,
    count_components,
    default_coefficients,
)
from .povm import apply_protocol, build_povm, optimal_probability, verify_completeness
from .states import (
    angles_from_coefficients,
    as_angles,
    as_coefficients,
    coefficients_from_angles,
    min_index,
)
from .verify import REFERENCE_COUNTS, compile_full_default, run_battery

OUTPUT_DIR_ENV = "SYMDISC_OUTPUT_DIR"
SCHEMA_VERSION = 1

_FUNCS = {
    "sqrt": math.sqrt,
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "arcsin": math.asin,
    "arccos": math.acos,
    "arctan": math.atan,
    "asin": math.asin,
    "acos": math.acos,
    "atan": math.atan,
}
_NAMES = {"pi": math.pi}
_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


def eval_expr(text: str) -> float:
    """Evaluate a small arithmetic expression such as ``pi/3`` or ``0.3pi``."""
    src = text.strip().replace("π", "pi")
    # implicit multiplication: 0.3pi, 2(pi/3), 2sqrt(2)
    src = re.sub(r"(?<=[\d.)])\s*(?=pi\b|sqrt|sin|cos|tan|arc|asin|acos|atan|\()", "*", src)
    try:
        tree = ast.parse(src, mode="eval")
        return float(_eval_node(tree.body))
    except (SyntaxError, ValueError, TypeError, ZeroDivisionError, KeyError) as exc:
        raise argparse.ArgumentTypeError(f"cannot evaluate {text!r}: {exc}") from None


def _eval_node(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.Name):
        return _NAMES[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        v = _eval_node(node.operand)
        return v if isinstance(node.op, ast.UAdd) else -v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and len(node.args) == 1:
        return _FUNCS[node.func.id](_eval_node(node.args[0]))
    raise ValueError("unsupported syntax")


def expr_list(text: str) -> list:
    return [eval_expr(part) for part in text.split(",") if part.strip()]


# -- output helpers ---------------------------------------------------------


def resolve_out(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        atomic_write(resolve_out(out), text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- argument handling ------------------------------------------------------


def _family_args(p, required=True):
    g = p.add_argument_group("state family")
    g.add_argument("--dim", type=int, help="number of states N")
    g.add_argument("--angles", type=expr_list, help="comma-separated angles theta_1..theta_{N-1} in radians, e.g. pi/3,0.3pi,pi/4")
    g.add_argument("--coeffs", type=expr_list, help="comma-separated amplitudes c_0..c_{N-1}")
    p.set_defaults(family_required=required)


def _resolve_family(args, parser):
    """Return (coefficients, angles) or (None, None) when neither was given."""
    given = [x is not None for x in (args.angles, args.coeffs)]
    if all(given):
        parser.error("give exactly one of --angles / --coeffs")
    if not any(given):
        if args.family_required:
            parser.error("one of --angles / --coeffs is required")
        return None, None
    if args.angles is not None:
        n = len(args.angles) + 1
        if args.dim is not None and args.dim != n:
            parser.error(f"--dim {args.dim} needs {args.dim - 1} angles, got {len(args.angles)}")
        angles = as_angles(args.angles)
        return coefficients_from_angles(angles), angles
    n = len(args.coeffs)
    if args.dim is not None and args.dim != n:
        parser.error(f"--dim {args.dim} needs {args.dim} coefficients, got {n}")
    c = as_coefficients(args.coeffs)
    angles = angles_from_coefficients(c) if np.all(c > 0) else None
    return c, angles


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symdisc",
        description="Optimal unambiguous discrimination of symmetric states: analysis, optical compilation, simulation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.commands = {}

    p = parser.commands["discriminate"] = sub.add_parser("discriminate", help="analytic success probability and POVM")
    _family_args(p)
    p.add_argument("--out")
    p.add_argument("--format", choices=["json"], default="json")

    p = parser.commands["compile"] = sub.add_parser("compile", help="compile the optical netlist and count components")
    _family_args(p, required=False)
    p.add_argument("--state", type=int, default=0)
    p.add_argument("--out", help="directory receiving netlist.txt, netlist.json and counts.csv")
    p.add_argument("--format", choices=["netlist-text", "json", "csv"], default="netlist-text")
    p.add_argument("--check-counts", action="store_true", help="compare counts for N=4,8,16 with the reference counts")

    p = parser.commands["simulate"] = sub.add_parser("simulate", help="Monte Carlo photon-counting experiment")
    _family_args(p)
    _sim_args(p)
    p.add_argument("--state", type=int, help="always prepare this state instead of a uniform source")
    p.add_argument("--out")
    p.add_argument("--format", choices=["json", "csv"], default="json")

    p = parser.commands["sweep"] = sub.add_parser("sweep", help="success probability over a grid of one angle")
    _family_args(p, required=False)
    p.add_argument("--index", type=int, default=0, help="0-based position of the swept angle")
    grid = p.add_mutually_exclusive_group(required=True)
    grid.add_argument("--values", type=expr_list, help="comma-separated angle values")
    grid.add_argument("--grid", help="start,stop,count (inclusive linear grid)")
    _sim_args(p, trials_default=None)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv"], default="csv")

    p = parser.commands["verify"] = sub.add_parser("verify", help="run the invariant battery")
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--draws", type=_positive_int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--inject-fault", action="append", default=[], choices=["fourier"], help=argparse.SUPPRESS)
    return parser


def _sim_args(p, trials_default=100_000):
    g = p.add_argument_group("simulation")
    g.add_argument("--trials", type=_positive_int, default=trials_default)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--extinction", type=float, default=float("inf"), help="PBS extinction ratio (power), e.g. 1000")
    g.add_argument("--phase-noise", type=float, default=0.0, help="interferometer arm phase noise sigma in radians")
    g.add_argument("--detector-efficiency", type=float, default=1.0)
    g.add_argument("--heralding-efficiency", type=float, default=1.0)
    g.add_argument("--workers", type=_positive_int, default=1)
    g.add_argument("--backend", choices=["netlist", "abstract"], help="default: netlist when N is a power of two")


# -- commands ---------------------------------------------------------------


def cmd_discriminate(args, parser) -> int:
    c, angles = _resolve_family(args, parser)
    n = c.size
    povm = build_povm(c)
    report = {
        "schema_version": SCHEMA_VERSION,
        "dim": n,
        "coefficients": c.tolist(),
        "angles": None if angles is None else np.asarray(angles).tolist(),
        "c_min": float(np.min(np.abs(c))),
        "min_index": min_index(c),
        "p_d": optimal_probability(c),
        "success_diagonal": np.diag(povm.success_op).tolist(),
        "failure_diagonal": np.diag(povm.failure_op).tolist(),
        "p_conclusive_by_state": [apply_protocol(c, l).p_conclusive for l in range(n)],
        "completeness_residual": verify_completeness(povm),
    }
    emit(_dumps(report), args.out)
    return 0


def _counts_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dim", "hwp", "pbs", "bs", "ps", "mirrors", "hwp_pbs_bs_total", "approx_2^M(M+2)"])
    for n, cnt in rows:
        m = int(math.log2(n))
        w.writerow([n, cnt.hwp, cnt.pbs, cnt.bs, cnt.ps, cnt.mirrors, cnt.total, n * (m + 2)])
    return buf.getvalue()


def cmd_compile(args, parser) -> int:
    if args.check_counts:
        rows = [(n, count_components(compile_full_default(n))) for n in REFERENCE_COUNTS]
        sys.stdout.write(_counts_csv(rows))
        bad = [n for n, cnt in rows if cnt.table_triple != REFERENCE_COUNTS[n]]
        for n in bad:
            print(f"reference count mismatch at N={n}", file=sys.stderr)
        return 1 if bad else 0
    c, _ = _resolve_family(args, parser)
    if c is None:
        if args.dim is None:
            parser.error("compile needs --dim, --angles or --coeffs")
        check_power_of_two(args.dim)
        c = default_coefficients(args.dim)
    check_power_of_two(c.size)
    if not 0 <= args.state < c.size:
        parser.error(f"--state must be in 0..{c.size - 1}")
    net = compile_from_coefficients(c, args.state)
    counts = _counts_csv([(c.size, count_components(net))])
    if args.out is not None:
        outdir = resolve_out(args.out)
        # render everything before touching the filesystem
        files = {"netlist.txt": net.to_text(), "netlist.json": net.to_json(), "counts.csv": counts}
        for name, text in files.items():
            atomic_write(outdir / name, text)
        sys.stdout.write(counts)
        return 0
    text = {"netlist-text": net.to_text(), "json": net.to_json(), "csv": counts}[args.format]
    sys.stdout.write(text)
    return 0


def _config(args, trials, source=None) -> SimConfig:
    return SimConfig(
        trials=trials,
        seed=args.seed,
        source=source,
        pbs_extinction=args.extinction,
        phase_noise_sigma=args.phase_noise,
        detector_efficiency=args.detector_efficiency,
        heralding_efficiency=args.heralding_efficiency,
    )


def _backend(args, n):
    if args.backend:
        return args.backend
    try:
        check_power_of_two(n)
    except DiscriminationError:
        return "abstract"
    return "netlist"


def cmd_simulate(args, parser) -> int:
    c, angles = _resolve_family(args, parser)
    if angles is None:
        parser.error("simulation needs strictly positive amplitudes")
    n = c.size
    source = None
    if args.state is not None:
        if not 0 <= args.state < n:
            parser.error(f"--state must be in 0..{n - 1}")
        source = tuple(1.0 if k == args.state else 0.0 for k in range(n))
    report = run_trials(_config(args, args.trials, source), angles, workers=args.workers, backend=_backend(args, n))
    emit(report.to_json() if args.format == "json" else report.confusion_csv(), args.out)
    return 0


def _grid(args, parser):
    if args.values is not None:
        return args.values
    parts = args.grid.split(",")
    if len(parts) != 3:
        parser.error("--grid takes start,stop,count")
    start, stop = eval_expr(parts[0]), eval_expr(parts[1])
    count = int(parts[2])
    if count < 1:
        parser.error("--grid count must be >= 1")
    return np.linspace(start, stop, count).tolist()


def cmd_sweep(args, parser) -> int:
    c, angles = _resolve_family(args, parser)
    if angles is None:
        if args.dim not in (None, 2):
            parser.error("sweeps with N > 2 need base --angles or --coeffs")
        angles = np.array([np.pi / 4])
    angles = np.asarray(angles, dtype=float)
    if not 0 <= args.index < angles.size:
        parser.error(f"--index must be in 0..{angles.size - 1}")
    n = angles.size + 1
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "valid", "p_d", "empirical_rate", "ci_low", "ci_high", "note"])
    for theta in _grid(args, parser):
        point = angles.copy()
        point[args.index] = theta
        try:
            coeffs = coefficients_from_angles(point)
        except DiscriminationError as exc:
            w.writerow([repr(float(theta)), 0, "", "", "", "", str(exc)])
            continue
        row = [repr(float(theta)), 1, repr(optimal_probability(coeffs))]
        if args.trials:
            rep = run_trials(_config(args, args.trials), point, workers=args.workers, backend=_backend(args, n))
            row += [repr(rep.conclusive_rate), repr(rep.conclusive_rate_ci[0]), repr(rep.conclusive_rate_ci[1]), ""]
        else:
            row += ["", "", "", ""]
        w.writerow(row)
    emit(buf.getvalue(), args.out)
    return 0


def cmd_verify(args, parser) -> int:
    if args.dim < 2:
        parser.error("--dim must be >= 2")
    results = run_battery(args.dim, args.draws, args.seed, faults=tuple(args.inject_fault))
    ok = all(r.passed for r in results)
    if args.format == "json":
        text = _dumps(
            {
                "schema_version": SCHEMA_VERSION,
                "dim": args.dim,
                "passed": ok,
                "checks": [r.__dict__ for r in results],
            }
        )
    else:
        text = "\n".join(r.line() for r in results) + f"\n{'ALL PASS' if ok else 'FAILED'}\n"
    emit(text, args.out)
    return 0 if ok else 1


COMMANDS = {
    "discriminate": cmd_discriminate,
    "compile": cmd_compile,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser.commands[args.command]
    try:
        return COMMANDS[args.command](args, sub)
    except DiscriminationError as exc:
        print(f"symdisc: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
