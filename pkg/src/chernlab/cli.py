"""Command-line entry point.

Subcommands
-----------
``check``        run the verification suite and emit one report per line
``scalar``       print the Chern scalar curvature at sampled points
``linearize``    evaluate ``gamma(h)``, ``gamma^*(u)`` and ``(scal)''(h, h)``
``adjointness``  global ``<gamma h, u> = <h, gamma^* u>`` test
``witness``      the ``CP^1 x CP^1`` obstruction integral
``report``       re-render a saved JSONL report as CSV or a markdown table

Exit status is 0 when every executed check passes, 1 when one fails and 2
on usage errors (including unknown manifold or check names).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from . import harness as H
from . import linearization as L
from .algebra import GeometryError
from .chern import ChernGeometry
from .manifolds import ZOO, jet_eval, make_rng, perturbation_preset, scalar_preset, zoo

CONVENTIONS = {
    "metric": "g_{j̄i} = g(d/dz^i, d/dz̄^j); dx^2 + dy^2 has g_{1̄1} = 1/2",
    "ddc": "dd^c u = -2 u_{,ij̄}, so Tr^C(dd^c u) = Delta u + g(du, theta)",
    "laplacian": "positive, Delta = d^* d",
    "perturbation_path": "eta_t = G + t eta (first order); G + t eta + t^2/2 eta G^-1 eta (second order)",
}

REPORT_FIELDS = ("check", "manifold", "params", "max_abs_err", "max_rel_err", "tol", "pass", "seconds")
TABLE_FIELDS = ("check", "manifold", "seed", "samples", "mode", "max_abs_err", "max_rel_err", "tol", "pass", "seconds")

H_PRESETS = ("id", "cos_id", "scalar_id", "traceless", "witness")
U_PRESETS = ("const1", "cos_x", "height")


class UsageError(Exception):
    """Bad flags, unknown names or unreadable inputs (exit status 2)."""


# ----------------------------------------------------------- serialization
def dumps(obj) -> str:
    """JSON with every float written as ``%.17g`` (lossless, diffable)."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return "%.17g" % x
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k), ensure_ascii=False)}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def report_record(rep: H.CheckReport) -> dict:
    """One JSONL record: the report schema plus the conventions header."""
    return {
        "check": rep.check,
        "manifold": rep.manifold,
        "params": rep.params,
        "max_abs_err": rep.max_abs_err,
        "max_rel_err": rep.max_rel_err,
        "tol": rep.tol,
        "pass": rep.passed,
        "seconds": rep.seconds,
        "seed": rep.seed,
        "samples": rep.samples,
        "mode": rep.mode,
        "conventions": CONVENTIONS,
        "version": __version__,
    }


def _csv_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v
    if isinstance(v, dict):
        return dumps(v)
    return v


def render_csv(records: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_FIELDS + ("params",))
    for r in records:
        writer.writerow([_csv_value(r.get(k, "")) for k in TABLE_FIELDS] + [_csv_value(r.get("params", {}))])
    return buf.getvalue()


def render_markdown(records: Sequence[dict]) -> str:
    head = ("check", "manifold", "max_abs_err", "max_rel_err", "tol", "mode", "result", "seconds")
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for r in records:
        lines.append(
            "| "
            + " | ".join(
                [
                    r["check"],
                    r["manifold"],
                    "%.3e" % r["max_abs_err"],
                    "%.3e" % r["max_rel_err"],
                    "%.1e" % r["tol"],
                    r.get("mode", "rel"),
                    "PASS" if r["pass"] else "FAIL",
                    "%.2f" % r["seconds"],
                ]
            )
            + " |"
        )
    return "\n".join(lines) + "\n"


def read_jsonl(path: str) -> list[dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            records = [json.loads(line) for line in fh if line.strip()]
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read report {path}: {exc}") from exc
    for i, r in enumerate(records):
        missing = [k for k in REPORT_FIELDS if k not in r]
        if missing:
            raise UsageError(f"{path}: line {i + 1} lacks fields {missing}")
    return records


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def emit_reports(reports: Iterable[H.CheckReport], out: str | None, fmt: str) -> None:
    records = [report_record(r) for r in reports]
    if out is None:
        return
    if fmt == "csv":
        _write(render_csv(records), out)
    else:
        _write("".join(dumps(r) + "\n" for r in records), out)


def _summary_line(rep: H.CheckReport) -> str:
    status = "PASS" if rep.passed else "FAIL"
    return (
        f"{status} {rep.check:<28s} {rep.manifold:<18s} "
        f"abs={rep.max_abs_err:.3e} rel={rep.max_rel_err:.3e} tol={rep.tol:.1e} ({rep.seconds:.2f}s)"
    )


# ----------------------------------------------------------------- parsing
def _manifolds(value: str) -> tuple[str, ...]:
    if value == "all":
        return tuple(ZOO)
    names = tuple(v.strip() for v in value.split(",") if v.strip())
    bad = [n for n in names if n not in ZOO]
    if bad or not names:
        raise UsageError(f"unknown manifold {value!r}; valid names: all, {', '.join(ZOO)}")
    return names


def _float_list(value: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in value.split(",") if v.strip())
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {value!r}") from exc


def _tolerances(items: Sequence[str] | None) -> dict:
    out = {}
    for item in items or ():
        name, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"tolerance override must look like check=value, got {item!r}")
        if name not in H.CHECKS:
            raise UsageError(f"unknown check {name!r}; valid names: {', '.join(H.CHECKS)}")
        try:
            out[name] = float(val)
        except ValueError as exc:
            raise UsageError(f"bad tolerance {val!r} for {name}") from exc
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chernlab", description="Chern scalar curvature linearization workbench.")
    parser.add_argument("--version", action="version", version=f"chernlab {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, manifold_default="all"):
        p.add_argument("--config", help="file of 'key = value' lines; flags override it")
        p.add_argument("--manifold", default=manifold_default, help="zoo name, comma list or 'all'")
        p.add_argument("--seed", type=int, default=42)

    p = sub.add_parser("check", help="run the verification suite")
    common(p)
    p.add_argument("--check", default=None, help="comma list of check names (default: all)")
    p.add_argument("--dt", default="1e-2,1e-3", help="finite-difference step schedule")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--grid", type=int, default=None, help="quadrature nodes per direction (power of two)")
    p.add_argument("--tol", action="append", metavar="CHECK=VALUE", help="tolerance override, repeatable")
    p.add_argument("--heavy", action="store_true", help="include slow checks (witness grid doubling)")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--list", action="store_true", help="list check names and exit")

    p = sub.add_parser("scalar", help="Chern scalar curvature at sampled points")
    common(p, manifold_default=None)
    p.add_argument("--points", type=int, default=10)

    p = sub.add_parser("linearize", help="gamma(h), gamma*(u) and the second variation at sampled points")
    common(p, manifold_default=None)
    p.add_argument("--points", type=int, default=1)
    p.add_argument("--h", default="id", help=f"perturbation preset: {', '.join(H_PRESETS)}")
    p.add_argument("--u", default="cos_x", help=f"scalar preset: {', '.join(U_PRESETS)}")

    p = sub.add_parser("adjointness", help="global adjointness of gamma and gamma*")
    common(p)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--pairs", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")

    p = sub.add_parser("witness", help="CP1 x CP1 obstruction integral")
    p.add_argument("--config", help="file of 'key = value' lines; flags override it")
    p.add_argument("--grid", type=int, default=32)
    p.add_argument("--azimuth", type=int, default=L.WITNESS_AZIMUTH)
    p.add_argument("--doubling", action="store_true", help="also evaluate at twice the grid")

    p = sub.add_parser("report", help="re-render a saved JSONL report")
    p.add_argument("input")
    p.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    p.add_argument("--out", default=None)
    return parser


def read_config(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("missing subcommand; choose one of check, scalar, linearize, adjointness, witness, report")
    if getattr(args, "config", None):
        conf = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        actions = {a.dest: a for a in sub._actions}
        for key, value in conf.items():
            if key not in actions or key in ("help", "config"):
                raise UsageError(f"unknown config key {key!r} for '{args.command}'")
            act = actions[key]
            if isinstance(act, argparse._StoreTrueAction):
                parsed = value.lower() in ("1", "true", "yes", "on")
            elif isinstance(act, argparse._AppendAction):
                parsed = [v.strip() for v in value.split(";") if v.strip()]
            else:
                try:
                    parsed = act.type(value) if act.type else value
                except ValueError as exc:
                    raise UsageError(f"config key {key!r}: bad value {value!r}") from exc
                if act.choices and parsed not in act.choices:
                    raise UsageError(f"config key {key!r}: choose from {', '.join(act.choices)}")
            sub.set_defaults(**{key: parsed})
        args = parser.parse_args(argv)
    return args


# ---------------------------------------------------------------- commands
def _threads() -> int | None:
    return int(os.environ["CHERNLAB_THREADS"]) if os.environ.get("CHERNLAB_THREADS") else None


def _single_manifold(value: str | None) -> str:
    if value is None:
        raise UsageError(f"--manifold is required; valid names: {', '.join(ZOO)}")
    names = _manifolds(value)
    if len(names) != 1:
        raise UsageError("this command takes a single manifold")
    return names[0]


def cmd_check(args) -> int:
    if args.list:
        for name, cdef in H.CHECKS.items():
            print(f"{name:<28s} tol={cdef.tol:.1e} mode={cdef.mode}{' (heavy)' if cdef.heavy else ''}")
        return 0
    manifolds = _manifolds(args.manifold)
    checks = None
    if args.check:
        checks = tuple(c.strip() for c in args.check.split(",") if c.strip())
        bad = [c for c in checks if c not in H.CHECKS]
        if bad:
            raise UsageError(f"unknown check(s) {bad}; valid names: {', '.join(H.CHECKS)}")
    grids = {m: args.grid for m in manifolds} if args.grid else {}
    try:
        cfg = H.SuiteConfig(
            manifolds=manifolds,
            checks=checks,
            seed=args.seed,
            dts=_float_list(args.dt),
            samples=args.samples,
            grids=grids,
            tolerances=_tolerances(args.tol),
            include_heavy=args.heavy,
            threads=_threads(),
        )
        reports = H.run_suite(cfg, on_report=lambda r: print(_summary_line(r), flush=True))
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc).strip("'\"")) from exc
    emit_reports(reports, args.out, args.format)
    failed = sum(not r.passed for r in reports)
    print(f"{len(reports) - failed}/{len(reports)} checks passed")
    return 0 if failed == 0 else 1


def _sample_points(name: str, seed: int, n: int, label: str):
    if n < 1:
        raise UsageError("--points must be positive")
    spec = zoo(name)
    return spec, spec.sample(make_rng(seed, "cli", label, name), n)


def cmd_scalar(args) -> int:
    spec, pts = _sample_points(_single_manifold(args.manifold), args.seed, args.points, "scalar")
    scal = ChernGeometry(jet_eval(spec, spec.metric, pts, 2)).scal
    for v in scal:
        print(repr(float(v)))
    return 0


def cmd_linearize(args) -> int:
    spec, pts = _sample_points(_single_manifold(args.manifold), args.seed, args.points, "linearize")
    if args.h not in H_PRESETS:
        raise UsageError(f"unknown perturbation preset {args.h!r}; valid names: {', '.join(H_PRESETS)}")
    if args.u not in U_PRESETS:
        raise UsageError(f"unknown scalar preset {args.u!r}; valid names: {', '.join(U_PRESETS)}")
    try:
        u = scalar_preset(spec, args.u)
        h = perturbation_preset(spec, args.h, scalar=u)
        inp = L.VariationInput.at(spec, pts, h, u)
    except ValueError as exc:
        raise UsageError(f"{exc} on {spec.name}") from exc
    gam = L.gamma(inp)
    gstar = L.gamma_star(inp)
    second = L.second_var(inp)
    for i in range(len(pts)):
        record = {
            "manifold": spec.name,
            "point": pts[i].tolist(),
            "h": args.h,
            "u": args.u,
            "gamma_h": float(gam[i]),
            "gamma_star_u": {"re": gstar.eta[i].real.tolist(), "im": gstar.eta[i].imag.tolist()},
            "second_variation": float(second[i]),
        }
        print(dumps(record))
    return 0


def cmd_adjointness(args) -> int:
    names = [n for n in _manifolds(args.manifold) if n in H.ADJOINT_TOL]
    if not names:
        raise UsageError(f"adjointness runs on: {', '.join(H.ADJOINT_TOL)}")
    if args.grid is not None and not H._powers_of_two(args.grid):
        raise UsageError(f"--grid must be a power of two, got {args.grid}")
    reports = []
    for name in names:
        pairs = args.pairs or H.ADJOINT_PAIRS.get(name, H.ADJOINT_PAIRS_DEFAULT)
        rep = H.adjointness_test(zoo(name), args.grid or H.DEFAULT_GRIDS[name], args.seed, pairs, _threads())
        print(_summary_line(rep), flush=True)
        reports.append(rep)
    emit_reports(reports, args.out, args.format)
    return 0 if all(r.passed for r in reports) else 1


def cmd_witness(args) -> int:
    if not H._powers_of_two(args.grid) or args.azimuth < 2:
        raise UsageError("--grid must be a power of two and --azimuth at least 2")
    try:
        rep = L.instability_witness(args.grid, args.azimuth, threads=_threads())
    except L.KernelError as exc:
        print(f"FAIL kernel validation: {exc}")
        return 1
    rel = abs(rep.value - L.WITNESS_VALUE) / L.WITNESS_VALUE
    ok = rel <= 1e-6
    r = rep.residuals
    print(f"manifold            {rep.manifold}")
    print(f"u                   {rep.u_desc}")
    print(f"h                   {rep.h_desc}")
    print(f"lambda (scal)       {r['lambda']:.12f}")
    print(f"|Delta u - 2u|      {r['eigen_residual']:.3e}")
    print(f"|gamma*(u)| max     {r['gamma_star_u']:.3e}")
    print(f"|gamma(h)| max      {r['gamma_h']:.3e}")
    print(f"nodes               {rep.nodes}")
    print(f"obstruction         {rep.value:.10f}")
    print(f"128 pi^2 / 3        {L.WITNESS_VALUE:.10f}")
    print(f"relative error      {rel:.3e}")
    if args.doubling:
        fine = L.instability_witness(2 * args.grid, args.azimuth, threads=_threads())
        drift = abs(fine.value - rep.value) / abs(fine.value)
        ok = ok and drift <= 1e-9
        print(f"doubled grid        {fine.value:.10f} (relative change {drift:.3e})")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_report(args) -> int:
    records = read_jsonl(args.input)
    text = render_csv(records) if args.format == "csv" else render_markdown(records)
    _write(text, args.out)
    failed = sum(not r["pass"] for r in records)
    print(f"{len(records) - failed}/{len(records)} checks passed", file=sys.stderr if args.out is None else sys.stdout)
    return 0 if failed == 0 and records else 1


COMMANDS = {
    "check": cmd_check,
    "scalar": cmd_scalar,
    "linearize": cmd_linearize,
    "adjointness": cmd_adjointness,
    "witness": cmd_witness,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"chernlab: error: {exc}", file=sys.stderr)
        return 2
    except GeometryError as exc:
        print(f"chernlab: geometry error: {exc}", file=sys.stderr)
        return 1
