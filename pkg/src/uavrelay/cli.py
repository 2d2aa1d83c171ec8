"""Command-line front end.

Subcommands::

    uavrelay analytic      closed-form SIR CCDF over a dB grid
    uavrelay mc-validate   Monte Carlo CCDF against the closed form
    uavrelay simulate      drops of one scheme at one asymmetry factor
    uavrelay sweep         drops over an F grid and a list of schemes

Exit codes: 0 success, 1 usage error, 2 validation error, 3 acceptance bound
exceeded. CSV outputs start with ``#`` comment lines that carry the scenario
(or configuration) digest; everything after them is plain CSV.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from importlib import metadata
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analytic, montecarlo, netsim
from .propagation import RelayKind
from .scenario import Scenario, ScenarioError, Variant, load_scenario, scenario_from_dict

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_BOUND = 0, 1, 2, 3
DEFAULT_XI_DB = "-10,-5,0,5,10,15,20,25,30"
DEFAULT_SCHEMES = "Reference,LoadBalancing,FixedRelays,MobileRelays,UpperBound"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _float_list(text: str, name: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{name}: not a comma-separated list of numbers: {text!r}") from None
    if not vals:
        raise UsageError(f"{name}: empty list")
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{name}: values must be finite")
    return vals


def _fmt(x: float) -> str:
    return repr(float(x))


def _csv(header_comments: Sequence[str], columns: Sequence[str], rows) -> str:
    buf = io.StringIO()
    for line in header_comments:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


def _kind(text: str) -> RelayKind:
    try:
        return RelayKind(text)
    except ValueError:
        raise UsageError(f"--kind must be one of {[k.value for k in RelayKind]}") from None


# -- analytic ---------------------------------------------------------------

def cmd_analytic(args) -> int:
    xi_db = _float_list(args.xi_db, "--xi-db")
    xi = analytic.db_to_linear(xi_db)
    params = {"cmd": "analytic", "kind": args.kind, "lam": args.lam, "r": args.r, "xi_db": xi_db}
    if args.kind == "both":
        cols = ["xi_db", "ccdf_suav", "ccdf_ground"]
        curves = [analytic.ccdf_curve(k, args.lam, args.r, xi) for k in (RelayKind.SUAV, RelayKind.GROUND)]
    else:
        cols = ["xi_db", "ccdf"]
        curves = [analytic.ccdf_curve(_kind(args.kind), args.lam, args.r, xi)]
    rows = [[_fmt(x)] + [_fmt(c[i]) for c in curves] for i, x in enumerate(xi_db)]
    _emit(_csv([f"digest {_digest(params)}", f"kind {args.kind} lam {args.lam!r} r {args.r!r}"], cols, rows), args.out)
    return EXIT_OK


# -- mc-validate ------------------------------------------------------------

def cmd_mc_validate(args) -> int:
    xi_db = _float_list(args.xi_db, "--xi-db")
    order = np.argsort(xi_db, kind="stable")
    kind = _kind(args.kind)
    cfg = montecarlo.McConfig(kind, args.lam, args.r, args.samples, args.window, args.seed)
    xi = analytic.db_to_linear(np.asarray(xi_db)[order])
    emp = montecarlo.empirical_ccdf(cfg, xi, workers=args.workers)
    ana = analytic.ccdf_curve(kind, args.lam, args.r, xi)
    dev = montecarlo.compare(emp, ana)
    params = {"cmd": "mc-validate", "kind": kind.value, "lam": args.lam, "r": args.r, "samples": args.samples,
              "window": cfg.window_radius, "seed": args.seed, "xi_db": xi_db}
    # rows come out in ascending threshold order
    rows = [[_fmt(xi_db[j]), _fmt(e), _fmt(a), _fmt(abs(e - a))] for j, e, a in zip(order, emp, ana)]
    status = "pass" if dev.max_abs_deviation <= args.bound else "fail"
    comments = [f"digest {_digest(params)}",
                f"kind {kind.value} lam {args.lam!r} r {args.r!r} samples {args.samples} "
                f"window {cfg.window_radius!r} seed {args.seed}",
                f"max_abs_deviation {dev.max_abs_deviation!r} mean_abs_deviation {dev.mean_abs_deviation!r} "
                f"bound {args.bound!r} {status}"]
    _emit(_csv(comments, ["xi_db", "empirical", "analytic", "abs_dev"], rows), args.out)
    print(f"mc-validate: max_abs_deviation={dev.max_abs_deviation:.6f} bound={args.bound} {status}", file=sys.stderr)
    return EXIT_OK if status == "pass" else EXIT_BOUND


# -- simulate / sweep -------------------------------------------------------

def _parse_override(item: str) -> tuple[list[str], object]:
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise UsageError(f"--set expects key=value, got {item!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def _scenario(args) -> Scenario:
    if args.scenario:
        try:
            text = Path(args.scenario).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read scenario: {exc}") from None
        scenario = load_scenario(text)
    else:
        scenario = scenario_from_dict({"master_seed": args.seed})
    if not args.set:
        return scenario
    doc = scenario.to_dict()
    for item in args.set:
        path, value = _parse_override(item)
        node = doc
        for part in path[:-1]:
            if not isinstance(node.get(part), dict):
                raise ScenarioError(f"{'.'.join(path)}: unknown key")
            node = node[part]
        node[path[-1]] = value
    return scenario_from_dict(doc)


def _schemes(text: str) -> list[Variant]:
    out = []
    for name in (t.strip() for t in text.split(",") if t.strip()):
        try:
            out.append(Variant(name))
        except ValueError:
            raise UsageError(f"unknown scheme {name!r}; choose from {[v.value for v in Variant]}") from None
    if not out:
        raise UsageError("no schemes given")
    return out


def _write_results(args, scenario: Scenario, f_values, schemes, records, elapsed: float, cmd: str) -> None:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    head = [f"digest {scenario.digest()}", f"master_seed {scenario.master_seed}"]
    drop_rows = [[_fmt(r.f), r.scheme, r.drop, _fmt(r.mean_bps), _fmt(r.qos_bps)] for r in records]
    drops_csv = _csv(head, ["F", "scheme", "drop", "mean_bps", "qos_bps"], drop_rows)
    agg_rows = [[_fmt(a.f), a.scheme, a.drops, _fmt(a.mean_bps), _fmt(a.mean_ci95), _fmt(a.qos_bps),
                 _fmt(a.qos_ci95)] for a in netsim.aggregate(records)]
    agg_csv = _csv(head, ["F", "scheme", "drops", "mean_bps", "mean_ci95", "qos_bps", "qos_ci95"], agg_rows)
    (out_dir / "drops.csv").write_text(drops_csv)
    (out_dir / "aggregate.csv").write_text(agg_csv)
    (out_dir / "scenario.json").write_text(json.dumps(scenario.to_dict(), indent=2, sort_keys=True) + "\n")
    manifest = {
        "digest": scenario.digest(),
        "tool_version": _version(),
        "subcommand": cmd,
        "parameters": {"F": list(f_values), "schemes": [s.value for s in schemes],
                       "drops": records and max(r.drop for r in records) + 1, "workers": args.workers},
        "wall_clock_s": round(elapsed, 3),
        "outputs": ["drops.csv", "aggregate.csv", "scenario.json"],
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _run(args, f_values: list[float], schemes: list[Variant], cmd: str) -> int:
    scenario = _scenario(args)
    drops = scenario.drops if args.drops is None else args.drops
    if drops < 1:
        raise ScenarioError("drops: must be an integer >= 1")
    t0 = time.perf_counter()
    records = netsim.run_sweep(scenario, f_values, schemes, drops=drops, workers=args.workers)
    _write_results(args, scenario, f_values, schemes, records, time.perf_counter() - t0, cmd)
    return EXIT_OK


def cmd_simulate(args) -> int:
    return _run(args, [args.f], _schemes(args.scheme), "simulate")


def cmd_sweep(args) -> int:
    return _run(args, _float_list(args.f, "--f"), _schemes(args.schemes), "sweep")


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="uavrelay", description="Relay SIR analysis and multi-cell relay simulation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    a = sub.add_parser("analytic", help="closed-form SIR CCDF over a dB grid")
    a.add_argument("--kind", default="both", help="SuavRn, GroundRn or both (default both)")
    a.add_argument("--lam", type=float, default=1.0, help="interferer density per unit area (default 1)")
    a.add_argument("--r", type=float, default=1.0, help="serving distance (default 1)")
    a.add_argument("--xi-db", default=DEFAULT_XI_DB, help=f"comma-separated thresholds in dB; write --xi-db=-10,0 when the first is negative (default {DEFAULT_XI_DB})")
    a.add_argument("--out", help="output CSV (default stdout)")
    a.set_defaults(func=cmd_analytic)

    m = sub.add_parser("mc-validate", help="Monte Carlo CCDF against the closed form")
    m.add_argument("--kind", default="GroundRn", help="SuavRn or GroundRn (default GroundRn)")
    m.add_argument("--lam", type=float, default=1.0)
    m.add_argument("--r", type=float, default=1.0)
    m.add_argument("--samples", type=int, default=100_000)
    m.add_argument("--window", type=float, default=None, help="truncation radius (default 5*max(r, 1))")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--bound", type=float, default=0.01, help="max allowed absolute deviation (default 0.01)")
    m.add_argument("--xi-db", default=DEFAULT_XI_DB)
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--out", help="output CSV (default stdout)")
    m.set_defaults(func=cmd_mc_validate)

    def scenario_args(s):
        s.add_argument("--scenario", help="JSON scenario file (default: built-in defaults)")
        s.add_argument("--seed", type=int, default=0, help="master seed when no scenario file is given")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a scenario field, e.g. radio.tx_power_rn_w=2 (repeatable)")
        s.add_argument("--drops", type=int, default=None, help="override the scenario's drop count")
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--out-dir", required=True, help="directory for drops.csv, aggregate.csv, manifest.json")

    s = sub.add_parser("simulate", help="drops of one or more schemes at one asymmetry factor")
    scenario_args(s)
    s.add_argument("--f", type=float, default=1.0, help="asymmetry factor (default 1)")
    s.add_argument("--scheme", default="Reference", help="scheme or comma-separated schemes")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="drops over an F grid and a list of schemes")
    scenario_args(w)
    w.add_argument("--f", default="1,2,3,4,5", help="comma-separated asymmetry factors (default 1..5)")
    w.add_argument("--schemes", default=DEFAULT_SCHEMES)
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScenarioError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
