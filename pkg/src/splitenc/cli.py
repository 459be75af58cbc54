"""Command-line front end.

Subcommands
-----------
test         run the encompassing test on a two-column CSV of forecast errors
mc-size      run a size experiment from a YAML config
mc-power     run a power experiment from a YAML config
local-power  evaluate theoretical drift/power over a mu0 (and c-scale) grid
inflation    run the country-level inflation study on a CSV panel

Exit codes: 0 success, 2 validation/configuration error, 3 numerical
degeneracy.  Every run echoes its resolved configuration before results;
``--out`` writes the primary artifact to a file (byte-identical across
repeated runs with the same flags and seed).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from .enc_test import (
    ForecastErrorSet,
    HacConfig,
    LocalPowerInput,
    SplitSpec,
    encompassing_test,
    local_power_mild,
    local_power_stationary,
)
from .errors import NumericalError, ParseError, ValidationError
from .inflation import CountryStudyConfig, load_panel, run_study
from .monte_carlo import (
    load_experiment_config,
    render_report,
    run_power_experiment,
    run_size_experiment,
)

DEFAULT_SEED = 20240817


def _echo_config(options: dict) -> None:
    print("# config: " + " ".join(f"{k}={v}" for k, v in options.items()))


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"# wrote {out_path}")
    else:
        sys.stdout.write(text)


def _read_errors_file(path):
    e1, e2 = [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty errors file") from None
        if [c.strip().lower() for c in header] != ["e1", "e2"]:
            raise ParseError(f"expected header e1,e2, got {','.join(header)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError(f"line {lineno}: expected 2 fields, got {len(row)}")
            try:
                e1.append(float(row[0]))
                e2.append(float(row[1]))
            except ValueError:
                raise ParseError(f"line {lineno}: bad number in {row!r}") from None
    return np.array(e1), np.array(e2)


def _result_text(result, format: str) -> str:
    record = {
        "statistic": result.statistic,
        "p_value": result.p_value,
        "dbar": result.dbar,
        "omega2": result.omega2,
        "mse1": result.mse1,
        "mse2": result.mse2,
        "classic_moment": result.classic_moment,
        "n": result.n,
        "m0": result.m0,
        "M": result.M,
        "mu0": result.mu0,
        "centering": result.centering,
    }
    if format == "json":
        return json.dumps(record, indent=2) + "\n"
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(record.keys())
        writer.writerow([repr(v) if isinstance(v, float) else v for v in record.values()])
        return buf.getvalue()
    lines = ["| quantity | value |", "|---|---|"]
    for key, val in record.items():
        shown = f"{val:.6g}" if isinstance(val, float) else str(val)
        lines.append(f"| {key} | {shown} |")
    return "\n".join(lines) + "\n"


def _cmd_test(args) -> int:
    _echo_config({
        "errors_file": args.errors_file, "mu0": args.mu0, "h": args.h, "k0": args.k0,
        "bandwidth": args.bandwidth, "bandwidth_c": args.bandwidth_c,
        "centering": args.centering, "format": args.format,
    })
    e1, e2 = _read_errors_file(args.errors_file)
    fes = ForecastErrorSet(e1, e2, h=args.h, k0=args.k0)
    hac = HacConfig(bandwidth=args.bandwidth) if args.bandwidth is not None \
        else HacConfig(c=args.bandwidth_c)
    result = encompassing_test(fes, SplitSpec(args.mu0), hac, centering=args.centering)
    _emit(_result_text(result, args.format), args.out)
    return 0


def _run_mc(args, runner, expected_kind: str) -> int:
    config = load_experiment_config(args.config_file)
    if config.kind != expected_kind:
        raise ValidationError(
            f"config kind is {config.kind!r}, expected {expected_kind!r}")
    reps = args.reps if args.reps is not None else config.reps
    seed = args.seed if args.seed is not None else (config.seed or DEFAULT_SEED)
    _echo_config({
        "config_file": args.config_file, "kind": config.kind, "cells": len(config.cells),
        "reps": reps, "seed": seed, "threads": args.threads, "format": args.format,
    })
    report = runner(config.cells, reps=reps, base_seed=seed, workers=args.threads)
    _emit(render_report(report, args.format), args.out)
    return 0


def _cmd_mc_size(args) -> int:
    return _run_mc(args, run_size_experiment, "size")


def _cmd_mc_power(args) -> int:
    return _run_mc(args, run_power_experiment, "power")


def _load_blocks(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"blocks file is not valid JSON: {exc}") from None
    keys = {k.lower(): k for k in raw}
    out = {}
    for name in ("c", "b11", "b12", "b21", "b22"):
        aliases = [name, name.replace("b", "q"), name.replace("b", "v")]
        found = next((keys[a] for a in aliases if a in keys), None)
        if found is None:
            raise ParseError(f"blocks file missing key {name!r} (or q/v alias)")
        out[name] = np.asarray(raw[found], dtype=float)
    return out


def _cmd_local_power(args) -> int:
    _echo_config({
        "blocks_file": args.blocks_file, "mu0": args.mu0, "pi0": args.pi0,
        "phi2": args.phi2, "level": args.level, "mild": args.mild,
        "c_scale": args.c_scale, "format": args.format,
    })
    blocks = _load_blocks(args.blocks_file)
    calculator = local_power_mild if args.mild else local_power_stationary
    rows = []
    for mu0 in args.mu0:
        for scale in args.c_scale:
            inp = LocalPowerInput(
                c=scale * blocks["c"], b11=blocks["b11"], b12=blocks["b12"],
                b21=blocks["b21"], b22=blocks["b22"], phi2=args.phi2,
                mu0=mu0, pi0=args.pi0, level=args.level,
            )
            out = calculator(inp)
            rows.append({"mu0": mu0, "c_scale": scale,
                         "drift": out["drift"], "power": out["power"]})
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    elif args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["mu0", "c_scale", "drift", "power"])
        for row in rows:
            writer.writerow([repr(row["mu0"]), repr(row["c_scale"]),
                             repr(row["drift"]), repr(row["power"])])
        text = buf.getvalue()
    else:
        lines = ["| mu0 | c_scale | drift | power |", "|---|---|---|---|"]
        for row in rows:
            lines.append(f"| {row['mu0']:g} | {row['c_scale']:g} | "
                         f"{row['drift']:.6g} | {row['power']:.6g} |")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return 0


def _cmd_inflation(args) -> int:
    _echo_config({
        "panel_file": args.panel_file, "h": args.h, "p2": args.p2, "p_max": args.p_max,
        "mu0": args.mu0, "pi0": args.pi0, "countries": args.countries,
        "start": args.start, "end": args.end, "exclude_own": args.exclude_own,
        "bandwidth_c": args.bandwidth_c, "format": args.format,
    })
    panel = load_panel(args.panel_file, countries=args.countries,
                       start=args.start, end=args.end)
    config = CountryStudyConfig(
        h=args.h, pi0=args.pi0, p2=args.p2, p_max=args.p_max,
        mu0_list=tuple(args.mu0), hac=HacConfig(c=args.bandwidth_c),
        include_own_country=not args.exclude_own,
    )
    report = run_study(panel, config)
    _emit(report.render(args.format), args.out)
    return 0


def _add_common(parser) -> None:
    parser.add_argument("--format", choices=["csv", "json", "markdown"],
                        default="markdown")
    parser.add_argument("--out", default=None, help="write the primary output to a file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splitenc",
        description="Split-sample forecast encompassing tests for nested models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test one pair of forecast-error series")
    p.add_argument("errors_file", help="CSV with header e1,e2")
    p.add_argument("--mu0", type=float, default=0.45)
    p.add_argument("--h", type=int, default=1)
    p.add_argument("--k0", type=int, default=1)
    p.add_argument("--bandwidth", type=int, default=None, help="fixed Bartlett bandwidth M")
    p.add_argument("--bandwidth-c", type=float, default=1.0,
                   help="constant c in M = floor(c * n^(1/3))")
    p.add_argument("--centering", choices=["segment", "global"], default="segment")
    _add_common(p)
    p.set_defaults(func=_cmd_test)

    for name, help_text, func in (
        ("mc-size", "empirical size experiment", _cmd_mc_size),
        ("mc-power", "empirical power experiment", _cmd_mc_power),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config_file", help="YAML experiment definition")
        p.add_argument("--reps", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
        _add_common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("local-power", help="theoretical drift and power")
    p.add_argument("blocks_file", help="JSON file with c and the moment blocks")
    p.add_argument("--mu0", type=float, nargs="+", default=[0.45])
    p.add_argument("--pi0", type=float, default=0.25)
    p.add_argument("--phi2", type=float, default=1.0)
    p.add_argument("--level", type=float, default=0.10)
    p.add_argument("--c-scale", type=float, nargs="+", default=[1.0],
                   help="scale factors applied to the c vector")
    p.add_argument("--mild", action="store_true",
                   help="interpret the blocks as mildly-integrated limits")
    _add_common(p)
    p.set_defaults(func=_cmd_local_power)

    p = sub.add_parser("inflation", help="country-level inflation study")
    p.add_argument("panel_file", help="CSV with header country,date,hcpi")
    p.add_argument("--h", type=int, default=4)
    p.add_argument("--p2", type=int, default=4)
    p.add_argument("--p-max", type=int, default=8)
    p.add_argument("--mu0", type=float, nargs="+", default=[0.40, 0.45])
    p.add_argument("--pi0", type=float, default=0.25)
    p.add_argument("--countries", nargs="+", default=None)
    p.add_argument("--start", default=None, help="first quarter, e.g. 1970Q1")
    p.add_argument("--end", default=None, help="last quarter, e.g. 2023Q4")
    p.add_argument("--bandwidth-c", type=float, default=1.0)
    p.add_argument("--exclude-own", action="store_true",
                   help="leave the target country out of the global average")
    _add_common(p)
    p.set_defaults(func=_cmd_inflation)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error (numerical): {exc}", file=sys.stderr)
        return 3
    except (ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
