"""make_figures: render every figure the files in a run directory support."""

from __future__ import annotations

import argparse
import glob
import os
import re
import sys

from .figures import FigureSpec, plot
from .loaders import SchemaError


def _fields_by_prefix(run_dir: str) -> dict:
    """Map prefix -> sorted [(t, path)] for all *_fields_<t>.csv files."""
    pattern = re.compile(r"^(?P<prefix>.+)_fields_(?P<t>[0-9.]+)\.csv$")
    out: dict = {}
    for path in sorted(glob.glob(os.path.join(run_dir, "*_fields_*.csv"))):
        m = pattern.match(os.path.basename(path))
        if not m:
            continue
        out.setdefault(m.group("prefix"), []).append((float(m.group("t")), path))
    for prefix in out:
        out[prefix].sort()
    return out


def build_specs(run_dir: str, out_dir: str, shock_pair: str | None = None) -> list[FigureSpec]:
    specs = []
    for path in sorted(glob.glob(os.path.join(run_dir, "*_dispersion.csv"))):
        name = os.path.basename(path)[: -len(".csv")]
        specs.append(FigureSpec("dispersion", (path,), os.path.join(out_dir, name)))
    for path in sorted(glob.glob(os.path.join(run_dir, "*_diag.csv"))):
        name = os.path.basename(path)[: -len("_diag.csv")]
        specs.append(FigureSpec("timeseries", (path,), os.path.join(out_dir, f"{name}_timeseries")))
    converge = sorted(glob.glob(os.path.join(run_dir, "*_converge_*.csv")))
    if converge:
        labels = tuple(
            re.sub(r"^.*_converge_", "", os.path.basename(p))[: -len(".csv")] for p in converge
        )
        specs.append(
            FigureSpec("convergence", tuple(converge), os.path.join(out_dir, "convergence"), labels)
        )
    fields = _fields_by_prefix(run_dir)
    for prefix, snaps in fields.items():
        inputs = (snaps[-1][1],) if len(snaps) == 1 else (snaps[-1][1], snaps[0][1])
        specs.append(FigureSpec("fields", inputs, os.path.join(out_dir, f"{prefix}_fields")))
    pair = None
    if shock_pair:
        a, b = shock_pair.split(",")
        if a not in fields or b not in fields:
            raise SchemaError(f"shock pair prefixes not found in {run_dir}: {shock_pair}")
        pair = (a, b)
    elif len(fields) == 2:
        pair = tuple(sorted(fields))
    if pair:
        specs.append(
            FigureSpec(
                "shock_compare",
                (fields[pair[0]][-1][1], fields[pair[1]][-1][1]),
                os.path.join(out_dir, f"shock_{pair[0]}_vs_{pair[1]}"),
                pair,
            )
        )
    return specs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="make_figures", description="render figures from splitfem-rsw CSV outputs"
    )
    parser.add_argument("run_dir", help="directory containing the solver CSV files")
    parser.add_argument("--out", default=None, help="output directory (default <run_dir>/figures)")
    parser.add_argument(
        "--shock-pair",
        default=None,
        metavar="PREFIX_A,PREFIX_B",
        help="prefixes of the two runs to compare in the wave-front figure",
    )
    args = parser.parse_args(argv)
    out_dir = args.out or os.path.join(args.run_dir, "figures")
    try:
        specs = build_specs(args.run_dir, out_dir, shock_pair=args.shock_pair)
        if not specs:
            print(f"no recognizable solver CSV files in {args.run_dir}", file=sys.stderr)
            return 1
        for spec in specs:
            for path in plot(spec):
                print(path)
        return 0
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main_entry() -> None:
    sys.exit(main())
