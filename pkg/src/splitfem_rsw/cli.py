"""Command-line harness: single runs, convergence and dispersion sweeps, and
the closure-speedup benchmark.

Exit codes: 0 success, 2 configuration error, 3 numerical failure (a JSON
error report is printed to stderr and, when the output directory is known,
written next to the other outputs).  All CSV numbers carry 17 significant
digits so doubles round-trip exactly; identical configs produce byte-identical
files.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time as _time
from typing import Optional

import numpy as np

from . import __version__
from .closures import ClosureSpec, close_state
from .config import RunConfig, load_config
from .diagnostics import (
    dispersion_avg_analytic,
    dispersion_measured,
    l2_error,
    linearized_wave_operator,
)
from .dynamics import diagnose_pv
from .errors import (
    BlowUpError,
    ConfigError,
    FixedPointError,
    ModeAnalysisError,
    SimulationAbort,
    SingularSystemError,
    ValidationError,
)
from .integrators import TimeConfig, default_dt, make_rhs, rk4_step, run_simulation
from .mesh import ModelParams, State, build_mesh
from .operators import build_operators, solve_counter
from .testcases import TestCaseConfig, cycle_time, make_initial_state, reference_fields

NUMERICAL_ERRORS = (
    SimulationAbort,
    SingularSystemError,
    BlowUpError,
    FixedPointError,
    ModeAnalysisError,
    ValidationError,
)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, (int, float, np.floating)) else str(v) for v in row) + "\n")


def _git_commit() -> Optional[str]:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
    except (OSError, subprocess.TimeoutExpired):
        return None
    return out.stdout.strip() if out.returncode == 0 else None


def _write_meta(cfg: RunConfig, path: str, extra: Optional[dict] = None) -> None:
    meta = {
        "config": cfg.as_dict(),
        "package_version": __version__,
        "git_commit": _git_commit(),
    }
    if extra:
        meta.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _setup(cfg: RunConfig):
    mesh = build_mesh(cfg.n, cfg.length)
    ops = build_operators(mesh)
    params = ModelParams(g=cfg.g, f=cfg.f, h_mean=cfg.h_mean)
    return mesh, ops, params


def _resolved_dt(cfg: RunConfig, mesh, params) -> float:
    return cfg.dt if cfg.dt is not None else default_dt(mesh, params)


def cmd_run(cfg: RunConfig) -> dict:
    """Run one simulation; write <prefix>_diag.csv, <prefix>_fields_<t>.csv
    at every sampled time, and <prefix>_meta.json."""
    mesh, ops, params = _setup(cfg)
    state = make_initial_state(cfg.testcase_name, cfg.testcase, params, mesh)
    dt = _resolved_dt(cfg, mesh, params)
    t_end = cfg.t_end_cycles * cycle_time(params, cfg.length)
    series = run_simulation(
        state,
        params,
        cfg.closure,
        TimeConfig(dt=dt, scheme=cfg.scheme),
        t_end=t_end,
        sample_every=cfg.sample_every,
        ops=ops,
    )
    os.makedirs(cfg.out_dir, exist_ok=True)
    base = os.path.join(cfg.out_dir, cfg.prefix)
    diag_path = f"{base}_diag.csv"
    _write_csv(
        diag_path,
        ["t", "energy", "mass_e", "mass_n", "total_pv", "enstrophy"],
        (rec.as_tuple() for _, _, rec in series),
    )
    field_paths = []
    x_elem = mesh.node_x + 0.5 * mesh.dx
    for t, s, _rec in series:
        h0, u0, v0 = close_state(cfg.closure, ops, s)
        q = diagnose_pv(s.h, v0, params.f, ops)
        fpath = f"{base}_fields_{t:.6f}.csv"
        _write_csv(
            fpath,
            ["x_node", "h0", "u0", "v0", "q", "x_elem", "h_e", "u_e", "v_e"],
            zip(mesh.node_x, h0, u0, v0, q, x_elem, s.h, s.u, s.v),
        )
        field_paths.append(fpath)
    meta_path = f"{base}_meta.json"
    _write_meta(
        cfg,
        meta_path,
        extra={
            "resolved_dt": dt,
            "t_end": t_end,
            "steps": int(np.ceil(t_end / dt - 1e-12)),
            "samples": len(series),
        },
    )
    return {"diag": diag_path, "fields": field_paths, "meta": meta_path}


def converge_errors(cfg: RunConfig, n: int, cycles: float) -> dict:
    """One balanced steady-state run at resolution n; L2 errors of the P0
    coefficient fields and the closed P1 fields against the continuous
    reference profiles."""
    cfg_tc = TestCaseConfig(
        amplitude=cfg.testcase.amplitude,
        width=cfg.testcase.width,
        center=cfg.testcase.center,
        balance_fraction=1.0,
    )
    mesh = build_mesh(n, cfg.length)
    ops = build_operators(mesh)
    params = ModelParams(g=cfg.g, f=cfg.f, h_mean=cfg.h_mean)
    state = make_initial_state("tc2", cfg_tc, params, mesh)
    dt = cfg.dt if cfg.dt is not None else default_dt(mesh, params)
    series = run_simulation(
        state,
        params,
        cfg.closure,
        TimeConfig(dt=dt, scheme=cfg.scheme),
        t_end=cycles * cycle_time(params, cfg.length),
        sample_every=10**9,
        ops=ops,
    )
    final = series[-1][1]
    h_ref, u_ref, v_ref = reference_fields(cfg_tc, params, cfg.length)
    h0, u0, v0 = close_state(cfg.closure, ops, final)
    return {
        "n": n,
        "l2_h_p0": l2_error(final.h, h_ref, mesh, kind="p0"),
        "l2_u_p0": l2_error(final.u, u_ref, mesh, kind="p0"),
        "l2_v_p0": l2_error(final.v, v_ref, mesh, kind="p0"),
        "l2_h_p1": l2_error(h0, h_ref, mesh, kind="p1"),
        "l2_u_p1": l2_error(u0, u_ref, mesh, kind="p1"),
        "l2_v_p1": l2_error(v0, v_ref, mesh, kind="p1"),
    }


ERROR_COLUMNS = ("l2_h_p0", "l2_u_p0", "l2_v_p0", "l2_h_p1", "l2_u_p1", "l2_v_p1")


def cmd_converge(cfg: RunConfig, n_list: list[int], cycles: float = 1.0) -> str:
    """Steady-state convergence table with slopes between consecutive n."""
    for n in n_list:
        if cfg.closure.needs_odd_n() and n % 2 == 0:
            raise ConfigError(f"closure {cfg.closure.label} needs odd n; {n} is even")
    rows = [converge_errors(cfg, n, cycles) for n in n_list]
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, f"{cfg.prefix}_converge_{cfg.closure.label}.csv")
    header = ["n", *ERROR_COLUMNS, *(f"slope_{c[3:]}" for c in ERROR_COLUMNS)]
    out_rows = []
    for i, row in enumerate(rows):
        slopes = []
        for col in ERROR_COLUMNS:
            if i == 0 or rows[i - 1][col] == 0.0 or row[col] == 0.0:
                slopes.append("nan")
            else:
                ratio = np.log(rows[i - 1][col] / row[col]) / np.log(row["n"] / rows[i - 1]["n"])
                slopes.append(ratio)
        out_rows.append([row["n"], *(row[c] for c in ERROR_COLUMNS), *slopes])
    _write_csv(path, header, out_rows)
    return path


def cmd_dispersion(cfg: RunConfig, spec_list: list[str]) -> str:
    """Dispersion table: continuum line, averaged closed form, and the
    measured branch for each requested closure pair, k_index = 0..n/2."""
    specs = [ClosureSpec.from_label(s) for s in spec_list]
    for spec in specs:
        if spec.needs_odd_n() and cfg.n % 2 == 0:
            raise ConfigError(f"closure {spec.label} needs odd n; {cfg.n} is even")
    mesh = build_mesh(cfg.n, cfg.length)
    ops = build_operators(mesh)
    params = ModelParams(g=cfg.g, f=0.0, h_mean=cfg.h_mean)  # gravity-wave setting
    dx = cfg.length / cfg.n
    operators = {s.label: linearized_wave_operator(s, mesh, params, ops=ops) for s in specs}
    rows = []
    for ki in range(cfg.n // 2 + 1):
        k = 2.0 * np.pi * ki / cfg.length
        row = [k, params.wave_speed * k, dispersion_avg_analytic(k, params.g, params.h_mean, dx)]
        for spec in specs:
            row.append(dispersion_measured(spec, ki, mesh, params, operator=operators[spec.label]))
        rows.append(row)
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, f"{cfg.prefix}_dispersion.csv")
    header = ["k", "omega_continuum", "omega_avg_closed_form"] + [
        f"omega_measured_{s.label}" for s in specs
    ]
    _write_csv(path, header, rows)
    return path


class _BenchScheme:
    """One benchmarked closure pair: rolling simulation state plus timers."""

    def __init__(self, cfg: RunConfig, label: str, n: int):
        self.label = label
        self.n = n
        self.spec = ClosureSpec.from_label(label)
        mesh = build_mesh(n, cfg.length)
        self.ops = build_operators(mesh)
        params = ModelParams(g=cfg.g, f=cfg.f, h_mean=cfg.h_mean)
        self.state = make_initial_state("tc1", cfg.testcase, params, mesh)
        self.rhs_fn = make_rhs(params, self.spec, self.ops)
        # stability margin: the stiffest resolved mode of any benchmarked
        # closure pair stays well inside the RK4 imaginary-axis interval
        self.dt = default_dt(mesh, params, cfl=0.05)

    def run_steps(self, k: int) -> float:
        t0 = _time.perf_counter_ns()
        s = self.state
        for _ in range(k):
            s = rk4_step(s, self.dt, self.rhs_fn)
        self.state = s
        return (_time.perf_counter_ns() - t0) / k

    def run_closures(self, k: int) -> float:
        t0 = _time.perf_counter_ns()
        for _ in range(k):
            close_state(self.spec, self.ops, self.state)
        return (_time.perf_counter_ns() - t0) / k


def cmd_bench(cfg: RunConfig, n_bench: int = 2**17, steps: int = 1000, rounds: int = 10) -> str:
    """Closure-speedup benchmark: averaged closure versus the Galerkin pairs.

    The projection pairs containing a GP0 closure run on n_bench - 1 when
    n_bench is even (parity requirement).  After warmup the schemes are timed
    in interleaved rounds so load drift hits every scheme alike; per-step and
    per-closure nanoseconds are medians over rounds, and the speedups are
    medians of the round-paired ratios against avg-avg.
    """
    labels = ("avg-avg", "gp1-gp1", "gp1-gp0")
    schemes = {}
    for label in labels:
        spec = ClosureSpec.from_label(label)
        n = n_bench - 1 if (spec.needs_odd_n() and n_bench % 2 == 0) else n_bench
        schemes[label] = _BenchScheme(cfg, label, n)

    solve_counts = {}
    for label in labels:
        schemes[label].run_steps(max(1, steps // 20))  # warmup, primes the jit cache
        schemes[label].run_closures(3)
        before = solve_counter.count
        close_state(schemes[label].spec, schemes[label].ops, schemes[label].state)
        solve_counts[label] = solve_counter.count - before

    step_chunk = max(1, steps // rounds)
    closure_chunk = max(2, steps // (5 * rounds))
    step_samples = {label: [] for label in labels}
    closure_samples = {label: [] for label in labels}
    for _ in range(rounds):
        for label in labels:
            step_samples[label].append(schemes[label].run_steps(step_chunk))
        for label in labels:
            closure_samples[label].append(schemes[label].run_closures(closure_chunk))

    def paired_median(samples_other, samples_avg):
        return float(np.median([a / b for a, b in zip(samples_other, samples_avg)]))

    results = {
        label: {
            "label": label,
            "n": schemes[label].n,
            "dt": schemes[label].dt,
            "step_ns": float(np.median(step_samples[label])),
            "step_ns_samples": step_samples[label],
            "closure_ns": float(np.median(closure_samples[label])),
            "closure_ns_samples": closure_samples[label],
            "closure_stage_solve_count": solve_counts[label],
        }
        for label in labels
    }
    report = {
        "n_bench": n_bench,
        "steps": steps,
        "rounds": rounds,
        "schemes": results,
        "full_step_speedup": {
            f"{other}/avg-avg": paired_median(step_samples[other], step_samples["avg-avg"])
            for other in ("gp1-gp1", "gp1-gp0")
        },
        "closure_stage_speedup": {
            f"{other}/avg-avg": paired_median(closure_samples[other], closure_samples["avg-avg"])
            for other in ("gp1-gp1", "gp1-gp0")
        },
        "avg_closure_solve_count": solve_counts["avg-avg"],
    }
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, f"{cfg.prefix}_bench.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _error_report(exc: Exception, cfg: Optional[RunConfig]) -> dict:
    report = {
        "error": type(exc).__name__,
        "message": str(exc),
    }
    if isinstance(exc, SimulationAbort):
        report["failed_step"] = exc.step
        report["samples_retained"] = len(exc.series)
    if cfg is not None:
        report["config"] = cfg.as_dict()
    return report


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="splitfem-rsw",
        description="Split P0/P1 finite-element solver for the rotating shallow-water slice model",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file (defaults apply when omitted)")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config entry, e.g. --set mesh.n=256",
        )

    p_run = sub.add_parser("run", help="run one simulation and write diagnostics/fields")
    add_common(p_run)

    p_conv = sub.add_parser("converge", help="steady-state convergence sweep")
    add_common(p_conv)
    p_conv.add_argument(
        "--n-list",
        default="63,127,255,511,1023",
        help="comma-separated resolutions (odd values required for gp0 closures)",
    )
    p_conv.add_argument("--cycles", type=float, default=1.0, help="run length in domain crossings")

    p_disp = sub.add_parser("dispersion", help="dispersion-relation sweep")
    add_common(p_disp)
    p_disp.add_argument(
        "--specs",
        default="avg-avg,gp1-gp1",
        help="comma-separated closure pairs (velocity-height), e.g. avg-avg,gp1-gp0",
    )

    p_bench = sub.add_parser("bench", help="closure speedup benchmark")
    add_common(p_bench)
    p_bench.add_argument("--n", type=int, default=2**17, help="benchmark resolution")
    p_bench.add_argument("--steps", type=int, default=1000, help="timed steps per scheme")

    args = parser.parse_args(argv)

    cfg = None
    try:
        cfg = load_config(args.config, args.overrides)
        if args.command == "run":
            paths = cmd_run(cfg)
            print(json.dumps({"status": "ok", **paths}, indent=2))
        elif args.command == "converge":
            n_list = [int(v) for v in args.n_list.split(",") if v]
            path = cmd_converge(cfg, n_list, cycles=args.cycles)
            print(json.dumps({"status": "ok", "table": path}, indent=2))
        elif args.command == "dispersion":
            specs = [s.strip() for s in args.specs.split(",") if s.strip()]
            path = cmd_dispersion(cfg, specs)
            print(json.dumps({"status": "ok", "table": path}, indent=2))
        elif args.command == "bench":
            path = cmd_bench(cfg, n_bench=args.n, steps=args.steps)
            print(json.dumps({"status": "ok", "report": path}, indent=2))
        return 0
    except ConfigError as exc:
        print(json.dumps({"status": "config_error", "message": str(exc)}), file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        report = _error_report(exc, cfg)
        print(json.dumps({"status": "numerical_error", **report}), file=sys.stderr)
        if cfg is not None:
            try:
                os.makedirs(cfg.out_dir, exist_ok=True)
                with open(os.path.join(cfg.out_dir, f"{cfg.prefix}_error.json"), "w", encoding="utf-8") as fh:
                    json.dump(report, fh, indent=2)
                    fh.write("\n")
            except OSError:
                pass
        return 3


def main_entry() -> None:
    sys.exit(main())
