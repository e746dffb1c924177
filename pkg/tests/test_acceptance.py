"""Acceptance harness: one test per exit criterion, each printing a PASS/FAIL
line with the measured numbers (run with -s to see them live).

The long runs live here on purpose; the whole module takes on the order of
ten minutes, dominated by the stiff double-P0 closure pair (its fastest
resolved mode needs dt ~ 1/n^2 for explicit stability) and by the n = 2^17
speedup benchmark.
"""

import json

import numpy as np
import pytest

from oracles import dense_deriv_ne, dense_mass_en, dense_mass_nn, dense_pv, random_meshes

from splitfem_rsw.cli import cmd_bench, converge_errors
from splitfem_rsw.closures import ClosureKind, ClosureSpec
from splitfem_rsw.config import config_from_dict
from splitfem_rsw.diagnostics import (
    dispersion_avg_analytic,
    dispersion_measured,
    linearized_wave_operator,
)
from splitfem_rsw.dynamics import diagnose_pv, rhs
from splitfem_rsw.integrators import TimeConfig, default_dt, run_simulation
from splitfem_rsw.mesh import ModelParams, State, build_mesh
from splitfem_rsw.operators import (
    assemble_deriv_en,
    assemble_mass_en,
    assemble_mass_nn,
    build_operators,
    solve_tridiag_circulant,
    solve_two_band,
)
from splitfem_rsw.testcases import TestCaseConfig, geostrophic_state

PARAMS = ModelParams(g=1.0, f=10.0, h_mean=1.0)
TC1 = TestCaseConfig()  # amplitude 0.075, width 0.05, balanced


def check(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def tc1_run(label, n, cycles, cfl=None, dt=None, sample_every=None):
    spec = ClosureSpec.from_label(label)
    mesh = build_mesh(n, 1.0)
    ops = build_operators(mesh)
    state = geostrophic_state(TC1, PARAMS, mesh)
    if dt is None:
        dt = default_dt(mesh, PARAMS, cfl=cfl if cfl is not None else 0.1)
    steps = int(np.ceil(cycles / dt))
    if sample_every is None:
        sample_every = max(1, steps // 200)
    return run_simulation(
        state, PARAMS, spec, TimeConfig(dt=dt), t_end=float(cycles), sample_every=sample_every, ops=ops
    )


def rel_variation(series, field):
    ref = getattr(series[0][2], field)
    return max(abs(getattr(rec, field) - ref) for _, _, rec in series) / abs(ref)


def test_c1_casimir_conservation():
    """TC1, 10 cycles, all five closure pairs: mass_e, mass_n, total_pv vary
    by at most 1e-11 relative.  The gp0-gp0 pair runs at its explicit
    stability limit (its stiffest mode, from the dispersion oracle, scales
    like n^2), every other pair at half the gravity-wave CFL."""
    runs = []
    for label in ("avg-avg", "gp1-gp1"):
        runs.append((label, 512, tc1_run(label, 512, 10.0, cfl=0.5)))
    for label in ("gp1-gp0", "gp0-gp1"):
        runs.append((label, 511, tc1_run(label, 511, 10.0, cfl=0.5)))
    # stiffness-limited step for the double-P0 pair
    mesh = build_mesh(511, 1.0)
    f0 = ModelParams(g=PARAMS.g, f=0.0, h_mean=PARAMS.h_mean)
    spec00 = ClosureSpec.from_label("gp0-gp0")
    op = linearized_wave_operator(spec00, mesh, f0)
    kmax = (511 - 1) // 2
    om_max = max(dispersion_measured(spec00, ki, mesh, f0, operator=op) for ki in (kmax - 1, kmax))
    runs.append(("gp0-gp0", 511, tc1_run("gp0-gp0", 511, 10.0, dt=2.7 / om_max, sample_every=25000)))

    worst = {}
    for label, n, series in runs:
        for field in ("mass_e", "mass_n", "total_pv"):
            worst[(label, field)] = rel_variation(series, field)
    peak = max(worst.values())
    detail = "; ".join(
        f"{label} n={n}: " + " ".join(f"{f.split('_')[-1]}={worst[(label, f)]:.1e}" for f in ("mass_e", "mass_n", "total_pv"))
        for label, n, _ in runs
    )
    check("C1 Casimir conservation <= 1e-11 (5 closure pairs, 10 cycles)", peak <= 1e-11, detail)


def test_c2_energy_enstrophy_near_conservation():
    """TC1 avg-avg, RK4 default dt: |dE| <= 1e-9 and |dPE| <= 1e-8 over 10
    cycles at n=512, and the errors fall with fitted slope >= 2.5 over
    n in {64,...,512} with dt proportional to dx."""
    ns = (64, 128, 256, 512)
    d_energy, d_enstrophy = {}, {}
    for n in ns:
        series = tc1_run("avg-avg", n, 10.0, cfl=0.1)
        d_energy[n] = rel_variation(series, "energy")
        d_enstrophy[n] = rel_variation(series, "enstrophy")
    slope = -np.polyfit(np.log(ns), np.log([d_energy[n] for n in ns]), 1)[0]
    ok = d_energy[512] <= 1e-9 and d_enstrophy[512] <= 1e-8 and slope >= 2.5
    check(
        "C2 energy/enstrophy near-conservation",
        ok,
        f"n=512: |dE|={d_energy[512]:.2e} (<=1e-9), |dPE|={d_enstrophy[512]:.2e} (<=1e-8); "
        f"energy slope {slope:.2f} (>=2.5) from " + ", ".join(f"{n}:{d_energy[n]:.1e}" for n in ns),
    )


def test_c3_time_integrator_attribution():
    """As stated: at n=256, halving dt must cut the 10-cycle energy error by
    at least 8x.  Unattainable for this discretization: the energy variation
    at n=256 is a bounded semi-discrete oscillation (the nodal PV flux
    pairing does not commute with multiplication by q), measured at the same
    ~5e-10 level for every stable dt up to the RK4 limit, while the RK4
    contribution itself scales at fifth order and sits far below it (verified
    on the rotation-free subsystem, where the averaged closure conserves the
    nodal-paired energy exactly and pure dt^5 scaling is observed).  The
    criterion is kept as stated and left red; criterion C2's resolution slope
    is the attribution that actually holds."""
    base = rel_variation(tc1_run("avg-avg", 256, 10.0, cfl=0.1), "energy")
    half = rel_variation(tc1_run("avg-avg", 256, 10.0, cfl=0.05), "energy")
    ratio = base / half
    check(
        "C3 time-integrator attribution (halving dt gives >= 8x)",
        ratio >= 8.0,
        f"|dE|(dt)={base:.2e}, |dE|(dt/2)={half:.2e}, ratio={ratio:.2f} "
        "(dt-independent semi-discrete floor; see decisions ledger)",
    )


LADDER = (63, 127, 255, 511, 1023)


@pytest.fixture(scope="module")
def convergence_tables():
    tables = {}
    for label in ("avg-avg", "gp1-gp0"):
        vel, hgt = label.split("-")
        cfg = config_from_dict({"closure": {"velocity": vel, "height": hgt}, "mesh": {"n": 63}})
        tables[label] = [converge_errors(cfg, n, 1.0) for n in LADDER]
    return tables


def fit_slope(rows, col):
    ns = np.array([r["n"] for r in rows], dtype=float)
    errs = np.array([r[col] for r in rows])
    return -np.polyfit(np.log(ns), np.log(errs), 1)[0]


def test_c4a_tc2_convergence_orders(convergence_tables):
    """Steady-state errors after one cycle: first order for the P0 fields,
    second order for the P1 fields, and the averaged closure is strictly less
    accurate than gp1-gp0 in every P1 field at every resolution.  The u
    columns measure self-excitation of an identically-zero field (no relative
    error exists) and are reported without order gates."""
    msgs = []
    ok = True
    for label, rows in convergence_tables.items():
        for col, target, tol in (
            ("l2_h_p0", 1.0, 0.2),
            ("l2_v_p0", 1.0, 0.2),
            ("l2_h_p1", 2.0, 0.3),
            ("l2_v_p1", 2.0, 0.3),
        ):
            s = fit_slope(rows, col)
            ok &= abs(s - target) <= tol
            msgs.append(f"{label}.{col[3:]}={s:.2f}")
    exceed = all(
        a[col] > g[col]
        for a, g in zip(convergence_tables["avg-avg"], convergence_tables["gp1-gp0"])
        for col in ("l2_h_p1", "l2_v_p1")
    )
    ok &= exceed
    check(
        "C4a TC2 convergence orders + avg-avg strictly above gp1-gp0 (P1)",
        ok,
        "slopes " + " ".join(msgs) + f"; strict-exceed={exceed}",
    )


def test_c4b_tc2_avg_error_ratio(convergence_tables):
    """As stated: avg-avg P1 errors at least 3x the gp1-gp0 ones.  The
    asymptotic ratio of the two closure-error constants for smooth fields
    measures ~2.9 (v) and ~2.2 (h) in this artifact, independent of profile,
    so the 3x bar is not attainable; kept as stated and left red."""
    ratios = [
        a[col] / g[col]
        for a, g in zip(convergence_tables["avg-avg"], convergence_tables["gp1-gp0"])
        for col in ("l2_h_p1", "l2_v_p1")
    ]
    check(
        "C4b avg-avg / gp1-gp0 P1 error ratio >= 3",
        min(ratios) >= 3.0,
        f"ratios min={min(ratios):.2f} max={max(ratios):.2f} "
        "(universal closure-constant ratio ~2.9; see decisions ledger)",
    )


def test_c5_dispersion():
    """Measured avg-avg branch matches sqrt(gH) sin(k dx)/dx within 1e-10 of
    the sqrt(gH)/dx scale at every resolvable k, vanishes at the Nyquist
    wavenumber, and the gp1-gp1 branch shares the spurious Nyquist zero."""
    n = 64
    mesh = build_mesh(n, 1.0)
    params = ModelParams(g=1.0, f=0.0, h_mean=1.0)
    dx = 1.0 / n
    scale = params.wave_speed / dx
    spec_avg = ClosureSpec.from_label("avg-avg")
    op = linearized_wave_operator(spec_avg, mesh, params)
    worst = 0.0
    for ki in range(n // 2 + 1):
        om = dispersion_measured(spec_avg, ki, mesh, params, operator=op)
        oma = dispersion_avg_analytic(2 * np.pi * ki, params.g, params.h_mean, dx)
        worst = max(worst, abs(om - oma))
    nyq_avg = dispersion_measured(spec_avg, n // 2, mesh, params, operator=op)
    nyq_gp1 = dispersion_measured(ClosureSpec.from_label("gp1-gp1"), n // 2, mesh, params)
    ok = worst <= 1e-10 * scale and nyq_avg <= 1e-12 and nyq_gp1 <= 1e-12
    check(
        "C5 dispersion: avg-avg matches closed form; Nyquist zeros",
        ok,
        f"max|measured-analytic|={worst:.2e} (<= {1e-10 * scale:.1e}); "
        f"omega(Nyquist): avg={nyq_avg:.1e}, gp1-gp1={nyq_gp1:.1e}",
    )


def test_c6_speedup_benchmark(tmp_path):
    """n = 2^17, 1000 steps: the averaged closure stage performs no linear
    solves, and the full step runs >= 1.5x faster than gp1-gp1."""
    cfg = config_from_dict({"output": {"dir": str(tmp_path), "prefix": "bench"}})
    path = cmd_bench(cfg, n_bench=2**17, steps=1000)
    report = json.loads(open(path, encoding="utf-8").read())
    ratio = report["full_step_speedup"]["gp1-gp1/avg-avg"]
    ratio_mixed = report["full_step_speedup"]["gp1-gp0/avg-avg"]
    solves = report["avg_closure_solve_count"]
    ok = solves == 0 and ratio >= 1.5
    check(
        "C6 speedup benchmark (n=2^17, 1000 steps)",
        ok,
        f"avg closure solves={solves}; full-step speedup gp1-gp1/avg-avg={ratio:.2f} "
        f"(>=1.5), gp1-gp0/avg-avg={ratio_mixed:.2f}; "
        f"closure-stage speedup gp1-gp1/avg-avg={report['closure_stage_speedup']['gp1-gp1/avg-avg']:.1f}",
    )


def test_c7_oracle_equivalence():
    """Assembled matrices match the quadrature oracle to 1e-14; banded solves
    match dense solves to 1e-12 at n <= 17; PV diagnosis matches dense
    assembly to 1e-12; the linearized averaged tendency matches the
    hand-derived centered stencils to 1e-13."""
    worst_asm = 0.0
    for mesh in random_meshes():
        worst_asm = max(
            worst_asm,
            np.max(np.abs(assemble_mass_nn(mesh).toarray() - dense_mass_nn(mesh))),
            np.max(np.abs(assemble_mass_en(mesh).toarray() - dense_mass_en(mesh))),
            np.max(np.abs(assemble_deriv_en(mesh).toarray() - dense_deriv_ne(mesh))),
        )

    rng = np.random.default_rng(77)
    worst_solve = 0.0
    for mesh in random_meshes(seed=5, n_range=(9, 13, 17)):
        a = assemble_mass_nn(mesh)
        b = rng.standard_normal(mesh.n)
        worst_solve = max(
            worst_solve, np.max(np.abs(solve_tridiag_circulant(a, b) - np.linalg.solve(a.toarray(), b)))
        )
    for n in (9, 17):
        mesh = build_mesh(n, 1.0)
        a = assemble_mass_en(mesh, element_rows=True)
        b = rng.standard_normal(n)
        worst_solve = max(worst_solve, np.max(np.abs(solve_two_band(a, b) - np.linalg.solve(a.toarray(), b))))

    mesh = build_mesh(9, 1.0)
    ops = build_operators(mesh)
    h = 1.0 + 0.4 * rng.uniform(size=9)
    v0 = rng.standard_normal(9)
    worst_pv = np.max(np.abs(diagnose_pv(h, v0, 3.7, ops) - dense_pv(mesh, h, v0, 3.7)))

    n = 32
    mesh = build_mesh(n, 1.0)
    ops = build_operators(mesh)
    params = ModelParams(g=1.0, f=0.0, h_mean=1.0)
    spec = ClosureSpec(height=ClosureKind.AVG, velocity=ClosureKind.AVG)
    du_in = rng.standard_normal(n)
    dh_in = rng.standard_normal(n)
    eps = 0.2
    zero = np.zeros(n)
    base = np.full(n, params.h_mean)
    plus = rhs(State(mesh, eps * du_in, zero, base + eps * dh_in), params, spec, ops)
    minus = rhs(State(mesh, -eps * du_in, zero, base - eps * dh_in), params, spec, ops)
    jac_du = (plus.du - minus.du) / (2 * eps)
    jac_dh = (plus.dh - minus.dh) / (2 * eps)
    dx = 1.0 / n
    sten_du = -(params.g / (2 * dx)) * (np.roll(dh_in, -1) - np.roll(dh_in, 1))
    sten_dh = -(params.h_mean / (2 * dx)) * (np.roll(du_in, -1) - np.roll(du_in, 1))
    scale = max(np.max(np.abs(sten_du)), np.max(np.abs(sten_dh)))
    worst_sten = max(np.max(np.abs(jac_du - sten_du)), np.max(np.abs(jac_dh - sten_dh))) / scale

    ok = worst_asm <= 1e-14 and worst_solve <= 1e-12 and worst_pv <= 1e-12 and worst_sten <= 1e-13
    check(
        "C7 oracle equivalence",
        ok,
        f"assembly={worst_asm:.1e} (<=1e-14), solves={worst_solve:.1e} (<=1e-12), "
        f"pv={worst_pv:.1e} (<=1e-12), stencil={worst_sten:.1e} (<=1e-13)",
    )
