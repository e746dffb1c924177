"""Schema-checked loaders for the solver's CSV files."""

from __future__ import annotations

import csv

import numpy as np

DIAG_COLUMNS = ["t", "energy", "mass_e", "mass_n", "total_pv", "enstrophy"]
FIELDS_COLUMNS = ["x_node", "h0", "u0", "v0", "q", "x_elem", "h_e", "u_e", "v_e"]
DISPERSION_FIXED = ["k", "omega_continuum", "omega_avg_closed_form"]
CONVERGE_FIXED = ["n", "l2_h_p0", "l2_u_p0", "l2_v_p0", "l2_h_p1", "l2_u_p1", "l2_v_p1"]


class SchemaError(ValueError):
    """A CSV file does not match the expected solver output schema."""


def _read_csv(path: str):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        rows = [row for row in reader if row]
    return header, rows


def _require(path: str, header: list[str], required: list[str]) -> None:
    missing = [col for col in required if col not in header]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")


def _columns(header, rows) -> dict:
    data = np.array([[float(v) for v in row] for row in rows])
    return {name: data[:, i] for i, name in enumerate(header)}


def load_diag(path: str) -> dict:
    header, rows = _read_csv(path)
    _require(path, header, DIAG_COLUMNS)
    return _columns(header, rows)


def load_fields(path: str) -> dict:
    header, rows = _read_csv(path)
    _require(path, header, FIELDS_COLUMNS)
    return _columns(header, rows)


def load_dispersion(path: str) -> dict:
    header, rows = _read_csv(path)
    _require(path, header, DISPERSION_FIXED)
    measured = [c for c in header if c.startswith("omega_measured_")]
    if not measured:
        raise SchemaError(f"{path}: missing column(s) omega_measured_<spec>")
    out = _columns(header, rows)
    out["_measured_columns"] = measured
    return out


def load_converge(path: str) -> dict:
    header, rows = _read_csv(path)
    _require(path, header, CONVERGE_FIXED)
    # slope columns may hold "nan" strings; float() handles them
    return _columns(header, rows)
