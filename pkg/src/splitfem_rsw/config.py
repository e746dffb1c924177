"""Run configuration: a single flat JSON document, schema-validated.

Unknown keys are rejected.  ``time.dt`` is either a positive number or the
string "auto" (resolved to the CFL-style default at run time, so the stored
configuration round-trips unchanged).  ``testcase.balance_fraction`` may be
null, in which case it resolves by test-case name (tc1/tc2 balanced, tc3
unbalanced).  The environment variable ``SPLITFEM_OUT_DIR`` overrides
``output.dir`` at load time.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass
from typing import Optional

import jsonschema

from .closures import ClosureKind, ClosureSpec
from .errors import ConfigError
from .integrators import SCHEMES
from .testcases import TESTCASE_NAMES, TestCaseConfig

OUT_DIR_ENV = "SPLITFEM_OUT_DIR"

DEFAULTS = {
    "mesh": {"n": 512, "length": 1.0},
    "params": {"g": 1.0, "f": 10.0, "h_mean": 1.0},
    "closure": {"height": "avg", "velocity": "avg"},
    "time": {"scheme": "rk4", "dt": "auto", "t_end_cycles": 10.0, "sample_every": 2048},
    "testcase": {
        "name": "tc1",
        "amplitude": 0.075,
        "width": 0.05,
        "center": 0.5,
        "balance_fraction": None,
    },
    "output": {"dir": "out", "prefix": "run"},
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "mesh": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 3},
                "length": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "g": {"type": "number", "exclusiveMinimum": 0},
                "f": {"type": "number"},
                "h_mean": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "closure": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "height": {"enum": ["gp1", "gp0", "avg"]},
                "velocity": {"enum": ["gp1", "gp0", "avg"]},
            },
        },
        "time": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "scheme": {"enum": list(SCHEMES)},
                "dt": {
                    "anyOf": [
                        {"type": "number", "exclusiveMinimum": 0},
                        {"const": "auto"},
                    ]
                },
                "t_end_cycles": {"type": "number", "exclusiveMinimum": 0},
                "sample_every": {"type": "integer", "minimum": 1},
            },
        },
        "testcase": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "name": {"enum": list(TESTCASE_NAMES)},
                "amplitude": {"type": "number"},
                "width": {"type": "number", "exclusiveMinimum": 0},
                "center": {"type": "number", "minimum": 0},
                "balance_fraction": {
                    "anyOf": [{"type": "number", "minimum": 0, "maximum": 1}, {"type": "null"}]
                },
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string", "minLength": 1},
                "prefix": {"type": "string", "minLength": 1},
            },
        },
    },
}


def _deep_merge(base: dict, overlay: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def parse_set_override(expr: str) -> dict:
    """Turn a dotted 'section.key=value' expression into a nested dict.

    Values parse as JSON where possible and fall back to plain strings, so
    --set time.dt=0.001 and --set closure.height=gp1 both work.
    """
    if "=" not in expr:
        raise ConfigError(f"--set expects key=value, got {expr!r}")
    path, raw = expr.split("=", 1)
    keys = path.strip().split(".")
    if not all(keys):
        raise ConfigError(f"--set has an empty key component in {expr!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node: dict = {keys[-1]: value}
    for key in reversed(keys[:-1]):
        node = {key: node}
    return node


@dataclass(frozen=True)
class RunConfig:
    """Validated, fully resolved run configuration."""

    n: int
    length: float
    g: float
    f: float
    h_mean: float
    closure: ClosureSpec
    scheme: str
    dt: Optional[float]  # None means "auto"
    t_end_cycles: float
    sample_every: int
    testcase_name: str
    testcase: TestCaseConfig
    out_dir: str
    prefix: str

    def as_dict(self) -> dict:
        """The canonical JSON form (round-trips through load_config)."""
        return {
            "mesh": {"n": self.n, "length": self.length},
            "params": {"g": self.g, "f": self.f, "h_mean": self.h_mean},
            "closure": {
                "height": self.closure.height.value,
                "velocity": self.closure.velocity.value,
            },
            "time": {
                "scheme": self.scheme,
                "dt": "auto" if self.dt is None else self.dt,
                "t_end_cycles": self.t_end_cycles,
                "sample_every": self.sample_every,
            },
            "testcase": {
                "name": self.testcase_name,
                "amplitude": self.testcase.amplitude,
                "width": self.testcase.width,
                "center": self.testcase.center,
                "balance_fraction": self.testcase.balance_fraction,
            },
            "output": {"dir": self.out_dir, "prefix": self.prefix},
        }


def _resolve_balance(name: str, value) -> float:
    if value is None:
        return 1.0 if name in ("tc1", "tc2") else 0.0
    if name in ("tc1", "tc2") and value != 1.0:
        raise ConfigError(f"{name} is the balanced case; balance_fraction must be 1")
    if name == "tc3" and not value < 1.0:
        raise ConfigError("tc3 requires balance_fraction < 1")
    return float(value)


def config_from_dict(data: dict) -> RunConfig:
    merged = _deep_merge(DEFAULTS, data)
    try:
        jsonschema.validate(merged, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path)
        raise ConfigError(f"invalid config at '{path}': {exc.message}") from exc

    closure = ClosureSpec(
        height=ClosureKind.from_string(merged["closure"]["height"]),
        velocity=ClosureKind.from_string(merged["closure"]["velocity"]),
    )
    n = merged["mesh"]["n"]
    if closure.needs_odd_n() and n % 2 == 0:
        raise ConfigError(
            f"GP0 closures are singular on even meshes; got n={n} with "
            f"closure {closure.label} (use an odd n, e.g. {n - 1})"
        )
    name = merged["testcase"]["name"]
    balance = _resolve_balance(name, merged["testcase"]["balance_fraction"])
    if name in ("tc1", "tc2") and merged["params"]["f"] == 0.0:
        raise ConfigError(f"{name} is geostrophically balanced and needs f != 0")
    if merged["params"]["h_mean"] + min(merged["testcase"]["amplitude"], 0.0) <= 0.0:
        raise ConfigError("testcase amplitude drives the height non-positive")

    dt = merged["time"]["dt"]
    out_dir = os.environ.get(OUT_DIR_ENV) or merged["output"]["dir"]
    return RunConfig(
        n=n,
        length=float(merged["mesh"]["length"]),
        g=float(merged["params"]["g"]),
        f=float(merged["params"]["f"]),
        h_mean=float(merged["params"]["h_mean"]),
        closure=closure,
        scheme=merged["time"]["scheme"],
        dt=None if dt == "auto" else float(dt),
        t_end_cycles=float(merged["time"]["t_end_cycles"]),
        sample_every=int(merged["time"]["sample_every"]),
        testcase_name=name,
        testcase=TestCaseConfig(
            amplitude=float(merged["testcase"]["amplitude"]),
            width=float(merged["testcase"]["width"]),
            center=float(merged["testcase"]["center"]),
            balance_fraction=balance,
        ),
        out_dir=out_dir,
        prefix=merged["output"]["prefix"],
    )


def load_config(path: Optional[str] = None, overrides: Optional[list[str]] = None) -> RunConfig:
    """Load a config file (defaults when omitted) and apply --set overrides."""
    data: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
    for expr in overrides or []:
        data = _deep_merge(data, parse_set_override(expr))
    return config_from_dict(data)
