"""The five figure kinds rendered from solver CSVs.

All rendering is deterministic: fixed SVG hash salt, no embedded dates, and
a pinned style.  Each plot() call writes both an SVG and a PNG next to each
other and returns the list of written paths.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .loaders import SchemaError, load_converge, load_diag, load_dispersion, load_fields

KINDS = ("dispersion", "timeseries", "fields", "convergence", "shock_compare")

matplotlib.rcParams["svg.hashsalt"] = "rsw-plots"
matplotlib.rcParams["figure.dpi"] = 110


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple
    output: str  # path without extension; .svg and .png are appended
    labels: tuple = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        for path in self.inputs:
            if not os.path.exists(path):
                raise FileNotFoundError(f"input CSV does not exist: {path}")


def _save(fig, output: str) -> list[str]:
    os.makedirs(os.path.dirname(os.path.abspath(output)), exist_ok=True)
    paths = []
    for ext in ("svg", "png"):
        path = f"{output}.{ext}"
        fig.savefig(path, metadata={"Date": None} if ext == "svg" else None)
        paths.append(path)
    plt.close(fig)
    return paths


def spectral_centroid(values: np.ndarray) -> float:
    """Power-weighted mean wavenumber index of the detrended signal."""
    y = np.asarray(values, dtype=float)
    y = y - y.mean()
    power = np.abs(np.fft.rfft(y))[1:] ** 2  # drop the mean bin
    if power.sum() == 0.0:
        return 0.0
    k = np.arange(1, power.size + 1)
    return float(np.sum(k * power) / np.sum(power))


def highpass(values: np.ndarray, width: int) -> np.ndarray:
    """Remove the running (periodic) mean over `width` samples, keeping the
    short trailing waves while dropping the bump and front profile."""
    y = np.asarray(values, dtype=float)
    kernel = np.ones(width) / width
    smooth = np.convolve(np.pad(y, width, mode="wrap"), kernel, mode="same")[width:-width]
    return y - smooth


def trailing_window(x: np.ndarray, highpassed, center: float, threshold: float = 0.12):
    """Common wave-activity window right of the release point.

    The window spans wherever any of the high-passed signals carries more
    than `threshold` of the peak short-wave amplitude, so schemes with
    differently placed fronts are compared over the same stretch.
    """
    x = np.asarray(x)
    activity = np.max(np.abs(np.asarray(highpassed)), axis=0)
    activity[x <= center] = 0.0
    if activity.max() == 0.0:
        raise ValueError("no wave activity right of the release point")
    on = np.where(activity > threshold * activity.max())[0]
    lo, hi = float(x[on[0]]), float(x[on[-1]])
    return (x >= lo) & (x <= hi), (lo, hi)


def _plot_dispersion(spec: FigureSpec) -> list[str]:
    data = load_dispersion(spec.inputs[0])
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.plot(data["k"], data["omega_continuum"], "k-", lw=1.4, label="continuum sqrt(gH) k")
    ax.plot(data["k"], data["omega_avg_closed_form"], "m--", lw=1.2, label="avg closed form")
    for col in data["_measured_columns"]:
        label = col.replace("omega_measured_", "")
        ax.plot(data["k"], data[col], marker=".", ms=4, lw=0.9, label=f"measured {label}")
    ax.set_xlabel("wavenumber k")
    ax.set_ylabel("angular frequency")
    ax.set_title("discrete dispersion relations")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, spec.output)


def _plot_timeseries(spec: FigureSpec) -> list[str]:
    data = load_diag(spec.inputs[0])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    floor = 1e-17
    for name, style in (
        ("energy", "-"),
        ("enstrophy", "-"),
        ("mass_e", "--"),
        ("mass_n", "--"),
        ("total_pv", ":"),
    ):
        q = data[name]
        rel = np.abs(q - q[0]) / max(abs(q[0]), floor)
        ax.semilogy(data["t"], np.maximum(rel, floor), style, lw=1.1, label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("relative deviation from t=0")
    ax.set_title("conserved-quantity time series")
    ax.set_ylim(bottom=floor)
    ax.legend(fontsize=8, ncol=2)
    ax.grid(alpha=0.3)
    return _save(fig, spec.output)


def _plot_fields(spec: FigureSpec) -> list[str]:
    data = load_fields(spec.inputs[0])
    initial = load_fields(spec.inputs[1]) if len(spec.inputs) > 1 else None
    fig, axes = plt.subplots(2, 2, figsize=(8.4, 5.6), sharex=True)
    panels = (("h0", "height h0"), ("u0", "velocity u0"), ("v0", "velocity v0"), ("q", "potential vorticity q"))
    for ax, (col, title) in zip(axes.ravel(), panels):
        if initial is not None:
            ax.plot(initial["x_node"], initial[col], "k-.", lw=0.9, label="initial")
        ax.plot(data["x_node"], data[col], "-", lw=1.1, label="final")
        ax.set_title(title, fontsize=9)
        ax.grid(alpha=0.3)
    axes[0, 0].legend(fontsize=8)
    for ax in axes[1]:
        ax.set_xlabel("x")
    fig.suptitle("nodal fields")
    fig.tight_layout()
    return _save(fig, spec.output)


def _plot_convergence(spec: FigureSpec) -> list[str]:
    fig, ax = plt.subplots(figsize=(6.0, 4.4))
    markers = ("o", "s", "^", "v")
    labels = spec.labels or tuple(os.path.basename(p) for p in spec.inputs)
    n_all = []
    for path, label, marker in zip(spec.inputs, labels, markers):
        data = load_converge(path)
        n = data["n"]
        n_all.append(n)
        for col, ls in (("l2_h_p0", "--"), ("l2_h_p1", "-"), ("l2_v_p0", "--"), ("l2_v_p1", "-")):
            ax.loglog(n, data[col], ls, marker=marker, ms=4, lw=1.0, label=f"{label} {col[3:]}")
    n = np.concatenate(n_all)
    nref = np.array([n.min(), n.max()])
    anchor = load_converge(spec.inputs[0])
    a1 = anchor["l2_h_p0"][0] * 1.6
    a2 = anchor["l2_h_p1"][0] * 1.6
    ax.loglog(nref, a1 * (nref / nref[0]) ** -1.0, "k:", lw=0.8)
    ax.annotate("slope 1", (nref[1], a1 * (nref[1] / nref[0]) ** -1.0), fontsize=8)
    ax.loglog(nref, a2 * (nref / nref[0]) ** -2.0, "k:", lw=0.8)
    ax.annotate("slope 2", (nref[1], a2 * (nref[1] / nref[0]) ** -2.0), fontsize=8)
    ax.set_xlabel("elements N")
    ax.set_ylabel("L2 error")
    ax.set_title("steady-state convergence")
    ax.legend(fontsize=7, ncol=2)
    ax.grid(alpha=0.3, which="both")
    return _save(fig, spec.output)


def _plot_shock_compare(spec: FigureSpec) -> list[str]:
    if len(spec.inputs) != 2:
        raise ValueError("shock_compare needs exactly two fields CSVs")
    labels = spec.labels or ("scheme A", "scheme B")
    sets = [load_fields(p) for p in spec.inputs]
    x = sets[0]["x_node"]
    # bump release point: the runs share the default centered initial bump
    center = float(np.median(x))
    width = max(5, x.size // 32)
    hp = [highpass(d["h0"], width) for d in sets]
    mask, (lo, hi) = trailing_window(x, hp, center)
    fig, axes = plt.subplots(2, 1, figsize=(7.2, 5.6), sharex=True)
    centroids = {}
    for data, wave, label, color in zip(sets, hp, labels, ("tab:purple", "tab:green")):
        axes[0].plot(data["x_node"], data["h0"], color=color, lw=1.0, label=label)
        axes[1].plot(data["x_node"], data["u0"], color=color, lw=1.0, label=label)
        centroids[label] = spectral_centroid(wave[mask])
    for ax in axes:
        ax.axvspan(lo, hi, color="0.92")
        ax.grid(alpha=0.3)
    axes[0].set_ylabel("h0")
    axes[1].set_ylabel("u0")
    axes[1].set_xlabel("x")
    note = ", ".join(f"{k}: {v:.1f}" for k, v in centroids.items())
    axes[0].set_title(f"wave fronts; trailing-window spectral centroid [{note}]", fontsize=9)
    axes[0].legend(fontsize=8)
    paths = _save(fig, spec.output)
    sidecar = f"{spec.output}_centroids.json"
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump({"window": [lo, hi], "spectral_centroid": centroids}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths + [sidecar]


_RENDERERS = {
    "dispersion": _plot_dispersion,
    "timeseries": _plot_timeseries,
    "fields": _plot_fields,
    "convergence": _plot_convergence,
    "shock_compare": _plot_shock_compare,
}


def plot(spec: FigureSpec) -> list[str]:
    """Render one figure; returns the written file paths (svg, png, extras)."""
    try:
        return _RENDERERS[spec.kind](spec)
    except SchemaError:
        raise
