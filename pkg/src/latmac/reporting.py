"""Delimited-text reports and the static figures rendered next to them.

Tables are comma-separated with ``#``-prefixed metadata lines on top, so
they load with ``comments="#"`` in numpy or ``comment="#"`` in pandas.
Formatting is locale-free and deterministic: the same data produces the
same bytes.  Figures go through the Agg backend straight to files; no
display is ever opened.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .rates import RateRegion, tangency_points

__all__ = [
    "fmt",
    "write_table",
    "write_json",
    "region_rows",
    "render_region_figure",
    "render_sim_figure",
    "render_relay_figure",
]

_REGION_COLUMNS = ("scheme", "alpha", "r1", "r2", "clamped")


def fmt(value) -> str:
    """One canonical text form per value: bools as 1/0, None empty,
    floats at 9 significant digits."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def write_table(path, meta: dict, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write one delimited table: metadata comments, header, data rows."""
    lines = [f"# {key}={fmt(val)}" for key, val in meta.items()]
    lines.append(",".join(columns))
    for row in rows:
        cells = [fmt(v) for v in row]
        if len(cells) != len(columns):
            raise ValueError("row width does not match the header")
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _square_rows(scheme: str, side: float):
    # the achievable square [0, side]^2 drawn as its two outer edges
    return [
        (scheme, None, 0.0, side, False),
        (scheme, None, side, side, False),
        (scheme, None, side, 0.0, False),
    ]


def region_rows(region: RateRegion, include_outer: bool = True) -> tuple[Sequence[str], list[tuple]]:
    """Flatten one rate region into (columns, rows) for ``write_table``."""
    rows = []
    for p in region.boundary:
        rows.append((p.scheme, p.alpha, p.r1, p.r2, p.r1_clamped or p.r2_clamped))
    for p in region.hull:
        rows.append((p.scheme, p.alpha, p.r1, p.r2, False))
    if region.hull_cf is not None:
        for p in region.hull_cf:
            rows.append((p.scheme, p.alpha, p.r1, p.r2, False))
        if region.cf > 0:
            rows.extend(_square_rows("CF-baseline", region.cf))
    if include_outer:
        rows.extend(_square_rows("outer-bound", region.outer))
    pt_a, pt_b = tangency_points(region.snr)
    rows.append(("point-A", pt_a.alpha, pt_a.r1, pt_a.r2, pt_a.r1_clamped or pt_a.r2_clamped))
    rows.append(("point-B", pt_b.alpha, pt_b.r1, pt_b.r2, pt_b.r1_clamped or pt_b.r2_clamped))
    return _REGION_COLUMNS, rows


def render_region_figure(path, region: RateRegion) -> None:
    """Rate-pair picture for one snr: sweeps, hulls, bounds, corner points."""
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    b1 = [(p.r1, p.r2) for p in region.boundary if p.scheme == "T1-region"]
    b2 = [(p.r1, p.r2) for p in region.boundary if p.scheme == "T2-region"]
    for pts, label, color in ((b1, "lead-1 sweep", "tab:blue"), (b2, "lead-2 sweep", "tab:orange")):
        if pts:
            xs, ys = zip(*pts)
            ax.plot(xs, ys, ".", ms=3, color=color, label=label)
    hx = [p.r1 for p in region.hull]
    hy = [p.r2 for p in region.hull]
    ax.plot(hx, hy, "-", color="tab:green", label="time-sharing hull")
    if region.hull_cf is not None:
        ax.plot(
            [p.r1 for p in region.hull_cf],
            [p.r2 for p in region.hull_cf],
            "--",
            color="tab:red",
            label="hull with sum decoding",
        )
        if region.cf > 0:
            c = region.cf
            ax.plot([0, c, c], [c, c, 0], ":", color="tab:red", lw=1)
    c = region.outer
    ax.plot([0, c, c], [c, c, 0], "-", color="black", lw=1, label="outer bound")
    pt_a, pt_b = tangency_points(region.snr)
    ax.plot([pt_a.r1, pt_b.r1], [pt_a.r2, pt_b.r2], "k*", ms=10, label="tangency points")
    ax.set_xlabel("rate of user 1 (bits/use)")
    ax.set_ylabel("rate of user 2 (bits/use)")
    ax.set_title(f"combination-decoding rate region, snr = {region.snr:g}")
    ax.legend(loc="lower left", fontsize=8)
    ax.set_xlim(left=0)
    ax.set_ylim(bottom=0)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_sim_figure(path, rows: list[dict]) -> None:
    """Error rate vs snr with confidence whiskers, one curve per run set."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    xs = [r["snr"] for r in rows]
    ys = [r["p_e"] for r in rows]
    lo = [r["p_e"] - r["ci_lo"] for r in rows]
    hi = [r["ci_hi"] - r["p_e"] for r in rows]
    ax.errorbar(xs, ys, yerr=[lo, hi], fmt="o-", capsize=3)
    ax.set_xlabel("snr")
    ax.set_ylabel("combination error rate")
    if all(y > 0 for y in ys):
        ax.set_yscale("log")
    if min(xs) > 0 and max(xs) / max(min(xs), 1e-12) >= 10:
        ax.set_xscale("log")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_relay_figure(path, rows: list[dict]) -> None:
    """Uplink vs end-to-end error rates across snr."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    xs = [r["snr"] for r in rows]
    up = [r["uplink_errors"] / r["trials"] for r in rows]
    ee = [r["e2e_errors"] / r["trials"] for r in rows]
    ax.plot(xs, up, "o-", label="uplink")
    ax.plot(xs, ee, "s--", label="end to end")
    ax.set_xlabel("snr")
    ax.set_ylabel("error rate")
    if all(v > 0 for v in up + ee):
        ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
