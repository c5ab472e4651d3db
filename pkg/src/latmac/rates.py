"""Achievable rate pairs for decoding integer combinations over a two-user
Gaussian MAC, plus the time-sharing hull and reference baselines.

Rates are in bits per channel use at per-user power ``snr`` and unit noise.
Sweeping the scaling coefficient ``alpha`` with either user leading traces
two boundary branches; the branch for a lead user touches the single-user
outer bound exactly at the MMSE coefficient ``snr / (1 + snr)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "RateRegionPoint",
    "RateRegion",
    "alpha_mmse",
    "outer_bound",
    "cf_rate",
    "achievable_pair",
    "tangency_points",
    "default_alpha_grid",
    "region_boundary",
    "time_sharing_hull",
    "two_way_relay_region",
]


@dataclass(frozen=True)
class RateRegionPoint:
    r1: float
    r2: float
    alpha: float | None
    scheme: str
    r1_clamped: bool = False
    r2_clamped: bool = False


def alpha_mmse(snr: float) -> float:
    """Scaling coefficient minimizing the effective noise of one user."""
    _check_snr(snr)
    return snr / (1.0 + snr)


def outer_bound(snr: float) -> float:
    """Single-user capacity; no decodable rate can exceed it."""
    _check_snr(snr)
    return 0.5 * math.log2(1.0 + snr)


def cf_rate(snr: float) -> float:
    """Symmetric rate of decoding the codeword sum directly; the optimal
    coefficient against noise ``(alpha-1)(x1+x2) + alpha z`` gives
    ``log2(1/2 + snr) / 2``, which goes negative below snr = 1/2."""
    _check_snr(snr)
    return 0.5 * math.log2(0.5 + snr)


def _check_snr(snr: float) -> None:
    if not snr > 0:
        raise ValueError("snr must be positive")


def achievable_pair(alpha: float, snr: float, lead: int = 1) -> RateRegionPoint:
    """Rate pair achieved at scaling ``alpha`` with one user leading.

    The lead user gets ``log2(snr / den) / 2`` and the other
    ``log2(alpha^2 snr / den) / 2`` with ``den = (alpha-1)^2 snr +
    alpha^2``.  Negative raw rates clamp to zero with a flag.
    """
    _check_snr(snr)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if lead not in (1, 2):
        raise ValueError("lead must be 1 or 2")
    den = (alpha - 1.0) ** 2 * snr + alpha * alpha
    r_lead = 0.5 * math.log2(snr / den)
    r_other = 0.5 * math.log2(alpha * alpha * snr / den) if alpha > 0 else -math.inf
    lead_clamped = r_lead < 0.0
    other_clamped = r_other < 0.0
    r_lead = max(r_lead, 0.0)
    r_other = max(r_other, 0.0)
    if lead == 1:
        return RateRegionPoint(
            r_lead, r_other, alpha, "T1-region", lead_clamped, other_clamped
        )
    return RateRegionPoint(
        r_other, r_lead, alpha, "T2-region", other_clamped, lead_clamped
    )


def tangency_points(snr: float) -> tuple[RateRegionPoint, RateRegionPoint]:
    """The two boundary points sitting on the outer bound.

    At ``alpha = snr/(1+snr)`` the lead rate is the full single-user
    capacity and the other rate is ``log2(snr^2 / (1+snr)) / 2``.
    """
    a = alpha_mmse(snr)
    lead_rate = outer_bound(snr)
    other_rate = 0.5 * math.log2(snr * snr / (1.0 + snr))
    pt_a = achievable_pair(a, snr, lead=1)
    pt_b = achievable_pair(a, snr, lead=2)
    if not (
        math.isclose(pt_a.r1, max(lead_rate, 0.0), rel_tol=0, abs_tol=1e-12)
        and math.isclose(pt_a.r2, max(other_rate, 0.0), rel_tol=0, abs_tol=1e-12)
    ):
        raise AssertionError("tangency formulas disagree with the sweep")
    return pt_a, pt_b


def default_alpha_grid(snr: float, size: int = 512) -> np.ndarray:
    """Uniform grid on (0, 1] with the MMSE coefficient spliced in, so the
    tangency points appear at any resolution."""
    if size < 1:
        raise ValueError("size must be at least 1")
    grid = np.linspace(1.0 / size, 1.0, size)
    return np.unique(np.concatenate([grid, [alpha_mmse(snr)]]))


def region_boundary(snr: float, alphas=None) -> list[RateRegionPoint]:
    """Pareto frontier of both lead sweeps, sorted by increasing ``r1``."""
    if alphas is None:
        alphas = default_alpha_grid(snr)
    pts = [achievable_pair(float(a), snr, lead) for a in alphas for lead in (1, 2)]
    return _pareto(pts)


def _pareto(points: list[RateRegionPoint]) -> list[RateRegionPoint]:
    ordered = sorted(points, key=lambda p: (-p.r1, -p.r2))
    kept: list[RateRegionPoint] = []
    best_r2 = -math.inf
    for p in ordered:
        if p.r2 > best_r2:
            kept.append(p)
            best_r2 = p.r2
    kept.reverse()
    return kept


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def time_sharing_hull(points: list[RateRegionPoint]) -> list[RateRegionPoint]:
    """Upper boundary of the convex hull of the points, their axis
    projections and the origin: everything reachable by time sharing.

    Vertices come back in increasing ``r1``, from ``(0, max r2)`` to
    ``(max r1, .)``; collinear interior points are dropped.
    """
    if not points:
        raise ValueError("need at least one point")
    tagged: dict[tuple[float, float], RateRegionPoint] = {}
    raw: list[tuple[float, float]] = [(0.0, 0.0)]
    for p in points:
        raw.append((p.r1, p.r2))
        raw.append((p.r1, 0.0))
        raw.append((0.0, p.r2))
        tagged.setdefault((p.r1, p.r2), p)
    best_y: dict[float, float] = {}
    for x, y in raw:
        if y > best_y.get(x, -math.inf):
            best_y[x] = y
    cols = sorted(best_y.items())
    hull: list[tuple[float, float]] = []
    for pt in cols:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], pt) >= 0.0:
            hull.pop()
        hull.append(pt)
    out = []
    for x, y in hull:
        src = tagged.get((x, y))
        alpha = src.alpha if src is not None else None
        out.append(RateRegionPoint(x, y, alpha, "hull"))
    return out


@dataclass(frozen=True)
class RateRegion:
    snr: float
    alpha_star: float
    outer: float
    cf: float
    boundary: list[RateRegionPoint]
    hull: list[RateRegionPoint]
    hull_cf: list[RateRegionPoint] | None


def two_way_relay_region(snr: float, alphas=None, include_cf: bool = False) -> RateRegion:
    """Boundary sweep plus its time-sharing hull for one snr.

    With ``include_cf`` a second hull also admits the symmetric
    sum-decoding corner (when its rate is positive), which can only grow
    the region.
    """
    boundary = region_boundary(snr, alphas)
    hull = time_sharing_hull(boundary)
    cf = cf_rate(snr)
    hull_cf = None
    if include_cf:
        pts = list(boundary)
        if cf > 0:
            pts.append(RateRegionPoint(cf, cf, None, "CF-baseline"))
        hull_cf = [replace(p, scheme="hull-cf") for p in time_sharing_hull(pts)]
    return RateRegion(
        snr=snr,
        alpha_star=alpha_mmse(snr),
        outer=outer_bound(snr),
        cf=cf,
        boundary=boundary,
        hull=hull,
        hull_cf=hull_cf,
    )
