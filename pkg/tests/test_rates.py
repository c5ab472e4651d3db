"""Rate formulas, the boundary sweep, and the time-sharing hull."""

import math

import numpy as np
import pytest

from latmac.rates import (
    RateRegionPoint,
    achievable_pair,
    alpha_mmse,
    cf_rate,
    default_alpha_grid,
    outer_bound,
    region_boundary,
    tangency_points,
    time_sharing_hull,
    two_way_relay_region,
)


def hull_at(hull, x):
    """Piecewise-linear interpolation of the hull's upper boundary."""
    xs = [p.r1 for p in hull]
    ys = [p.r2 for p in hull]
    return float(np.interp(x, xs, ys))


def diagonal_crossing(hull):
    """Rate at which the hull's upper boundary meets r1 == r2."""
    lo, hi = 0.0, max(p.r1 for p in hull)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hull_at(hull, mid) >= mid:
            lo = mid
        else:
            hi = mid
    return lo


class TestScalars:
    def test_alpha_mmse_values(self):
        assert alpha_mmse(5.0) == pytest.approx(5.0 / 6.0, rel=1e-15)
        assert alpha_mmse(1.0) == pytest.approx(0.5, rel=1e-15)

    def test_alpha_mmse_minimizes_effective_noise(self):
        snr = 3.7
        a_star = alpha_mmse(snr)
        den = lambda a: (a - 1.0) ** 2 * snr + a * a
        grid = np.linspace(0.0, 1.0, 4001)
        assert den(a_star) <= min(den(a) for a in grid) + 1e-12

    def test_outer_bound_values(self):
        assert outer_bound(3.0) == pytest.approx(1.0, abs=1e-15)
        assert outer_bound(1.0) == pytest.approx(0.5, abs=1e-15)

    def test_cf_rate_values(self):
        assert cf_rate(5.0) == pytest.approx(0.5 * math.log2(5.5), abs=1e-15)
        assert cf_rate(5.0) == pytest.approx(1.2297158, abs=1e-7)
        assert cf_rate(0.5) == pytest.approx(0.0, abs=1e-15)

    def test_cf_below_outer_everywhere(self):
        # the sum-decoding baseline loses at most half a bit and never wins
        for snr in np.logspace(-2, 3, 40):
            gap = outer_bound(float(snr)) - cf_rate(float(snr))
            assert 0.0 < gap < 0.5

    def test_rejects_nonpositive_snr(self):
        for fn in (alpha_mmse, outer_bound, cf_rate):
            with pytest.raises(ValueError):
                fn(0.0)


class TestAchievablePair:
    def test_unit_alpha_symmetric_point(self):
        p = achievable_pair(1.0, 5.0)
        want = 0.5 * math.log2(5.0)
        assert p.r1 == pytest.approx(want, abs=1e-12)
        assert p.r2 == pytest.approx(want, abs=1e-12)
        assert p.r1 == pytest.approx(1.160964, abs=1e-6)
        assert not (p.r1_clamped or p.r2_clamped)

    def test_mmse_alpha_touches_outer_bound(self):
        p = achievable_pair(5.0 / 6.0, 5.0)
        assert p.r1 == pytest.approx(outer_bound(5.0), abs=1e-12)
        assert p.r2 == pytest.approx(0.5 * math.log2(25.0 / 6.0), abs=1e-12)

    def test_small_alpha_clamps_other_rate(self):
        p = achievable_pair(0.4, 5.0)
        den = 0.36 * 5.0 + 0.16
        assert den == pytest.approx(1.96, rel=1e-12)
        assert p.r1 == pytest.approx(0.5 * math.log2(5.0 / 1.96), abs=1e-12)
        assert p.r2 == 0.0
        assert p.r2_clamped and not p.r1_clamped

    def test_zero_alpha_clamps(self):
        # den = snr at alpha = 0, so the lead rate is a true zero while the
        # trailing rate diverges and clamps
        p = achievable_pair(0.0, 5.0)
        assert p.r1 == 0.0 and not p.r1_clamped
        assert p.r2 == 0.0 and p.r2_clamped

    def test_lead_two_mirrors_lead_one(self):
        for a in (0.3, 0.7, 5.0 / 6.0, 1.0):
            p1 = achievable_pair(a, 5.0, lead=1)
            p2 = achievable_pair(a, 5.0, lead=2)
            assert (p1.r1, p1.r2) == (p2.r2, p2.r1)
            assert p1.scheme == "T1-region" and p2.scheme == "T2-region"

    def test_rate_offset_identity(self):
        # whenever nothing clamps, the trailing rate sits exactly
        # log2(alpha) below the lead rate
        for a in (0.6, 0.8, 0.95, 1.0):
            p = achievable_pair(a, 20.0)
            assert p.r2 - p.r1 == pytest.approx(math.log2(a), abs=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            achievable_pair(1.5, 5.0)
        with pytest.raises(ValueError):
            achievable_pair(-0.1, 5.0)
        with pytest.raises(ValueError):
            achievable_pair(0.5, -1.0)
        with pytest.raises(ValueError):
            achievable_pair(0.5, 5.0, lead=0)


class TestTangency:
    def test_internal_cross_check_passes(self):
        for snr in (0.7, 2.0, 5.0, 6.0, 100.0):
            a, b = tangency_points(snr)
            assert a.r1 == pytest.approx(outer_bound(snr), abs=1e-12)
            assert (a.r1, a.r2) == (b.r2, b.r1)
            assert a.alpha == pytest.approx(alpha_mmse(snr), rel=1e-15)

    def test_snr_five_decimals(self):
        a, _ = tangency_points(5.0)
        assert a.r1 == pytest.approx(1.2924813, abs=1e-7)
        assert a.r2 == pytest.approx(0.5 * math.log2(25.0 / 6.0), abs=1e-12)

    def test_low_snr_clamps_trailing_rate(self):
        a, b = tangency_points(1.0)
        assert a.r1 == pytest.approx(0.5, abs=1e-12)
        assert a.r2 == 0.0 and a.r2_clamped
        assert b.r1 == 0.0 and b.r1_clamped


class TestGridAndBoundary:
    def test_grid_contains_mmse_alpha(self):
        for size in (1, 2, 64, 512):
            grid = default_alpha_grid(5.0, size)
            assert np.isclose(grid, alpha_mmse(5.0)).any()
            assert grid.min() > 0.0 and grid.max() == 1.0

    def test_grid_size_validation(self):
        with pytest.raises(ValueError):
            default_alpha_grid(5.0, 0)

    def test_boundary_contains_both_tangency_points(self):
        front = region_boundary(5.0)
        a, b = tangency_points(5.0)
        pairs = {(round(p.r1, 10), round(p.r2, 10)) for p in front}
        assert (round(a.r1, 10), round(a.r2, 10)) in pairs
        assert (round(b.r1, 10), round(b.r2, 10)) in pairs

    def test_boundary_sorted_and_pareto(self):
        front = region_boundary(5.0)
        for p, q in zip(front, front[1:]):
            assert q.r1 > p.r1
            assert q.r2 < p.r2

    def test_boundary_inside_outer_square(self):
        c = outer_bound(5.0)
        for p in region_boundary(5.0):
            assert p.r1 <= c + 1e-12
            assert p.r2 <= c + 1e-12

    def test_boundary_symmetric_under_user_swap(self):
        front = region_boundary(5.0)
        pairs = {(round(p.r1, 10), round(p.r2, 10)) for p in front}
        assert pairs == {(b, a) for a, b in pairs}

    def test_finer_grid_refines_the_front(self):
        coarse = region_boundary(5.0, default_alpha_grid(5.0, 64))
        fine = region_boundary(5.0, default_alpha_grid(5.0, 128))
        fine_pairs = {(round(p.r1, 10), round(p.r2, 10)) for p in fine}
        for p in coarse:
            assert (round(p.r1, 10), round(p.r2, 10)) in fine_pairs

    def test_single_point_grid(self):
        front = region_boundary(5.0, [alpha_mmse(5.0)])
        assert len(front) == 2
        a, b = tangency_points(5.0)
        assert front[0].r1 == pytest.approx(b.r1, abs=1e-12)
        assert front[1].r1 == pytest.approx(a.r1, abs=1e-12)


class TestHull:
    def test_single_point(self):
        hull = time_sharing_hull([RateRegionPoint(2.0, 1.0, 0.9, "T1-region")])
        assert [(p.r1, p.r2) for p in hull] == [(0.0, 1.0), (2.0, 1.0)]
        assert hull[1].alpha == 0.9
        assert all(p.scheme == "hull" for p in hull)

    def test_collinear_points_collapse(self):
        pts = [
            RateRegionPoint(0.0, 2.0, None, "x"),
            RateRegionPoint(1.0, 1.0, None, "x"),
            RateRegionPoint(2.0, 0.0, None, "x"),
        ]
        hull = time_sharing_hull(pts)
        assert [(p.r1, p.r2) for p in hull] == [(0.0, 2.0), (2.0, 0.0)]

    def test_dominated_point_dropped(self):
        pts = [
            RateRegionPoint(0.0, 2.0, None, "x"),
            RateRegionPoint(0.5, 0.5, None, "x"),
            RateRegionPoint(2.0, 0.0, None, "x"),
        ]
        hull = time_sharing_hull(pts)
        assert [(p.r1, p.r2) for p in hull] == [(0.0, 2.0), (2.0, 0.0)]

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            time_sharing_hull([])

    def test_tangency_hull_diagonal(self):
        # time sharing the two touching points yields the symmetric rate
        # log2(snr) / 2, strictly above the best single-alpha diagonal
        for snr in (2.0, 5.0, 6.0):
            hull = time_sharing_hull(list(tangency_points(snr)))
            assert diagonal_crossing(hull) == pytest.approx(
                0.5 * math.log2(snr), abs=1e-9
            )

    def test_inputs_weakly_below_hull(self):
        front = region_boundary(5.0)
        hull = time_sharing_hull(front)
        for p in front:
            assert p.r2 <= hull_at(hull, p.r1) + 1e-9


class TestRegion:
    def test_fields(self):
        region = two_way_relay_region(5.0)
        assert region.alpha_star == pytest.approx(5.0 / 6.0, rel=1e-15)
        assert region.outer == pytest.approx(outer_bound(5.0), abs=1e-15)
        assert region.cf == pytest.approx(cf_rate(5.0), abs=1e-15)
        assert region.hull_cf is None
        assert all(p.scheme == "hull" for p in region.hull)

    def test_full_front_hull_diagonal_bounds(self):
        # the sweep near alpha = 1 bulges above the chord between the two
        # tangency points, so the full hull beats the two-point diagonal
        # log2(snr)/2 while staying inside the outer square
        region = two_way_relay_region(5.0)
        cross = diagonal_crossing(region.hull)
        assert cross > 0.5 * math.log2(5.0) + 1e-6
        assert cross <= region.outer + 1e-12

    def test_cf_corner_extends_the_diagonal(self):
        # 1/2 + snr > snr, so the sum-decoding corner always beats the
        # time-shared diagonal when admitted
        for snr in (2.0, 6.0):
            region = two_way_relay_region(snr, include_cf=True)
            assert region.hull_cf is not None
            assert all(p.scheme == "hull-cf" for p in region.hull_cf)
            assert diagonal_crossing(region.hull_cf) == pytest.approx(
                cf_rate(snr), abs=1e-9
            )
            assert cf_rate(snr) > 0.5 * math.log2(snr)

    def test_low_snr_cf_corner_is_skipped(self):
        region = two_way_relay_region(0.4, include_cf=True)
        assert region.cf < 0.0
        assert region.hull_cf is not None
        pairs_plain = [(p.r1, p.r2) for p in region.hull]
        pairs_cf = [(p.r1, p.r2) for p in region.hull_cf]
        assert pairs_plain == pairs_cf

    def test_custom_grid_passthrough(self):
        region = two_way_relay_region(5.0, alphas=[alpha_mmse(5.0), 1.0])
        assert len(region.boundary) == 3
