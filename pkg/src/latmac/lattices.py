"""Lattice primitives: quantization, modulo reduction, moments, dithers.

Row-generator convention throughout: a lattice point is ``z @ generator``
for an integer row vector ``z``.  Scaled integer lattices, D_n and E8 get
exact closed-form quantizers; any other generator falls back to bounded
enumeration of integer coefficients.

Quantizer ties on Voronoi boundaries resolve to the lexicographically
smallest candidate point, which for the integer families means rounding
half-integers down.  That pins a half-open fundamental region, so modulo
reduction returns exactly one representative per coset and codebook
counts come out exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "REL_TOL",
    "TWO_PI_E",
    "BoundTooSmallError",
    "DimensionMismatchError",
    "Lattice",
    "integer_lattice",
    "d_lattice",
    "e8_lattice",
    "from_generator",
    "scale_lattice",
    "nearest_point",
    "brute_force_cvp",
    "mod_lattice",
    "quantize_batch",
    "mod_batch",
    "second_moment_mc",
    "normalized_second_moment",
    "sample_dither",
    "sample_dither_batch",
    "vnr",
]

# Relative tolerance for value comparisons (equality of canonical
# representatives, nesting integrality, rate identities).
REL_TOL = 1e-9

# Tie detection only needs to absorb float drift from rescaling; the
# boundary ties that matter semantically (codebook enumeration on dyadic
# data) compare exactly equal in binary floating point.
_TIE_TOL = 4e-12

TWO_PI_E = 2.0 * math.pi * math.e

_FAMILIES = ("zn", "dn", "e8", "general")


class DimensionMismatchError(ValueError):
    """Vector length does not match the lattice dimension."""


class BoundTooSmallError(ValueError):
    """Search radius too small to contain any lattice point."""


@dataclass(frozen=True, eq=False)
class Lattice:
    """Full-rank lattice with a row basis and an optional family tag.

    ``family`` is one of ``zn`` (scaled integer), ``dn``, ``e8`` or
    ``general``; family-tagged instances keep ``generator`` equal to the
    canonical family basis times a scalar whose magnitude is ``scale``.
    """

    generator: np.ndarray
    family: str = "general"
    scale: float = 1.0

    def __post_init__(self):
        gen = np.array(self.generator, dtype=float)
        if gen.ndim != 2 or gen.shape[0] != gen.shape[1] or gen.shape[0] < 1:
            raise ValueError("generator must be a square matrix")
        gen.setflags(write=False)
        object.__setattr__(self, "generator", gen)
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown lattice family {self.family!r}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        n = gen.shape[0]
        det = float(np.linalg.det(gen))
        if abs(det) <= 1e-12 * self.scale**n:
            raise ValueError("generator is numerically singular")

    @property
    def n(self) -> int:
        return self.generator.shape[0]

    @cached_property
    def volume(self) -> float:
        """Covolume, i.e. the volume of one fundamental cell."""
        return abs(float(np.linalg.det(self.generator)))

    @cached_property
    def _enum_data(self):
        # QR factorization of generator^T with a positive diagonal,
        # shared by the coefficient enumerator.
        q, r = np.linalg.qr(self.generator.T)
        sign = np.sign(np.diag(r))
        sign[sign == 0] = 1.0
        r = sign[:, None] * r
        q = q * sign[None, :]
        return q.T.copy(), [tuple(row) for row in r]

    @cached_property
    def covering_radius_bound(self) -> float:
        """Upper bound on the distance from any point to the lattice."""
        n = self.n
        if self.family == "zn":
            return self.scale * math.sqrt(n) / 2.0
        if self.family == "dn":
            # deep holes sit at (1,0,..,0) and (1/2,..,1/2)
            return self.scale * max(1.0, math.sqrt(n) / 2.0)
        if self.family == "e8":
            return self.scale * 1.0
        # nearest-plane bound: half the norm of the Gram-Schmidt diagonal
        _, r = self._enum_data
        return 0.5 * math.sqrt(sum(r[i][i] ** 2 for i in range(n)))


def _d_generator(n: int) -> np.ndarray:
    gen = np.zeros((n, n))
    gen[0, 0] = -1.0
    gen[0, 1] = -1.0
    for i in range(1, n):
        gen[i, i - 1] = 1.0
        gen[i, i] = -1.0
    return gen


_E8_GENERATOR = np.array(
    [
        [2, 0, 0, 0, 0, 0, 0, 0],
        [-1, 1, 0, 0, 0, 0, 0, 0],
        [0, -1, 1, 0, 0, 0, 0, 0],
        [0, 0, -1, 1, 0, 0, 0, 0],
        [0, 0, 0, -1, 1, 0, 0, 0],
        [0, 0, 0, 0, -1, 1, 0, 0],
        [0, 0, 0, 0, 0, -1, 1, 0],
        [0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5],
    ]
)


def integer_lattice(n: int, scale: float = 1.0) -> Lattice:
    """Scaled integer lattice ``scale * Z^n``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return Lattice(np.eye(n) * scale, "zn", abs(scale))


def d_lattice(n: int, scale: float = 1.0) -> Lattice:
    """Scaled checkerboard lattice: integer vectors with even sum."""
    if n < 2:
        raise ValueError("D_n needs n >= 2")
    return Lattice(_d_generator(n) * scale, "dn", abs(scale))


def e8_lattice(scale: float = 1.0) -> Lattice:
    """Scaled E8, built as D8 united with its half-integer coset."""
    return Lattice(_E8_GENERATOR * scale, "e8", abs(scale))


def from_generator(generator) -> Lattice:
    """Lattice from an arbitrary full-rank row basis (no fast quantizer)."""
    return Lattice(np.array(generator, dtype=float), "general", 1.0)


def scale_lattice(lat: Lattice, c: float) -> Lattice:
    """Lattice scaled by a nonzero real; the point set only sees ``|c|``."""
    if c == 0:
        raise ValueError("scale factor must be nonzero")
    return Lattice(lat.generator * c, lat.family, lat.scale * abs(c))


def _as_vector(lat: Lattice, x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (lat.n,):
        raise DimensionMismatchError(
            f"expected a length-{lat.n} vector, got shape {v.shape}"
        )
    return v


def _round_half_down(y: np.ndarray) -> np.ndarray:
    # nearest integer, exact halves toward -inf
    return np.ceil(y - 0.5)


def _lex_smaller(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise test: is row of ``a`` lexicographically smaller than ``b``."""
    diff = a - b
    nz = diff != 0.0
    first = np.argmax(nz, axis=1)
    rows = np.arange(a.shape[0])
    out = np.zeros(a.shape[0], dtype=bool)
    has = nz.any(axis=1)
    out[has] = diff[rows[has], first[has]] < 0.0
    return out


def _quantize_dn_unit(y: np.ndarray) -> np.ndarray:
    """Nearest point of D_n, ties to the lexicographically smallest point.

    Round every coordinate half-down; if the sum comes out odd, adjust the
    single coordinate where re-rounding to the second-nearest integer is
    cheapest.  Among cost ties, a downward adjustment at the smallest index
    beats any upward one, and an upward adjustment prefers the largest
    index; both rules reproduce the lexicographic order over tied points.
    """
    a = _round_half_down(y)
    e = y - a  # in (-1/2, 1/2]
    odd = (np.rint(a.sum(axis=1)).astype(np.int64) & 1).astype(bool)
    if odd.any():
        rows = np.nonzero(odd)[0]
        eo = e[rows]
        up = 1.0 - 2.0 * eo  # extra squared cost of rounding up instead
        down = 1.0 + 2.0 * eo  # ... of rounding further down
        m0 = np.minimum(up.min(axis=1), down.min(axis=1))
        down_tie = down <= (m0 + _TIE_TOL)[:, None]
        has_down = down_tie.any(axis=1)
        up_tie = up <= (m0 + _TIE_TOL)[:, None]
        n = y.shape[1]
        j = np.where(
            has_down,
            np.argmax(down_tie, axis=1),
            n - 1 - np.argmax(up_tie[:, ::-1], axis=1),
        )
        a[rows, j] += np.where(has_down, -1.0, 1.0)
    return a


def _quantize_e8_unit(y: np.ndarray) -> np.ndarray:
    """Nearest point of E8 via its two D8 cosets."""
    q0 = _quantize_dn_unit(y)
    q1 = _quantize_dn_unit(y - 0.5) + 0.5
    d0 = ((y - q0) ** 2).sum(axis=1)
    d1 = ((y - q1) ** 2).sum(axis=1)
    take1 = d1 < d0 - _TIE_TOL
    tie = np.abs(d0 - d1) <= _TIE_TOL
    if tie.any():
        take1 = take1.copy()
        take1[tie] = _lex_smaller(q1[tie], q0[tie])
    return np.where(take1[:, None], q1, q0)


def quantize_batch(lat: Lattice, xs: np.ndarray) -> np.ndarray:
    """Nearest lattice point for every row of ``xs``."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != lat.n:
        raise DimensionMismatchError(
            f"expected shape (m, {lat.n}), got {xs.shape}"
        )
    c = lat.scale
    if lat.family == "zn":
        return _round_half_down(xs / c) * c + 0.0
    if lat.family == "dn":
        return _quantize_dn_unit(xs / c) * c + 0.0
    if lat.family == "e8":
        return _quantize_e8_unit(xs / c) * c + 0.0
    bound = lat.covering_radius_bound * (1.0 + 1e-9) + 1e-12
    return np.array([brute_force_cvp(lat, row, bound) for row in xs])


def mod_batch(lat: Lattice, xs: np.ndarray) -> np.ndarray:
    return np.asarray(xs, dtype=float) - quantize_batch(lat, xs)


def nearest_point(lat: Lattice, x) -> np.ndarray:
    """Closest lattice point to ``x`` under the shared tie-break."""
    return quantize_batch(lat, _as_vector(lat, x)[None, :])[0]


def mod_lattice(lat: Lattice, x) -> np.ndarray:
    """Quantization error ``x - nearest_point(lat, x)``.

    The image is a half-open fundamental region, so every coset has exactly
    one representative.
    """
    x = _as_vector(lat, x)
    return x - quantize_batch(lat, x[None, :])[0]


def _enumerate_within(r, u, rho):
    """All integer coefficient rows whose points lie within ``rho`` of ``u``.

    ``r`` is the upper-triangular factor of generator^T with positive
    diagonal and ``u`` the target in the rotated frame.  Depth-first
    enumeration visits each level's integers in nondecreasing partial cost,
    so the search radius can shrink to the best distance found (plus a tie
    margin) without losing any minimizer.
    """
    n = len(u)
    budget = rho * rho * (1.0 + 1e-9) + 1e-12
    best = math.inf
    limit = budget
    out = []
    z = [0] * n

    def descend(i, part, t):
        nonlocal best, limit, out
        rii = r[i][i]
        center = t[i] / rii
        k = math.floor(center + 0.5)
        step = 1 if center >= k else -1
        while True:
            diff = t[i] - rii * k
            cost = part + diff * diff
            if cost > limit:
                break
            z[i] = k
            if i == 0:
                out.append((cost, tuple(z)))
                if cost < best:
                    best = cost
                    limit = min(budget, best + _TIE_TOL * max(1.0, best))
                    out = [(d, w) for d, w in out if d <= limit]
            else:
                descend(i - 1, cost, [t[j] - r[j][i] * k for j in range(i)])
            k += step
            step = -step - (1 if step > 0 else -1)

    descend(n - 1, 0.0, list(u))
    return out


def brute_force_cvp(lat: Lattice, x, radius_bound: float) -> np.ndarray:
    """Exhaustive closest-point search over a bounded coefficient set.

    Enumerates every integer coefficient vector whose lattice point lies
    within ``radius_bound`` of ``x`` and returns the minimizer, breaking
    distance ties toward the lexicographically smallest point.  The caller
    must supply a radius that provably contains the nearest point, e.g.
    ``lat.covering_radius_bound``; an empty candidate set raises
    ``BoundTooSmallError``.
    """
    x = _as_vector(lat, x)
    if not radius_bound > 0:
        raise ValueError("radius_bound must be positive")
    qt, r = lat._enum_data
    u = qt @ x
    cands = _enumerate_within(r, list(u), float(radius_bound))
    if not cands:
        raise BoundTooSmallError(
            f"no lattice point within {radius_bound} of the query"
        )
    dmin = min(d for d, _ in cands)
    margin = _TIE_TOL * max(1.0, dmin)
    zs = [w for d, w in cands if d <= dmin + margin]
    pts = np.array(zs, dtype=float) @ lat.generator
    order = np.lexsort(pts.T[::-1])
    return pts[order[0]] + 0.0


def second_moment_mc(lat: Lattice, samples: int, seed) -> tuple[float, float]:
    """Monte Carlo second moment per dimension of the Voronoi region.

    Draws points uniform over the fundamental parallelepiped, folds them
    into the Voronoi region with the modulo map, and averages the squared
    norm per dimension.  Returns ``(estimate, standard_error)``.
    """
    samples = int(samples)
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    rng = np.random.default_rng(seed)
    n = lat.n
    chunk = 1 << 16
    sums = []
    sqsums = []
    left = samples
    while left:
        m = min(chunk, left)
        left -= m
        pts = rng.random((m, n)) @ lat.generator
        err = mod_batch(lat, pts)
        per = (err * err).sum(axis=1) / n
        sums.append(float(per.sum()))
        sqsums.append(float((per * per).sum()))
    # fsum makes the reduction independent of chunk processing order
    mean = math.fsum(sums) / samples
    second = math.fsum(sqsums) / samples
    var = max(second - mean * mean, 0.0)
    return mean, math.sqrt(var / samples)


def normalized_second_moment(lat: Lattice, samples: int, seed) -> float:
    """Dimensionless second moment: sigma^2 / volume^(2/n)."""
    sigma2, _ = second_moment_mc(lat, samples, seed)
    return sigma2 / lat.volume ** (2.0 / lat.n)


def sample_dither(lat: Lattice, rng: np.random.Generator) -> np.ndarray:
    """One point uniform over the Voronoi region of ``lat``."""
    return mod_lattice(lat, rng.random(lat.n) @ lat.generator)


def sample_dither_batch(lat: Lattice, rng: np.random.Generator, count: int) -> np.ndarray:
    return mod_batch(lat, rng.random((count, lat.n)) @ lat.generator)


def vnr(lat: Lattice, noise_var: float) -> float:
    """Volume-to-noise ratio ``volume^(2/n) / (2*pi*e*noise_var)``."""
    if not noise_var > 0:
        raise ValueError("noise_var must be positive")
    return lat.volume ** (2.0 / lat.n) / (TWO_PI_E * noise_var)
