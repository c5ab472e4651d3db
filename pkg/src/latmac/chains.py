"""Self-similar nested lattice chains and the codebooks they induce.

A chain stacks three copies of one base lattice: a coarse shaping lattice
per user, an intermediate lattice that is the first user's shaping lattice
scaled by the rational coefficient ``alpha``, and a fine coding lattice
nested inside everything.  Scaling the base by ``s = sqrt(power/sigma0^2)``
puts the shaping second moment at the power constraint, and the two users'
rates fall out of volume ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .lattices import (
    Lattice,
    REL_TOL,
    d_lattice,
    e8_lattice,
    integer_lattice,
    mod_batch,
    quantize_batch,
    scale_lattice,
    second_moment_mc,
)

__all__ = [
    "EnumerationTooLargeError",
    "NestingError",
    "CheckResult",
    "NestedChain",
    "Codebook",
    "build_chain",
    "validate_chain",
    "code_rate",
    "enumerate_codebook",
    "sample_codeword",
]

_NORM_SEED = 20240517
_MEASURE_SEED = 20240518
_VALIDATE_SEED = 20240519

_MAX_CODEBOOK = 1_000_000


class EnumerationTooLargeError(ValueError):
    """Requested codebook has too many points to enumerate."""


class NestingError(ValueError):
    """An operation needs a sublattice relation that does not hold."""


def _base_lattice(family: str, n: int) -> Lattice:
    if family == "zn":
        return integer_lattice(n)
    if family == "dn":
        return d_lattice(n)
    if family == "e8":
        return e8_lattice()
    raise ValueError(f"unknown chain family {family!r}")


@lru_cache(maxsize=None)
def _base_second_moment(family: str, n: int) -> float:
    """Second moment per dimension of the unit-scale base lattice.

    Exact for the integer family; measured once at a fixed seed otherwise,
    so every chain built for a family agrees on the normalization.
    """
    if family == "zn":
        return 1.0 / 12.0
    est, _ = second_moment_mc(_base_lattice(family, n), 1_000_000, _NORM_SEED)
    return est


@dataclass(frozen=True, eq=False)
class NestedChain:
    """Three nested lattices sharing one base shape.

    ``shaping1`` and ``shaping2`` coincide (both users transmit at the same
    power), the intermediate lattice is ``alpha * shaping1``, and ``fine``
    is the coding lattice containing all of them.  ``alpha = 1/k`` is kept
    as an exact rational so rate identities hold to roundoff.
    """

    family: str
    n: int
    k: int
    f: int
    power: float
    s: float
    alpha: Fraction
    shaping1: Lattice
    shaping2: Lattice
    fine: Lattice
    sigma2_shaping: float

    @property
    def alpha_float(self) -> float:
        return float(self.alpha)

    def shaping_lattice(self, user: int) -> Lattice:
        if user == 1:
            return self.shaping1
        if user == 2:
            return self.shaping2
        raise ValueError("user must be 1 or 2")

    def fine_lattice(self, user: int) -> Lattice:
        """Coding lattice of a user: user 1 codes on ``fine``, user 2 on
        ``k * fine`` so that its codebook matches the intermediate nesting."""
        if user == 1:
            return self.fine
        if user == 2:
            return scale_lattice(self.fine, self.k)
        raise ValueError("user must be 1 or 2")

    def recovery_lattice(self, lead: int) -> Lattice:
        """Shaping lattice of the non-lead user scaled by ``alpha``; the
        modulo this lattice is where a combination estimate lives."""
        other = 2 if lead == 1 else 1
        return scale_lattice(self.shaping_lattice(other), self.alpha_float)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "n": self.n,
            "k": self.k,
            "f": self.f,
            "power": self.power,
            "s": self.s,
            "alpha": [self.alpha.numerator, self.alpha.denominator],
            "sigma2_shaping": self.sigma2_shaping,
            "rate1": code_rate(self, 1),
            "rate2": code_rate(self, 2),
        }


def build_chain(family: str, n: int, k: int, f: int, power: float) -> NestedChain:
    """Build a self-similar chain with nesting ratios ``k`` and ``f``.

    ``k`` sets the gap between the two users' codebooks (``alpha = 1/k``)
    and ``f`` the extra refinement of the coding lattice below the
    intermediate one.  The shaping scale is chosen so the shaping second
    moment equals ``power``.
    """
    if family not in ("zn", "dn", "e8"):
        raise ValueError(f"unknown chain family {family!r}")
    if family == "e8" and n != 8:
        raise ValueError("the e8 family fixes n = 8")
    if family == "dn" and n < 2:
        raise ValueError("the dn family needs n >= 2")
    if n < 1:
        raise ValueError("n must be at least 1")
    if not isinstance(k, int) or not isinstance(f, int) or k < 1 or f < 1:
        raise ValueError("k and f must be positive integers")
    if not power > 0:
        raise ValueError("power must be positive")
    sigma0 = _base_second_moment(family, n)
    s = math.sqrt(power / sigma0)
    shaping = _scaled(family, n, s)
    fine = _scaled(family, n, s / (k * f))
    sigma2 = s * s * sigma0
    return NestedChain(
        family=family,
        n=n,
        k=k,
        f=f,
        power=float(power),
        s=s,
        alpha=Fraction(1, k),
        shaping1=shaping,
        shaping2=shaping,
        fine=fine,
        sigma2_shaping=sigma2,
    )


def _scaled(family: str, n: int, c: float) -> Lattice:
    return scale_lattice(_base_lattice(family, n), c)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    expected: float


def _nesting_defect(coarse: Lattice, fine: Lattice) -> float:
    """How far the coarse basis is from integer coordinates in the fine
    basis; zero (to roundoff) iff coarse is a sublattice of fine."""
    coeff = coarse.generator @ np.linalg.inv(fine.generator)
    return float(np.abs(coeff - np.round(coeff)).max())


def require_nesting(coarse: Lattice, fine: Lattice, what: str) -> None:
    if _nesting_defect(coarse, fine) > REL_TOL:
        raise NestingError(f"{what}: not a sublattice relation")


def validate_chain(chain: NestedChain, samples: int = 200_000) -> list[CheckResult]:
    """Numerical sanity checks on a chain; all should pass for any input."""
    results = []
    inter = chain.recovery_lattice(lead=2)  # alpha * shaping1
    for name, coarse, fine in (
        ("shaping1 in intermediate", chain.shaping1, inter),
        ("intermediate in fine", inter, chain.fine),
        ("shaping2 in user2 coding", chain.shaping2, chain.fine_lattice(2)),
    ):
        defect = _nesting_defect(coarse, fine)
        results.append(CheckResult(name, defect <= REL_TOL, defect, 0.0))
    for name, lat in (("sigma2 shaping1", chain.shaping1), ("sigma2 shaping2", chain.shaping2)):
        est, _ = second_moment_mc(lat, samples, _VALIDATE_SEED)
        ok = abs(est - chain.power) <= 0.01 * chain.power
        results.append(CheckResult(name, ok, est, chain.power))
    r1 = code_rate(chain, 1)
    r2 = code_rate(chain, 2)
    gap = abs(r2 - (r1 + math.log2(chain.alpha_float)))
    results.append(CheckResult("rate identity", gap <= REL_TOL, gap, 0.0))
    return results


def code_rate(chain: NestedChain, user: int) -> float:
    """Per-dimension rate from the shaping-to-coding volume ratio."""
    shaping = chain.shaping_lattice(user)
    coding = chain.fine_lattice(user)
    logdet_ratio = _logdet(shaping) - _logdet(coding)
    return logdet_ratio / (chain.n * math.log(2.0))


def _logdet(lat: Lattice) -> float:
    sign, logdet = np.linalg.slogdet(lat.generator)
    return float(logdet)


@dataclass(frozen=True)
class Codebook:
    chain: NestedChain
    user: int
    points: np.ndarray  # (m^n, n), lexicographically sorted

    @property
    def size(self) -> int:
        return self.points.shape[0]


def enumerate_codebook(chain: NestedChain, user: int) -> Codebook:
    """All coding-lattice points inside the user's shaping region.

    Walks ``m^n`` integer coefficient vectors (``m`` the per-dimension
    nesting ratio) through the coding basis and reduces modulo the shaping
    lattice, which hits every coset exactly once.
    """
    shaping = chain.shaping_lattice(user)
    coding = chain.fine_lattice(user)
    m = chain.k * chain.f if user == 1 else chain.f
    total = m**chain.n
    if total > _MAX_CODEBOOK:
        raise EnumerationTooLargeError(
            f"codebook has {total} points; enumeration capped at {_MAX_CODEBOOK}"
        )
    grids = np.meshgrid(*[np.arange(m)] * chain.n, indexing="ij")
    zs = np.stack([g.ravel() for g in grids], axis=1).astype(float)
    pts = mod_batch(shaping, zs @ coding.generator)
    order = np.lexsort(pts.T[::-1])
    return Codebook(chain, user, pts[order] + 0.0)


def sample_codeword(chain: NestedChain, user: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the user's codebook without enumerating it."""
    coding = chain.fine_lattice(user)
    m = chain.k * chain.f if user == 1 else chain.f
    z = rng.integers(0, m, size=chain.n).astype(float)
    shaping = chain.shaping_lattice(user)
    pt = z @ coding.generator
    return pt - quantize_batch(shaping, pt[None, :])[0]
