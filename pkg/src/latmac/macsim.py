"""Dithered modulo-lattice transmission over a two-user Gaussian MAC and
Monte Carlo estimation of the combination-decoding error rate.

Both users transmit ``x = [codeword - dither] mod shaping``; the receiver
scales the channel output, re-adds dithers, quantizes onto the decode
lattice and reduces modulo the lead user's shaping lattice.  The result
equals the target integer combination whenever the folded effective noise
``(alpha - 1) x_lead + alpha z`` stays inside the decode cell.

Trial randomness is counter-based: trial ``i`` of a run seeds its own
Philox stream with ``(master_seed, i)``, so estimates are reproducible
and independent of chunking or thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .chains import NestedChain
from .lattices import (
    Lattice,
    REL_TOL,
    mod_batch,
    mod_lattice,
    quantize_batch,
    scale_lattice,
    vnr,
)

__all__ = [
    "ContractViolation",
    "MacConfig",
    "SimReport",
    "trial_rng",
    "encode",
    "channel",
    "combination_target",
    "decode_combination",
    "decode_lattice",
    "effective_noise",
    "cf_effective_noise_var",
    "wilson_interval",
    "run_monte_carlo",
]

# Fixed work-splitting grid: chunk boundaries never depend on thread
# count, so per-chunk partial sums reduce identically for any --threads.
_CHUNK = 4096

_WILSON_Z = 1.959963984540054  # two-sided 95% normal quantile


class ContractViolation(ValueError):
    """An input broke a documented precondition (e.g. not a codeword)."""


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Independent generator for one trial, keyed by ``(seed, index)``."""
    key = np.array(
        [master_seed & 0xFFFFFFFFFFFFFFFF, trial_index], dtype=np.uint64
    )
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class MacConfig:
    chain: NestedChain
    noise_var: float
    trials: int
    master_seed: int
    lead_user: int = 1

    def __post_init__(self):
        if self.noise_var < 0:
            raise ValueError("noise_var must be nonnegative")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.lead_user not in (1, 2):
            raise ValueError("lead_user must be 1 or 2")


def _atol(chain: NestedChain) -> float:
    return REL_TOL * max(1.0, chain.s)


def _check_codeword(chain: NestedChain, user: int, v: np.ndarray) -> None:
    tol = _atol(chain)
    coding = chain.fine_lattice(user)
    coeff = v @ np.linalg.inv(coding.generator)
    if np.abs(coeff - np.round(coeff)).max() > tol:
        raise ContractViolation(f"user {user}: not a coding-lattice point")
    shaping = chain.shaping_lattice(user)
    if np.abs(mod_lattice(shaping, v) - v).max() > tol:
        raise ContractViolation(
            f"user {user}: codeword lies outside the shaping region"
        )


def encode(chain: NestedChain, user: int, v, d) -> np.ndarray:
    """Channel input ``[v - d] mod shaping`` for one user.

    ``v`` must be a codebook point; ``d`` is any dither vector (points
    outside the shaping region are fine, the modulo absorbs them).
    """
    v = np.asarray(v, dtype=float)
    d = np.asarray(d, dtype=float)
    _check_codeword(chain, user, v)
    return mod_lattice(chain.shaping_lattice(user), v - d)


def channel(x1, x2, noise_var: float, rng: np.random.Generator) -> np.ndarray:
    """Sum of both inputs plus white Gaussian noise of the given variance."""
    x1 = np.asarray(x1, dtype=float)
    if noise_var < 0:
        raise ValueError("noise_var must be nonnegative")
    w = rng.standard_normal(x1.shape)
    return x1 + np.asarray(x2, dtype=float) + math.sqrt(noise_var) * w


def decode_lattice(chain: NestedChain, lead: int = 1) -> Lattice:
    """Lattice containing every possible combination target for ``lead``."""
    if lead == 1:
        return chain.fine
    if lead == 2:
        return scale_lattice(chain.fine, chain.alpha_float)
    raise ValueError("lead must be 1 or 2")


def combination_target(
    chain: NestedChain, lead_codeword, other_codeword, other_dither, lead: int = 1
) -> np.ndarray:
    """The combination the receiver aims to recover.

    ``[v_lead + alpha v_other - alpha Q_other(v_other - d_other)] mod
    shaping_lead``: the lead codeword plus ``alpha`` times the other user's
    effective codeword, folded into the lead shaping region.
    """
    other = 2 if lead == 1 else 1
    vl = np.asarray(lead_codeword, dtype=float)
    vo = np.asarray(other_codeword, dtype=float)
    do = np.asarray(other_dither, dtype=float)
    a = chain.alpha_float
    sho = chain.shaping_lattice(other)
    q = quantize_batch(sho, (vo - do)[None, :])[0]
    return mod_lattice(chain.shaping_lattice(lead), vl + a * vo - a * q)


def decode_combination(
    chain: NestedChain, y, lead_dither, other_dither, lead: int = 1
) -> np.ndarray:
    """Estimate the combination from the channel output and both dithers."""
    y = np.asarray(y, dtype=float)
    dl = np.asarray(lead_dither, dtype=float)
    do = np.asarray(other_dither, dtype=float)
    a = chain.alpha_float
    shl = chain.shaping_lattice(lead)
    yd = mod_lattice(shl, a * y + dl + a * do)
    q = quantize_batch(decode_lattice(chain, lead), yd[None, :])[0]
    return mod_lattice(shl, q)


def effective_noise(chain: NestedChain, x_lead, z, lead: int = 1) -> np.ndarray:
    """Folded noise the decoder fights: ``[(alpha-1) x_lead + alpha z]``
    reduced modulo the lead shaping lattice."""
    a = chain.alpha_float
    x_lead = np.asarray(x_lead, dtype=float)
    z = np.asarray(z, dtype=float)
    return mod_lattice(chain.shaping_lattice(lead), (a - 1.0) * x_lead + a * z)


def cf_effective_noise_var(alpha: float, snr: float) -> float:
    """Per-dimension variance of ``(alpha-1)(x1+x2) + alpha z`` at unit
    noise power and per-user power ``snr``."""
    if not snr > 0:
        raise ValueError("snr must be positive")
    return (alpha - 1.0) ** 2 * 2.0 * snr + alpha**2


def wilson_interval(errors: int, trials: int, z: float = _WILSON_Z) -> tuple[float, float]:
    """Wilson score 95% confidence interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2.0 * trials)) / denom
    half = (
        z
        * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials))
        / denom
    )
    # at the extremes the bound is exactly the endpoint; keep it free of
    # last-ulp noise from the two cancelling terms
    lo = 0.0 if errors == 0 else max(0.0, center - half)
    hi = 1.0 if errors == trials else min(1.0, center + half)
    return lo, hi


@dataclass(frozen=True)
class SimReport:
    trials: int
    error_count: int
    p_e_hat: float
    wilson_95: tuple[float, float]
    zeff_var_measured: float
    zeff_var_predicted: float
    vnr_at_predicted_var: float
    master_seed: int

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "errors": self.error_count,
            "p_e": self.p_e_hat,
            "ci_lo": self.wilson_95[0],
            "ci_hi": self.wilson_95[1],
            "zeff_var_meas": self.zeff_var_measured,
            "zeff_var_pred": self.zeff_var_predicted,
            "vnr": self.vnr_at_predicted_var,
            "seed": self.master_seed,
        }


def _draw_chunk(chain: NestedChain, noise_var: float, master_seed: int, start: int, stop: int):
    """Per-trial draws for trials ``[start, stop)`` in a fixed stream order
    (codeword coefficients, dither seeds, noise), then one vectorized pass
    through the encoders and the channel."""
    n = chain.n
    count = stop - start
    m1 = chain.k * chain.f
    m2 = chain.f
    z1 = np.empty((count, n))
    z2 = np.empty((count, n))
    u1 = np.empty((count, n))
    u2 = np.empty((count, n))
    w = np.empty((count, n))
    for i in range(count):
        rng = trial_rng(master_seed, start + i)
        z1[i] = rng.integers(0, m1, size=n)
        z2[i] = rng.integers(0, m2, size=n)
        u1[i] = rng.random(n)
        u2[i] = rng.random(n)
        w[i] = rng.standard_normal(n)
    sh1, sh2 = chain.shaping1, chain.shaping2
    v1 = mod_batch(sh1, z1 @ chain.fine_lattice(1).generator)
    v2 = mod_batch(sh2, z2 @ chain.fine_lattice(2).generator)
    d1 = mod_batch(sh1, u1 @ sh1.generator)
    d2 = mod_batch(sh2, u2 @ sh2.generator)
    x1 = mod_batch(sh1, v1 - d1)
    x2 = mod_batch(sh2, v2 - d2)
    z = math.sqrt(noise_var) * w
    y = x1 + x2 + z
    return v1, v2, d1, d2, x1, x2, z, y


def _mac_chunk(config: MacConfig, start: int, stop: int) -> tuple[int, float]:
    chain = config.chain
    v1, v2, d1, d2, x1, x2, z, y = _draw_chunk(
        chain, config.noise_var, config.master_seed, start, stop
    )
    lead = config.lead_user
    if lead == 1:
        vl, vo, dl, do, xl = v1, v2, d1, d2, x1
        sho = chain.shaping2
    else:
        vl, vo, dl, do, xl = v2, v1, d2, d1, x2
        sho = chain.shaping1
    a = chain.alpha_float
    shl = chain.shaping_lattice(lead)
    target = mod_batch(shl, vl + a * vo - a * quantize_batch(sho, vo - do))
    yd = mod_batch(shl, a * y + dl + a * do)
    est = mod_batch(shl, quantize_batch(decode_lattice(chain, lead), yd))
    # compare as cosets: when a combination sits exactly on a shaping cell
    # face, roundoff may flip which representative each path returns
    resid = mod_batch(shl, est - target)
    errors = int((np.abs(resid).max(axis=1) > _atol(chain)).sum())
    zeff = mod_batch(shl, (a - 1.0) * xl + a * z)
    return errors, float((zeff * zeff).sum())


def run_monte_carlo(config: MacConfig, threads: int = 0) -> SimReport:
    """Estimate the combination error probability by Monte Carlo.

    Output is byte-for-byte reproducible for a given ``master_seed``
    regardless of ``threads``: trials are keyed individually, the chunk
    grid is fixed, and partial sums reduce through ``math.fsum``.
    """
    chain = config.chain
    ranges = [
        (s, min(s + _CHUNK, config.trials))
        for s in range(0, config.trials, _CHUNK)
    ]
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(
                pool.map(lambda r: _mac_chunk(config, r[0], r[1]), ranges)
            )
    else:
        parts = [_mac_chunk(config, s, t) for s, t in ranges]
    errors = sum(p[0] for p in parts)
    zeff_meas = math.fsum(p[1] for p in parts) / (config.trials * chain.n)
    a = chain.alpha_float
    predicted = (a - 1.0) ** 2 * chain.power + a * a * config.noise_var
    if predicted > 0:
        mu = vnr(decode_lattice(chain, config.lead_user), predicted)
    else:
        mu = math.inf
    return SimReport(
        trials=config.trials,
        error_count=errors,
        p_e_hat=errors / config.trials,
        wilson_95=wilson_interval(errors, config.trials),
        zeff_var_measured=zeff_meas,
        zeff_var_predicted=predicted,
        vnr_at_predicted_var=mu,
        master_seed=config.master_seed,
    )
