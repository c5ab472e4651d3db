"""Two-way relaying through a single decoded combination.

Both nodes transmit simultaneously; the relay decodes one scaled
combination of the codewords and broadcasts that estimate alone.  Each
node then strips its own codeword: the lead node reduces modulo the
scaled shaping lattice of the other user, the other node re-adds its own
dither correction and reduces modulo the lead shaping lattice.  When the
relay estimate is right both recoveries are exact, so end-to-end errors
coincide with uplink decoding errors.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .chains import NestedChain, require_nesting
from .lattices import mod_batch, mod_lattice, quantize_batch
from .macsim import (
    MacConfig,
    _atol,
    _draw_chunk,
    _CHUNK,
    decode_lattice,
)

__all__ = [
    "RelayTrial",
    "RelayReport",
    "recover_other_codeword_at_lead",
    "recover_lead_codeword_at_other",
    "relay_trial",
    "run_two_way_relay",
]


@dataclass(frozen=True)
class RelayTrial:
    v1: np.ndarray
    v2: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    relay_estimate: np.ndarray
    recovered_v2_at_node1: np.ndarray
    recovered_v1_at_node2: np.ndarray
    uplink_error: bool
    e2e_error: bool


@dataclass(frozen=True)
class RelayReport:
    trials: int
    uplink_errors: int
    e2e_errors: int
    master_seed: int

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "uplink_errors": self.uplink_errors,
            "e2e_errors": self.e2e_errors,
            "seed": self.master_seed,
        }


def recover_other_codeword_at_lead(
    chain: NestedChain,
    relay_estimate,
    own_codeword,
    lead: int = 1,
    check_nesting: bool = True,
):
    """The lead node's step: subtract its codeword, fold modulo the scaled
    other-user shaping lattice, undo the scaling.

    Correct whenever the relay estimate is, provided the lead shaping
    lattice nests inside ``alpha`` times the other one; a chain built with
    ``alpha = 1/k`` always satisfies this, an arbitrary chain may not.
    """
    rec = chain.recovery_lattice(lead)
    if check_nesting:
        require_nesting(chain.shaping_lattice(lead), rec, "lead recovery")
    t = np.asarray(relay_estimate, dtype=float)
    v = np.asarray(own_codeword, dtype=float)
    return mod_lattice(rec, t - v) / chain.alpha_float


def recover_lead_codeword_at_other(
    chain: NestedChain, relay_estimate, own_codeword, own_dither, lead: int = 1
):
    """The other node's step: cancel its scaled codeword together with the
    dither-quantization offset baked into the combination, then fold
    modulo the lead shaping lattice."""
    other = 2 if lead == 1 else 1
    t = np.asarray(relay_estimate, dtype=float)
    v = np.asarray(own_codeword, dtype=float)
    d = np.asarray(own_dither, dtype=float)
    a = chain.alpha_float
    sho = chain.shaping_lattice(other)
    q = quantize_batch(sho, (v - d)[None, :])[0]
    return mod_lattice(chain.shaping_lattice(lead), t - a * v + a * q)


def _relay_chunk(config: MacConfig, start: int, stop: int):
    chain = config.chain
    v1, v2, d1, d2, x1, x2, z, y = _draw_chunk(
        chain, config.noise_var, config.master_seed, start, stop
    )
    lead = config.lead_user
    if lead == 1:
        vl, vo, dl, do = v1, v2, d1, d2
    else:
        vl, vo, dl, do = v2, v1, d2, d1
    a = chain.alpha_float
    shl = chain.shaping_lattice(lead)
    sho = chain.shaping_lattice(2 if lead == 1 else 1)
    qo = quantize_batch(sho, vo - do)
    target = mod_batch(shl, vl + a * vo - a * qo)
    yd = mod_batch(shl, a * y + dl + a * do)
    est = mod_batch(shl, quantize_batch(decode_lattice(chain, lead), yd))
    rec = chain.recovery_lattice(lead)
    vo_hat = mod_batch(rec, est - vl) / a
    vl_hat = mod_batch(shl, est - a * vo + a * qo)
    tol = _atol(chain)
    # coset comparisons; representative flips from boundary roundoff are
    # not decoding errors
    uplink = np.abs(mod_batch(shl, est - target)).max(axis=1) > tol
    bad_other = np.abs(mod_batch(sho, vo_hat - vo)).max(axis=1) > tol
    bad_lead = np.abs(mod_batch(shl, vl_hat - vl)).max(axis=1) > tol
    e2e = uplink | bad_other | bad_lead
    return (
        int(uplink.sum()),
        int(e2e.sum()),
        (v1, v2, d1, d2, est, vo_hat, vl_hat, uplink, e2e),
    )


def relay_trial(config: MacConfig, trial_index: int) -> RelayTrial:
    """Run one fully-specified trial and keep every intermediate value."""
    if not 0 <= trial_index < config.trials:
        raise ValueError("trial_index out of range")
    _, _, detail = _relay_chunk(config, trial_index, trial_index + 1)
    v1, v2, d1, d2, est, vo_hat, vl_hat, uplink, e2e = detail
    if config.lead_user == 1:
        rec2, rec1 = vo_hat[0], vl_hat[0]
    else:
        rec2, rec1 = vl_hat[0], vo_hat[0]
    return RelayTrial(
        v1=v1[0],
        v2=v2[0],
        d1=d1[0],
        d2=d2[0],
        relay_estimate=est[0],
        recovered_v2_at_node1=rec2,
        recovered_v1_at_node2=rec1,
        uplink_error=bool(uplink[0]),
        e2e_error=bool(e2e[0]),
    )


def run_two_way_relay(config: MacConfig, threads: int = 0) -> RelayReport:
    """Monte Carlo over the full uplink-decode-recover pipeline.

    Reuses the MAC transmission draws trial for trial, so uplink error
    counts here match ``run_monte_carlo`` on the same config and seed.
    """
    chain = config.chain
    require_nesting(
        chain.shaping_lattice(config.lead_user),
        chain.recovery_lattice(config.lead_user),
        "lead recovery",
    )
    ranges = [
        (s, min(s + _CHUNK, config.trials))
        for s in range(0, config.trials, _CHUNK)
    ]
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(
                pool.map(lambda r: _relay_chunk(config, r[0], r[1])[:2], ranges)
            )
    else:
        parts = [_relay_chunk(config, s, t)[:2] for s, t in ranges]
    return RelayReport(
        trials=config.trials,
        uplink_errors=sum(p[0] for p in parts),
        e2e_errors=sum(p[1] for p in parts),
        master_seed=config.master_seed,
    )
