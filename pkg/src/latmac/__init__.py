"""Nested lattice codes for recovering linear combinations of codewords
over a two-user Gaussian multiple-access channel, with a two-way relay
application on top.

Layers, bottom up: ``lattices`` (quantizers, modulo, moments),
``chains`` (self-similar nested chains and codebooks), ``macsim``
(dithered transmission and Monte Carlo), ``rates`` (achievable regions),
``relay`` (end-to-end two-way exchange).  ``reporting`` and ``cli`` sit
on top and are imported lazily so library use never touches matplotlib.
"""

from .chains import (
    CheckResult,
    Codebook,
    EnumerationTooLargeError,
    NestedChain,
    NestingError,
    build_chain,
    code_rate,
    enumerate_codebook,
    sample_codeword,
    validate_chain,
)
from .lattices import (
    BoundTooSmallError,
    DimensionMismatchError,
    Lattice,
    REL_TOL,
    brute_force_cvp,
    d_lattice,
    e8_lattice,
    from_generator,
    integer_lattice,
    mod_lattice,
    nearest_point,
    normalized_second_moment,
    sample_dither,
    scale_lattice,
    second_moment_mc,
    vnr,
)
from .macsim import (
    ContractViolation,
    MacConfig,
    SimReport,
    cf_effective_noise_var,
    channel,
    combination_target,
    decode_combination,
    decode_lattice,
    effective_noise,
    encode,
    run_monte_carlo,
    trial_rng,
    wilson_interval,
)
from .rates import (
    RateRegion,
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
from .relay import (
    RelayReport,
    RelayTrial,
    recover_lead_codeword_at_other,
    recover_other_codeword_at_lead,
    relay_trial,
    run_two_way_relay,
)

__version__ = "0.1.0"

__all__ = [
    "BoundTooSmallError",
    "CheckResult",
    "Codebook",
    "ContractViolation",
    "DimensionMismatchError",
    "EnumerationTooLargeError",
    "Lattice",
    "MacConfig",
    "NestedChain",
    "NestingError",
    "RateRegion",
    "RateRegionPoint",
    "RelayReport",
    "RelayTrial",
    "REL_TOL",
    "SimReport",
    "achievable_pair",
    "alpha_mmse",
    "brute_force_cvp",
    "build_chain",
    "cf_effective_noise_var",
    "cf_rate",
    "channel",
    "code_rate",
    "combination_target",
    "d_lattice",
    "decode_combination",
    "decode_lattice",
    "default_alpha_grid",
    "e8_lattice",
    "effective_noise",
    "encode",
    "enumerate_codebook",
    "from_generator",
    "integer_lattice",
    "mod_lattice",
    "nearest_point",
    "normalized_second_moment",
    "outer_bound",
    "recover_lead_codeword_at_other",
    "recover_other_codeword_at_lead",
    "region_boundary",
    "relay_trial",
    "run_monte_carlo",
    "run_two_way_relay",
    "sample_codeword",
    "sample_dither",
    "scale_lattice",
    "second_moment_mc",
    "tangency_points",
    "time_sharing_hull",
    "trial_rng",
    "two_way_relay_region",
    "validate_chain",
    "vnr",
    "wilson_interval",
]
