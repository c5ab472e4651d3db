"""Command line front end.

Subcommands: ``region`` (rate-region tables), ``simulate`` (MAC Monte
Carlo), ``gtwrc`` (two-way relay Monte Carlo), ``validate-lattice``
(self-checks on the lattice primitives).  Every option can also come from
a JSON file via ``--config``; explicit flags win over the file, the file
wins over built-in defaults, and keys the active subcommand does not know
are an error.

Exit codes: 0 success, 2 usage or configuration error, 3 validation
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .chains import build_chain, validate_chain
from .lattices import (
    REL_TOL,
    brute_force_cvp,
    d_lattice,
    e8_lattice,
    integer_lattice,
    mod_lattice,
    nearest_point,
    scale_lattice,
    second_moment_mc,
)
from .macsim import MacConfig, run_monte_carlo
from .rates import default_alpha_grid, tangency_points, two_way_relay_region
from .relay import run_two_way_relay

__all__ = ["main"]

_SIM_COLUMNS = (
    "snr",
    "alpha1",
    "n",
    "family",
    "k",
    "f",
    "trials",
    "errors",
    "p_e",
    "ci_lo",
    "ci_hi",
    "zeff_var_meas",
    "zeff_var_pred",
    "vnr",
    "seed",
)

_GTWRC_COLUMNS = ("snr", "alpha1", "trials", "uplink_errors", "e2e_errors", "seed")

# Dimensionless second moments used as references by validate-lattice.
_NSM_REFERENCE = {
    ("dn", 3): 0.078745,
    ("dn", 4): 0.076603,
    ("e8", 8): 0.0716821,
}

_DEFAULTS: dict[str, dict] = {
    "region": {
        "snr": [5.0],
        "grid": 512,
        "include_cf": True,
        "include_outer": True,
        "out": ".",
        "figures": True,
    },
    "simulate": {
        "family": "e8",
        "n": 8,
        "k": 2,
        "f": 2,
        "power": 1.0,
        "snr": [10.0],
        "trials": 100000,
        "seed": None,
        "target": 1,
        "out": ".",
        "threads": 0,
        "figures": True,
        "format": "csv",
    },
    "gtwrc": {
        "family": "e8",
        "n": 8,
        "k": 2,
        "f": 2,
        "power": 1.0,
        "snr": [10.0],
        "trials": 100000,
        "seed": None,
        "target": 1,
        "out": ".",
        "threads": 0,
        "figures": True,
        "format": "csv",
    },
    "validate-lattice": {
        "family": "zn",
        "n": 4,
        "scale": 1.0,
        "cvp_points": 2000,
        "samples": 200000,
        "seed": None,
    },
}


class ConfigError(Exception):
    pass


def _add_chain_args(sub) -> None:
    sub.add_argument("--family", choices=("zn", "dn", "e8"), help="base lattice family")
    sub.add_argument("--n", type=int, help="lattice dimension")
    sub.add_argument("--k", type=int, help="shaping-to-intermediate nesting ratio")
    sub.add_argument("--f", type=int, help="intermediate-to-coding nesting ratio")
    sub.add_argument("--power", type=float, help="per-user power constraint")
    sub.add_argument("--snr", type=float, nargs="+", help="signal-to-noise ratios to sweep")
    sub.add_argument("--trials", type=int, help="Monte Carlo trials per snr")
    sub.add_argument("--seed", type=int, help="master seed (omit for a fresh one)")
    sub.add_argument(
        "--target", type=int, choices=(1, 2), help="which user leads the combination"
    )
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--threads", type=int, help="worker threads (results identical)")
    sub.add_argument(
        "--figures",
        action=argparse.BooleanOptionalAction,
        help="render figures next to the tables",
    )
    sub.add_argument("--format", choices=("csv", "json"), help="table format")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latmac",
        description="Nested lattice codes for recovering combinations over a Gaussian MAC",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    region = subs.add_parser("region", help="tabulate achievable rate regions")
    region.add_argument("--snr", type=float, nargs="+", help="signal-to-noise ratios")
    region.add_argument("--grid", type=int, help="coefficient sweep size")
    region.add_argument(
        "--include-cf",
        dest="include_cf",
        action=argparse.BooleanOptionalAction,
        help="also hull in the symmetric sum-decoding corner",
    )
    region.add_argument(
        "--include-outer",
        dest="include_outer",
        action=argparse.BooleanOptionalAction,
        help="emit the single-user outer bound",
    )
    region.add_argument("--out", help="output directory")
    region.add_argument(
        "--figures",
        action=argparse.BooleanOptionalAction,
        help="render figures next to the tables",
    )
    region.add_argument("--config", help="JSON file with option values")

    sim = subs.add_parser("simulate", help="Monte Carlo the MAC combination decoder")
    _add_chain_args(sim)
    sim.add_argument("--config", help="JSON file with option values")

    relay = subs.add_parser("gtwrc", help="Monte Carlo the two-way relay exchange")
    _add_chain_args(relay)
    relay.add_argument("--config", help="JSON file with option values")

    val = subs.add_parser("validate-lattice", help="self-check the lattice primitives")
    val.add_argument("--family", choices=("zn", "dn", "e8"), help="lattice family")
    val.add_argument("--n", type=int, help="lattice dimension")
    val.add_argument("--scale", type=float, help="lattice scale")
    val.add_argument("--cvp-points", dest="cvp_points", type=int, help="oracle comparison points")
    val.add_argument("--samples", type=int, help="second-moment sample count")
    val.add_argument("--seed", type=int, help="seed for the check draws")
    val.add_argument("--config", help="JSON file with option values")

    return parser


def _effective_config(args: argparse.Namespace) -> dict:
    defaults = _DEFAULTS[args.command]
    cfg = dict(defaults)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(file_cfg) - set(defaults))
        if unknown:
            raise ConfigError(
                f"unknown config keys for {args.command}: {', '.join(unknown)}"
            )
        cfg.update(file_cfg)
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if "snr" in cfg:
        snr = cfg["snr"]
        cfg["snr"] = [float(s) for s in (snr if isinstance(snr, (list, tuple)) else [snr])]
    if cfg.get("seed") is None and "seed" in defaults:
        cfg["seed"] = int.from_bytes(os.urandom(8), "little")
        cfg["seed_generated"] = True
    return cfg


def _snr_token(snr: float) -> str:
    return f"{snr:g}".replace("-", "m")


def _cmd_region(cfg: dict) -> int:
    from . import reporting

    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    for snr in cfg["snr"]:
        region = two_way_relay_region(
            snr,
            alphas=default_alpha_grid(snr, cfg["grid"]),
            include_cf=cfg["include_cf"],
        )
        columns, rows = reporting.region_rows(region, include_outer=cfg["include_outer"])
        meta = {
            "command": "region",
            "snr": snr,
            "grid": cfg["grid"],
            "include_cf": cfg["include_cf"],
            "include_outer": cfg["include_outer"],
            "alpha_star": region.alpha_star,
            "outer_bound": region.outer,
            "cf_rate": region.cf,
        }
        token = _snr_token(snr)
        reporting.write_table(outdir / f"region_snr{token}.csv", meta, columns, rows)
        pt_a, pt_b = tangency_points(snr)
        reporting.write_json(
            outdir / f"region_snr{token}.json",
            {
                "snr": snr,
                "alpha_mmse": region.alpha_star,
                "outer_bound": region.outer,
                "cf_rate": region.cf,
                "point_A": [pt_a.r1, pt_a.r2],
                "point_B": [pt_b.r1, pt_b.r2],
                "boundary_points": len(region.boundary),
                "hull_vertices": len(region.hull),
                "config": {k: cfg[k] for k in ("grid", "include_cf", "include_outer")},
            },
        )
        if cfg["figures"]:
            reporting.render_region_figure(outdir / f"region_snr{token}.png", region)
        print(
            f"snr={snr:g}: alpha*={region.alpha_star:.6f} "
            f"outer={region.outer:.6f} cf={region.cf:.6f} "
            f"A=({pt_a.r1:.6f},{pt_a.r2:.6f}) B=({pt_b.r1:.6f},{pt_b.r2:.6f})"
        )
    return 0


def _resolve_threads(threads: int) -> int:
    if threads == 0:
        return os.cpu_count() or 1
    if threads < 0:
        raise ValueError("threads must be nonnegative")
    return threads


def _run_sweep(cfg: dict, runner, row_builder) -> list[dict] | None:
    chain = build_chain(cfg["family"], cfg["n"], cfg["k"], cfg["f"], cfg["power"])
    failures = [res for res in validate_chain(chain) if not res.passed]
    if failures:
        for res in failures:
            print(
                f"FAIL {res.name}: measured {res.measured:.6g}, "
                f"expected {res.expected:.6g}",
                file=sys.stderr,
            )
        return None
    threads = _resolve_threads(cfg["threads"])
    rows = []
    for snr in cfg["snr"]:
        if not snr > 0:
            raise ValueError("snr must be positive")
        config = MacConfig(
            chain=chain,
            noise_var=cfg["power"] / snr,
            trials=cfg["trials"],
            master_seed=cfg["seed"],
            lead_user=cfg["target"],
        )
        report = runner(config, threads)
        rows.append(row_builder(chain, snr, report))
    return rows


def _table_meta(cfg: dict, command: str) -> dict:
    # everything needed to reproduce the run; thread count and output
    # paths deliberately excluded so reruns compare byte for byte
    return {
        "command": command,
        "family": cfg["family"],
        "n": cfg["n"],
        "k": cfg["k"],
        "f": cfg["f"],
        "power": cfg["power"],
        "snr": " ".join(f"{s:g}" for s in cfg["snr"]),
        "trials": cfg["trials"],
        "target": cfg["target"],
        "seed": cfg["seed"],
    }


def _write_rows(cfg: dict, command: str, columns, rows: list[dict]) -> Path:
    from . import reporting

    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    meta = _table_meta(cfg, command)
    if cfg["format"] == "json":
        path = outdir / f"{command}.json"
        reporting.write_json(path, {"config": meta, "rows": rows})
    else:
        path = outdir / f"{command}.csv"
        reporting.write_table(
            path, meta, columns, [[row[c] for c in columns] for row in rows]
        )
    return path


def _cmd_simulate(cfg: dict) -> int:
    from . import reporting

    def build_row(chain, snr, report):
        row = {
            "snr": snr,
            "alpha1": chain.alpha_float,
            "n": chain.n,
            "family": chain.family,
            "k": chain.k,
            "f": chain.f,
        }
        row.update(report.to_dict())
        return row

    if cfg.get("seed_generated"):
        print(f"seed={cfg['seed']} (generated)")
    rows = _run_sweep(cfg, run_monte_carlo, build_row)
    if rows is None:
        return 3
    path = _write_rows(cfg, "simulate", _SIM_COLUMNS, rows)
    if cfg["figures"]:
        reporting.render_sim_figure(Path(cfg["out"]) / "simulate.png", rows)
    for row in rows:
        print(
            f"snr={row['snr']:g}: p_e={row['p_e']:.6g} "
            f"ci=[{row['ci_lo']:.6g},{row['ci_hi']:.6g}] "
            f"zeff_var={row['zeff_var_meas']:.6g} (pred {row['zeff_var_pred']:.6g}) "
            f"vnr={row['vnr']:.6g}"
        )
    print(f"wrote {path}")
    return 0


def _cmd_gtwrc(cfg: dict) -> int:
    from . import reporting

    def build_row(chain, snr, report):
        row = {"snr": snr, "alpha1": chain.alpha_float}
        row.update(report.to_dict())
        return row

    if cfg.get("seed_generated"):
        print(f"seed={cfg['seed']} (generated)")
    rows = _run_sweep(cfg, run_two_way_relay, build_row)
    if rows is None:
        return 3
    path = _write_rows(cfg, "gtwrc", _GTWRC_COLUMNS, rows)
    if cfg["figures"]:
        reporting.render_relay_figure(Path(cfg["out"]) / "gtwrc.png", rows)
    for row in rows:
        print(
            f"snr={row['snr']:g}: uplink={row['uplink_errors']}/{row['trials']} "
            f"e2e={row['e2e_errors']}/{row['trials']}"
        )
    print(f"wrote {path}")
    return 0


def _make_lattice(family: str, n: int, scale: float):
    if family == "zn":
        return integer_lattice(n, scale)
    if family == "dn":
        return d_lattice(n, scale)
    if family == "e8":
        if n != 8:
            raise ValueError("the e8 family fixes n = 8")
        return e8_lattice(scale)
    raise ValueError(f"unknown lattice family {family!r}")


def _cmd_validate_lattice(cfg: dict) -> int:
    if cfg.get("seed_generated"):
        print(f"seed={cfg['seed']} (generated)")
    lat = _make_lattice(cfg["family"], cfg["n"], cfg["scale"])
    rng = np.random.default_rng(cfg["seed"])
    checks: list[tuple[str, bool, str]] = []
    tol = REL_TOL * max(1.0, lat.scale)

    half = 2.0 * lat.scale * math.sqrt(lat.n)
    mism = 0
    for _ in range(int(cfg["cvp_points"])):
        x = (rng.random(lat.n) - 0.5) * 2.0 * half
        fast = nearest_point(lat, x)
        oracle = brute_force_cvp(lat, x, lat.covering_radius_bound * (1 + 1e-9) + 1e-9)
        if np.abs(fast - oracle).max() > tol:
            mism += 1
    checks.append(
        (
            "cvp matches enumeration oracle",
            mism == 0,
            f"{mism} mismatches in {cfg['cvp_points']} points",
        )
    )

    bad_dist = 0
    bad_idem = 0
    for _ in range(1000):
        x = (rng.random(lat.n) - 0.5) * 2.0 * half
        y = (rng.random(lat.n) - 0.5) * 2.0 * half
        lhs = mod_lattice(lat, mod_lattice(lat, x) + y)
        rhs = mod_lattice(lat, x + y)
        if np.abs(lhs - rhs).max() > tol:
            bad_dist += 1
        m = mod_lattice(lat, x)
        if np.abs(mod_lattice(lat, m) - m).max() > tol:
            bad_idem += 1
    checks.append(
        ("modulo distributes over addition", bad_dist == 0, f"{bad_dist} failures in 1000")
    )
    checks.append(("modulo is idempotent", bad_idem == 0, f"{bad_idem} failures in 1000"))

    est, se = second_moment_mc(lat, int(cfg["samples"]), cfg["seed"])
    if lat.family == "zn":
        expect = lat.scale**2 / 12.0
        ok = abs(est - expect) <= 5.0 * se + REL_TOL * expect
        checks.append(
            ("second moment matches scale^2/12", ok, f"est={est:.6g} expect={expect:.6g}")
        )
    ref = _NSM_REFERENCE.get((lat.family, lat.n))
    if ref is not None:
        nsm = est / lat.volume ** (2.0 / lat.n)
        ok = abs(nsm - ref) <= 0.01 * ref
        checks.append(
            ("normalized second moment near reference", ok, f"est={nsm:.6g} ref={ref:.6g}")
        )
    est2, _ = second_moment_mc(scale_lattice(lat, 2.0), int(cfg["samples"]), cfg["seed"])
    ok = abs(est2 - 4.0 * est) <= REL_TOL * max(1.0, est2)
    checks.append(
        ("second moment scales quadratically", ok, f"x2 lattice: {est2:.6g} vs {4 * est:.6g}")
    )

    failed = 0
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        if not ok:
            failed += 1
    return 3 if failed else 0


_HANDLERS = {
    "region": _cmd_region,
    "simulate": _cmd_simulate,
    "gtwrc": _cmd_gtwrc,
    "validate-lattice": _cmd_validate_lattice,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        cfg = _effective_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return _HANDLERS[args.command](cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
