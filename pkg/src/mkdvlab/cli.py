"""Command-line entry points.

Verbs: solve, energy-track, verify-estimates, b4-check, scaling,
linear-window, apriori.  Every command reads a JSON config (schema-validated,
unknown keys rejected), writes its outputs under --out, and embeds the config
echo, tool version, and seed in every file so a run is reproducible from its
own output.  Exit codes: 0 success, 2 validation error, 3 numerical budget
error, 4 blow-up-terminated run (partial results still written).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .energy import energy_identity_check, sample_energies
from .errors import BudgetError, ConfigurationError
from .estimates import (
    apriori_growth_experiment,
    bilinear_sweep,
    linear_window_experiment,
    smoothing_maximal_sweep,
    strichartz_sweep,
    summarize_records,
    write_records_csv,
)
from .solver import SolverConfig, scaling_equivariance_check, solve
from .spectral import GridSpec, RealField, idft
from .symbols import B4Evaluator, make_aN

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_BLOWUP = 4

_GRID_SCHEMA = {
    "type": "object",
    "properties": {
        "length": {"type": "number", "exclusiveMinimum": 0},
        "n": {"type": "integer", "minimum": 4},
    },
    "required": ["length", "n"],
    "additionalProperties": False,
}

_DATA_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["gaussian", "zero", "random_block", "rough"]},
        "amplitude": {"type": "number"},
        "width": {"type": "number", "exclusiveMinimum": 0},
        "center": {"type": "number"},
        "block": {"type": "number", "exclusiveMinimum": 0},
        "s": {"type": "number"},
        "norm": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

SCHEMAS = {
    "solve": {
        "type": "object",
        "properties": {
            "grid": _GRID_SCHEMA,
            "data": _DATA_SCHEMA,
            "dt": {"type": "number", "exclusiveMinimum": 0},
            "horizon": {"type": "number", "exclusiveMinimum": 0},
            "sign": {"enum": [1, -1]},
            "dealias": {"type": "boolean"},
            "record_stride": {"type": "integer", "minimum": 1},
            "nonlinearity": {"type": "number"},
            "seed": {"type": "integer", "minimum": 0},
            "out": {"type": "string"},
            "threads": {"type": "integer", "minimum": 1},
        },
        "required": ["grid", "data", "dt", "horizon"],
        "additionalProperties": False,
    },
    "energy-track": {
        "type": "object",
        "properties": {
            "grid": _GRID_SCHEMA,
            "data": _DATA_SCHEMA,
            "dt": {"type": "number", "exclusiveMinimum": 0},
            "horizon": {"type": "number", "exclusiveMinimum": 0},
            "sign": {"enum": [1, -1]},
            "dealias": {"type": "boolean"},
            "record_stride": {"type": "integer", "minimum": 1},
            "symbol": {
                "type": "object",
                "properties": {
                    "N": {"type": "number", "exclusiveMinimum": 0},
                    "s": {"type": "number", "maximum": 0},
                    "M": {"type": "number", "minimum": 1},
                },
                "required": ["N", "s"],
                "additionalProperties": False,
            },
            "which": {"enum": ["E0-vs-R4", "E0E1-vs-R6"]},
            "seed": {"type": "integer", "minimum": 0},
            "out": {"type": "string"},
            "threads": {"type": "integer", "minimum": 1},
        },
        "required": ["grid", "data", "dt", "horizon", "symbol", "which"],
        "additionalProperties": False,
    },
    "verify-estimates": {
        "type": "object",
        "properties": {
            "grid": _GRID_SCHEMA,
            "estimates": {
                "type": "array",
                "items": {"enum": ["strichartz", "smoothing", "bilinear"]},
                "minItems": 1,
            },
            "Ns": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            "M1s": {"type": "array", "items": {"type": "number"}},
            "M2s": {"type": "array", "items": {"type": "number"}},
            "trials": {"type": "integer", "minimum": 1},
            "n_time_samples": {"type": "integer", "minimum": 2},
            "seed": {"type": "integer", "minimum": 0},
            "out": {"type": "string"},
            "threads": {"type": "integer", "minimum": 1},
        },
        "required": ["grid", "estimates"],
        "additionalProperties": False,
    },
    "b4-check": {
        "type": "object",
        "properties": {
            "symbol": {
                "type": "object",
                "properties": {
                    "N": {"type": "number", "exclusiveMinimum": 0},
                    "s": {"type": "number", "maximum": 0},
                    "M": {"type": "number", "minimum": 1},
                },
                "required": ["N", "s"],
                "additionalProperties": False,
            },
            "n_points": {"type": "integer", "minimum": 1},
            "freq_scale": {"type": "number", "exclusiveMinimum": 0},
            "seed": {"type": "integer", "minimum": 0},
            "out": {"type": "string"},
            "threads": {"type": "integer", "minimum": 1},
        },
        "required": ["symbol"],
        "additionalProperties": False,
    },
    "scaling": {
        "type": "object",
        "properties": {
            "grid": _GRID_SCHEMA,
            "data": _DATA_SCHEMA,
            "dt": {"type": "number", "exclusiveMinimum": 0},
            "horizon": {"type": "number", "exclusiveMinimum": 0},
            "sign": {"enum": [1, -1]},
            "lambda": {"type": "number", "exclusiveMinimum": 0},
            "seed": {"type": "integer", "minimum": 0},
            "out": {"type": "string"},
            "threads": {"type": "integer", "minimum": 1},
        },
        "required": ["grid", "data", "dt", "horizon", "lambda"],
        "additionalProperties": False,
    },
    "linear-window": {
        "type": "object",
        "properties": {
            "grid": _GRID_SCHEMA,
            "Ns": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            "s": {"type": "number"},
            "sign": {"enum": [1, -1]},
            "window_factor": {"type": "number", "exclusiveMinimum": 0},
            "n_steps": {"type": "integer", "minimum": 8},
            "nonlinearity": {"type": "number"},
            "seed": {"type": "integer", "minimum": 0},
            "out": {"type": "string"},
            "threads": {"type": "integer", "minimum": 1},
        },
        "required": ["grid", "Ns", "s"],
        "additionalProperties": False,
    },
    "apriori": {
        "type": "object",
        "properties": {
            "grid": _GRID_SCHEMA,
            "s": {"type": "number"},
            "R": {"type": "number", "exclusiveMinimum": 0},
            "horizon": {"type": "number", "exclusiveMinimum": 0},
            "trials": {"type": "integer", "minimum": 1},
            "dt": {"type": "number", "exclusiveMinimum": 0},
            "record_stride": {"type": "integer", "minimum": 1},
            "sign": {"enum": [1, -1]},
            "seed": {"type": "integer", "minimum": 0},
            "out": {"type": "string"},
            "threads": {"type": "integer", "minimum": 1},
        },
        "required": ["grid", "s"],
        "additionalProperties": False,
    },
}


def _validate_config(command: str, config: dict) -> None:
    import jsonschema

    try:
        jsonschema.validate(config, SCHEMAS[command])
    except jsonschema.ValidationError as e:
        raise ConfigurationError(f"config validation failed: {e.message}") from e


def _build_data(grid: GridSpec, spec: dict, seed: int) -> RealField:
    kind = spec["kind"]
    if kind == "zero":
        return RealField(grid, np.zeros(grid.n))
    if kind == "gaussian":
        amp = spec.get("amplitude", 1.0)
        width = spec.get("width", 4.0)
        center = spec.get("center", grid.length / 2.0)
        return RealField(
            grid, amp * np.exp(-((grid.x - center) ** 2) / (2.0 * width**2))
        )
    if kind == "random_block":
        from .estimates import random_block_field

        rng = np.random.default_rng([seed, 5])
        return idft(random_block_field(grid, spec["block"], rng))
    if kind == "rough":
        from .estimates import rough_random_field

        rng = np.random.default_rng([seed, 5])
        return rough_random_field(grid, spec.get("s", 0.0), spec.get("norm", 1.0), rng)
    raise ConfigurationError(f"unknown data kind {kind!r}")


def _provenance(config: dict, seed: int) -> dict:
    return {"config": config, "version": __version__, "seed": seed}


def _write_json(path, payload: dict) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True, indent=1)
        f.write("\n")


def _prov_comment(config: dict, seed: int) -> str:
    return json.dumps(_provenance(config, seed), sort_keys=True)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_solve(config, outdir, seed):
    grid = GridSpec(config["grid"]["length"], config["grid"]["n"])
    u0 = _build_data(grid, config["data"], seed)
    cfg = SolverConfig(
        grid=grid, dt=config["dt"], horizon=config["horizon"],
        sign=float(config.get("sign", 1)), dealias=config.get("dealias", True),
        record_stride=config.get("record_stride", 1),
        nonlinearity=config.get("nonlinearity", 1.0),
    )
    flow = solve(u0, cfg)
    flow.save(outdir, extra_meta=_provenance(config, seed))
    print(
        f"solve: final_time={flow.times[-1]:.17g} mass_drift={flow.mass_drift:.3e} "
        f"blow_up={flow.blown_up}"
    )
    return EXIT_BLOWUP if flow.blown_up else EXIT_OK


def _cmd_energy_track(config, outdir, seed):
    grid = GridSpec(config["grid"]["length"], config["grid"]["n"])
    u0 = _build_data(grid, config["data"], seed)
    sym = config["symbol"]
    a = make_aN(sym["N"], sym["s"], sym.get("M", 1.0))
    cfg = SolverConfig(
        grid=grid, dt=config["dt"], horizon=config["horizon"],
        sign=float(config.get("sign", 1)), dealias=config.get("dealias", True),
        record_stride=config.get("record_stride", 1),
    )
    flow = solve(u0, cfg)
    which = config["which"]
    report = sample_energies(flow, a, with_quartic=(which == "E0E1-vs-R6"))
    ident = energy_identity_check(flow, a, which)
    with open(os.path.join(outdir, "energy.jsonl"), "w") as f:
        f.write(json.dumps({"provenance": _provenance(config, seed)}, sort_keys=True))
        f.write("\n")
        f.write(report.to_jsonl())
    _write_json(
        os.path.join(outdir, "identity.json"),
        {
            **_provenance(config, seed),
            "which": ident.which,
            "fd_step": ident.fd_step,
            "max_rel": ident.max_rel,
            "median_rel": ident.median_rel,
            "refinement": ident.refinement,
            "refinement_order": ident.refinement_order,
        },
    )
    print(
        f"energy-track: {which} max_rel={ident.max_rel:.3e} "
        f"order={ident.refinement_order:.2f}"
    )
    return EXIT_BLOWUP if flow.blown_up else EXIT_OK


def _cmd_verify_estimates(config, outdir, seed, threads=1):
    grid = GridSpec(config["grid"]["length"], config["grid"]["n"])
    which = config["estimates"]
    trials = config.get("trials", 20)
    nt = config.get("n_time_samples", 513)
    records = []
    if "strichartz" in which:
        records += strichartz_sweep(
            grid, Ns=config.get("Ns", (4, 8, 16, 32, 64, 128)),
            trials=trials, seed=seed, n_time_samples=nt, threads=threads,
        )
    if "smoothing" in which:
        records += smoothing_maximal_sweep(
            grid, Ns=config.get("Ns", (4, 8, 16, 32, 64, 128)),
            trials=trials, seed=seed, n_time_samples=nt, threads=threads,
        )
    if "bilinear" in which:
        records += bilinear_sweep(
            grid, M1s=config.get("M1s", (4,)),
            M2s=config.get("M2s", (8, 16, 32, 64, 128)),
            trials=trials, seed=seed, n_time_samples=nt, threads=threads,
        )
    write_records_csv(
        os.path.join(outdir, "sweeps.csv"), records, _prov_comment(config, seed)
    )
    summary = summarize_records(records)
    _write_json(
        os.path.join(outdir, "summary.json"),
        {**_provenance(config, seed), "summary": summary},
    )
    for key, v in summary.items():
        print(f"verify-estimates: {key} max/median={v['max_over_median']:.3f} "
              f"{'PASS' if v['passes'] else 'FAIL'}")
    return EXIT_OK


def _cmd_b4_check(config, outdir, seed):
    from .symbols import random_p4_points

    sym = config["symbol"]
    a = make_aN(sym["N"], sym["s"], sym.get("M", 1.0))
    ev = B4Evaluator(a)
    n_points = config.get("n_points", 10000)
    scale = config.get("freq_scale", 4.0 * sym["N"])
    rng = np.random.default_rng([seed, 11])
    x1, x2, x3 = random_p4_points(rng, scale, n_points)
    x4 = -(x1 + x2 + x3)
    top = np.maximum.reduce([np.abs(v) for v in (x1, x2, x3, x4)])
    top = np.maximum(top, a.M)
    pair_min = np.minimum.reduce(
        [np.abs(x1 + x2), np.abs(x1 + x3), np.abs(x2 + x3)]
    )
    nonsing = pair_min >= ev.eps_rel * top
    ident = float(np.max(ev.identity_residual(x1[nonsing], x2[nonsing], x3[nonsing])))
    b = ev.stable(x1, x2, x3)
    mags = np.sort(np.stack([np.abs(v) for v in (x1, x2, x3, x4)]), axis=0)
    size = a(mags[1]) / np.maximum(mags[3], a.M) ** 2
    denom = np.maximum(np.abs(b), size)
    perms = [(x2, x1, x3), (x3, x2, x1), (x2, x3, x1)]
    perm_res = max(
        float(np.max(np.abs(ev.stable(*pp) - b) / denom)) for pp in perms
    )
    even_res = float(np.max(np.abs(ev.stable(-x1, -x2, -x3) - b) / denom))
    payload = {
        **_provenance(config, seed),
        "identity_max_rel": ident,
        "permutation_max_rel": perm_res,
        "evenness_max_rel": even_res,
        "finite": bool(np.all(np.isfinite(b))),
    }
    _write_json(os.path.join(outdir, "b4_check.json"), payload)
    print(
        f"b4-check: identity={ident:.3e} permutation={perm_res:.3e} "
        f"even={even_res:.3e}"
    )
    return EXIT_OK


def _cmd_scaling(config, outdir, seed):
    grid = GridSpec(config["grid"]["length"], config["grid"]["n"])
    u0 = _build_data(grid, config["data"], seed)
    cfg = SolverConfig(
        grid=grid, dt=config["dt"], horizon=config["horizon"],
        sign=float(config.get("sign", 1)),
    )
    lam = config["lambda"]
    disc = scaling_equivariance_check(u0, lam, cfg)
    _write_json(
        os.path.join(outdir, "scaling.json"),
        {**_provenance(config, seed), "lambda": lam, "max_rel_discrepancy": disc},
    )
    print(f"scaling: lambda={lam:g} discrepancy={disc:.3e}")
    return EXIT_OK


def _cmd_linear_window(config, outdir, seed):
    grid = GridSpec(config["grid"]["length"], config["grid"]["n"])
    results = []
    for N in config["Ns"]:
        results.append(
            linear_window_experiment(
                grid, N, config["s"], sign=float(config.get("sign", 1)),
                seed=seed, window_factor=config.get("window_factor", 1.0),
                n_steps=config.get("n_steps", 256),
                nonlinearity=config.get("nonlinearity", 1.0),
            )
        )
    path = os.path.join(outdir, "linear_window.csv")
    with open(path, "w", newline="") as f:
        f.write(f"# {_prov_comment(config, seed)}\n")
        f.write("N,t,theta,deviation\n")
        for res in results:
            for row in res["rows"]:
                f.write(
                    f"{res['N']:.17g},{row['t']:.17g},{row['theta']:.17g},"
                    f"{row['deviation']:.17g}\n"
                )
    blown = any(r["blown_up"] for r in results)
    for res in results:
        dev1 = res["rows"][-1]["deviation"]
        print(f"linear-window: N={res['N']:g} deviation(theta_max)={dev1:.6e}")
    return EXIT_BLOWUP if blown else EXIT_OK


def _cmd_apriori(config, outdir, seed):
    grid = GridSpec(config["grid"]["length"], config["grid"]["n"])
    res = apriori_growth_experiment(
        grid, config["s"], R=config.get("R", 1.0),
        horizon=config.get("horizon", 1.0), trials=config.get("trials", 20),
        seed=seed, sign=float(config.get("sign", 1)),
        dt=config.get("dt", 1e-4), record_stride=config.get("record_stride", 100),
    )
    path = os.path.join(outdir, "apriori.csv")
    with open(path, "w", newline="") as f:
        f.write(f"# {_prov_comment(config, seed)}\n")
        f.write("trial,sup_ratio,blown_up,final_time\n")
        for row in res["rows"]:
            f.write(
                f"{row['trial']},{row['sup_ratio']:.17g},{int(row['blown_up'])},"
                f"{row['final_time']:.17g}\n"
            )
    _write_json(
        os.path.join(outdir, "apriori_summary.json"),
        {
            **_provenance(config, seed),
            "reference": res["reference"],
            "max_ratio": res["max_ratio"],
            "below_reference": res["below_reference"],
        },
    )
    print(
        f"apriori: max_ratio={res['max_ratio']:.6f} reference={res['reference']:.6f} "
        f"below={res['below_reference']}"
    )
    blown = any(r["blown_up"] for r in res["rows"])
    return EXIT_BLOWUP if blown else EXIT_OK


_COMMANDS = {
    "solve": _cmd_solve,
    "energy-track": _cmd_energy_track,
    "verify-estimates": _cmd_verify_estimates,
    "b4-check": _cmd_b4_check,
    "scaling": _cmd_scaling,
    "linear-window": _cmd_linear_window,
    "apriori": _cmd_apriori,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mkdvlab",
        description="Numerical laboratory for mKdV dispersive analysis",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (u64)")
    parser.add_argument("--threads", type=int, default=None, help="worker threads")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as f:
            config = json.load(f)
        if not isinstance(config, dict):
            raise ConfigurationError("config root must be a JSON object")
        _validate_config(args.command, config)
    except (OSError, json.JSONDecodeError, ConfigurationError) as e:
        json.dump({"error": "configuration", "detail": str(e)}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_CONFIG

    seed = args.seed if args.seed is not None else config.get("seed", 0)
    outdir = args.out or config.get("out", "out")
    threads = args.threads if args.threads is not None else config.get("threads", 1)
    os.makedirs(outdir, exist_ok=True)

    try:
        if args.command == "verify-estimates":
            return _cmd_verify_estimates(config, outdir, seed, threads)
        return _COMMANDS[args.command](config, outdir, seed)
    except ConfigurationError as e:
        json.dump({"error": "configuration", "detail": str(e)}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_CONFIG
    except BudgetError as e:
        json.dump(
            {"error": "budget", "detail": str(e), "required": e.required}, sys.stderr
        )
        sys.stderr.write("\n")
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
