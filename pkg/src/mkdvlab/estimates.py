"""Randomized sweeps over the linear dispersive estimates and the two
flow-level experiments.

Each sweep propagates random frequency-localized data exactly under the
Airy group and measures mixed space-time norms over a time window capped by
the wraparound validator, T_N = (L/4) / (3 (2 max_freq)^2).  Within that
window the box mimics the line; the finite window deflates every measured
constant by a comparable geometric fraction, so the falsifiable content --
flatness of the normalized ratio across the scale axis -- survives.  All
sweeps are deterministic: the RNG stream is keyed on (seed, estimate tag,
scale index, trial).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .airy import airy_mixed_norms, airy_propagate
from .errors import ConfigurationError
from .solver import SolverConfig, solve
from .spectral import (
    GridSpec,
    LPPartition,
    RealField,
    SpectralField,
    check_wraparound,
    dft,
    idft,
    l2_norm,
    lp_project,
    sobolev_norm,
    wraparound_limit,
)

__all__ = [
    "SweepRecord",
    "ADMISSIBLE_PAIRS",
    "random_block_field",
    "random_interval_field",
    "rough_random_field",
    "strichartz_sweep",
    "smoothing_maximal_sweep",
    "bilinear_sweep",
    "summarize_records",
    "write_records_csv",
    "linear_window_experiment",
    "apriori_growth_experiment",
]

INF = math.inf
ADMISSIBLE_PAIRS = ((INF, 2.0), (6.0, 6.0), (4.0, INF))

_ESTIMATE_TAGS = {"strichartz": 1, "smoothing": 2, "bilinear": 3}


@dataclass
class SweepRecord:
    estimate_id: str
    p: float
    q: float
    scale: float         # block N, or M1 for the bilinear sweep
    scale2: float         # M2 for the bilinear sweep, else nan
    trial: int
    raw_ratio: float
    normalized_ratio: float
    seed: int


def _require_admissible(p: float, q: float) -> None:
    lhs = (0.0 if math.isinf(p) else 2.0 / p) + (0.0 if math.isinf(q) else 1.0 / q)
    if abs(lhs - 0.5) > 1e-12 or not (4 <= p) or not (2 <= q):
        raise ValueError(f"(p,q)=({p},{q}) is not an admissible pair")


def _rng(seed: int, tag: str, scale_idx: int, trial: int):
    return np.random.default_rng([seed, _ESTIMATE_TAGS[tag], scale_idx, trial])


def random_block_field(grid: GridSpec, N: float, rng) -> SpectralField:
    """Real field with i.i.d. complex Gaussian coefficients on the dyadic
    annulus N/2 <= |xi| <= 2N, Hermitian-symmetrized, unit L2 norm."""
    xi = grid.xi
    pos = np.nonzero((xi >= N / 2.0) & (xi <= 2.0 * N))[0]
    if pos.size == 0:
        raise ConfigurationError(f"grid resolves no modes in block N={N}")
    c = np.zeros(grid.n, dtype=complex)
    c[pos] = rng.standard_normal(pos.size) + 1j * rng.standard_normal(pos.size)
    # mirror onto negative frequencies
    neg = np.mod(-pos, grid.n)
    c[neg] = np.conj(c[pos])
    spec = SpectralField(grid, c)
    nrm = l2_norm(spec)
    return SpectralField(grid, spec.coeffs / nrm)


def random_interval_field(grid: GridSpec, lo: float, hi: float, rng) -> SpectralField:
    """One-sided complex field supported on lo <= xi <= hi, unit L2."""
    xi = grid.xi
    idx = np.nonzero((xi >= lo) & (xi <= hi))[0]
    if idx.size == 0:
        raise ConfigurationError(f"grid resolves no modes in [{lo}, {hi}]")
    c = np.zeros(grid.n, dtype=complex)
    c[idx] = rng.standard_normal(idx.size) + 1j * rng.standard_normal(idx.size)
    spec = SpectralField(grid, c)
    return SpectralField(grid, spec.coeffs / l2_norm(spec))


def rough_random_field(grid: GridSpec, s: float, R: float, rng,
                       decay_margin: float = 0.05) -> RealField:
    """Random data barely in H^s: |uhat| ~ <xi>^{-(s + 1/2 + margin)},
    Gaussian phases, normalized to ||u||_{H^s} = R (M = 1 weight)."""
    xi = grid.xi
    env = (1.0 + xi**2) ** (-(s + 0.5 + decay_margin) / 2.0)
    c = env * (rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n))
    neg = np.mod(-np.arange(grid.n), grid.n)
    c = 0.5 * (c + np.conj(c[neg]))
    spec = SpectralField(grid, c)
    nrm = sobolev_norm(spec, s, 1.0)
    return idft(SpectralField(grid, spec.coeffs * (R / nrm)))


# ---------------------------------------------------------------------------
# Linear sweeps
# ---------------------------------------------------------------------------


def _run_trials(tasks, threads: int):
    """Run (key, thunk) tasks, possibly on a thread pool; results are merged
    in key order so the record stream is identical for any thread count."""
    if threads <= 1:
        results = {key: thunk() for key, thunk in tasks}
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {key: pool.submit(thunk) for key, thunk in tasks}
        results = {key: fut.result() for key, fut in futures.items()}
    merged = []
    for key in sorted(results):
        merged.extend(results[key])
    return merged


def _sweep_linear(
    estimate_id: str,
    grid: GridSpec,
    pairs,
    Ns,
    trials: int,
    seed: int,
    n_time_samples: int,
    horizon_cap: float,
    threads: int = 1,
):
    """Shared machinery for the Strichartz and smoothing/maximal sweeps."""
    order = "time-outer" if estimate_id == "strichartz" else "space-outer"
    for p, q in pairs:
        _require_admissible(p, q)
    part = LPPartition(grid, M=1.0)
    absxi = np.abs(grid.xi)

    def deriv_power(p):
        if estimate_id == "strichartz":
            return 0.0 if math.isinf(p) else 1.0 / p
        return 1.0 - (0.0 if math.isinf(p) else 5.0 / p)

    wants = [(p, q, order) for p, q in pairs]

    def make_task(si, N, T, trial):
        def thunk():
            rng = _rng(seed, estimate_id, si, trial)
            phi = random_block_field(grid, N, rng)
            datas = [lp_project(phi, part, float(N))]
            for p, _ in pairs:
                alpha = deriv_power(p)
                if alpha == 0.0:
                    mult = np.ones_like(absxi)
                else:
                    with np.errstate(divide="ignore"):
                        mult = np.where(absxi > 0, absxi**alpha, 0.0)
                datas.append(SpectralField(grid, phi.coeffs * mult))
            norms = airy_mixed_norms(datas, T, n_time_samples, wants)
            return [
                SweepRecord(
                    estimate_id=estimate_id, p=p, q=q, scale=float(N),
                    scale2=math.nan, trial=trial,
                    raw_ratio=float(norms[j + 1][j]),
                    normalized_ratio=float(N ** deriv_power(p) * norms[0][j]),
                    seed=seed,
                )
                for j, (p, q) in enumerate(pairs)
            ]

        return thunk

    tasks = []
    for si, N in enumerate(Ns):
        if 2.0 * N > grid.xi_max:
            raise ConfigurationError(
                f"block N={N} not resolved: need max frequency >= {2.0 * N}"
            )
        if float(N) not in part.blocks:
            raise ConfigurationError(f"N={N} is not a dyadic block of the grid")
        T = min(horizon_cap, wraparound_limit(grid, 2.0 * N))
        for trial in range(trials):
            tasks.append(((si, trial), make_task(si, N, T, trial)))
    return _run_trials(tasks, threads)


def strichartz_sweep(
    grid: GridSpec,
    pairs=ADMISSIBLE_PAIRS,
    Ns=(4, 8, 16, 32, 64, 128),
    trials: int = 20,
    seed: int = 0,
    n_time_samples: int = 513,
    horizon_cap: float = 1.0,
    threads: int = 1,
):
    """Time-outer norms of D^{1/p} e^{-t dxxx} on random block data.

    raw_ratio is ||D^{1/p} u||_{L^p_t L^q_x} (unit-L2 data); the normalized
    ratio is the block form N^{1/p} ||P_N u||_{L^p_t L^q_x}, which the
    dispersive estimate asserts is bounded uniformly in N.
    """
    return _sweep_linear(
        "strichartz", grid, pairs, Ns, trials, seed, n_time_samples,
        horizon_cap, threads,
    )


def smoothing_maximal_sweep(
    grid: GridSpec,
    pairs=ADMISSIBLE_PAIRS,
    Ns=(4, 8, 16, 32, 64, 128),
    trials: int = 20,
    seed: int = 0,
    n_time_samples: int = 513,
    horizon_cap: float = 1.0,
    threads: int = 1,
):
    """Space-outer norms: D^{1-5/p} e^{-t dxxx} in L^p_x L^q_t.

    Block normalizations are N^{1-5/p}: N^{+1} for (inf,2) (local
    smoothing), N^{1/6} for (6,6), N^{-1/4} for (4,inf) (maximal function).
    """
    return _sweep_linear(
        "smoothing", grid, pairs, Ns, trials, seed, n_time_samples,
        horizon_cap, threads,
    )


def bilinear_sweep(
    grid: GridSpec,
    M1s=(4,),
    M2s=(8, 16, 32, 64, 128),
    trials: int = 20,
    seed: int = 0,
    n_time_samples: int = 513,
    horizon_cap: float = 1.0,
    threads: int = 1,
):
    """Product of two frequency-separated Airy waves in L^2_{t,x}.

    Interval geometry: E1 = [xi0 - w, xi0 + w], E2 = [-xi0 + M1 - w,
    -xi0 + M1 + w] with xi0 = (M1 + M2)/2 and w = min(M1, M2)/4, so sums
    concentrate near M1 and differences near M2.  Records the
    (M1 M2)^{1/2}-normalized ratio.
    """

    def make_task(si, M1, M2, trial):
        w = min(M1, M2) / 4.0
        xi0 = (M1 + M2) / 2.0
        T = min(horizon_cap, wraparound_limit(grid, xi0 + w))
        times = np.linspace(0.0, T, n_time_samples)
        tw = np.zeros(n_time_samples)
        tw[:-1] += 0.5 * np.diff(times)
        tw[1:] += 0.5 * np.diff(times)

        def thunk():
            rng = _rng(seed, "bilinear", si, trial)
            f = random_interval_field(grid, xi0 - w, xi0 + w, rng)
            g = random_interval_field(grid, -xi0 + M1 - w, -xi0 + M1 + w, rng)
            acc = 0.0
            chunk = 64
            for i0 in range(0, n_time_samples, chunk):
                tt = times[i0 : i0 + chunk][:, None]
                phase = np.exp(1j * tt * grid.xi[None, :] ** 3)
                U = np.fft.ifft(phase * f.coeffs[None, :], axis=1) / grid.dx
                V = np.fft.ifft(phase * g.coeffs[None, :], axis=1) / grid.dx
                acc += float(
                    np.sum(tw[i0 : i0 + chunk, None] * np.abs(U * V) ** 2) * grid.dx
                )
            raw = math.sqrt(acc)
            return [
                SweepRecord(
                    estimate_id="bilinear", p=2.0, q=2.0, scale=float(M1),
                    scale2=float(M2), trial=trial, raw_ratio=raw,
                    normalized_ratio=math.sqrt(M1 * M2) * raw, seed=seed,
                )
            ]

        return thunk

    tasks = []
    for si, (M1, M2) in enumerate((a, b) for a in M1s for b in M2s):
        top = (M1 + M2) / 2.0 + min(M1, M2) / 4.0
        if top > grid.xi_max:
            raise ConfigurationError(
                f"bilinear geometry (M1={M1}, M2={M2}) needs frequencies up "
                f"to {top}, grid resolves {grid.xi_max:g}"
            )
        for trial in range(trials):
            tasks.append(((si, trial), make_task(si, M1, M2, trial)))
    return _run_trials(tasks, threads)


# ---------------------------------------------------------------------------
# Summaries and persistence
# ---------------------------------------------------------------------------


def summarize_records(records, threshold: float = 4.0) -> dict:
    """Per-(estimate, p, q): per-scale max over trials, then the max/median
    of those per-scale maxima across the scale axis, with a pass verdict."""
    groups = {}
    for r in records:
        key = (r.estimate_id, r.p, r.q)
        groups.setdefault(key, {}).setdefault((r.scale, r.scale2), []).append(
            r.normalized_ratio
        )
    out = {}
    for (eid, p, q), by_scale in sorted(groups.items(), key=lambda kv: repr(kv[0])):
        per_scale = {k: max(v) for k, v in by_scale.items()}
        vals = np.array(sorted(per_scale.values()))
        ratio = float(vals.max() / np.median(vals)) if vals.size else math.nan
        out[f"{eid} p={p:g} q={q:g}"] = {
            "per_scale_max": {
                f"{k[0]:g}" + ("" if math.isnan(k[1]) else f",{k[1]:g}"): float(v)
                for k, v in sorted(per_scale.items())
            },
            "max_over_median": ratio,
            "passes": bool(ratio <= threshold),
        }
    return out


CSV_COLUMNS = (
    "estimate_id", "p", "q", "scale", "scale2", "trial", "raw_ratio",
    "normalized_ratio", "seed",
)


def write_records_csv(path, records, header_comment: str = "") -> None:
    with open(path, "w", newline="") as f:
        if header_comment:
            f.write(f"# {header_comment}\n")
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(
                [
                    r.estimate_id,
                    f"{r.p:.17g}", f"{r.q:.17g}", f"{r.scale:.17g}",
                    f"{r.scale2:.17g}", r.trial, f"{r.raw_ratio:.17g}",
                    f"{r.normalized_ratio:.17g}", r.seed,
                ]
            )


# ---------------------------------------------------------------------------
# Flow-level experiments
# ---------------------------------------------------------------------------


def linear_window_experiment(
    grid: GridSpec,
    N: float,
    s: float,
    sign: float = 1.0,
    seed: int = 0,
    window_factor: float = 1.0,
    n_steps: int = 256,
    n_curve: int = 33,
    nonlinearity: float = 1.0,
):
    """Deviation of the nonlinear flow from free propagation at block N.

    Random block-N data with ||phi||_{H^s} = 1 evolves over
    [0, window_factor * N^{4s-1}]; returns rows (t, theta, deviation) with
    theta = t N^{1-4s} and deviation = ||u(t) - e^{-t dxxx} phi||_{H^s}.
    """
    rng = np.random.default_rng([seed, 17, int(N)])
    phi = random_block_field(grid, N, rng)
    phi = SpectralField(grid, phi.coeffs / sobolev_norm(phi, s, 1.0))
    T = window_factor * float(N) ** (4.0 * s - 1.0)
    check_wraparound(grid, T, 2.0 * N)
    stride = max(1, n_steps // (n_curve - 1))
    cfg = SolverConfig(
        grid=grid, dt=T / n_steps, horizon=T, sign=sign,
        record_stride=stride, nonlinearity=nonlinearity,
    )
    flow = solve(idft(phi), cfg)
    rows = []
    for t, st in zip(flow.times, flow.states):
        free = airy_propagate(phi, t)
        diff = SpectralField(grid, dft(st).coeffs - free.coeffs)
        rows.append(
            {
                "t": t,
                "theta": t * float(N) ** (1.0 - 4.0 * s),
                "deviation": sobolev_norm(diff, s, 1.0),
            }
        )
    return {"N": N, "s": s, "blown_up": flow.blown_up, "rows": rows}


def apriori_growth_experiment(
    grid: GridSpec,
    s: float,
    R: float = 1.0,
    horizon: float = 1.0,
    trials: int = 20,
    seed: int = 0,
    sign: float = 1.0,
    dt: float = 1e-4,
    record_stride: int = 100,
):
    """Growth factor sup_t ||u(t)||_{H^s} / ||u0||_{H^s} for rough random
    data, against the reference curve max(1, R^{-8s/(1+8s)} T^{-s/(1+8s)}).

    Observational: results are recorded, not asserted.
    """
    denom = 1.0 + 8.0 * s
    reference = max(1.0, R ** (-8.0 * s / denom) * horizon ** (-s / denom))
    rows = []
    for trial in range(trials):
        rng = np.random.default_rng([seed, 23, trial])
        u0 = rough_random_field(grid, s, R, rng)
        cfg = SolverConfig(
            grid=grid, dt=dt, horizon=horizon, sign=sign,
            record_stride=record_stride,
        )
        flow = solve(u0, cfg)
        base = sobolev_norm(dft(flow.states[0]), s, 1.0)
        sup = max(sobolev_norm(dft(st), s, 1.0) for st in flow.states)
        rows.append(
            {
                "trial": trial,
                "sup_ratio": sup / base,
                "blown_up": flow.blown_up,
                "final_time": flow.times[-1],
            }
        )
    finite = [r["sup_ratio"] for r in rows if not r["blown_up"]]
    return {
        "s": s, "R": R, "T": horizon, "reference": reference,
        "max_ratio": max(finite) if finite else math.nan,
        "below_reference": bool(finite and max(finite) <= reference),
        "rows": rows,
    }
