"""p-variation norms of time-sampled Hilbert-space paths.

The V^p norm over the sample points is an exact supremum over all
sub-partitions (subsets of sample indices containing both endpoints),
computed by an O(K^2) dynamic program.  Airy pullback composes each sample
with the inverse linear flow so that free Airy evolutions become constant
paths.  The windowed diagnostic aggregates, per dyadic block, the supremum
over short time windows of  ||u(window start)||_{H^s_M} + V^2 of the
pulled-back block over the window,  in l2 over blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .spectral import (
    LPPartition,
    SpectralField,
    dft,
    l2_norm,
    lp_project,
    sobolev_norm,
)

__all__ = [
    "PathSample",
    "variation_norm",
    "airy_pullback",
    "airy_pushforward",
    "XsmBlockRecord",
    "XsmDiagnostic",
    "xsm_diagnostic",
    "project_flow_to_blocks",
]


class PathSample:
    """A path t_0 < ... < t_K in a Hilbert space of spectral fields.

    metric: callable SpectralField -> nonneg float used for increment sizes;
    defaults to the L2 norm.
    """

    def __init__(self, times, values, metric=None):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or len(times) != len(values):
            raise ValueError("times and values must have matching lengths")
        if len(times) < 2:
            raise ValueError("a path needs at least two samples")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        grids = {v.grid for v in values}
        if len(grids) != 1:
            raise ValueError("all values must share one grid")
        self.times = times
        self.values = list(values)
        self.metric = metric if metric is not None else l2_norm
        self.grid = values[0].grid

    def __len__(self):
        return len(self.times)

    def subpath(self, indices) -> "PathSample":
        idx = list(indices)
        return PathSample(self.times[idx], [self.values[i] for i in idx], self.metric)


def variation_norm(path: PathSample, p: float) -> float:
    """Exact V^p norm over the sample points.

    DP over chain ends:  best(j) = max_{i<j} best(i) + d(i,j)^p,  best(0)=0,
    answer best(K)^{1/p}.  Chains implicitly start at sample 0 and end at
    sample K, matching partitions of the sampled interval.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    K = len(path) - 1
    vals = path.values
    metric = path.metric
    # pairwise increment sizes
    d = np.zeros((K + 1, K + 1))
    for i in range(K + 1):
        ci = vals[i].coeffs
        for j in range(i + 1, K + 1):
            d[i, j] = metric(SpectralField(path.grid, vals[j].coeffs - ci))
    dp = d**p
    best = np.full(K + 1, -np.inf)
    best[0] = 0.0
    for j in range(1, K + 1):
        best[j] = np.max(best[:j] + dp[:j, j])
    return float(best[K] ** (1.0 / p))


def airy_pullback(path: PathSample) -> PathSample:
    """Compose with the inverse flow: v(t) -> exp(t d^3/dx^3) v(t).

    A free Airy trajectory becomes a constant path, so its variation
    vanishes.
    """
    xi3 = path.grid.xi**3
    out = [
        SpectralField(path.grid, v.coeffs * np.exp(-1j * t * xi3))
        for t, v in zip(path.times, path.values)
    ]
    return PathSample(path.times, out, path.metric)


def airy_pushforward(path: PathSample) -> PathSample:
    """Inverse of airy_pullback."""
    xi3 = path.grid.xi**3
    out = [
        SpectralField(path.grid, v.coeffs * np.exp(1j * t * xi3))
        for t, v in zip(path.times, path.values)
    ]
    return PathSample(path.times, out, path.metric)


# ---------------------------------------------------------------------------
# Windowed X^s_M-style diagnostic
# ---------------------------------------------------------------------------


@dataclass
class XsmBlockRecord:
    N: float
    window_length: float
    sup_value: float


@dataclass
class XsmDiagnostic:
    s: float
    M: float
    records: list = field(default_factory=list)

    @property
    def aggregate(self) -> float:
        return math.sqrt(sum(r.sup_value**2 for r in self.records))


def _window_sup(path: PathSample, s: float, M: float, window: float) -> float:
    """Sup over two staggered window partitions of start-norm + windowed V2."""
    pulled = airy_pullback(path)
    times = path.times
    t0, t1 = times[0], times[-1]

    def metric(f):
        return sobolev_norm(f, s, M)

    best = 0.0
    for offset in (0.0, 0.5 * window):
        starts = [t0] if offset > 0.0 else []
        k = 0
        while t0 + offset + k * window < t1:
            starts.append(t0 + offset + k * window)
            k += 1
        for a in starts:
            b = min(a + window, t1)
            idx = np.nonzero((times >= a - 1e-12) & (times <= b + 1e-12))[0]
            if len(idx) == 0:
                continue
            start_norm = sobolev_norm(path.values[idx[0]], s, M)
            v2 = 0.0
            if len(idx) >= 2:
                sub = PathSample(times[idx], [pulled.values[i] for i in idx], metric)
                v2 = variation_norm(sub, 2.0)
            best = max(best, start_norm + v2)
    return best


def xsm_diagnostic(
    block_paths, s: float, M: float, window_power: float = None
) -> XsmDiagnostic:
    """Windowed block-norm diagnostic with the computable V^2 proxy.

    Args:
        block_paths: mapping dyadic N -> PathSample of the block-projected
            flow over the horizon (the N = M entry is the P_{<=M} piece).
        s, M: Sobolev parameters of the base norm H^s_M.
        window_power: exponent e in window length N^e; defaults to 4s - 1.

    The per-block window length is clamp(N^e, sample spacing, horizon).
    Windows slide over two staggered partitions (offsets 0 and half a
    window).  Raises ConfigurationError when the sampling is too coarse for
    the smallest window, reporting the required spacing.
    """
    if window_power is None:
        window_power = 4.0 * s - 1.0
    diag = XsmDiagnostic(s=s, M=M)
    for N in sorted(block_paths):
        path = block_paths[N]
        horizon = path.times[-1] - path.times[0]
        dt = float(np.max(np.diff(path.times)))
        window = min(float(N) ** window_power, horizon)
        if dt > window / 2.0 + 1e-12:
            raise ConfigurationError(
                f"block N={N}: sample spacing {dt:g} too coarse for window "
                f"{window:g}; need spacing <= {window / 2.0:g}"
            )
        window = max(window, dt)
        sup = _window_sup(path, s, M, window)
        diag.records.append(XsmBlockRecord(N=float(N), window_length=window, sup_value=sup))
    return diag


def project_flow_to_blocks(times, states, part: LPPartition):
    """Split a sampled flow into per-block PathSamples of P_N snapshots."""
    specs = [st if isinstance(st, SpectralField) else dft(st) for st in states]
    out = {}
    for N in part.blocks:
        out[N] = PathSample(times, [lp_project(sp, part, N) for sp in specs])
    return out
