"""Exact Airy-group propagation and mixed space-time norms.

The linear flow u_t + u_xxx = 0 acts on Fourier coefficients as the
unimodular multiplier exp(i t xi^3); there is no time discretization error.
Mixed norms over sampled trajectories use trapezoid quadrature in time and
grid sums in space, with inf replaced by sample maxima.
"""

from __future__ import annotations

import math

import numpy as np

from .spectral import GridSpec, RealField, SpectralField, dft

__all__ = [
    "airy_propagate",
    "fractional_derivative",
    "AiryTrajectory",
    "mixed_norm_txy",
    "airy_mixed_norms",
]


def airy_propagate(spec: SpectralField, t: float) -> SpectralField:
    """Apply the Airy group for time t: coeffs * exp(i t xi^3)."""
    phase = np.exp(1j * t * spec.grid.xi**3)
    return SpectralField(spec.grid, spec.coeffs * phase)


def fractional_derivative(spec: SpectralField, alpha: float) -> SpectralField:
    """|D|^alpha: multiply by |xi|^alpha; the zero mode maps to 0."""
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    xi = spec.grid.xi
    if alpha == 0:
        mult = np.ones_like(xi)
        mult[0] = 0.0
    else:
        mult = np.abs(xi) ** alpha
    return SpectralField(spec.grid, spec.coeffs * mult)


class AiryTrajectory:
    """Snapshots of a free Airy evolution at strictly increasing times."""

    def __init__(self, times, states):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or len(times) != len(states):
            raise ValueError("times and states must have matching lengths")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        grids = {st.grid for st in states}
        if len(grids) != 1:
            raise ValueError("all states must share one grid")
        self.times = times
        self.states = list(states)
        self.grid = states[0].grid

    @classmethod
    def from_initial(cls, spec: SpectralField, times) -> "AiryTrajectory":
        return cls(times, [airy_propagate(spec, t) for t in np.asarray(times, float)])

    def propagation_residual(self) -> float:
        """Spot check: state at t_j vs propagator applied to state at t_0."""
        base = self.states[0]
        worst = 0.0
        for j in (len(self.times) // 2, len(self.times) - 1):
            ref = airy_propagate(base, self.times[j] - self.times[0])
            num = np.max(np.abs(ref.coeffs - self.states[j].coeffs))
            den = max(np.max(np.abs(ref.coeffs)), 1e-300)
            worst = max(worst, num / den)
        return worst


class _MixedNormAccumulator:
    """Streams |u(t_i, x)| slices into an L^p_t L^q_x or L^p_x L^q_t norm."""

    def __init__(self, grid: GridSpec, times: np.ndarray, p: float, q: float, order: str):
        if len(times) < 2:
            raise ValueError("mixed norms need at least 2 time samples")
        if not (1 <= p) or not (1 <= q):
            raise ValueError(f"exponents must be >= 1, got p={p}, q={q}")
        if order not in ("time-outer", "space-outer"):
            raise ValueError(f"unknown order {order!r}")
        self.grid = grid
        self.p = p
        self.q = q
        self.order = order
        # trapezoid weights over the (possibly nonuniform) sample times
        w = np.zeros(len(times))
        dt = np.diff(times)
        w[:-1] += 0.5 * dt
        w[1:] += 0.5 * dt
        self.tw = w
        if order == "time-outer":
            self._vals = np.zeros(len(times))
        elif math.isinf(q):
            self._acc = np.zeros(grid.n)
        else:
            self._acc = np.zeros(grid.n)

    def add(self, i: int, abs_u: np.ndarray) -> None:
        """Feed |u(t_i, .)| for sample index i (absolute values, shape (n,))."""
        dx, q = self.grid.dx, self.q
        if self.order == "time-outer":
            if math.isinf(q):
                self._vals[i] = abs_u.max()
            else:
                self._vals[i] = (dx * np.sum(abs_u**q)) ** (1.0 / q)
        else:
            if math.isinf(q):
                np.maximum(self._acc, abs_u, out=self._acc)
            else:
                self._acc += self.tw[i] * abs_u**q

    def value(self) -> float:
        p, q = self.p, self.q
        if self.order == "time-outer":
            if math.isinf(p):
                return float(self._vals.max())
            return float(np.sum(self.tw * self._vals**p) ** (1.0 / p))
        inner = self._acc if math.isinf(q) else self._acc ** (1.0 / q)
        if math.isinf(p):
            return float(inner.max())
        return float((self.grid.dx * np.sum(inner**p)) ** (1.0 / p))


def _physical_slices(states):
    for st in states:
        if isinstance(st, RealField):
            yield np.abs(st.samples)
        else:
            yield np.abs(np.fft.ifft(st.coeffs) / st.grid.dx)


def mixed_norm_txy(traj, p: float, q: float, order: str = "time-outer") -> float:
    """Mixed Lebesgue norm of a sampled trajectory.

    time-outer:  ( integral_t ||u(t)||_{L^q_x}^p dt )^{1/p}
    space-outer: ( integral_x ||u(x)||_{L^q_t}^p dx )^{1/p}
    inf exponents become maxima over samples / grid points.

    `traj` needs .times and .states (RealField or SpectralField snapshots);
    both AiryTrajectory and solver FlowRecord qualify.
    """
    states = traj.states
    grid = states[0].grid
    times = np.asarray(traj.times, dtype=float)
    acc = _MixedNormAccumulator(grid, times, p, q, order)
    for i, abs_u in enumerate(_physical_slices(states)):
        acc.add(i, abs_u)
    return acc.value()


def airy_mixed_norms(phis, horizon: float, n_samples: int, wants, chunk: int = 64):
    """Mixed norms of linearly-propagated data, streamed in time chunks.

    Args:
        phis: list of SpectralField initial data (all on one grid).
        horizon: propagate over [0, horizon].
        n_samples: number of equispaced time samples (>= 2).
        wants: list of (p, q, order) mixed-norm requests.
        chunk: time samples per FFT batch.

    Returns:
        array of shape (len(phis), len(wants)).
    """
    grid = phis[0].grid
    times = np.linspace(0.0, horizon, n_samples)
    accs = [
        [_MixedNormAccumulator(grid, times, p, q, order) for (p, q, order) in wants]
        for _ in phis
    ]
    xi3 = grid.xi**3
    for i0 in range(0, n_samples, chunk):
        tt = times[i0 : i0 + chunk, None]
        phase = np.exp(1j * tt * xi3[None, :])
        for j, phi in enumerate(phis):
            U = np.abs(np.fft.ifft(phase * phi.coeffs[None, :], axis=1)) / grid.dx
            for a in accs[j]:
                for r in range(U.shape[0]):
                    a.add(i0 + r, U[r])
    return np.array([[a.value() for a in row] for row in accs])
