"""Periodic-box spectral core.

Discretization of the line by a large torus of length L with n uniform
points.  Fourier conventions mimic the continuum:

    uhat(xi_k) = dx * sum_j u(x_j) exp(-i xi_k x_j),   xi_k = 2 pi k / L
    u(x_j)     = (1/L) * sum_k uhat(xi_k) exp(i xi_k x_j)

so that the discrete L2 norm  ||u||^2 = dx sum |u_j|^2 = (1/L) sum |uhat_k|^2
(Parseval).  Coefficients are stored in numpy FFT order; the Nyquist mode
k = -n/2 is forced to zero on every spectral write so Hermitian symmetry is
unambiguous and spectral derivatives of real fields stay real.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError


class GridSpec:
    """Uniform periodic grid on [0, L) with n points (n even).

    Attributes:
        length: box size L.
        n: number of grid points.
        dx: spacing L/n.
        x: grid points, shape (n,).
        xi: angular frequencies 2*pi*k/L in numpy FFT order, shape (n,).
        nyquist_index: index of the (zeroed) Nyquist bin.
    """

    def __init__(self, length: float, n: int):
        if length <= 0:
            raise ConfigurationError(f"box length must be positive, got {length}")
        if n < 4 or n % 2 != 0:
            raise ConfigurationError(f"grid size must be even and >= 4, got {n}")
        self.length = float(length)
        self.n = int(n)
        self.dx = self.length / self.n
        self.x = np.arange(self.n) * self.dx
        self.xi = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        self.nyquist_index = self.n // 2
        # largest representable |xi| once the Nyquist bin is dropped
        self.xi_max = float(np.abs(self.xi[self.nyquist_index + 1]))

    def __eq__(self, other):
        return (
            isinstance(other, GridSpec)
            and self.length == other.length
            and self.n == other.n
        )

    def __hash__(self):
        return hash((self.length, self.n))

    def __repr__(self):
        return f"GridSpec(length={self.length!r}, n={self.n})"


class RealField:
    """Real-valued samples u(x_j) on a grid."""

    def __init__(self, grid: GridSpec, samples: np.ndarray):
        samples = np.asarray(samples, dtype=float)
        if samples.shape != (grid.n,):
            raise ConfigurationError(
                f"samples have shape {samples.shape}, expected ({grid.n},)"
            )
        if not np.all(np.isfinite(samples)):
            raise ConfigurationError("samples contain non-finite values")
        self.grid = grid
        self.samples = samples

    def __repr__(self):
        return f"RealField(n={self.grid.n}, L={self.grid.length:g})"


class SpectralField:
    """Fourier coefficients uhat(xi_k) in numpy FFT order.

    The Nyquist coefficient is zeroed on construction.  Hermitian symmetry
    is not enforced (complex one-sided fields are legitimate, e.g. in the
    bilinear estimate), but `hermitian_residual` measures it.
    """

    def __init__(self, grid: GridSpec, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (grid.n,):
            raise ConfigurationError(
                f"coeffs have shape {coeffs.shape}, expected ({grid.n},)"
            )
        coeffs = coeffs.copy()
        coeffs[grid.nyquist_index] = 0.0
        self.grid = grid
        self.coeffs = coeffs

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs)

    def __repr__(self):
        return f"SpectralField(n={self.grid.n}, L={self.grid.length:g})"


def dft(field: RealField) -> SpectralField:
    """Forward transform with the integral normalization dx * FFT."""
    coeffs = field.grid.dx * np.fft.fft(field.samples)
    return SpectralField(field.grid, coeffs)


def idft(spec: SpectralField) -> RealField:
    """Inverse transform; imaginary residue from roundoff is discarded."""
    samples = np.fft.ifft(spec.coeffs).real / spec.grid.dx
    return RealField(spec.grid, samples)


def hermitian_residual(spec: SpectralField) -> float:
    """Relative deviation of coeffs(-k) from conj(coeffs(k))."""
    c = spec.coeffs
    rev = np.conj(np.roll(c[::-1], 1))  # index k -> -k in FFT order
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(c - rev)) / scale)


def l2_norm(obj) -> float:
    """Discrete L2 norm of a RealField or SpectralField (Parseval-equal)."""
    if isinstance(obj, RealField):
        return float(math.sqrt(obj.grid.dx * np.sum(obj.samples**2)))
    return float(math.sqrt(np.sum(np.abs(obj.coeffs) ** 2) / obj.grid.length))


def lp_norm(field: RealField, p: float) -> float:
    """Discrete L^p norm; p = inf is the grid maximum."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(field.samples)
    if math.isinf(p):
        return float(a.max())
    return float((field.grid.dx * np.sum(a**p)) ** (1.0 / p))


def sobolev_norm(spec: SpectralField, s: float, M: float = 1.0) -> float:
    """Weighted norm || (|xi|^2 + M)^{s/2} uhat ||, normalized so s=0 is L2."""
    w = (spec.grid.xi**2 + M) ** s
    return float(math.sqrt(np.sum(w * np.abs(spec.coeffs) ** 2) / spec.grid.length))


def symbol_norm(spec: SpectralField, a) -> float:
    """Norm sqrt(<u, a(D) u>) for a positive even symbol a."""
    w = a(spec.grid.xi)
    return float(math.sqrt(np.sum(w * np.abs(spec.coeffs) ** 2) / spec.grid.length))


# ---------------------------------------------------------------------------
# Littlewood-Paley partition
# ---------------------------------------------------------------------------


def _smoothstep(t: np.ndarray, order: int = 4) -> np.ndarray:
    """Polynomial smoothstep of the given order (C^order at both ends)."""
    t = np.clip(t, 0.0, 1.0)
    acc = np.zeros_like(t)
    for k in range(order + 1):
        acc += math.comb(order + k, k) * math.comb(2 * order + 1, order - k) * (-t) ** k
    return t ** (order + 1) * acc


def _chi(xi: np.ndarray, order: int = 4) -> np.ndarray:
    """Even bump: 1 on |xi| <= 1, 0 on |xi| >= 2, smoothstep in between."""
    a = np.abs(xi)
    return 1.0 - _smoothstep(a - 1.0, order)


class LPPartition:
    """Smooth dyadic partition of unity on the representable frequencies.

    blocks = (M, 2M, 4M, ..., Nmax) where psi_M = chi(xi/M) covers
    |xi| <= 2M (the "P_{<=M}" block) and psi_N = chi(xi/N) - chi(2 xi/N)
    is supported in N/2 <= |xi| <= 2N.  Nmax is the first dyadic multiple
    of M at or above the largest representable frequency, which makes
    sum_N psi_N identically 1 on the lattice.
    """

    def __init__(self, grid: GridSpec, M: float = 1.0, order: int = 4):
        if M < 1 or 2 ** round(math.log2(M)) != M:
            raise ConfigurationError(f"base M must be a dyadic >= 1, got {M}")
        self.grid = grid
        self.M = float(M)
        self.order = int(order)
        n_levels = max(0, math.ceil(math.log2(grid.xi_max / M))) if grid.xi_max > M else 0
        self.blocks = tuple(M * 2.0**j for j in range(n_levels + 1))
        self._psi = {}
        for N in self.blocks:
            if N == self.M:
                psi = _chi(grid.xi / N, order)
            else:
                psi = _chi(grid.xi / N, order) - _chi(2.0 * grid.xi / N, order)
            self._psi[N] = psi

    def psi(self, N: float) -> np.ndarray:
        if N not in self._psi:
            raise ValueError(f"N={N} is not a block of this partition {self.blocks}")
        return self._psi[N]

    def partition_residual(self) -> float:
        total = sum(self._psi.values())
        return float(np.max(np.abs(total - 1.0)))


def lp_project(spec: SpectralField, part: LPPartition, N: float) -> SpectralField:
    """Multiply coefficients by the block-N multiplier psi_N."""
    if part.grid != spec.grid:
        raise ConfigurationError("partition and field live on different grids")
    return SpectralField(spec.grid, spec.coeffs * part.psi(N))


# ---------------------------------------------------------------------------
# Bernstein ratio
# ---------------------------------------------------------------------------


class BernsteinRatio:
    """Result of a Bernstein-quotient measurement."""

    def __init__(self, ratio: float, localized: bool):
        self.ratio = ratio
        self.localized = localized

    def __repr__(self):
        return f"BernsteinRatio(ratio={self.ratio:.6g}, localized={self.localized})"


def bernstein_ratio(
    field: RealField, part: LPPartition, N: float, p: float, q: float
) -> BernsteinRatio:
    """Measure ||P_N f||_{L^q} / ||f||_{L^p} for f localized at block N.

    Compares empirically against both N^{1/p - 1/q} (the classical
    exponent) and N^{1/q - 1/p}; the sweep harness decides which direction
    the data supports.  If less than 99% of the input's L2 mass lies in
    block N the result is flagged as non-localized.
    """
    if not (1 <= p <= q):
        raise ValueError(f"need 1 <= p <= q, got p={p}, q={q}")
    spec = dft(field)
    proj = lp_project(spec, part, N)
    total = l2_norm(spec)
    localized = True
    if total > 0:
        localized = l2_norm(proj) >= 0.99 * total
    denom = lp_norm(field, p)
    if denom == 0.0:
        return BernsteinRatio(0.0, localized)
    num = lp_norm(idft(proj), q)
    return BernsteinRatio(num / denom, localized)


# ---------------------------------------------------------------------------
# Configuration validators
# ---------------------------------------------------------------------------


def wraparound_limit(grid: GridSpec, max_freq: float) -> float:
    """Longest horizon T with T * 3 * (2*max_freq)^2 <= L/4."""
    if max_freq <= 0:
        return math.inf
    return grid.length / 4.0 / (3.0 * (2.0 * max_freq) ** 2)


def check_wraparound(grid: GridSpec, horizon: float, max_freq: float) -> None:
    """Dispersive wraparound gate: group speed 3 xi^2 times T within L/4."""
    limit = wraparound_limit(grid, max_freq)
    if horizon > limit:
        raise ConfigurationError(
            f"wraparound check failed: horizon {horizon:g} with frequencies up "
            f"to {max_freq:g} needs box length >= {48.0 * max_freq**2 * horizon:g} "
            f"(have {grid.length:g}); max admissible horizon is {limit:g}"
        )


def active_max_freq(spec: SpectralField, rel_threshold: float = 1e-10) -> float:
    """Largest |xi| carrying a coefficient above rel_threshold * max|coeff|."""
    mags = np.abs(spec.coeffs)
    top = mags.max()
    if top == 0.0:
        return 0.0
    act = mags > rel_threshold * top
    return float(np.max(np.abs(spec.grid.xi[act])))


def dealias_mask(grid: GridSpec) -> np.ndarray:
    """2/3-rule mask: keep |k| <= n/3, zero the upper third of the spectrum."""
    k = np.rint(grid.xi * grid.length / (2.0 * np.pi))
    return (np.abs(k) <= grid.n // 3).astype(float)
