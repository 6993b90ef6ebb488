"""Frequency-damping symbols and the quartic multiplier b4.

Symbols a(xi) are smooth, even, positive, constant below a dyadic cutoff M,
nonincreasing, and satisfy -1/2 <= d log a / d log(1 + xi^2) <= 0.  The
family a_N interpolates between the plateau N^{2s} on |xi| <= N and the
tail N^{1/2 + 2s} |xi|^{-1/2} on |xi| >= 2N.

The multiplier b4 solves, on the hyperplane P4 = {xi1+xi2+xi3+xi4 = 0},

    xi1 a(xi1) + ... + xi4 a(xi4) = b4 * (xi1^3 + ... + xi4^3),

where the cubic sum factorizes as -3 (xi1+xi2)(xi1+xi3)(xi2+xi3).  Each
vanishing pair sum is a removable singularity: with F(xi) = xi a(xi) and
g(xi, eta) = (F(xi) + F(eta)) / (xi + eta), pairing the arguments turns the
worst factor into an exact divided difference, and the remaining
near-singular quotient has a finite limit evaluated by central differences.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "SymbolA",
    "make_aN",
    "B4Evaluator",
    "cubic_sum_factorization_residual",
    "random_p4_points",
]


def random_p4_points(rng, scale: float, n: int):
    """Random Gaussian frequency triples whose implied quadruple sums to
    zero exactly in float64.

    Coordinates are rounded to float32 mantissas so that xi1 + xi2 + xi3
    incurs no rounding; identity checks then probe the evaluator rather
    than the off-hyperplane rounding of the sample itself.
    """
    x = rng.normal(scale=scale, size=(3, n)).astype(np.float32).astype(np.float64)
    return x[0], x[1], x[2]


class SymbolA:
    """An even positive symbol in the class S_M.

    Attributes:
        M: dyadic flat-region cutoff (a is constant on |xi| <= M).
        func: vectorized evaluator a(xi).
        tag: short description, e.g. "aN(N=16,s=-0.125)".
        flat_radius: largest radius on which a is known constant (>= M);
            a_N symbols are flat out to N.  Inside it the b4 numerator
            vanishes identically on P4, so b4 = 0 there exactly.
    """

    def __init__(self, M: float, func, tag: str = "custom", flat_radius: float = None):
        self.M = float(M)
        self.func = func
        self.tag = tag
        self.flat_radius = float(flat_radius) if flat_radius is not None else self.M

    def __call__(self, xi):
        xi = np.asarray(xi)
        if xi.dtype not in (np.dtype(np.float64), np.dtype(np.longdouble)):
            xi = xi.astype(float)
        return self.func(xi)

    def class_report(self, xi_max: float = 4096.0, n_samples: int = 4001) -> dict:
        """Sampled S_M membership check; returns the measured margins."""
        xi = np.exp(np.linspace(math.log(1e-3), math.log(xi_max), n_samples))
        a_pos = self(xi)
        a_neg = self(-xi)
        even = float(np.max(np.abs(a_pos - a_neg) / np.abs(a_pos)))
        core = xi[xi <= self.M]
        if core.size:
            ac = self(core)
            flat = float(np.max(np.abs(ac - self(np.zeros(1))[0])) / np.abs(ac).max())
        else:
            flat = 0.0
        tail = a_pos[xi >= self.M]
        monotone = float(np.max(np.diff(tail) / tail[:-1])) if tail.size > 1 else 0.0
        y = np.log1p(xi**2)
        slope = np.gradient(np.log(a_pos), y)
        return {
            "even_residual": even,
            "flat_core_residual": flat,
            "monotone_increase": monotone,
            "slope_min": float(slope.min()),
            "slope_max": float(slope.max()),
        }

    def check_class(self, tol: float = 1e-6) -> None:
        rep = self.class_report()
        ok = (
            rep["even_residual"] <= tol
            and rep["flat_core_residual"] <= tol
            and rep["monotone_increase"] <= tol
            and rep["slope_min"] >= -0.5 - tol
            and rep["slope_max"] <= tol
        )
        if not ok:
            raise ConfigurationError(f"symbol {self.tag} violates class S_M: {rep}")


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def _smoothstep_int(t):
    t = np.clip(t, 0.0, 1.0)
    return 2.5 * t**4 - 3.0 * t**5 + t**6


_RAMP = 0.25  # fraction of the transition spent ramping at each end


def make_aN(N: float, s: float, M: float = 1.0) -> SymbolA:
    """The damped-plateau symbol a_N: N^{2s} below N, N^{1/2+2s}|xi|^{-1/2}
    above 2N, blended monotonically in between.

    The blend fixes the log-slope profile in y = log(1 + xi^2): a smooth
    ramp up to a plateau and a ramp down to the tail slope, with the plateau
    height solved so the branch values match at 2N.  The profile stays in
    [-1/2, 0] for every N >= M >= 1, which a plain quintic Hermite does not
    at N = 1.
    """
    if M < 1 or 2 ** round(math.log2(M)) != M:
        raise ConfigurationError(f"M must be a dyadic >= 1, got {M}")
    if N < M or 2 ** round(math.log2(N)) != N:
        raise ConfigurationError(f"N must be a dyadic >= M, got N={N}, M={M}")
    if s > 0:
        raise ConfigurationError(f"only s <= 0 is supported, got s={s}")
    N = float(N)
    y0 = math.log1p(N**2)
    y1 = math.log1p(4.0 * N**2)
    h = y1 - y0
    mu = 0.5 * math.log(2.0) / h          # mean |slope| over the transition
    m1 = 0.25 * (1.0 + 4.0 * N**2) / (4.0 * N**2)  # tail |slope| at 2N
    r = _RAMP
    plateau = (mu - m1 * r / 2.0) / (1.0 - r)

    def func(xi):
        xi = np.abs(np.asarray(xi))
        if xi.dtype != np.dtype(np.longdouble):
            xi = xi.astype(float)
        out = np.empty_like(xi)
        lo = xi <= N
        hi = xi >= 2.0 * N
        mid = ~(lo | hi)
        out[lo] = N ** (2.0 * s)
        out[hi] = N ** (0.5 + 2.0 * s) * xi[hi] ** (-0.5)
        if np.any(mid):
            t = (np.log1p(xi[mid] ** 2) - y0) / h
            u = np.clip((t - (1.0 - r)) / r, 0.0, 1.0)
            ramp_up = plateau * r * _smoothstep_int(np.clip(t / r, 0.0, 1.0))
            integral = np.where(
                t < r,
                ramp_up,
                np.where(
                    t <= 1.0 - r,
                    plateau * (r * 0.5 + (t - r)),
                    plateau * (r * 0.5 + (1.0 - 2.0 * r))
                    + plateau * r * u
                    + (m1 - plateau) * r * _smoothstep_int(u),
                ),
            )
            out[mid] = np.exp(2.0 * s * math.log(N) - h * integral)
        return out

    sym = SymbolA(M, func, tag=f"aN(N={N:g},s={s:g},M={M:g})", flat_radius=N)
    sym.check_class()
    return sym


def cubic_sum_factorization_residual(xi1, xi2, xi3) -> float:
    """Max relative residual of
    xi1^3+xi2^3+xi3^3+xi4^3 = -3 (xi1+xi2)(xi1+xi3)(xi2+xi3) on P4."""
    xi1, xi2, xi3 = map(np.asarray, (xi1, xi2, xi3))
    xi4 = -(xi1 + xi2 + xi3)
    lhs = xi1**3 + xi2**3 + xi3**3 + xi4**3
    rhs = -3.0 * (xi1 + xi2) * (xi1 + xi3) * (xi2 + xi3)
    scale = np.maximum(np.abs(xi1), np.maximum(np.abs(xi2), np.abs(xi3))) ** 3
    return float(np.max(np.abs(lhs - rhs) / np.maximum(scale, 1e-300)))


class B4Evaluator:
    """Total, permutation-symmetric evaluator of b4 on the hyperplane P4.

    Args:
        symbol: the underlying SymbolA.
        eps_rel: relative threshold (times the local dyadic scale) below
            which a pair sum counts as singular and divided-difference
            limits replace direct division.
        prefactor: overall constant; 1.0 gives the solution of the division
            identity above, while the energy machinery uses -sign/2.
    """

    def __init__(self, symbol: SymbolA, eps_rel: float = 1e-3, prefactor: float = 1.0):
        self.symbol = symbol
        self.eps_rel = float(eps_rel)
        self.prefactor = float(prefactor)

    # -- building blocks ----------------------------------------------------

    def _F(self, xi):
        return xi * self.symbol(xi)

    def _g(self, xi, eta, scale):
        """g(xi, eta) = (F(xi) + F(eta)) / (xi + eta), stable near eta = -xi.

        Since F is odd this is the divided difference of F between xi and
        -eta; below the singular threshold it is replaced by a central
        difference of F at the midpoint with step eps_rel * scale / 8.
        """
        ssum = xi + eta
        thr = self.eps_rel * scale
        near = np.abs(ssum) < thr
        safe = np.where(near, 1.0, ssum)
        direct = (self._F(xi) + self._F(eta)) / safe
        if np.any(near):
            mid = 0.5 * (xi - eta)
            hstep = thr / 8.0
            limit = (self._F(mid + hstep) - self._F(mid - hstep)) / (2.0 * hstep)
            return np.where(near, limit, direct)
        return direct

    def size_bound(self, N2: float, N4: float) -> float:
        """Dyadic size a(N2) * N4^{-2} for N1 <= N2 <= N3 ~ N4."""
        return float(self.symbol(np.array([N2]))[0] / N4**2)

    # -- reference (partial) evaluation -------------------------------------

    def reference(self, xi1, xi2, xi3):
        """Direct quotient; raises if any pair sum is below the singular
        threshold (use `stable` there)."""
        xi1, xi2, xi3 = np.broadcast_arrays(
            *(np.asarray(v, dtype=float) for v in (xi1, xi2, xi3))
        )
        xi4 = -(xi1 + xi2 + xi3)
        scale = np.maximum(
            np.maximum(np.abs(xi1), np.abs(xi2)),
            np.maximum(np.abs(xi3), np.maximum(np.abs(xi4), self.symbol.M)),
        )
        pair_min = np.minimum(
            np.abs(xi1 + xi2), np.minimum(np.abs(xi1 + xi3), np.abs(xi2 + xi3))
        )
        if np.any(pair_min < self.eps_rel * scale):
            raise ValueError(
                "reference evaluation within the singular set; use b4 stable"
            )
        num = self._F(xi1) + self._F(xi2) + self._F(xi3) + self._F(xi4)
        den = xi1**3 + xi2**3 + xi3**3 + xi4**3
        return self.prefactor * num / den

    # -- stable (total) evaluation -------------------------------------------

    # pair sums within this fraction of the dyadic scale are evaluated in
    # extended precision: the nested cancellation costs ~u/eps^2, which in
    # float64 alone would saturate near 1e-9 at the singular threshold
    _DELICATE_FRACTION = 0.05

    def _core(self, ys: np.ndarray, scale: np.ndarray) -> np.ndarray:
        """b4 (prefactor excluded) from sorted frequencies ys (4, m)."""
        y1, rest = ys[0], ys[1:]
        thr = np.asarray(self.eps_rel * scale, dtype=ys.dtype)

        # partner choice: smallest |y1 + y_j| handled exactly by g
        tsums = y1[None, :] + rest
        order = np.argsort(np.abs(tsums), axis=0)
        take = np.take_along_axis
        yp = take(rest, order[0:1], axis=0)[0]
        yq = take(rest, order[1:2], axis=0)[0]
        yr = take(rest, order[2:3], axis=0)[0]
        tq = y1 + yq
        tr = y1 + yr

        def g_diff(a1, ap, aq, ar, scl):
            return self._g(a1, ap, scl) - self._g(aq, ar, scl)

        val = np.zeros_like(y1)
        near_q = np.abs(tq) < thr
        if np.any(~near_q):
            m = ~near_q
            G = g_diff(y1[m], yp[m], yq[m], yr[m], scale[m])
            val[m] = G / (3.0 * tq[m] * tr[m])
        if np.any(near_q):
            m = near_q
            # P4-preserving path moving tq while fixing tp and tr:
            # y1 += h/2, yq += h/2, yp -= h/2, yr -= h/2
            hstep = thr[m] / 8.0
            Gp = g_diff(
                y1[m] + hstep / 2, yp[m] - hstep / 2,
                yq[m] + hstep / 2, yr[m] - hstep / 2, scale[m],
            )
            Gm = g_diff(
                y1[m] - hstep / 2, yp[m] + hstep / 2,
                yq[m] - hstep / 2, yr[m] + hstep / 2, scale[m],
            )
            val[m] = (Gp - Gm) / (2.0 * hstep) / (3.0 * tr[m])
        return val

    def stable(self, xi1, xi2, xi3):
        """Evaluate b4 everywhere on P4.

        The four arguments (xi4 implied) are sorted, which makes the result
        exactly invariant under permutations.  The pairing whose pair sum is
        smallest is eliminated analytically through g; of the remaining two
        quotient factors, any below the threshold is replaced by a central
        divided difference of the g-difference along a P4-preserving path.
        Points with a pair sum near the threshold go through the same chain
        in extended precision.
        """
        xi1, xi2, xi3 = np.broadcast_arrays(
            *(np.asarray(v, dtype=float) for v in (xi1, xi2, xi3))
        )
        shape = xi1.shape
        x1 = xi1.ravel().astype(float)
        x2 = xi2.ravel().astype(float)
        x3 = xi3.ravel().astype(float)
        x4 = -(x1 + x2 + x3)
        ys = np.sort(np.stack([x1, x2, x3, x4], axis=0), axis=0)
        M = self.symbol.M
        scale = np.maximum(np.max(np.abs(ys), axis=0), M)
        pair_min = np.minimum(
            np.abs(ys[0] + ys[1]),
            np.minimum(np.abs(ys[0] + ys[2]), np.abs(ys[0] + ys[3])),
        )

        # flat region: all four frequencies inside the constant core, where
        # the numerator a0 * (xi1+xi2+xi3+xi4) vanishes identically on P4
        flat = np.max(np.abs(ys), axis=0) <= self.symbol.flat_radius
        val = np.zeros_like(scale)
        delicate = (pair_min < self._DELICATE_FRACTION * scale) & ~flat
        plain = ~delicate & ~flat
        if np.any(plain):
            val[plain] = self._core(ys[:, plain], scale[plain])
        if np.any(delicate):
            wide = self._core(
                ys[:, delicate].astype(np.longdouble),
                scale[delicate].astype(np.longdouble),
            )
            val[delicate] = wide.astype(float)
        out = self.prefactor * val
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("b4 stable evaluation produced non-finite values")
        return out.reshape(shape) if shape else float(out[0])

    def identity_residual(self, xi1, xi2, xi3) -> np.ndarray:
        """Relative residual of b4 * (sum xi^3) - prefactor * (sum xi a(xi)).

        Inside the symbol's flat radius both sides vanish identically on P4
        (the numerator is a constant times the zero frequency sum), so the
        residual is reported as 0 there rather than as roundoff noise over
        roundoff noise.
        """
        xi1, xi2, xi3 = np.broadcast_arrays(
            *(np.asarray(v, dtype=float) for v in (xi1, xi2, xi3))
        )
        xi4 = -(xi1 + xi2 + xi3)
        b = self.stable(xi1, xi2, xi3)
        # both sides of the identity cancel heavily near the singular set;
        # extended precision keeps the measurement error below the
        # evaluator's own accuracy
        w1, w2, w3, w4 = (v.astype(np.longdouble) for v in (xi1, xi2, xi3, xi4))
        den = w1**3 + w2**3 + w3**3 + w4**3
        num = self.prefactor * (
            self._F(w1) + self._F(w2) + self._F(w3) + self._F(w4)
        )
        scale = np.maximum(np.abs(num), np.abs(b * den))
        res = (np.abs(b * den - num) / np.maximum(scale, 1e-300)).astype(float)
        flat = np.maximum(
            np.maximum(np.abs(xi1), np.abs(xi2)),
            np.maximum(np.abs(xi3), np.abs(xi4)),
        ) <= self.symbol.flat_radius
        return np.where(flat, 0.0, res)
