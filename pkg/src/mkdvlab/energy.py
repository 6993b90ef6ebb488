"""Damped energies, quartic correction, and flow-derivative identities.

For the flow  u_t + u_xxx + sign * (u^3)_x = 0  and a symbol a in S_M:

    E0(u) = <a(D) u, u>                   (= symbol norm squared)
    d/dt E0 = R4(u) = -2 sign <a(D) dx u, u^3>        [physical pairing]
    E1(u) = integral over P4 of  b4 uhat^4,  b4 = -(sign/2) (sum xi a)/(sum xi^3)
    d/dt (E0 + E1) = R6(u)

with R6 the sextic remainder, computed as a P4 sum carrying one factor
i xi what(xi) for w = u^3.  The derivative identities are exact for the
spectrally-truncated dynamics when w uses the same dealiasing as the
solver, so the finite-difference checks converge at the order of the
differencing stencil.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError
from .solver import FlowRecord, cubic_spectrum
from .spectral import RealField, SpectralField, dft, symbol_norm, sobolev_norm
from .symbols import B4Evaluator, SymbolA

__all__ = [
    "energy_E0",
    "remainder_R4",
    "energy_E1",
    "remainder_R6",
    "EnergyReport",
    "energy_identity_check",
    "IdentityReport",
    "e1_bound_probe",
]

E1_IMAG_TOL = 1e-10
R6_IMAG_TOL = 1e-9
P4_BUDGET = 1e9


def energy_E0(u: RealField, a: SymbolA) -> float:
    """<a(D) u, u> = (1/L) sum a(xi_k) |uhat_k|^2."""
    return symbol_norm(dft(u), a) ** 2


def remainder_R4(u: RealField, a: SymbolA, sign: float, dealias: bool = True) -> float:
    """-2 sign <a(D) dx u, u^3> computed in O(n log n) via the spectrum of u^3."""
    spec = dft(u)
    grid = u.grid
    what = cubic_spectrum(spec.coeffs, grid, dealias)
    xi = grid.xi
    pairing = np.real(np.sum(a(xi) * (1j * xi) * what * np.conj(spec.coeffs)))
    return float(-2.0 * sign * pairing / grid.length)


def _active_modes(coeffs: np.ndarray, grid, rel_threshold: float = 1e-14):
    mags = np.abs(coeffs)
    top = mags.max()
    if top == 0.0:
        return np.array([], dtype=int)
    k = np.rint(grid.xi * grid.length / (2.0 * np.pi)).astype(int)
    act = np.nonzero((mags > rel_threshold * top) & (np.abs(k) < grid.n // 2))[0]
    return act


def _p4_sum(coeffs: np.ndarray, grid, b4: B4Evaluator, fourth_slot):
    """Triple sum over active modes with the fourth frequency determined.

    fourth_slot(xi4, k4_indices) supplies the final factor; chunked over the
    first index to bound memory.  Returns (total, gross) where gross sums
    absolute term values: the yardstick for how completely the Hermitian
    imaginary parts must cancel.
    """
    act = _active_modes(coeffs, grid)
    if act.size == 0:
        return 0.0 + 0.0j, 0.0
    n_active = act.size
    if float(n_active) ** 3 > P4_BUDGET:
        allowed = int(round(P4_BUDGET ** (1 / 3)))
        while (allowed + 1) ** 3 <= P4_BUDGET:
            allowed += 1
        raise BudgetError(
            f"P4 sum over {n_active} active modes exceeds the {P4_BUDGET:g} "
            f"budget; reduce the active spectrum to <= {allowed} modes",
            required=allowed,
        )
    k_of = np.rint(grid.xi * grid.length / (2.0 * np.pi)).astype(int)
    k_act = k_of[act]
    xi_act = grid.xi[act]
    c_act = coeffs[act]
    kmax = grid.n // 2 - 1
    total = 0.0 + 0.0j
    gross = 0.0
    chunk = max(1, int(2e7 // (n_active * n_active)))
    for i0 in range(0, n_active, chunk):
        k1 = k_act[i0 : i0 + chunk][:, None, None]
        x1 = xi_act[i0 : i0 + chunk][:, None, None]
        c1 = c_act[i0 : i0 + chunk][:, None, None]
        k2, k3 = k_act[None, :, None], k_act[None, None, :]
        x2, x3 = xi_act[None, :, None], xi_act[None, None, :]
        c2, c3 = c_act[None, :, None], c_act[None, None, :]
        k4 = -(k1 + k2 + k3)
        ok = np.abs(k4) <= kmax
        x4 = (2.0 * np.pi / grid.length) * k4
        b = b4.stable(
            np.broadcast_to(x1, x4.shape), np.broadcast_to(x2, x4.shape),
            np.broadcast_to(x3, x4.shape),
        )
        last = fourth_slot(x4, np.mod(k4, grid.n))
        terms = np.where(ok, b * last, 0.0) * (c1 * c2 * c3)
        total += np.sum(terms)
        gross += float(np.sum(np.abs(terms)))
    return total, gross


def energy_E1(u: RealField, b4: B4Evaluator) -> float:
    """Quartic correction (1/L^3) sum_{P4} b4 uhat1 uhat2 uhat3 uhat4.

    Hermitian symmetry of real data makes the sum real; the imaginary part
    must stay below 1e-10 relative and is then discarded.  Raises
    BudgetError when the active spectrum is too large for the cubic-cost
    sum.
    """
    spec = dft(u)
    coeffs = spec.coeffs

    def fourth(x4, idx4):
        return coeffs[idx4]

    total, gross = _p4_sum(coeffs, u.grid, b4, fourth)
    if gross > 0 and abs(total.imag) > E1_IMAG_TOL * gross:
        raise FloatingPointError(
            f"E1 imaginary residual {abs(total.imag) / gross:.2e} exceeds "
            f"{E1_IMAG_TOL:g}"
        )
    return float(total.real) / u.grid.length**3


def remainder_R6(
    u: RealField, b4: B4Evaluator, sign: float, dealias: bool = True
) -> float:
    """Sextic remainder: the P4 sum with one factor i xi what(xi), w = u^3,
    scaled by -4 sign.  Same budget gate as energy_E1."""
    spec = dft(u)
    coeffs = spec.coeffs
    what = cubic_spectrum(coeffs, u.grid, dealias)

    def fourth(x4, idx4):
        return 1j * x4 * what[idx4]

    total, gross = _p4_sum(coeffs, u.grid, b4, fourth)
    if gross > 0 and abs(total.imag) > R6_IMAG_TOL * gross:
        raise FloatingPointError(
            f"R6 imaginary residual {abs(total.imag) / gross:.2e} exceeds "
            f"{R6_IMAG_TOL:g}"
        )
    return float(-4.0 * sign * total.real) / u.grid.length**3


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class EnergyReport:
    """Sampled (t, E0, E1, R4, R6) along a flow."""

    times: list
    E0: list
    E1: list
    R4: list
    R6: list
    sign: float
    symbol_tag: str

    def rows(self):
        for i, t in enumerate(self.times):
            yield {
                "t": t,
                "E0": self.E0[i],
                "E1": self.E1[i],
                "R4": self.R4[i],
                "R6": self.R6[i],
                "sign": self.sign,
                "symbol": self.symbol_tag,
            }

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(r, sort_keys=True) for r in self.rows()) + "\n"


@dataclass
class IdentityReport:
    which: str
    fd_step: float
    max_rel: float
    median_rel: float
    refinement: list = field(default_factory=list)  # (h, max_rel) pairs

    @property
    def refinement_order(self) -> float:
        """Estimated convergence order from the two finest FD steps."""
        if len(self.refinement) < 2:
            return math.nan
        (h1, e1), (h2, e2) = self.refinement[-2], self.refinement[-1]
        if e2 == 0 or e1 == 0:
            return math.inf
        return math.log(e1 / e2) / math.log(h1 / h2)


def sample_energies(flow: FlowRecord, a: SymbolA, with_quartic: bool) -> EnergyReport:
    """Evaluate E0/R4 (and E1/R6 when requested) at each flow snapshot."""
    sign = flow.sign
    b4 = B4Evaluator(a, prefactor=-sign / 2.0)
    E0s, E1s, R4s, R6s = [], [], [], []
    for st in flow.states:
        E0s.append(energy_E0(st, a))
        R4s.append(remainder_R4(st, a, sign, flow.dealias))
        if with_quartic:
            E1s.append(energy_E1(st, b4))
            R6s.append(remainder_R6(st, b4, sign, flow.dealias))
        else:
            E1s.append(0.0)
            R6s.append(0.0)
    return EnergyReport(
        times=list(flow.times), E0=E0s, E1=E1s, R4=R4s, R6=R6s,
        sign=sign, symbol_tag=a.tag,
    )


def energy_identity_check(
    flow: FlowRecord, a: SymbolA, which: str = "E0-vs-R4", refinement_levels: int = 2
) -> IdentityReport:
    """Compare central differences of the energy against the remainder.

    which: "E0-vs-R4" or "E0E1-vs-R6".  The flow must be uniformly sampled;
    the base FD step is the snapshot spacing, and coarser steps (2h, 4h, ...)
    obtained by subsampling give the refinement table, whose decay order
    should be >= 2.
    """
    if which not in ("E0-vs-R4", "E0E1-vs-R6"):
        raise ValueError(f"unknown identity {which!r}")
    times = np.asarray(flow.times)
    dts = np.diff(times)
    if len(times) < 5 or np.max(np.abs(dts - dts[0])) > 1e-9 * dts[0]:
        raise ValueError("identity check needs >= 5 uniformly spaced snapshots")
    h = float(dts[0])
    report = sample_energies(flow, a, with_quartic=(which == "E0E1-vs-R6"))
    energy = np.asarray(report.E0)
    remainder = np.asarray(report.R4)
    if which == "E0E1-vs-R6":
        energy = energy + np.asarray(report.E1)
        remainder = np.asarray(report.R6)

    refinement = []
    for level in range(refinement_levels, -1, -1):
        stride = 2**level
        e = energy[::stride]
        r = remainder[::stride]
        if len(e) < 3:
            continue
        hh = h * stride
        fd = (e[2:] - e[:-2]) / (2.0 * hh)
        rel = np.abs(fd - r[1:-1]) / np.maximum(np.abs(r[1:-1]), 1e-300)
        refinement.append((hh, float(np.max(rel))))
    base = refinement[-1]
    fd = (energy[2:] - energy[:-2]) / (2.0 * h)
    rel = np.abs(fd - remainder[1:-1]) / np.maximum(np.abs(remainder[1:-1]), 1e-300)
    return IdentityReport(
        which=which,
        fd_step=h,
        max_rel=float(np.max(rel)),
        median_rel=float(np.median(rel)),
        refinement=refinement,
    )


def e1_bound_probe(u: RealField, a: SymbolA, M: float) -> float:
    """|E1(u)| / (||u||_{H^a}^2 ||u||_{H^{-1/2}_M}^2); 0 for u = 0."""
    spec = dft(u)
    denom = symbol_norm(spec, a) ** 2 * sobolev_norm(spec, -0.5, M) ** 2
    if denom == 0.0:
        return 0.0
    b4 = B4Evaluator(a, prefactor=1.0)
    return abs(energy_E1(u, b4)) / denom
