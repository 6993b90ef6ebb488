import itertools

import numpy as np
import pytest

from mkdvlab import (
    B4Evaluator,
    BudgetError,
    GridSpec,
    RealField,
    SolverConfig,
    SpectralField,
    SymbolA,
    dft,
    e1_bound_probe,
    energy_E0,
    energy_E1,
    energy_identity_check,
    idft,
    l2_norm,
    make_aN,
    remainder_R4,
    remainder_R6,
    sample_energies,
    solve,
)
from mkdvlab.solver import cubic_spectrum


def low_mode_field(grid, rng, modes, amp=0.6):
    """Real field supported on +-modes (list of positive integers)."""
    c = np.zeros(grid.n, dtype=complex)
    for k in modes:
        z = amp * (rng.standard_normal() + 1j * rng.standard_normal())
        c[k] = z
        c[-k] = np.conj(z)
    return idft(SpectralField(grid, c))


def k_index(grid):
    return np.rint(grid.xi * grid.length / (2.0 * np.pi)).astype(int)


def oracle_E1(u, b4):
    """Exhaustive P4 enumeration over the full lattice (4 nested loops)."""
    spec = dft(u)
    grid = u.grid
    kmax = grid.n // 2 - 1
    ks = range(-kmax, kmax + 1)
    c = spec.coeffs
    active = [k for k in ks if abs(c[k % grid.n]) > 1e-14 * np.abs(c).max()]
    total = 0.0
    dxi = 2.0 * np.pi / grid.length
    for k1 in active:
        for k2 in active:
            for k3 in active:
                k4 = -(k1 + k2 + k3)
                if abs(k4) > kmax:
                    continue
                b = b4.stable(dxi * k1, dxi * k2, dxi * k3)
                term = (
                    b
                    * c[k1 % grid.n]
                    * c[k2 % grid.n]
                    * c[k3 % grid.n]
                    * c[k4 % grid.n]
                )
                total += term
    return (total / grid.length**3).real


def oracle_R6_p6(u, b4, sign):
    """Sextic enumeration: 5 free indices on P6, sixth determined."""
    spec = dft(u)
    grid = u.grid
    kmax = grid.n // 2 - 1
    c = spec.coeffs
    active = [
        k
        for k in range(-kmax, kmax + 1)
        if abs(c[k % grid.n]) > 1e-14 * np.abs(c).max()
    ]
    dxi = 2.0 * np.pi / grid.length
    total = 0.0 + 0.0j
    for k1, k2, k3, k4, k5 in itertools.product(active, repeat=5):
        k6 = -(k1 + k2 + k3 + k4 + k5)
        if abs(k6) > kmax or abs(c[k6 % grid.n]) == 0.0:
            continue
        ks = k4 + k5 + k6
        xi = dxi * ks
        b = b4.stable(dxi * k1, dxi * k2, dxi * k3)
        total += (
            b
            * 1j
            * xi
            * c[k1 % grid.n]
            * c[k2 % grid.n]
            * c[k3 % grid.n]
            * c[k4 % grid.n]
            * c[k5 % grid.n]
            * c[k6 % grid.n]
        )
    return float((-4.0 * sign * total).real) / grid.length**5


def oracle_R4_symmetrized(u, a, sign):
    """Symmetrized quartic quadrature (sign/2) * sum i(sum xi a) u^4."""
    spec = dft(u)
    grid = u.grid
    kmax = grid.n // 2 - 1
    c = spec.coeffs
    active = [
        k
        for k in range(-kmax, kmax + 1)
        if abs(c[k % grid.n]) > 1e-14 * np.abs(c).max()
    ]
    dxi = 2.0 * np.pi / grid.length
    total = 0.0 + 0.0j
    for k1, k2, k3 in itertools.product(active, repeat=3):
        k4 = -(k1 + k2 + k3)
        if abs(k4) > kmax:
            continue
        xs = dxi * np.array([k1, k2, k3, k4])
        sym = np.sum(xs * a(xs))
        total += (
            1j * sym
            * c[k1 % grid.n] * c[k2 % grid.n] * c[k3 % grid.n] * c[k4 % grid.n]
        )
    return float((sign / 2.0 * total).real) / grid.length**3


@pytest.fixture
def egrid():
    return GridSpec(8 * np.pi, 32)


@pytest.fixture
def symbol():
    return make_aN(1.0, -0.125, 1.0)


class TestE0:
    def test_zero_field(self, egrid, symbol):
        assert energy_E0(RealField(egrid, np.zeros(egrid.n)), symbol) == 0.0

    def test_unit_symbol_gives_mass(self, egrid, rng):
        one = SymbolA(1.0, lambda xi: np.ones_like(xi), tag="one")
        u = low_mode_field(egrid, rng, [1, 2, 3])
        assert energy_E0(u, one) == pytest.approx(l2_norm(dft(u)) ** 2, rel=1e-12)

    def test_single_cosine(self, egrid, symbol):
        xi0 = 3.0
        k = int(round(xi0 * egrid.length / (2 * np.pi)))
        u = RealField(egrid, 0.8 * np.cos(xi0 * egrid.x))
        a_val = symbol(np.array([xi0]))[0]
        assert energy_E0(u, symbol) == pytest.approx(
            a_val * l2_norm(dft(u)) ** 2, rel=1e-12
        )


class TestR4:
    def test_zero_field(self, egrid, symbol):
        assert remainder_R4(RealField(egrid, np.zeros(egrid.n)), symbol, 1.0) == 0.0

    def test_constant_symbol_total_derivative(self, egrid, rng):
        const = SymbolA(1.0, lambda xi: 1.7 * np.ones_like(xi), tag="const")
        u = low_mode_field(egrid, rng, [1, 2, 4])
        r = remainder_R4(u, const, 1.0, dealias=False)
        scale = l2_norm(dft(u)) ** 2
        assert abs(r) <= 1e-12 * max(scale, 1.0)

    def test_dual_formula_pure_cosine(self, egrid, symbol):
        # cubic harmonic at 3 xi0 must stay below Nyquist for the exact
        # convolution comparison
        u = RealField(egrid, 0.9 * np.cos(1.0 * egrid.x + 0.3))
        direct = remainder_R4(u, symbol, 1.0, dealias=False)
        quad = oracle_R4_symmetrized(u, symbol, 1.0)
        assert direct == pytest.approx(quad, abs=1e-10 * max(1.0, abs(quad)))

    def test_dual_formula_low_modes(self, egrid, symbol, rng):
        u = low_mode_field(egrid, rng, [1, 2, 3])
        direct = remainder_R4(u, symbol, 1.0, dealias=False)
        quad = oracle_R4_symmetrized(u, symbol, 1.0)
        assert direct == pytest.approx(quad, rel=1e-10)

    def test_sign_flips(self, egrid, symbol, rng):
        u = low_mode_field(egrid, rng, [1, 3])
        assert remainder_R4(u, symbol, 1.0) == pytest.approx(
            -remainder_R4(u, symbol, -1.0), rel=1e-14
        )


class TestE1:
    def test_zero_field(self, egrid, symbol):
        b4 = B4Evaluator(symbol, prefactor=-0.5)
        assert energy_E1(RealField(egrid, np.zeros(egrid.n)), b4) == 0.0

    def test_flat_spectrum_vanishes(self, egrid):
        # all active frequencies inside the symbol's constant region
        a = make_aN(4.0, -0.125, 1.0)
        b4 = B4Evaluator(a, prefactor=-0.5)
        u = RealField(egrid, 0.5 * np.cos(egrid.x))  # xi = 1 < 4
        assert energy_E1(u, b4) == 0.0

    def test_matches_exhaustive_enumeration(self, egrid, symbol, rng):
        b4 = B4Evaluator(symbol, prefactor=-0.5)
        u = low_mode_field(egrid, rng, [1, 2, 5, 7])  # 8 active modes
        fast = energy_E1(u, b4)
        slow = oracle_E1(u, b4)
        assert fast == pytest.approx(slow, rel=1e-12, abs=1e-300)

    def test_budget_gate(self, symbol, rng):
        grid = GridSpec(256 * np.pi, 4096)
        c = (rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n))
        c = 0.5 * (c + np.conj(c[np.mod(-np.arange(grid.n), grid.n)]))
        u = idft(SpectralField(grid, c))
        b4 = B4Evaluator(symbol, prefactor=-0.5)
        with pytest.raises(BudgetError) as info:
            energy_E1(u, b4)
        assert info.value.required == 1000


class TestR6:
    def test_zero_field(self, egrid, symbol):
        b4 = B4Evaluator(symbol, prefactor=-0.5)
        assert remainder_R6(RealField(egrid, np.zeros(egrid.n)), b4, 1.0) == 0.0

    def test_matches_p6_enumeration(self, egrid, symbol, rng):
        b4 = B4Evaluator(symbol, prefactor=-0.5)
        u = low_mode_field(egrid, rng, [1, 2, 3], amp=0.4)  # 6 active modes
        fast = remainder_R6(u, b4, 1.0, dealias=False)
        slow = oracle_R6_p6(u, b4, 1.0)
        assert fast == pytest.approx(slow, rel=1e-11, abs=1e-300)

    def test_low_support_vanishes(self, egrid):
        # u supported below M/4: u^3 stays below M, where b4 = 0
        a = make_aN(16.0, -0.125, 16.0)
        b4 = B4Evaluator(a, prefactor=-0.5)
        u = RealField(egrid, 0.5 * np.cos(2.0 * egrid.x))  # u^3 at |xi| <= 6 < 16
        assert remainder_R6(u, b4, 1.0, dealias=False) == 0.0


class TestIdentities:
    def test_linear_flow_energy_constant(self, ref_grid, symbol):
        u0 = RealField(
            ref_grid,
            np.exp(-((ref_grid.x - ref_grid.length / 2) ** 2) / (2 * 2.5**2)),
        )
        cfg = SolverConfig(
            grid=ref_grid, dt=1e-3, horizon=0.05, record_stride=10, nonlinearity=0.0
        )
        flow = solve(u0, cfg)
        E = [energy_E0(st, symbol) for st in flow.states]
        h = flow.times[1] - flow.times[0]
        fd = np.max(np.abs(np.diff(E))) / h
        assert fd <= 1e-10 * E[0]

    def test_e0_identity_small(self, symbol):
        grid = GridSpec(16 * np.pi, 64)
        u0 = RealField(
            grid, np.exp(-((grid.x - grid.length / 2) ** 2) / (2 * 2.5**2))
        )
        cfg = SolverConfig(grid=grid, dt=1e-4, horizon=0.012, record_stride=10)
        rep = energy_identity_check(solve(u0, cfg), symbol, "E0-vs-R4")
        assert rep.max_rel <= 1e-5

    def test_e0e1_identity_small(self, symbol):
        grid = GridSpec(16 * np.pi, 64)
        u0 = RealField(
            grid, np.exp(-((grid.x - grid.length / 2) ** 2) / (2 * 2.5**2))
        )
        cfg = SolverConfig(grid=grid, dt=1e-4, horizon=0.012, record_stride=10)
        rep = energy_identity_check(solve(u0, cfg), symbol, "E0E1-vs-R6")
        assert rep.max_rel <= 1e-4

    def test_nonuniform_sampling_rejected(self, egrid, symbol, rng):
        u = low_mode_field(egrid, rng, [1, 2])
        cfg = SolverConfig(grid=egrid, dt=1e-3, horizon=0.02, record_stride=2)
        flow = solve(u, cfg)
        flow.times[1] += 1e-4
        with pytest.raises(ValueError):
            energy_identity_check(flow, symbol, "E0-vs-R4")


class TestE1BoundProbe:
    def test_zero_field(self, egrid, symbol):
        assert e1_bound_probe(RealField(egrid, np.zeros(egrid.n)), symbol, 1.0) == 0.0

    def test_low_mode_consistency_with_oracle(self, egrid, symbol, rng):
        from mkdvlab import sobolev_norm, symbol_norm

        u = low_mode_field(egrid, rng, [1, 2, 5])
        spec = dft(u)
        b4 = B4Evaluator(symbol, prefactor=1.0)
        expect = abs(oracle_E1(u, b4)) / (
            symbol_norm(spec, symbol) ** 2 * sobolev_norm(spec, -0.5, 1.0) ** 2
        )
        assert e1_bound_probe(u, symbol, 1.0) == pytest.approx(expect, rel=1e-11)

    def test_block_sweep_no_growth(self, rng):
        # single-block fields at increasing N: ratio stays bounded
        grid = GridSpec(8 * np.pi, 512)
        from mkdvlab import random_block_field

        vals = []
        for N in (4.0, 8.0, 16.0, 32.0, 64.0):
            a = make_aN(N, -0.125, 1.0)
            best = 0.0
            for trial in range(5):
                phi = random_block_field(grid, N, rng)
                best = max(best, e1_bound_probe(idft(phi), a, 1.0))
            vals.append(best)
        vals = np.array(vals)
        assert vals.max() / np.median(vals) <= 10.0
