import itertools

import numpy as np
import pytest

from mkdvlab import (
    ConfigurationError,
    GridSpec,
    LPPartition,
    PathSample,
    SolverConfig,
    SpectralField,
    airy_propagate,
    airy_pullback,
    airy_pushforward,
    dft,
    idft,
    l2_norm,
    lp_project,
    project_flow_to_blocks,
    sobolev_norm,
    solve,
    variation_norm,
    xsm_diagnostic,
)
from conftest import random_real_field


def brute_force_vp(path, p):
    """Oracle: exhaustive max over all chains 0 = i_0 < ... < i_m = K."""
    K = len(path) - 1
    vals = path.values
    metric = path.metric

    def d(i, j):
        return metric(SpectralField(path.grid, vals[j].coeffs - vals[i].coeffs))

    best = 0.0
    interior = list(range(1, K))
    for r in range(len(interior) + 1):
        for combo in itertools.combinations(interior, r):
            chain = [0, *combo, K]
            tot = sum(d(a, b) ** p for a, b in zip(chain, chain[1:]))
            best = max(best, tot)
    return best ** (1.0 / p)


def random_path(grid, rng, K, scale=1.0):
    times = np.sort(rng.uniform(0, 1, K + 1))
    while np.any(np.diff(times) <= 0):
        times = np.sort(rng.uniform(0, 1, K + 1))
    vals = [random_real_field(grid, rng) for _ in range(K + 1)]
    return PathSample(times, vals)


@pytest.fixture
def small_grid():
    return GridSpec(2 * np.pi, 16)


class TestVariationNorm:
    def test_constant_path_is_zero(self, small_grid, rng):
        v = random_real_field(small_grid, rng)
        path = PathSample([0.0, 0.5, 1.0], [v.copy(), v.copy(), v.copy()])
        assert variation_norm(path, 2.0) == 0.0

    def test_single_jump(self, small_grid, rng):
        v = random_real_field(small_grid, rng)
        z = SpectralField(small_grid, np.zeros(small_grid.n, dtype=complex))
        path = PathSample([0.0, 0.4, 1.0], [z, z.copy(), v])
        assert variation_norm(path, 2.0) == pytest.approx(l2_norm(v), rel=1e-13)

    def test_dp_equals_brute_force(self, small_grid, rng):
        for _ in range(30):
            K = int(rng.integers(2, 10))
            p = float(rng.uniform(1.0, 4.0))
            path = random_path(small_grid, rng, K)
            dp = variation_norm(path, p)
            bf = brute_force_vp(path, p)
            assert dp == pytest.approx(bf, abs=1e-12, rel=1e-12)

    def test_subsample_monotone(self, small_grid, rng):
        for _ in range(30):
            path = random_path(small_grid, rng, 9)
            full = variation_norm(path, 2.0)
            keep = sorted(
                rng.choice(np.arange(10), size=int(rng.integers(2, 9)), replace=False)
            )
            sub = path.subpath(keep)
            assert variation_norm(sub, 2.0) <= full + 1e-12

    def test_p_monotone(self, small_grid, rng):
        path = random_path(small_grid, rng, 8)
        v2 = variation_norm(path, 2.0)
        v3 = variation_norm(path, 3.0)
        v1 = variation_norm(path, 1.0)
        assert v3 <= v2 <= v1

    def test_repeated_samples_no_change(self, small_grid, rng):
        path = random_path(small_grid, rng, 5)
        times = np.concatenate([path.times, [path.times[-1] + 0.1]])
        vals = path.values + [path.values[-1].copy()]
        padded = PathSample(times, vals)
        assert variation_norm(padded, 2.0) == pytest.approx(
            variation_norm(path, 2.0), abs=1e-14
        )

    def test_p_below_one_rejected(self, small_grid, rng):
        path = random_path(small_grid, rng, 3)
        with pytest.raises(ValueError):
            variation_norm(path, 0.9)


class TestAiryPullback:
    def test_free_flow_pulls_back_to_constant(self, grid, rng):
        phi = random_real_field(grid, rng)
        times = np.linspace(0.0, 1.0, 17)
        path = PathSample(times, [airy_propagate(phi, t) for t in times])
        assert variation_norm(airy_pullback(path), 2.0) <= 1e-11 * l2_norm(phi)

    def test_atom_variation_is_jump_size(self, grid, rng):
        # piecewise-constant in pulled-back variables: 0 then phi
        phi = random_real_field(grid, rng)
        times = np.linspace(0.0, 1.0, 9)
        vals = []
        for t in times:
            if t < 0.5:
                vals.append(SpectralField(grid, np.zeros(grid.n, dtype=complex)))
            else:
                vals.append(airy_propagate(phi, t))
        path = PathSample(times, vals)
        assert variation_norm(airy_pullback(path), 2.0) == pytest.approx(
            l2_norm(phi), rel=1e-12
        )

    def test_pullback_roundtrip(self, grid, rng):
        path = random_path(grid, rng, 6)
        back = airy_pushforward(airy_pullback(path))
        for orig, rest in zip(path.values, back.values):
            assert np.max(np.abs(orig.coeffs - rest.coeffs)) <= 1e-12 * max(
                np.max(np.abs(orig.coeffs)), 1e-300
            )


class TestXsmDiagnostic:
    def test_free_airy_matches_block_aggregate(self, ref_grid, rng):
        phi = random_real_field(ref_grid, rng)
        part = LPPartition(ref_grid, M=1.0)
        times = np.linspace(0.0, 1.0, 33)
        states = [airy_propagate(phi, t) for t in times]
        paths = project_flow_to_blocks(times, states, part)
        s, M = 0.0, 1.0
        diag = xsm_diagnostic(paths, s, M)
        expect = np.sqrt(
            sum(
                sobolev_norm(lp_project(phi, part, N), s, M) ** 2
                for N in part.blocks
            )
        )
        assert diag.aggregate == pytest.approx(expect, abs=1e-6)

    def test_zero_field(self, ref_grid):
        z = SpectralField(ref_grid, np.zeros(ref_grid.n, dtype=complex))
        part = LPPartition(ref_grid, M=1.0)
        times = np.linspace(0.0, 1.0, 17)
        paths = project_flow_to_blocks(times, [z] * len(times), part)
        assert xsm_diagnostic(paths, 0.0, 1.0).aggregate == 0.0

    def test_coarse_sampling_rejected(self, ref_grid, rng):
        phi = random_real_field(ref_grid, rng)
        part = LPPartition(ref_grid, M=1.0)
        times = np.linspace(0.0, 1.0, 5)  # spacing 0.25 > window(N=4)/2
        states = [airy_propagate(phi, t) for t in times]
        paths = project_flow_to_blocks(times, states, part)
        with pytest.raises(ConfigurationError, match="spacing"):
            xsm_diagnostic(paths, -0.125, 1.0)

    def test_nonlinear_flow_comparable_to_sup_norm(self, ref_grid):
        # smooth small data, s=0, M=1: diagnostic within a factor 4 of the
        # sup-in-time l2-block norm
        amp = 0.25
        u0 = amp * np.exp(-((ref_grid.x - ref_grid.length / 2) ** 2) / (2 * 16.0))
        from mkdvlab import RealField

        cfg = SolverConfig(
            grid=ref_grid, dt=2e-3, horizon=1.0, sign=1.0, record_stride=25
        )
        flow = solve(RealField(ref_grid, u0), cfg)
        part = LPPartition(ref_grid, M=1.0)
        paths = project_flow_to_blocks(flow.times, flow.states, part)
        diag = xsm_diagnostic(paths, 0.0, 1.0)
        sup_block = max(
            np.sqrt(
                sum(
                    sobolev_norm(lp_project(dft(st), part, N), 0.0, 1.0) ** 2
                    for N in part.blocks
                )
            )
            for st in flow.states
        )
        assert np.isfinite(diag.aggregate)
        assert diag.aggregate <= 4.0 * sup_block
        assert diag.aggregate >= sup_block / 4.0
