import numpy as np
import pytest
from scipy.special import dawsn

from conftest import BACKENDS
from gbo_lab._kernels import commutator_sums
from gbo_lab.local import (SchurValidationError, WeightError, build_weights, cutoff,
                           dM_report, error_budget, error_integral_oracle, interaction_M,
                           localization_ratio, main_term, schur_check, smoothstep)
from gbo_lab.solver import initial_data, linear_trajectory
from gbo_lab.spectral import SpectralField, TorusGrid, sobolev_norm


@pytest.fixture(scope="module")
def grid():
    return TorusGrid(512, 128.0)


@pytest.fixture(scope="module")
def weights(grid):
    return build_weights(8.0, grid=grid)


def random_packet(grid, seed, amp=0.5):
    return initial_data(grid, {"family": "random", "amp": amp, "cutoff": 2.0, "width": 4.0,
                               "x0": 0.37 * grid.L}, seed=seed)


class TestCutoff:
    def test_plateau_and_support(self):
        x = np.linspace(-20, 20, 4001)
        c = cutoff(x, 6.0, 3.0)
        assert np.all(c[np.abs(x) <= 6.0] == 1.0)
        assert np.all(c[np.abs(x) >= 9.0] == 0.0)
        assert np.all((c >= 0) & (c <= 1))

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_derivatives_match_differences(self, order):
        x = np.linspace(-10, 10, 2001)
        h = 1e-5
        fd = (cutoff(x + h, 5.0, 3.0, order - 1) - cutoff(x - h, 5.0, 3.0, order - 1)) / (2 * h)
        exact = cutoff(x, 5.0, 3.0, order)
        assert np.abs(fd - exact).max() <= 1e-5 * max(1.0, np.abs(exact).max())

    def test_smoothstep_symmetry(self):
        t = np.linspace(0, 1, 101)
        np.testing.assert_allclose(smoothstep(t) + smoothstep(1 - t), 1.0, atol=1e-13)

    def test_bad_order(self):
        with pytest.raises(ValueError):
            cutoff(0.0, 1.0, 0.5, 4)


class TestWeights:
    def test_phi_odd(self, weights):
        phi = weights.phi
        np.testing.assert_allclose(phi, -phi[::-1], atol=1e-14)
        assert phi[weights.tables.n] == 0.0

    def test_phi_slope_at_origin(self, weights, grid):
        chi = weights.chi
        assert weights.tables.dphi[weights.tables.n] == pytest.approx(
            grid.dx * np.sum(chi ** 4) / weights.R, rel=1e-12)

    def test_phi_limit(self, weights, grid):
        chi = weights.chi
        limit = (grid.dx * np.sum(chi ** 2)) ** 2 / (2 * weights.R)
        assert weights.phi[-1] == pytest.approx(limit, rel=1e-10)
        # constant once the convolution support 2(R + R1) is passed
        far = weights.offsets > 2 * (weights.R + weights.R1) + 1
        np.testing.assert_allclose(weights.phi[far], limit, rtol=1e-10)

    def test_kappa_range(self):
        g = TorusGrid(4096, 1024.0)
        for R in (8.0, 32.0, 128.0):
            w = build_weights(R, grid=g)
            assert 2.0 <= w.constants["kappa"] <= 2.0 * (R + w.R1) / R

    def test_phi_third_derivative_constant_stable(self):
        g = TorusGrid(4096, 1024.0)
        vals = [build_weights(R, grid=g).constants["C_phi_3"] for R in (8.0, 16.0, 32.0, 64.0)]
        assert max(vals) / min(vals) < 1.5

    def test_cutoff_constants_scale_free(self):
        g = TorusGrid(4096, 1024.0)
        a = build_weights(16.0, grid=g).constants
        b = build_weights(64.0, grid=g).constants
        for key in ("C_chi_1", "C_chi_2", "C_chi_3"):
            assert a[key] == pytest.approx(b[key], rel=1e-10)

    @pytest.mark.parametrize("kw", [{"R": 40.0}, {"R": 8.0, "R1": 9.0}, {"R": -1.0}])
    def test_invalid(self, grid, kw):
        with pytest.raises(WeightError):
            build_weights(grid=grid, **kw)

    def test_grid_required(self):
        with pytest.raises(WeightError):
            build_weights(8.0)


class TestInteraction:
    def test_even_field_vanishes(self, grid, weights):
        u = initial_data(grid, {"family": "gaussian", "amp": 0.6, "width": 3.0})
        scale = interaction_M(u, weights, 6, oracle=True)
        assert abs(interaction_M(u, weights, 6)) <= 1e-12 * max(1.0, abs(scale) + 1.0)

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_fft_matches_double_sum(self, grid, weights, seed):
        u = random_packet(grid, seed)
        fast = interaction_M(u, weights, 6)
        slow = interaction_M(u, weights, 6, oracle=True)
        assert abs(fast - slow) <= 1e-10 * abs(slow)
        assert abs(slow) > 0

    def test_zero(self, grid, weights):
        assert interaction_M(SpectralField.zeros(grid), weights, 6) == 0.0

    def test_translation_invariant(self, grid, weights):
        u = random_packet(grid, 5)
        shifted = SpectralField(grid, u.coeffs * np.exp(-1j * grid.freqs * 16 * grid.dx))
        assert interaction_M(shifted, weights, 6) == pytest.approx(
            interaction_M(u, weights, 6), rel=1e-10)

    def test_main_term_forms(self, grid, weights):
        u = random_packet(grid, 4)
        assert main_term(u, weights, 6) > 0
        assert main_term(u, weights, 6, "homogeneous") > 0
        with pytest.raises(ValueError):
            main_term(u, weights, 6, "other")


class TestErrorBudget:
    @pytest.mark.parametrize("name", ["E1", "E3"])
    def test_fine_terms_against_double_sum(self, grid, weights, name):
        u = random_packet(grid, 8)
        bud = error_budget(u, weights, 6)
        oracle = error_integral_oracle(u, weights, 6, name)
        assert abs(getattr(bud, name) - oracle) <= 1e-8 * max(abs(oracle), 1e-300)

    def test_zero_field(self, grid, weights):
        bud = error_budget(SpectralField.zeros(grid), weights, 6)
        assert all(v == 0.0 for v in bud.magnitudes().values())

    def test_reported_quadrature_error_is_honest(self, grid, weights):
        u = random_packet(grid, 9)
        bud = error_budget(u, weights, 6)
        fine = error_budget(u, weights, 6, max_points=4 * grid.N)
        for name in ("E2", "T1", "T2"):
            gap = abs(getattr(bud, name) - getattr(fine, name))
            assert gap <= bud.quadrature_error[name] + 1e-15
            assert fine.quadrature_error[name] <= 1e-6 * abs(getattr(fine, name)) + 1e-18

    def test_report_keys(self, grid, weights):
        d = error_budget(random_packet(grid, 9), weights, 6).to_dict()
        assert {"E1", "E2", "E3", "T1", "T2", "T3", "T4", "formulas"} <= set(d)

    def test_unknown_oracle(self, grid, weights):
        with pytest.raises(ValueError):
            error_integral_oracle(random_packet(grid, 1), weights, 6, "T9")


class TestCommutatorKernel:
    @pytest.mark.parametrize("y", [0.0, 0.7, 1.9, -2.5])
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_gaussian_against_dawson(self, y, backend):
        h = 0.02
        z = np.arange(-15, 15 + h / 2, h)
        q = np.exp(-z ** 2)
        dq = -2 * z * q
        a = np.zeros_like(z)
        a[int(round((y + 15) / h))] = 1.0
        got = commutator_sums(a, q, q, dq, np.array([0]), h, backend=backend)[0] * h / np.pi
        # H(q^2) - q H(q) with H e^{-x^2} = (2/sqrt(pi)) D(x)
        want = 2 / np.sqrt(np.pi) * (dawsn(np.sqrt(2) * y) - np.exp(-y * y) * dawsn(y))
        assert got == pytest.approx(want, abs=1e-11)

    def test_short_table(self):
        with pytest.raises(IndexError):
            commutator_sums(np.ones(4), np.ones(4), np.ones(5), np.ones(5), np.array([3]), 1.0)


class TestDerivativeReport:
    def test_linear_flow_shapes(self, grid, weights):
        u = random_packet(grid, 2, amp=0.3)
        tr = linear_trajectory(u, 6, np.linspace(0, 1, 6))
        rep = dM_report(tr, weights, 6)
        assert rep.M.shape == rep.residual.shape == (6,)
        np.testing.assert_allclose(rep.residual, rep.dM_fd - rep.main_term)
        d = rep.to_dict()
        assert d["form"] == "literal" and len(d["entries"]) == 6
        assert d["negative_part"] == max(0.0, -d["min_residual"])


class TestLocalization:
    def test_constant_weight_cosine(self):
        g = TorusGrid(64, 2 * np.pi)
        f = SpectralField.from_values(g, np.cos(g.xs))
        one = SpectralField.from_values(g, np.ones(g.N))
        k = 4
        nrm = sobolev_norm(f, 0.5, homogeneous=False)
        expect = (np.pi + 2 * np.pi * 20 / 64) / (nrm ** 2 + nrm ** (k + 2))
        assert localization_ratio(f, one, k) == pytest.approx(expect, rel=1e-12)

    def test_array_weight_with_derivative(self):
        g = TorusGrid(128, 20.0)
        f = initial_data(g, {"family": "gaussian", "amp": 0.5, "width": 2.0})
        x = g.xs - 10.0
        r = localization_ratio(f, cutoff(x, 3.0, 2.0), 6, dg=cutoff(x, 3.0, 2.0, 1))
        assert 0 < r < 1

    def test_zero_field(self):
        g = TorusGrid(32, 5.0)
        with pytest.raises(ValueError):
            localization_ratio(SpectralField.zeros(g), np.ones(32), 6)


class TestSchur:
    def test_equality_for_block_of_ones(self):
        n1, n2 = 4, 9
        res = schur_check(np.ones((n1, n2)), np.ones(n1), np.ones(n2), 1.0, n1, n2)
        assert res.ratio == pytest.approx(1.0, rel=1e-15)

    def test_zero_kernel(self):
        res = schur_check(np.zeros((3, 3)), np.ones(3), np.ones(3), 1.0, 1.0, 1.0)
        assert res.ratio == 0.0

    def test_banded_random_kernel(self):
        rng = np.random.default_rng(0)
        n, b = 64, 3
        i, j = np.indices((n, n))
        K = np.where(np.abs(i - j) <= b, rng.uniform(-1, 1, (n, n)), 0.0)
        res = schur_check(K, rng.standard_normal(n), rng.standard_normal(n),
                          1.0, 2 * b + 1, 2 * b + 1)
        assert res.ratio <= 1.0

    def test_declared_bounds_validated(self):
        with pytest.raises(SchurValidationError) as err:
            schur_check(2 * np.ones((3, 3)), np.ones(3), np.ones(3), 1.0, 2.0, 3.0)
        assert err.value.report["height"] == 2.0
