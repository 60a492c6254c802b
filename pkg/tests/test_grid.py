"""Grid, field, norm and serialization behavior."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import tamewave as tw
from tamewave.errors import ConfigurationError, DataError

from helpers import sobolev_norm_multinomial


@pytest.fixture(scope="module")
def grid():
    return tw.make_grid(256, 64, 20.0)


def random_field(grid, seed, decay=1.5):
    rng = np.random.default_rng(seed)
    coeffs = (rng.standard_normal((grid.n_t, grid.n_y))
              + 1j * rng.standard_normal((grid.n_t, grid.n_y)))
    coeffs *= grid.xi_squared ** (-decay / 2.0)
    return tw.grid.field_from_coefficients(grid, coeffs)


def unit_mode(grid, i, j):
    tau0, k0 = grid.tau[i], grid.wavenumbers[j]
    vals = np.exp(1j * (tau0 * grid.t[:, None] + k0 * grid.y[None, :]))
    vals /= math.sqrt(grid.t_max * 2.0 * np.pi)
    return tw.field(grid, vals), tau0, k0


class TestMakeGrid:
    def test_spacings(self):
        g = tw.make_grid(256, 64, 20.0)
        assert g.dt == 20.0 / 256
        assert g.dy == pytest.approx(2.0 * np.pi / 64, rel=1e-15)

    def test_minimal(self):
        g = tw.make_grid(2, 2, 1.0)
        assert g.dt == 0.5
        assert g.dy == pytest.approx(np.pi, rel=1e-15)

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ConfigurationError):
            tw.make_grid(100, 64, 20.0)
        with pytest.raises(ConfigurationError):
            tw.make_grid(256, 63, 20.0)

    def test_rejects_bad_t_max(self):
        with pytest.raises(ConfigurationError):
            tw.make_grid(256, 64, 0.0)
        with pytest.raises(ConfigurationError):
            tw.make_grid(256, 64, -3.0)

    def test_wavenumbers_are_exact_integers(self, grid):
        assert np.all(grid.wavenumbers == np.round(grid.wavenumbers))


class TestFieldInvariants:
    def test_rejects_nan(self, grid):
        vals = np.zeros((grid.n_t, grid.n_y), dtype=complex)
        vals[3, 4] = np.nan
        with pytest.raises(DataError):
            tw.field(grid, vals)

    def test_rejects_support_violation(self, grid):
        vals = np.zeros((grid.n_t, grid.n_y), dtype=complex)
        vals[2, 0] = 1.0
        with pytest.raises(DataError):
            tw.field(grid, vals, support_floor=5.0)

    def test_values_read_only(self, grid):
        u = tw.zero_field(grid)
        with pytest.raises(ValueError):
            u.values[0, 0] = 1.0

    def test_norm_rejects_weight_overflow(self, grid):
        u = tw.zero_field(grid)
        with pytest.raises(DataError):
            tw.weight_apply(u, 40.0)


class TestNorms:
    def test_zero_field(self, grid):
        assert tw.bsobolev_norm(tw.zero_field(grid), (2.0, 0.5)) == 0.0

    def test_parseval_at_zero_index(self, grid):
        u = random_field(grid, 1)
        assert tw.bsobolev_norm(u, (0.0, 0.0)) == pytest.approx(tw.l2_norm(u), rel=1e-12)

    @pytest.mark.parametrize("i,j,s", [(5, 3, 1), (17, 9, 2), (40, 21, 3)])
    def test_single_mode_closed_form(self, grid, i, j, s):
        u, tau0, k0 = unit_mode(grid, i, j)
        assert tw.l2_norm(u) == pytest.approx(1.0, rel=1e-12)
        expected = sobolev_norm_multinomial(tau0, k0, s)
        assert expected == pytest.approx((1.0 + tau0 ** 2 + k0 ** 2) ** (s / 2.0), rel=1e-12)
        assert tw.bsobolev_norm(u, (float(s), 0.0)) == pytest.approx(expected, rel=1e-10)

    def test_weight_identity_derived(self, grid):
        u = random_field(grid, 2)
        for alpha in (-1.0, -0.3, 0.4, 1.0):
            lhs = tw.bsobolev_norm(tw.weight_apply(u, alpha), (2.0, 0.0))
            rhs = tw.bsobolev_norm(u, (2.0, alpha))
            assert lhs == pytest.approx(rhs, rel=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10 ** 6), alpha=st.floats(-1.0, 1.0),
           scale=st.floats(-5.0, 5.0))
    def test_homogeneity(self, seed, alpha, scale):
        g = tw.make_grid(64, 16, 12.0)
        u = random_field(g, seed)
        n1 = tw.bsobolev_norm(scale * u, (1.5, alpha))
        n2 = abs(scale) * tw.bsobolev_norm(u, (1.5, alpha))
        assert n1 == pytest.approx(n2, rel=1e-12, abs=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10 ** 6), alpha=st.floats(-1.0, 1.0))
    def test_triangle_inequality(self, seed, alpha):
        g = tw.make_grid(64, 16, 12.0)
        u = random_field(g, seed)
        v = random_field(g, seed + 77)
        idx = (2.0, alpha)
        assert (tw.bsobolev_norm(u + v, idx)
                <= tw.bsobolev_norm(u, idx) + tw.bsobolev_norm(v, idx) + 1e-12)

    def test_monotone_in_s(self, grid):
        u = random_field(grid, 3)
        norms = [tw.bsobolev_norm(u, (s, 0.0)) for s in np.linspace(0.0, 4.0, 9)]
        assert all(b >= a * (1 - 1e-13) for a, b in zip(norms, norms[1:]))

    def test_fractional_orders_interpolate(self, grid):
        u, tau0, k0 = unit_mode(grid, 11, 5)
        expected = (1.0 + tau0 ** 2 + k0 ** 2) ** (1.25 / 2.0)
        assert tw.bsobolev_norm(u, (1.25, 0.0)) == pytest.approx(expected, rel=1e-10)


class TestWeightApply:
    def test_identity_at_zero(self, grid):
        u = random_field(grid, 4)
        assert np.array_equal(tw.weight_apply(u, 0.0).values, u.values)

    def test_exact_cancellation(self, grid):
        u = tw.field(grid, np.exp(-grid.t)[:, None] * np.ones((1, grid.n_y)))
        w = tw.weight_apply(u, 1.0)
        assert np.max(np.abs(w.values - 1.0)) < 1e-12

    def test_support_floor_unchanged(self, grid):
        vals = np.zeros((grid.n_t, grid.n_y), dtype=complex)
        vals[grid.n_t // 2:] = 1.0
        u = tw.field(grid, vals, support_floor=10.0)
        assert tw.weight_apply(u, 0.7).support_floor == 10.0


class TestRoundtrip:
    def test_zero(self, grid):
        u = tw.zero_field(grid)
        assert np.all(tw.fourier_roundtrip(u).values == 0.0)

    def test_single_mode(self, grid):
        u, _, _ = unit_mode(grid, 7, 2)
        err = np.max(np.abs(tw.fourier_roundtrip(u).values - u.values))
        assert err < 1e-12

    def test_random(self, grid):
        u = random_field(grid, 5)
        err = np.max(np.abs(tw.fourier_roundtrip(u).values - u.values))
        assert err < 1e-12 * np.max(np.abs(u.values))


class TestSobolevIndex:
    def test_rejects_negative_order(self):
        with pytest.raises(ConfigurationError):
            tw.SobolevIndex(-1.0, 0.0)

    def test_rejects_nonfinite_weight(self):
        with pytest.raises(ConfigurationError):
            tw.SobolevIndex(1.0, float("inf"))


class TestSerialization:
    def test_roundtrip(self, grid, tmp_path):
        u = random_field(grid, 6)
        u = tw.field(grid, u.values * (grid.t >= 2.0)[:, None], support_floor=2.0)
        tw.save_field(u, tmp_path / "field")
        v = tw.load_field(tmp_path / "field")
        assert v.grid == grid
        assert v.support_floor == 2.0
        assert np.array_equal(v.values, u.values)

    def test_binary_layout(self, grid, tmp_path):
        u = tw.field(grid, np.full((grid.n_t, grid.n_y), 1.0 + 2.0j))
        tw.save_field(u, tmp_path / "f")
        raw = np.frombuffer((tmp_path / "f.bin").read_bytes(), dtype="<f8")
        assert raw.size == 2 * grid.n_t * grid.n_y
        assert raw[0] == 1.0 and raw[1] == 2.0
        header = (tmp_path / "f.hdr").read_text()
        assert f"n_t = {grid.n_t}" in header and "support_floor" in header

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            tw.load_field(tmp_path / "nope")


class TestProfiles:
    def test_boundary_cutoff_plateau(self, grid):
        chi = tw.boundary_cutoff(grid)
        assert np.all(chi[grid.t <= 1.0] == 0.0)
        assert np.all(chi[grid.t >= 2.0] == 1.0)
        assert np.all(np.diff(chi) >= 0.0)

    def test_boundary_taper(self, grid):
        taper = tw.boundary_taper(grid)
        assert np.all(taper[grid.t <= grid.t_max - 2.0] == 1.0)
        assert taper[-1] < 1e-10

    def test_smooth_step_endpoints_exact(self):
        assert tw.grid.smooth_step(0.0) == 0.0
        assert tw.grid.smooth_step(1.0) == 1.0
        assert tw.grid.smooth_step(-3.0) == 0.0
        assert tw.grid.smooth_step(7.0) == 1.0
