"""Schedule bookkeeping and the iteration engine."""

import math
import time

import numpy as np
import pytest

import tamewave as tw
from tamewave.errors import ConfigurationError, ConvergenceError, DomainError, ScheduleError
from tamewave.linsolve import solve_forward
from tamewave.nashmoser import (
    NashMoserConfig,
    lambda_limit,
    lambda_shift,
    required_regularity,
    run,
    schedule_theta,
    verify_at_resolution,
)

from helpers import small_wave_problem


class TestRequiredRegularity:
    @pytest.mark.parametrize("d,expected", [(6, 858), (7, 1109), (1, 83)])
    def test_exact_values(self, d, expected):
        # direct evaluation of 16 d^2 + 43 d + 24
        assert 16 * d * d + 43 * d + 24 == expected
        value = required_regularity(d)
        assert isinstance(value, int)
        assert value == expected

    def test_fast(self):
        start = time.perf_counter()
        required_regularity(6)
        assert time.perf_counter() - start < 1e-3

    def test_rejects_bad_inputs(self):
        with pytest.raises(ConfigurationError):
            required_regularity(0)
        with pytest.raises(ConfigurationError):
            required_regularity(2.5)


class TestSchedule:
    def test_theta_base_cases(self):
        assert schedule_theta(16.0, 0) == 16.0
        assert schedule_theta(16.0, 1) == 32.0  # 16^(5/4) = 2^5 exactly
        assert schedule_theta(256.0, 2) == pytest.approx(2.0 ** 12.5, rel=1e-15)

    def test_closed_form_to_k30(self):
        theta0 = 2.0
        for k in range(31):
            exact = theta0 ** ((5.0 ** k) / (4.0 ** k))
            assert schedule_theta(theta0, k) == pytest.approx(exact, rel=1e-12)

    def test_strictly_increasing(self):
        vals = [schedule_theta(256.0, k) for k in range(12)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_overflow_is_schedule_error(self):
        with pytest.raises(ScheduleError):
            schedule_theta(256.0, 40)

    def test_lambda_base_case(self):
        assert lambda_shift(256.0, 0) == 1.0
        assert lambda_shift(7.5, 0) == 1.0

    def test_lambda_closed_form(self):
        theta0 = 256.0
        for k in (1, 2, 5, 10):
            exact = math.exp(math.fsum(
                theta0 ** (-0.5 * (5.0 ** j) / (4.0 ** j)) for j in range(k)))
            assert lambda_shift(theta0, k) == pytest.approx(exact, rel=1e-12)

    def test_lambda_limit_256_meets_budget(self):
        lam = lambda_limit(256.0)
        assert lam == pytest.approx(1.1194, abs=5e-4)
        assert lam <= 1.0 + 2.0 * 256.0 ** -0.5  # = 1.125

    def test_lambda_limit_16_violates_budget(self):
        # documented negative case motivating the theta0 >= 256 default
        lam = lambda_limit(16.0)
        assert lam == pytest.approx(1.9405, abs=2e-3)
        assert lam > 1.0 + 2.0 * 16.0 ** -0.5  # = 1.5

    def test_lambda_nondecreasing(self):
        vals = [lambda_shift(256.0, k) for k in range(10)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


class TestConfig:
    def test_validation(self):
        with pytest.raises(ConfigurationError):
            NashMoserConfig(d=1)
        with pytest.raises(ConfigurationError):
            NashMoserConfig(theta0=16.0)
        with pytest.raises(ConfigurationError):
            NashMoserConfig(delta=0.0)
        with pytest.raises(ConfigurationError):
            NashMoserConfig(residual_tol=-1.0)

    def test_regularity_budget_exposed(self):
        cfg = NashMoserConfig(d=4)
        assert cfg.regularity_budget == required_regularity(4)


def small_config(**overrides):
    kwargs = dict(d=4, theta0=256.0, delta=1e7, max_iters=12,
                  residual_tol=1e-8, smallness=1e8)
    kwargs.update(overrides)
    return NashMoserConfig(**kwargs)


class TestRun:
    def test_zero_forcing_converges_immediately(self):
        p = small_wave_problem(forcing="zero")
        result = run(p, small_config())
        assert result.converged and result.iterations == 0
        assert np.all(result.u.values == 0.0)
        assert result.constant == 0.0

    def test_small_wave_run_converges(self):
        p = small_wave_problem()
        result = run(p, small_config())
        assert result.converged
        assert result.iterations <= 12
        assert result.trace.residuals[-1] < 1e-8

    def test_superlinear_residual_decrease(self):
        p = small_wave_problem()
        result = run(p, small_config())
        rs = result.trace.residuals
        for r_prev, r_next in zip(rs, rs[1:]):
            if r_prev < 1e-1 and r_next > 1e-12:
                assert math.log(r_next) / math.log(r_prev) >= 1.2

    def test_domain_bookkeeping(self):
        p = small_wave_problem()
        cfg = small_config()
        result = run(p, cfg)
        floor0 = p.forcing.support_floor
        for row in result.trace.steps:
            k = row["k"]
            budget = sum(schedule_theta(cfg.theta0, j) ** -0.5 for j in range(k))
            # one stencil cell of slack per step for the residual widening
            assert row["support_floor"] >= floor0 - budget - k * p.grid.dt - 1e-12
        lams = [row["lambda"] for row in result.trace.steps]
        assert all(b >= a for a, b in zip(lams, lams[1:]))
        thetas = result.trace.thetas
        assert all(b > a for a, b in zip(thetas, thetas[1:]))

    def test_solution_satisfies_discrete_equation(self):
        from tamewave.linsolve import residual
        p = small_wave_problem()
        result = run(p, small_config())
        assert tw.l2_norm(residual(p, result.u)) < 1e-8

    def test_verification_at_double_resolution(self):
        p = small_wave_problem(n_t=1024)
        tol = 1e-6
        result = run(p, small_config(residual_tol=tol))
        fine = small_wave_problem(n_t=2048)
        assert verify_at_resolution(fine, result.u) < 10.0 * tol

    def test_smallness_threshold_enforced(self):
        p = small_wave_problem()
        with pytest.raises(DomainError, match="smallness"):
            run(p, small_config(smallness=1e-3))

    def test_trust_region_exit(self):
        p = small_wave_problem()
        with pytest.raises(DomainError, match="trust-region") as err:
            run(p, small_config(delta=1e-6))
        assert err.value.trace.steps

    def test_divergence_detected(self):
        p = small_wave_problem()

        def bad_solver(L, f, **kwargs):
            return -1.0 * solve_forward(L, f)  # wrong step sign: residual grows

        with pytest.raises(ConvergenceError) as err:
            run(p, small_config(delta=1e30), linsolver=bad_solver)
        assert err.value.trace.steps

    def test_budget_exhaustion(self):
        p = small_wave_problem()

        def stuck_solver(L, f, **kwargs):
            return tw.zero_field(p.grid, f.support_floor)

        with pytest.raises(ConvergenceError, match="iterations"):
            run(p, small_config(max_iters=3), linsolver=stuck_solver)

    def test_wave_decomposition_tracks_forcing_mass(self):
        # the k=0 limit constant approximates integral(f)/gamma for small data
        p = small_wave_problem(n_t=2048, t_max=24.0)
        result = run(p, small_config())
        f0 = np.mean(p.forcing.values.real, axis=1)
        predicted = np.trapezoid(f0, p.grid.t) / p.base.gamma
        assert result.constant.real == pytest.approx(predicted, rel=0.05)
        assert abs(result.constant.imag) < 1e-12
