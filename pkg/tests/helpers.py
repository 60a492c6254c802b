"""Shared scenario builders and independent oracles for the test suite.

Oracles here deliberately avoid the library's solution paths: quadratic
formula for resonances, Duhamel quadrature for the damped ODE, and an
adaptive RK45 method-of-lines integrator (plain pointwise products, no
dealiasing) for the nonlinear wave equation.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp

from tamewave import (
    Field,
    ModelOperatorSpec,
    NonlinearTerm,
    ProblemSpec,
    SmoothFunctionSpec,
    make_grid,
    pulse_forcing,
    zero_field,
)

WAVE_MODEL = ModelOperatorSpec(gamma=0.5, c0=1.0, mass=0.0)
KG_MODEL = ModelOperatorSpec(gamma=0.5, c0=1.0, mass=0.1)


def quadratic_resonances(spec: ModelOperatorSpec, k: int):
    """Roots of -sigma^2 - i gamma sigma + c^2 k^2 + m^2 + z by the formula."""
    const = spec.c0 ** 2 * k ** 2 + spec.mass ** 2 + spec.extra_zeroth
    disc = cmath.sqrt(const - spec.gamma ** 2 / 4.0)
    return (disc - 0.5j * spec.gamma, -disc - 0.5j * spec.gamma)


def duhamel_k0(grid, gamma: float, f_mode: np.ndarray) -> np.ndarray:
    """Closed-form solve of u'' + gamma u' = f via cumulative quadrature:
    u(t) = (1/gamma) [ int_0^t f - e^{-gamma t} int_0^t e^{gamma s} f ds ]."""
    t = grid.t
    i0 = cumulative_simpson(f_mode, x=t, initial=0.0)
    ig = cumulative_simpson(np.exp(gamma * t) * f_mode, x=t, initial=0.0)
    return (i0 - np.exp(-gamma * t) * ig) / gamma


def reference_nonlinear_solution(problem: ProblemSpec, rtol: float = 1e-9,
                                 atol: float = 1e-12) -> Field:
    """Independent fine-tolerance explicit time integration of the nonlinear
    equation (method of lines, adaptive RK45, plain collocation products)."""
    g = problem.grid
    n = g.n_y
    ik = 1j * g.wavenumbers
    fv = problem.forcing.values.real
    t_grid = g.t

    def forcing_at(t):
        # forcing fields in the tests are smooth in t; cubic-accuracy local
        # interpolation keeps the oracle independent of the stepper
        x = t / g.dt
        i = min(max(int(np.floor(x)), 1), g.n_t - 3)
        w = x - i
        rows = fv[i - 1:i + 3]
        c0 = -w * (w - 1) * (w - 2) / 6.0
        c1 = (w + 1) * (w - 1) * (w - 2) / 2.0
        c2 = -(w + 1) * w * (w - 2) / 2.0
        c3 = (w + 1) * w * (w - 1) / 6.0
        return c0 * rows[0] + c1 * rows[1] + c2 * rows[2] + c3 * rows[3]

    gamma = problem.base.gamma
    z0 = problem.base.zeroth_constant
    c0sq = problem.base.c0 ** 2

    def rhs(t, state):
        u = state[:n]
        v = state[n:]
        dyu = np.fft.ifft(ik * np.fft.fft(u)).real
        m = u if problem.metric_arg == "u" else dyu
        c2 = c0sq + problem.metric(m)
        flux = np.fft.ifft(ik * np.fft.fft(c2 * dyu)).real
        q = np.zeros(n)
        for term in problem.nonlinearity:
            acc = np.full(n, term.coefficient)
            acc = acc * u ** term.power
            for fac in term.factors:
                acc = acc * (v if fac == "dt" else dyu)
            q += acc
        return np.concatenate([v, forcing_at(t) + flux - gamma * v - z0 * u + q])

    sol = solve_ivp(rhs, (0.0, float(t_grid[-1])), np.zeros(2 * n), t_eval=t_grid,
                    method="RK45", rtol=rtol, atol=atol)
    assert sol.success, sol.message
    vals = sol.y[:n].T.astype(complex)
    below = g.t < problem.forcing.support_floor
    vals[below] = 0.0
    return Field(g, vals, problem.forcing.support_floor)


def wave_problem(n_t=4096, n_y=32, t_max=40.0, amplitude=0.01):
    """The committed wave scenario: c^2 = 1 + u/2, q = (d_t u)^2 + (d_y u)^2."""
    g = make_grid(n_t, n_y, t_max)
    return ProblemSpec(
        grid=g,
        base=WAVE_MODEL,
        metric=SmoothFunctionSpec("polynomial", coefficients=(0.5,)),
        forcing=pulse_forcing(g, 1.5, 1.0, amplitude, (1.0, 1.0)),
        nonlinearity=(NonlinearTerm(1.0, 0, ("dt", "dt")),
                      NonlinearTerm(1.0, 0, ("dy", "dy"))),
        expansion_alpha=0.2,
        fit_window=(6.0, 31.0),
        rate_window=(8.0, 26.0),
    )


def kg_problem(n_t=4096, n_y=32, t_max=60.0, amplitude=0.01):
    """The committed Klein-Gordon scenario (m = 0.1): q = (d_y u)^2 keeps the
    slow k = 0 harmonics out of the leading-coefficient measurement."""
    g = make_grid(n_t, n_y, t_max)
    return ProblemSpec(
        grid=g,
        base=KG_MODEL,
        metric=SmoothFunctionSpec("polynomial", coefficients=(0.5,)),
        forcing=pulse_forcing(g, 1.5, 1.0, amplitude, (1.0, 1.0)),
        nonlinearity=(NonlinearTerm(1.0, 0, ("dy", "dy")),),
        expansion_alpha=0.018,
        fit_window=(25.0, 58.0),
        rate_window=(30.0, 55.0),
    )


def small_wave_problem(n_t=1024, n_y=16, t_max=16.0, amplitude=0.01, forcing=None):
    """Compact variant for unit tests (no expansion window)."""
    g = make_grid(n_t, n_y, t_max)
    if forcing is None:
        forcing = pulse_forcing(g, 1.5, 1.0, amplitude, (1.0, 1.0))
    elif forcing == "zero":
        forcing = zero_field(g)
    return ProblemSpec(
        grid=g,
        base=WAVE_MODEL,
        metric=SmoothFunctionSpec("polynomial", coefficients=(0.5,)),
        forcing=forcing,
        nonlinearity=(NonlinearTerm(1.0, 0, ("dt", "dt")),
                      NonlinearTerm(1.0, 0, ("dy", "dy"))),
    )


def sobolev_norm_multinomial(tau0: float, k0: float, s: int) -> float:
    """Independent evaluation of the single-mode norm via the multinomial
    derivative identity sum_{a+b+c=s} s!/(a!b!c!) tau^{2a} k^{2b}."""
    total = 0.0
    for a in range(s + 1):
        for b in range(s + 1 - a):
            c = s - a - b
            coeff = math.factorial(s) // (
                math.factorial(a) * math.factorial(b) * math.factorial(c))
            total += coeff * tau0 ** (2 * a) * k0 ** (2 * b)
    return math.sqrt(total)
