"""Dilation-invariant normal-operator analysis for the toy wave family.

The model operator frozen at the boundary is
    P = d_t^2 + gamma d_t - c0^2 d_y^2 + mass^2 + extra_zeroth,
whose Mellin symbol per circle mode k under u -> e^{-i sigma t} is the
quadratic
    P_k(sigma) = -sigma^2 - i gamma sigma + c0^2 k^2 + mass^2 + extra_zeroth.
Its roots are the resonances; they dictate the t -> infinity asymptotics of
forward solutions (a simple 0-resonance with constant state for the massless
wave, a decaying leading mode for small Klein-Gordon mass).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DataError
from .grid import (
    ExpansionDecomposition,
    Field,
    boundary_cutoff,
    smooth_step,
)

__all__ = [
    "ModelOperatorSpec",
    "ResonanceSet",
    "normal_symbol",
    "find_resonances",
    "spectral_gap",
    "extract_expansion",
    "mode_values",
    "tail_decay_slope",
    "aitken_constant",
    "mode_decay_rate",
]

_ROOT_TOL = 1e-10


@dataclass(frozen=True)
class ModelOperatorSpec:
    """Coefficients of the boundary-frozen model operator."""

    gamma: float = 0.5
    c0: float = 1.0
    mass: float = 0.0
    extra_zeroth: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ConfigurationError(f"damping gamma must be positive, got {self.gamma}")
        if not self.c0 > 0.0:
            raise ConfigurationError(f"wave speed c0 must be positive, got {self.c0}")
        if self.mass < 0.0:
            raise ConfigurationError(f"mass must be nonnegative, got {self.mass}")

    @property
    def zeroth_constant(self) -> float:
        return self.mass ** 2 + self.extra_zeroth

    def mode_constant(self, k: int) -> float:
        return self.c0 ** 2 * k ** 2 + self.zeroth_constant


def normal_symbol(spec: ModelOperatorSpec, k: int, sigma):
    """Mellin symbol P_k(sigma); accepts scalar or array sigma."""
    sigma = np.asarray(sigma, dtype=complex)
    out = -sigma ** 2 - 1j * spec.gamma * sigma + spec.mode_constant(k)
    if out.ndim == 0:
        return complex(out)
    return out


def _symbol_derivative(spec: ModelOperatorSpec, sigma: complex) -> complex:
    return -2.0 * sigma - 1j * spec.gamma


def _snap(z: complex, scale: float) -> complex:
    re, im = z.real, z.imag
    if abs(re) < 1e-13 * scale:
        re = 0.0
    if abs(im) < 1e-13 * scale:
        im = 0.0
    return complex(re, im)


@dataclass(frozen=True)
class ResonanceSet:
    """Per-mode complex poles of the inverse Mellin family.

    modes maps the circle wavenumber k to its roots, sorted by decreasing
    imaginary part; only roots with Im sigma >= -search_bound are kept.
    """

    modes: dict
    search_bound: float

    def all_roots(self):
        for k in sorted(self.modes):
            for sigma in self.modes[k]:
                yield k, sigma

    def table_rows(self):
        for k, sigma in self.all_roots():
            yield k, sigma.real, sigma.imag


def find_resonances(spec: ModelOperatorSpec, k_max: int, search_bound: float) -> ResonanceSet:
    """All symbol roots with Im sigma >= -search_bound for |k| <= k_max.

    Roots come from companion-matrix eigenvalues (np.roots) and are polished
    by a few Newton steps on the symbol; this code path generalizes verbatim
    to higher-order symbol families.
    """
    if k_max < 0:
        raise ConfigurationError(f"k_max must be >= 0, got {k_max}")
    if not search_bound > 0.0:
        raise ConfigurationError(f"search_bound must be positive, got {search_bound}")
    modes = {}
    for k in range(-k_max, k_max + 1):
        poly = np.array([-1.0, -1j * spec.gamma, spec.mode_constant(k)], dtype=complex)
        roots = np.roots(poly)
        scale = 1.0 + max(abs(r) for r in roots)
        polished = []
        for r in roots:
            sigma = complex(r)
            for _ in range(4):
                deriv = _symbol_derivative(spec, sigma)
                if deriv == 0:
                    break
                sigma -= normal_symbol(spec, k, sigma) / deriv
            sigma = _snap(sigma, scale)
            if abs(normal_symbol(spec, k, sigma)) >= _ROOT_TOL:
                raise DataError(
                    f"Newton polish failed for mode k={k}: |P_k(sigma)| = "
                    f"{abs(normal_symbol(spec, k, sigma)):.3e}"
                )
            if sigma.imag >= -search_bound:
                polished.append(sigma)
        polished.sort(key=lambda z: (-z.imag, z.real))
        modes[k] = tuple(polished)
    return ResonanceSet(modes, float(search_bound))


def spectral_gap(rs: ResonanceSet):
    """Leading resonance sigma_1 and the depth of the next distinct level.

    Returns (sigma1, gap) with gap = -Im of the second-highest distinct
    imaginary-part level; decay below the leading term happens at this rate.
    """
    roots = [sigma for _, sigma in rs.all_roots()]
    if not roots:
        raise DataError("resonance set is empty")
    sigma1 = max(roots, key=lambda z: (z.imag, -abs(z.real)))
    levels = []
    for z in sorted(roots, key=lambda z: -z.imag):
        if not levels or levels[-1] - z.imag > 1e-9:
            levels.append(z.imag)
    if len(levels) < 2:
        raise DataError("no second resonance level within the search bound")
    return sigma1, -levels[1]


# -- physical-space expansion extraction --------------------------------------


def mode_values(u: Field, k: int) -> np.ndarray:
    """Trig coefficient series t -> (1/n_y) sum_y u(t,y) e^{-iky}."""
    return np.fft.fft(u.values, axis=1)[:, k % u.grid.n_y] / u.grid.n_y


def _window_indices(grid, lo: float, hi: float) -> np.ndarray:
    idx = np.nonzero((grid.t >= lo) & (grid.t <= hi))[0]
    if idx.size < 8:
        raise ConfigurationError(f"fit window [{lo}, {hi}] contains too few grid points")
    return idx


def extract_expansion(u: Field, alpha: float, t_fit_window) -> ExpansionDecomposition:
    """Split u into constant * chi + remainder from the late-time average.

    The constant is the weighted time-average of the k = 0 mode over the fit
    window, with the weight concentrated on the late part of the window so
    the fast-decaying k = 0 tail does not bias it.  fit_residual is the
    alpha-weighted L^2 norm of the remainder over the window.
    """
    g = u.grid
    lo, hi = float(t_fit_window[0]), float(t_fit_window[1])
    if not (0.0 < lo < hi <= g.t_max):
        raise ConfigurationError(f"fit window [{lo}, {hi}] must lie inside (0, t_max]")
    if not alpha > 0.0:
        raise ConfigurationError(f"alpha must be positive, got {alpha}")
    if hi - lo + 1e-12 < 5.0 / alpha:
        raise ConfigurationError(
            f"fit window length {hi - lo:.3g} is below 5/alpha = {5.0 / alpha:.3g}"
        )
    length = hi - lo
    weight = smooth_step((g.t - (lo + 0.6 * length)) / (0.2 * length))
    mode0 = mode_values(u, 0)
    constant = complex(np.sum(weight * mode0) / np.sum(weight))

    chi = boundary_cutoff(g)
    remainder_vals = u.values - constant * chi[:, None]
    floor = u.support_floor if constant == 0 else min(u.support_floor, 1.0)
    remainder = Field(g, remainder_vals, floor)

    window_mask = smooth_step((g.t - lo) / (0.1 * length)) * smooth_step((hi - g.t) / (0.1 * length))
    if abs(alpha) * hi > 700.0:
        raise DataError("alpha-weighted tail norm overflows; reduce alpha or the window")
    weighted = remainder_vals * (window_mask * np.exp(alpha * g.t))[:, None]
    fit_residual = math.sqrt(float(np.sum(np.abs(weighted) ** 2)) * g.cell_area)
    return ExpansionDecomposition(constant, remainder, float(alpha), fit_residual)


def tail_decay_slope(u: Field, t_fit_window) -> float:
    """Least-squares slope of log ||u(t, .)||_{L^2_y} over the window."""
    g = u.grid
    idx = _window_indices(g, *t_fit_window)
    series = np.sqrt(np.sum(np.abs(u.values[idx]) ** 2, axis=1) * g.dy)
    good = series > 1e-290
    if np.count_nonzero(good) < 8:
        raise DataError("tail is numerically zero over the fit window")
    coef = np.polyfit(g.t[idx][good], np.log(series[good]), 1)
    return float(coef[0])


def aitken_constant(u: Field, t_fit_window, blocks: int = 3) -> complex:
    """Aitken-extrapolated limit of the k = 0 mode over the window.

    Block means of the mode form a near-geometric sequence when a single
    exponential tail dominates; Aitken's delta-squared removes it exactly, so
    the extrapolated value resolves constants far below the tail amplitude.
    Falls back to the last block mean when the sequence has already flattened
    to roundoff.
    """
    if blocks < 3:
        raise ConfigurationError("Aitken extrapolation needs at least 3 blocks")
    g = u.grid
    idx = _window_indices(g, *t_fit_window)
    # equal-length blocks keep the means of a pure exponential exactly
    # geometric, which is what the delta-squared step cancels
    usable = (idx.size // blocks) * blocks
    idx = idx[idx.size - usable:]
    mode0 = mode_values(u, 0)[idx]
    chunks = np.split(mode0, blocks)
    means = [complex(np.mean(c)) for c in chunks]
    m1, m2, m3 = means[-3], means[-2], means[-1]
    denom = (m3 - m2) - (m2 - m1)
    scale = max(abs(m1), abs(m2), abs(m3), 1e-30)
    if abs(denom) < 1e-12 * scale:
        return m3
    return m3 - (m3 - m2) ** 2 / denom


def mode_decay_rate(u: Field, k: int, t_fit_window, spec: ModelOperatorSpec) -> float:
    """Measured exponential decay rate of one circle mode's tail.

    For oscillatory modes the rate is read off the smooth action envelope
    |u_k|^2 + |d_t u_k / omega|^2 (no beat nulls); for non-oscillatory modes
    the Aitken-extrapolated constant is subtracted first.
    """
    g = u.grid
    idx = _window_indices(g, *t_fit_window)
    mode = mode_values(u, k)
    disc = spec.mode_constant(k) - spec.gamma ** 2 / 4.0
    if disc > 1e-12:
        omega = math.sqrt(disc)
        dmode = np.gradient(mode, g.dt)
        envelope = np.abs(mode[idx]) ** 2 + np.abs(dmode[idx] / omega) ** 2
        good = envelope > 1e-280
        if np.count_nonzero(good) < 8:
            raise DataError(f"mode k={k} tail is numerically zero over the window")
        coef = np.polyfit(g.t[idx][good], np.log(envelope[good]), 1)
        return -float(coef[0]) / 2.0
    constant = aitken_constant(u, t_fit_window)
    series = np.abs(mode[idx] - constant)
    good = series > 1e-280
    if np.count_nonzero(good) < 8:
        raise DataError(f"mode k={k} tail is numerically zero over the window")
    coef = np.polyfit(g.t[idx][good], np.log(series[good]), 1)
    return -float(coef[0])
