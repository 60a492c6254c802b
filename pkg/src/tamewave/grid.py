"""Discrete model of the b-geometry: a truncated cylinder in log coordinates.

The geometry is the half-infinite cylinder [0, inf)_t x S^1_y with t = -log x,
truncated to t in [0, t_max) and sampled on a regular n_t x n_y lattice.  All
spectral machinery (transforms, weighted Sobolev norms, multipliers) lives
here.  Frequencies are angular: tau = 2*pi*j/t_max on the t-axis and integer
wavenumbers k on the periodic y-axis.

Norm convention: the discrete L^2 norm is the quadrature norm
sqrt(sum |u|^2 dt dy), and Fourier coefficients are normalized so that
Parseval holds exactly against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DataError

__all__ = [
    "Grid",
    "Field",
    "SobolevIndex",
    "ExpansionDecomposition",
    "make_grid",
    "field",
    "field_from_function",
    "zero_field",
    "bsobolev_norm",
    "l2_norm",
    "weight_apply",
    "fourier_roundtrip",
    "forward_coefficients",
    "field_from_coefficients",
    "smooth_step",
    "boundary_cutoff",
    "boundary_taper",
    "actual_support_floor",
    "save_field",
    "load_field",
]

# Exponent cap so exp(alpha * t_max) stays in double range with margin.
_MAX_WEIGHT_EXPONENT = 700.0


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


def smooth_step(x):
    """C-infinity monotone step: exactly 0 for x <= 0, exactly 1 for x >= 1.

    Built from the standard bump exp(-1/x); the endpoint values are bit-exact,
    which the one-sided support rules rely on.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        fx = np.where(x > 0.0, np.exp(-1.0 / np.where(x > 0.0, x, 1.0)), 0.0)
        f1x = np.where(1.0 - x > 0.0, np.exp(-1.0 / np.where(1.0 - x > 0.0, 1.0 - x, 1.0)), 0.0)
    out = np.where(x <= 0.0, 0.0, np.where(x >= 1.0, 1.0, fx / np.where(fx + f1x > 0.0, fx + f1x, 1.0)))
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Grid:
    """Regular lattice on the truncated log-cylinder.

    t runs over [0, t_max) with n_t points, y over [0, 2*pi) with n_y points.
    Both sample counts are powers of two so FFTs stay fast and exact.
    """

    n_t: int
    n_y: int
    t_max: float
    dt: float
    dy: float

    @cached_property
    def t(self) -> np.ndarray:
        return np.arange(self.n_t) * self.dt

    @cached_property
    def y(self) -> np.ndarray:
        return np.arange(self.n_y) * self.dy

    @cached_property
    def tau(self) -> np.ndarray:
        """Angular frequencies dual to t, in FFT order."""
        j = np.concatenate([np.arange(0, self.n_t // 2), np.arange(-self.n_t // 2, 0)])
        return (2.0 * np.pi / self.t_max) * j

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers dual to y, in FFT order."""
        j = np.concatenate([np.arange(0, self.n_y // 2), np.arange(-self.n_y // 2, 0)])
        return j.astype(float)

    @cached_property
    def xi_squared(self) -> np.ndarray:
        """1 + tau^2 + k^2 on the frequency lattice (Japanese bracket squared)."""
        return 1.0 + self.tau[:, None] ** 2 + self.wavenumbers[None, :] ** 2

    @property
    def cell_area(self) -> float:
        return self.dt * self.dy

    def __eq__(self, other) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return (self.n_t, self.n_y, self.t_max) == (other.n_t, other.n_y, other.t_max)

    def __hash__(self):
        return hash((self.n_t, self.n_y, self.t_max))


def make_grid(n_t: int, n_y: int, t_max: float) -> Grid:
    """Build a grid; sizes must be powers of two and t_max positive."""
    if not (isinstance(n_t, (int, np.integer)) and _is_power_of_two(int(n_t))):
        raise ConfigurationError(f"n_t must be a power of two >= 2, got {n_t!r}")
    if not (isinstance(n_y, (int, np.integer)) and _is_power_of_two(int(n_y))):
        raise ConfigurationError(f"n_y must be a power of two >= 2, got {n_y!r}")
    t_max = float(t_max)
    if not (t_max > 0.0 and math.isfinite(t_max)):
        raise ConfigurationError(f"t_max must be positive and finite, got {t_max!r}")
    return Grid(int(n_t), int(n_y), t_max, t_max / int(n_t), 2.0 * np.pi / int(n_y))


@dataclass(frozen=True)
class SobolevIndex:
    """Order/weight pair (s, alpha) of a weighted b-Sobolev norm."""

    s: float
    alpha: float = 0.0

    def __post_init__(self):
        if not (self.s >= 0.0 and math.isfinite(self.s)):
            raise ConfigurationError(f"Sobolev order s must be >= 0, got {self.s!r}")
        if not math.isfinite(self.alpha):
            raise ConfigurationError(f"weight alpha must be finite, got {self.alpha!r}")


def _as_index(idx) -> SobolevIndex:
    if isinstance(idx, SobolevIndex):
        return idx
    if isinstance(idx, (tuple, list)) and len(idx) == 2:
        return SobolevIndex(float(idx[0]), float(idx[1]))
    return SobolevIndex(float(idx), 0.0)


@dataclass(frozen=True)
class Field:
    """Complex-valued function sampled on a grid.

    Values are immutable (the array is marked read-only).  `support_floor`
    records that the field vanishes identically for t < support_floor; the
    constructor enforces this bit-exactly.
    """

    grid: Grid
    values: np.ndarray
    support_floor: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != (self.grid.n_t, self.grid.n_y):
            raise DataError(
                f"field shape {vals.shape} does not match grid ({self.grid.n_t}, {self.grid.n_y})"
            )
        if not np.all(np.isfinite(vals)):
            raise DataError("field contains NaN or Inf entries")
        below = self.grid.t < self.support_floor
        if np.any(below) and np.any(vals[below] != 0.0):
            bad = np.argwhere(vals[below] != 0.0)[0]
            raise DataError(
                f"field violates support_floor={self.support_floor}: nonzero value "
                f"at t-index {int(np.nonzero(below)[0][bad[0]])}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "support_floor", float(self.support_floor))

    def is_real(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.values.real), initial=0.0)))
        return float(np.max(np.abs(self.values.imag), initial=0.0)) <= tol * scale

    def __add__(self, other: "Field") -> "Field":
        _require_same_grid(self, other)
        return Field(self.grid, self.values + other.values,
                     min(self.support_floor, other.support_floor))

    def __sub__(self, other: "Field") -> "Field":
        _require_same_grid(self, other)
        return Field(self.grid, self.values - other.values,
                     min(self.support_floor, other.support_floor))

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values, self.support_floor)

    def __mul__(self, c) -> "Field":
        if isinstance(c, Field):
            raise TypeError("use tame.product for field*field multiplication")
        return Field(self.grid, self.values * complex(c), self.support_floor)

    __rmul__ = __mul__


def _require_same_grid(u: Field, v: Field):
    if u.grid != v.grid:
        raise ConfigurationError("fields live on different grids")


def field(grid: Grid, values, support_floor: float = 0.0) -> Field:
    return Field(grid, np.array(values, dtype=np.complex128), support_floor)


def zero_field(grid: Grid, support_floor: float = 0.0) -> Field:
    return Field(grid, np.zeros((grid.n_t, grid.n_y), dtype=np.complex128), support_floor)


def field_from_function(grid: Grid, fn, support_floor: float = 0.0) -> Field:
    """Sample fn(t, y) on the lattice (broadcast over a meshgrid)."""
    tt, yy = np.meshgrid(grid.t, grid.y, indexing="ij")
    return Field(grid, np.asarray(fn(tt, yy), dtype=np.complex128), support_floor)


def forward_coefficients(u: Field) -> np.ndarray:
    """Parseval-normalized DFT coefficients: sum |c|^2 == l2_norm(u)^2."""
    g = u.grid
    scale = math.sqrt(g.cell_area / (g.n_t * g.n_y))
    return np.fft.fft2(u.values) * scale


def field_from_coefficients(grid: Grid, coeffs: np.ndarray, support_floor: float = 0.0) -> Field:
    scale = math.sqrt(grid.cell_area / (grid.n_t * grid.n_y))
    vals = np.fft.ifft2(np.asarray(coeffs) / scale)
    below = grid.t < support_floor
    if np.any(below):
        vals = vals.copy()
        vals[below] = 0.0
    return Field(grid, vals, support_floor)


def fourier_roundtrip(u: Field) -> Field:
    """inverse(forward(u)); used as the transform-backbone sanity check.

    Roundoff dust below the support floor is re-zeroed so the supported
    character survives the roundtrip bit-exactly.
    """
    return field_from_coefficients(u.grid, forward_coefficients(u), u.support_floor)


def _weight_column(grid: Grid, alpha: float) -> np.ndarray:
    if abs(alpha) * grid.t_max > _MAX_WEIGHT_EXPONENT:
        raise DataError(
            f"weight exp({alpha} * t) overflows double precision at t_max={grid.t_max}; "
            f"|alpha|*t_max must stay below {_MAX_WEIGHT_EXPONENT}"
        )
    return np.exp(alpha * grid.t)


def weight_apply(u: Field, alpha: float) -> Field:
    """Multiply by the boundary weight x^(-alpha) = e^(alpha t)."""
    w = _weight_column(u.grid, float(alpha))
    return Field(u.grid, u.values * w[:, None], u.support_floor)


def l2_norm(u: Field) -> float:
    return math.sqrt(float(np.sum(np.abs(u.values) ** 2)) * u.grid.cell_area)


def bsobolev_norm(u: Field, idx) -> float:
    """Weighted b-Sobolev norm H^{s,alpha} on the discrete cylinder.

    Computed as the Fourier-multiplier norm of the exponentially weighted
    field: || <(tau,k)>^s  FFT(e^{alpha t} u) ||_{l^2}.  Reduces to the
    discrete L^2 norm at (s, alpha) = (0, 0), and is exactly compatible with
    weight_apply: norm(u, (s, alpha)) == norm(weight_apply(u, alpha), (s, 0)).
    """
    idx = _as_index(idx)
    v = u if idx.alpha == 0.0 else weight_apply(u, idx.alpha)
    coeffs = forward_coefficients(v)
    if idx.s == 0.0:
        total = float(np.sum(np.abs(coeffs) ** 2))
    else:
        total = float(np.sum(u.grid.xi_squared ** idx.s * np.abs(coeffs) ** 2))
    return math.sqrt(total)


def boundary_cutoff(grid: Grid) -> np.ndarray:
    """The fixed cutoff profile chi(t): 0 for t <= 1, 1 for t >= 2, smooth between.

    This is the profile multiplying the constant term in expansions
    u = c*chi + remainder, so the leading term vanishes at the Cauchy end.
    """
    return smooth_step(grid.t - 1.0)


def boundary_taper(grid: Grid, width: float = 2.0) -> np.ndarray:
    """Smooth taper equal to 1 for t <= t_max - width and 0 at t = t_max.

    Measurement utility: multiplying a non-decaying tail by this taper before
    taking spectral norms bounds the wrap-around artifact of the periodic
    transform at the truncation end.
    """
    return smooth_step((grid.t_max - grid.t) / float(width))


def actual_support_floor(u: Field):
    """Scan for the first t-row with a nonzero entry; None if u is identically 0."""
    nonzero = np.any(u.values != 0.0, axis=1)
    idx = np.argmax(nonzero)
    if not nonzero[idx]:
        return None
    return float(u.grid.t[idx])


# -- serialization: flat little-endian binary + structured-text sidecar -------

_HEADER_SUFFIX = ".hdr"
_BINARY_SUFFIX = ".bin"


def save_field(u: Field, stem) -> None:
    """Write <stem>.bin (row-major complex128 as little-endian f64 pairs)
    and <stem>.hdr (key = value header with grid parameters)."""
    stem = Path(stem)
    raw = np.ascontiguousarray(u.values, dtype="<c16")
    stem.with_suffix(stem.suffix + _BINARY_SUFFIX).write_bytes(raw.tobytes())
    header = "\n".join(
        [
            "format = tamewave-field-v1",
            "layout = row-major complex128 little-endian (re, im) f64 pairs",
            f"n_t = {u.grid.n_t}",
            f"n_y = {u.grid.n_y}",
            f"t_max = {u.grid.t_max!r}",
            f"support_floor = {u.support_floor!r}",
        ]
    )
    stem.with_suffix(stem.suffix + _HEADER_SUFFIX).write_text(header + "\n")


def load_field(stem) -> Field:
    stem = Path(stem)
    header_path = stem.with_suffix(stem.suffix + _HEADER_SUFFIX)
    binary_path = stem.with_suffix(stem.suffix + _BINARY_SUFFIX)
    if not header_path.exists() or not binary_path.exists():
        raise ConfigurationError(f"field files {binary_path} / {header_path} not found")
    meta = {}
    for line in header_path.read_text().splitlines():
        if "=" in line:
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    try:
        grid = make_grid(int(meta["n_t"]), int(meta["n_y"]), float(meta["t_max"]))
        floor = float(meta["support_floor"])
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"malformed field header {header_path}: {exc}") from exc
    raw = np.frombuffer(binary_path.read_bytes(), dtype="<c16")
    if raw.size != grid.n_t * grid.n_y:
        raise DataError(
            f"field binary {binary_path} has {raw.size} entries, expected {grid.n_t * grid.n_y}"
        )
    return Field(grid, raw.reshape(grid.n_t, grid.n_y).copy(), floor)


@dataclass(frozen=True)
class ExpansionDecomposition:
    """Leading constant + decaying remainder split u = c*chi + remainder."""

    constant: complex
    remainder: Field
    alpha: float
    fit_residual: float

    def __post_init__(self):
        if self.fit_residual < 0.0:
            raise DataError("fit_residual must be nonnegative")
