"""Audit report container and small regression/CSV helpers shared by audits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import DataError

__all__ = ["TameConstantReport", "loglog_regression", "format_float", "csv_lines"]

# Fixed float formatting for deterministic, lossless CSV output.
_FLOAT_FMT = "%.17g"


def format_float(x) -> str:
    return _FLOAT_FMT % float(x)


@dataclass
class TameConstantReport:
    """Measured constants of one empirical estimate audit.

    ratios holds (input descriptor, measured LHS / structural RHS) pairs with
    the estimate's constant normalized to 1; max_ratio is their maximum.
    slope (with confidence half-width slope_ci) is the log-log regression
    slope of the parameter dependence when the audit sweeps one, else None.
    """

    estimate_id: str
    ratios: list = dataclass_field(default_factory=list)
    max_ratio: float = 0.0
    slope: float | None = None
    slope_ci: float | None = None
    extra: dict = dataclass_field(default_factory=dict)

    def add(self, descriptor: str, ratio: float) -> None:
        ratio = float(ratio)
        if not (math.isfinite(ratio) and ratio >= 0.0):
            raise DataError(f"audit ratio must be finite and >= 0, got {ratio} ({descriptor})")
        self.ratios.append((descriptor, ratio))
        if ratio > self.max_ratio:
            self.max_ratio = ratio

    def csv_rows(self):
        for descriptor, ratio in self.ratios:
            yield [self.estimate_id, descriptor, format_float(ratio)]

    def summary(self) -> dict:
        out = {"estimate_id": self.estimate_id, "max_ratio": self.max_ratio}
        if self.slope is not None:
            out["slope"] = self.slope
            out["slope_ci"] = self.slope_ci
        out.update(self.extra)
        return out


def loglog_regression(xs, ys):
    """OLS slope of log(y) against log(x) with a 95% half-width estimate."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    if lx.size < 2:
        raise DataError("log-log regression needs at least two samples")
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    slope = float(coef[0])
    if lx.size == 2:
        return slope, 0.0
    sigma2 = float(res[0]) / (lx.size - 2) if res.size else 0.0
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    ci = 1.96 * math.sqrt(sigma2 / sxx) if sxx > 0 else math.inf
    return slope, ci


def csv_lines(header, rows):
    """Render rows (lists of already-formatted strings) as CSV text lines."""
    yield ",".join(header)
    for row in rows:
        yield ",".join(str(c) for c in row)
