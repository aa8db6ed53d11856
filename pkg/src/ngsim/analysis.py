"""Power-law fitting and coarsening-theory scaling predictions.

Late-stage cluster growth with a single length scale xi(t) ~ t^gamma implies,
in d dimensions: N_d(t)/N ~ t^(-d*gamma), N_w(t)/N - 1 ~ t^(-gamma), the
failure rate 1 - S(t) ~ t^(-gamma), and a consensus time t_c ~ N^(1/(d*gamma)).
Adding long-range links at density p cuts coarsening off at the crossover
time t_x ~ p^(-1/(d*gamma)), after which relaxation is mean-field-like.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class FitError(RuntimeError):
    """Not enough usable points, or degenerate abscissas, for a fit."""


@dataclass(frozen=True)
class FitResult:
    """Least-squares power law y = amplitude * x^exponent over a window."""

    exponent: float
    amplitude: float
    window: tuple[float, float]
    r_squared: float
    point_count: int


def fit_power_law(points: Sequence[tuple[float, float]],
                  window: tuple[float, float] | None = None) -> FitResult:
    """Ordinary least squares on (ln x, ln y).

    Uses only points with positive coordinates and, if a window is given,
    x inside [x_lo, x_hi]. Nonpositive y values are excluded pointwise (log
    undefined), not clipped.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be a sequence of (x, y) pairs")
    x, y = pts[:, 0], pts[:, 1]
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if window is not None:
        x_lo, x_hi = window
        if not x_lo < x_hi:
            raise ValueError(f"window must satisfy x_lo < x_hi, got {window}")
        keep &= (x >= x_lo) & (x <= x_hi)
    x, y = x[keep], y[keep]
    if x.size < 2:
        raise FitError(f"need at least 2 usable points, have {x.size}")
    lx, ly = np.log(x), np.log(y)
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    if sxx == 0.0:
        raise FitError("zero variance in ln x")
    slope = float(np.sum((lx - lx.mean()) * (ly - ly.mean())) / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    residuals = ly - (intercept + slope * lx)
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot > 0:
        r_squared = max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    else:
        r_squared = 1.0 if ss_res < 1e-24 else 0.0
    if window is None:
        window = (float(x.min()), float(x.max()))
    return FitResult(exponent=slope, amplitude=math.exp(intercept),
                     window=(float(window[0]), float(window[1])),
                     r_squared=r_squared, point_count=int(x.size))


@dataclass(frozen=True)
class ScalingPrediction:
    """Exponents implied by xi(t) ~ t^gamma coarsening in d dimensions.

    All derived values are computed on access, never stored.
    """

    gamma: float
    d: int

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")

    @property
    def nd_slope(self) -> float:
        return -self.d * self.gamma

    @property
    def nw_slope(self) -> float:
        return -self.gamma

    @property
    def failure_slope(self) -> float:
        return -self.gamma

    @property
    def tc_exponent(self) -> float:
        return 1.0 / (self.d * self.gamma)


def predict_scaling(gamma: float, d: int) -> ScalingPrediction:
    """Bundle the four coarsening exponents for given gamma and dimension."""
    return ScalingPrediction(gamma=gamma, d=d)


def predict_crossover(p: float, gamma: float, d: int) -> float:
    """Coarsening-to-mean-field crossover time scale p^(-1/(d*gamma)).

    Order-of-magnitude estimate with unit amplitude: the crossover happens
    when growing clusters reach the typical shortcut spacing p^(-1/d).
    """
    if p <= 0:
        raise ValueError(f"p must be positive, got {p}")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    return p ** (-1.0 / (d * gamma))


def sw_onset_check(n: int, p: float, threshold: float = 10.0) -> bool:
    """Whether n * p is large enough for the shortcut speedup to show."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if p <= 0:
        raise ValueError(f"p must be positive, got {p}")
    return n * p >= threshold
