"""
Ring Lab - Diagnostics
Bootstrap significance of envelope and time-series trends, and two-plateau
fits of radial density histograms.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from .errors import InsufficientDataError
from .models import DEFAULT_SEED, DensityProfile
from .parallel import STREAM_BOOTSTRAP, substream

logger = logging.getLogger(__name__)

SIGNIFICANCE_SE = 3.0
ABSOLUTE_FLOOR = 1e-6


@dataclass
class TrendInsight:
    """Change of a radial quantile between the first and last epoch"""
    quantile: float
    values: List[float]
    delta: float
    standard_error: float
    significant: bool
    monotone: bool
    direction: str


@dataclass
class StepFit:
    """Best two-plateau approximation of a density histogram"""
    r_star: float
    inner_level: float
    outer_level: float
    contrast: float
    residual: float


def quantile_trend(radii: Sequence[np.ndarray], quantile: float, width: float, resamples: int = 200,
                   seed: int = DEFAULT_SEED) -> TrendInsight:
    """Bootstrap the first-to-last change of a radial quantile.

    Significant means |delta| exceeds both 3 standard errors and 1e-6 * width.
    """
    epochs = [np.asarray(r, dtype=float) for r in radii]
    if len(epochs) < 2 or any(r.size == 0 for r in epochs):
        raise InsufficientDataError("trend needs at least two non-empty epochs")
    values = [float(np.quantile(r, quantile)) for r in epochs]
    delta = values[-1] - values[0]

    rng = substream(seed, STREAM_BOOTSTRAP, 0, int(round(quantile * 1000)))
    first, last = epochs[0], epochs[-1]
    boot = np.empty(resamples)
    for i in range(resamples):
        a = np.quantile(first[rng.integers(0, first.size, first.size)], quantile)
        b = np.quantile(last[rng.integers(0, last.size, last.size)], quantile)
        boot[i] = b - a
    se = float(np.std(boot, ddof=1)) if resamples > 1 else 0.0

    significant = abs(delta) > SIGNIFICANCE_SE * se and abs(delta) > ABSOLUTE_FLOOR * width
    steps = np.diff(values)
    direction = "flat" if delta == 0 else ("increasing" if delta > 0 else "decreasing")
    monotone = bool(np.all(steps >= 0)) if delta >= 0 else bool(np.all(steps <= 0))
    logger.info(f"q={quantile:g}: delta={delta:.6g} se={se:.3g} ({direction}, significant={significant})")
    return TrendInsight(quantile, values, delta, se, significant, monotone, direction)


def step_profile_fit(profile: DensityProfile) -> StepFit:
    """Least-squares two-level fit over every breakpoint between knots."""
    r = profile.knots_array
    s = profile.values_array
    n = s.size
    if n < 2:
        raise InsufficientDataError("step fit needs at least two knots")
    prefix = np.concatenate(([0.0], np.cumsum(s)))
    prefix_sq = np.concatenate(([0.0], np.cumsum(s * s)))
    split = np.arange(1, n)
    left_n, right_n = split, n - split
    left_sum, right_sum = prefix[split], prefix[-1] - prefix[split]
    left_sq, right_sq = prefix_sq[split], prefix_sq[-1] - prefix_sq[split]
    rss = (left_sq - left_sum ** 2 / left_n) + (right_sq - right_sum ** 2 / right_n)
    best = int(np.argmin(rss))
    i = split[best]
    inner, outer = left_sum[best] / left_n[best], right_sum[best] / right_n[best]
    peak = max(inner, outer)
    contrast = abs(outer - inner) / peak if peak > 0 else 0.0
    return StepFit(
        r_star=float(0.5 * (r[i - 1] + r[i])),
        inner_level=float(inner),
        outer_level=float(outer),
        contrast=float(contrast),
        residual=float(max(rss[best], 0.0)),
    )


def step_fit_frame(times: Sequence[float], profiles: Sequence[DensityProfile]) -> pd.DataFrame:
    rows = []
    for t, profile in zip(times, profiles):
        fit = step_profile_fit(profile)
        rows.append({
            "t": t,
            "r_star": fit.r_star,
            "inner_level": fit.inner_level,
            "outer_level": fit.outer_level,
            "contrast": fit.contrast,
            "residual": fit.residual,
        })
    return pd.DataFrame(rows, columns=["t", "r_star", "inner_level", "outer_level", "contrast", "residual"])


@dataclass
class StationarityTrend:
    """Least-squares slope of a time series with a moving-block bootstrap error"""
    slope: float
    intercept: float
    standard_error: float
    mean: float
    drift: float
    block: int
    significant: bool

    def summary_frame(self) -> pd.DataFrame:
        columns = ["slope", "intercept", "standard_error", "mean", "drift", "block", "significant"]
        return pd.DataFrame([[getattr(self, c) for c in columns]], columns=columns)


def stationarity_trend(times: Sequence[float], values: Sequence[float], resamples: int = 200,
                       block: Optional[int] = None, seed: int = DEFAULT_SEED) -> StationarityTrend:
    """Fit a line to a correlated series and bootstrap its slope.

    Residual blocks of `block` samples (default n // 50) are resampled with
    overlap and added back to the fit. Significant means |slope| exceeds 3
    standard errors and the fitted drift exceeds 1e-6 of the mean level.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    n = y.size
    if n < 3 or t.shape != y.shape:
        raise InsufficientDataError("trend needs at least three matching samples")
    if not np.all(np.isfinite(y)):
        raise InsufficientDataError("trend series contains non-finite values")
    slope, intercept = np.polyfit(t, y, 1)
    fitted = intercept + slope * t
    residuals = y - fitted

    length = max(1, n // 50) if block is None else int(block)
    if not 1 <= length <= n:
        raise ValueError(f"block length must lie in [1, {n}], got {block!r}")
    rng = substream(seed, STREAM_BOOTSTRAP, 1)
    starts = rng.integers(0, n - length + 1, (resamples, -(-n // length)))
    index = (starts[:, :, None] + np.arange(length)).reshape(resamples, -1)[:, :n]
    boot = fitted + residuals[index]
    centered = t - t.mean()
    slopes = (boot - boot.mean(axis=1, keepdims=True)) @ centered / float(centered @ centered)
    se = float(np.std(slopes, ddof=1)) if resamples > 1 else 0.0

    mean = float(y.mean())
    drift = float(slope * (t[-1] - t[0]))
    significant = abs(slope) > SIGNIFICANCE_SE * se and abs(drift) > ABSOLUTE_FLOOR * abs(mean)
    logger.info(f"trend slope={slope:.4g} se={se:.3g} drift={drift:.3g} (block {length}, significant={significant})")
    return StationarityTrend(float(slope), float(intercept), se, mean, drift, length, bool(significant))
