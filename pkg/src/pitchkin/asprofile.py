"""Acceleration-speed (A-S) profiles.

Points are chosen per speed bin (the highest accelerations above a minimum
running speed), a straight line ``a = slope * s + A0`` is fitted, points
outside the prediction band of that first fit are rejected and the line is
refitted once on the rest. ``S0 = -A0 / slope`` is where the line crosses
zero acceleration.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .kinematics import KinematicsSeries
from .preprocess import ConfigError

# Residuals within this distance of the band edge count as inside; exact
# collinear inputs otherwise lose points to rounding.
BAND_ATOL = 1e-9
# Guards floor() against speeds that sit on a bin edge up to rounding.
BIN_EPS = 1e-9


class DegenerateProfile(ValueError):
    INSUFFICIENT = "insufficient data"
    NON_NEGATIVE_SLOPE = "non-negative slope"
    EMPTIED = "outlier rejection emptied selection"
    NON_POSITIVE_INTERCEPT = "non-positive intercept"

    def __init__(self, reason: str, detail: str = "") -> None:
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason


@dataclass(frozen=True)
class ASProfileConfig:
    min_speed_mps: float = 3.0
    bin_width_mps: float = 0.2
    per_bin_top_k: int = 2
    ci_level: float = 0.95
    min_points: int = 10
    min_bins: int = 5

    def __post_init__(self) -> None:
        if not self.bin_width_mps > 0:
            raise ConfigError("bin width must be positive")
        if not 0 < self.ci_level < 1:
            raise ConfigError("ci_level must lie strictly between 0 and 1")
        if self.min_speed_mps < 0:
            raise ConfigError("min_speed must be non-negative")
        if self.per_bin_top_k < 1:
            raise ConfigError("per_bin_top_k must be at least 1")
        if self.min_points < 3:
            raise ConfigError("min_points must be at least 3 for a prediction band")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SelectedPoint:
    speed: float
    accel: float
    bin: int
    frame: int = -1
    kept: bool = True


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    residual_sd: float
    r2: float
    n: int
    mean_x: float
    sxx: float

    def predict(self, x):
        return self.intercept + self.slope * np.asarray(x, dtype=float)

    def prediction_halfwidth(self, x, level: float):
        """Half-width of the two-sided prediction interval for a new point at ``x``."""
        t = stats.t.ppf(0.5 + level / 2.0, self.n - 2)
        x = np.asarray(x, dtype=float)
        return t * self.residual_sd * np.sqrt(1.0 + 1.0 / self.n + (x - self.mean_x) ** 2 / self.sxx)


def ols(x, y) -> LineFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    mx, my = x.mean(), y.mean()
    dx = x - mx
    sxx = float(dx @ dx)
    if n < 2 or sxx <= 0:
        raise DegenerateProfile(DegenerateProfile.INSUFFICIENT, "points do not span distinct speeds")
    slope = float(dx @ (y - my)) / sxx
    intercept = float(my - slope * mx)
    resid = y - (intercept + slope * x)
    sse = float(resid @ resid)
    syy = float((y - my) @ (y - my))
    r2 = 1.0 - sse / syy if syy > 0 else 1.0
    sd = math.sqrt(sse / (n - 2)) if n > 2 else 0.0
    return LineFit(slope, intercept, sd, r2, n, float(mx), sxx)


@dataclass
class ASProfile:
    points: list[SelectedPoint]
    slope: float
    A0_mps2: float
    S0_mps: float
    r2: float
    first_fit: LineFit
    bins_used: int
    config: ASProfileConfig = field(default_factory=ASProfileConfig)

    @property
    def kept(self) -> list[SelectedPoint]:
        return [p for p in self.points if p.kept]

    @property
    def rejected(self) -> list[SelectedPoint]:
        return [p for p in self.points if not p.kept]

    def to_dict(self) -> dict:
        return {
            "A0_mps2": self.A0_mps2,
            "S0_mps": self.S0_mps,
            "slope_per_s": self.slope,
            "r2": self.r2,
            "n_points": len(self.points),
            "n_kept": len(self.kept),
            "n_rejected": len(self.rejected),
            "bins_used": self.bins_used,
            "first_fit": {"slope_per_s": self.first_fit.slope, "A0_mps2": self.first_fit.intercept,
                          "residual_sd": self.first_fit.residual_sd},
            "points": [asdict(p) for p in self.points],
            "config": self.config.to_dict(),
        }


@dataclass(frozen=True)
class ProfileDelta:
    dA0: float
    dS0: float
    dslope: float


def speed_bin(speed, config: ASProfileConfig):
    return np.floor((np.asarray(speed, dtype=float) - config.min_speed_mps) / config.bin_width_mps
                    + BIN_EPS).astype(np.int64)


def select_points(series: KinematicsSeries, config: ASProfileConfig | None = None) -> list[SelectedPoint]:
    """Top accelerations per speed bin, for frames with valid, positive acceleration."""
    config = config or ASProfileConfig()
    ok = series.valid_speed & series.valid_accel
    if not ok.any():
        return []
    max_speed = float(np.max(series.speed[series.valid_speed]))
    ok &= (series.speed >= config.min_speed_mps) & (series.speed <= max_speed) & (series.accel > 0)
    idx = np.flatnonzero(ok)
    if len(idx) == 0:
        return []
    bins = speed_bin(series.speed[idx], config)
    # Sort by bin, then acceleration descending, then earlier frame first.
    order = np.lexsort((series.frames[idx], -series.accel[idx], bins))
    out = []
    taken: dict[int, int] = {}
    for o in order:
        b = int(bins[o])
        if taken.get(b, 0) >= config.per_bin_top_k:
            continue
        taken[b] = taken.get(b, 0) + 1
        i = idx[o]
        out.append(SelectedPoint(float(series.speed[i]), float(series.accel[i]), b, int(series.frames[i])))
    return out


def fit_profile(points: Sequence[SelectedPoint], config: ASProfileConfig | None = None) -> ASProfile:
    """Fit, reject points outside the prediction band, refit once.

    Raises
    ------
    DegenerateProfile
        When there are too few points or bins, when rejection leaves fewer
        than two distinct speeds, or when the final line does not slope
        down from a positive intercept.
    """
    config = config or ASProfileConfig()
    n_bins = len({p.bin for p in points})
    if len(points) < config.min_points or n_bins < config.min_bins:
        raise DegenerateProfile(DegenerateProfile.INSUFFICIENT,
                                f"{len(points)} points in {n_bins} bins, need {config.min_points} "
                                f"points in {config.min_bins} bins")
    x = np.array([p.speed for p in points])
    y = np.array([p.accel for p in points])
    first = ols(x, y)
    band = first.prediction_halfwidth(x, config.ci_level)
    keep = np.abs(y - first.predict(x)) <= band + BAND_ATOL
    marked = [SelectedPoint(p.speed, p.accel, p.bin, p.frame, bool(k)) for p, k in zip(points, keep)]
    if keep.sum() < 2 or np.ptp(x[keep]) == 0:
        raise DegenerateProfile(DegenerateProfile.EMPTIED, f"{int(keep.sum())} point(s) left")
    final = ols(x[keep], y[keep])
    if final.slope >= 0:
        raise DegenerateProfile(DegenerateProfile.NON_NEGATIVE_SLOPE, f"slope {final.slope:.4g}")
    if final.intercept <= 0:
        raise DegenerateProfile(DegenerateProfile.NON_POSITIVE_INTERCEPT, f"A0 {final.intercept:.4g}")
    return ASProfile(marked, final.slope, final.intercept, -final.intercept / final.slope, final.r2,
                     first, n_bins, config)


def build_profile(series: KinematicsSeries, config: ASProfileConfig | None = None) -> ASProfile:
    config = config or ASProfileConfig()
    return fit_profile(select_points(series, config), config)


def compare_profiles(a: ASProfile, b: ASProfile) -> ProfileDelta:
    """Component-wise change from profile ``a`` to profile ``b``."""
    return ProfileDelta(b.A0_mps2 - a.A0_mps2, b.S0_mps - a.S0_mps, b.slope - a.slope)
