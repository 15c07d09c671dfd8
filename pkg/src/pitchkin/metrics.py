"""Agreement metrics between predicted and ground-truth signals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

FISHER_CLAMP = 1e-7
DEFAULT_MAX_LAG = 25
DEFAULT_MIN_OVERLAP = 50
LAG_TIE_TOL = 1e-12


class UndefinedMetric(ValueError):
    """The metric has no value for this input (too few samples, constant signal...)."""


@dataclass(frozen=True)
class SignalPair:
    """Predicted and ground-truth values, each keyed by frame.

    Only valid (finite) samples are stored. Zero-lag metrics use the frames
    present in both; :meth:`at_lag` pairs ground truth at ``k`` with the
    prediction at ``k + lag``.
    """

    pred_frames: np.ndarray
    pred_values: np.ndarray
    gt_frames: np.ndarray
    gt_values: np.ndarray

    @classmethod
    def from_arrays(cls, predicted, ground_truth) -> "SignalPair":
        p = np.asarray(predicted, dtype=float)
        g = np.asarray(ground_truth, dtype=float)
        if p.shape != g.shape:
            raise ValueError("predicted and ground truth must have the same length")
        f = np.arange(len(p))
        return cls.from_frames(f, p, f, g)

    @classmethod
    def from_frames(cls, pred_frames, pred_values, gt_frames, gt_values) -> "SignalPair":
        pf, pv = np.asarray(pred_frames, np.int64), np.asarray(pred_values, float)
        gf, gv = np.asarray(gt_frames, np.int64), np.asarray(gt_values, float)
        pm, gm = np.isfinite(pv), np.isfinite(gv)
        return cls(pf[pm], pv[pm], gf[gm], gv[gm])

    @classmethod
    def from_series(cls, pred, gt, quantity: str = "speed") -> "SignalPair":
        """Build from two :class:`~pitchkin.kinematics.KinematicsSeries`."""
        if quantity == "speed":
            return cls.from_frames(pred.frames[pred.valid_speed], pred.speed[pred.valid_speed],
                                   gt.frames[gt.valid_speed], gt.speed[gt.valid_speed])
        if quantity == "accel":
            return cls.from_frames(pred.frames[pred.valid_accel], pred.accel[pred.valid_accel],
                                   gt.frames[gt.valid_accel], gt.accel[gt.valid_accel])
        raise ValueError(f"unknown quantity {quantity!r}")

    def at_lag(self, lag: int) -> tuple[np.ndarray, np.ndarray]:
        _, ip, ig = np.intersect1d(self.pred_frames, self.gt_frames + lag, assume_unique=True,
                                   return_indices=True)
        return self.pred_values[ip], self.gt_values[ig]

    @property
    def predicted(self) -> np.ndarray:
        return self.at_lag(0)[0]

    @property
    def ground_truth(self) -> np.ndarray:
        return self.at_lag(0)[1]

    @property
    def n(self) -> int:
        return len(np.intersect1d(self.pred_frames, self.gt_frames, assume_unique=True))


@dataclass(frozen=True)
class AmplitudeErrors:
    mae: float
    rmse: float


@dataclass(frozen=True)
class LagCorrelation:
    r: float
    lag: int


@dataclass(frozen=True)
class ReliabilityScore:
    R_c: float
    R_MAE: float
    R_d: float

    @property
    def R(self) -> float:
        return self.R_c * self.R_MAE * self.R_d


def amplitude_errors(pair: SignalPair) -> AmplitudeErrors:
    p, g = pair.at_lag(0)
    if len(p) == 0:
        raise UndefinedMetric("no common samples")
    err = p - g
    return AmplitudeErrors(float(np.mean(np.abs(err))), float(np.sqrt(np.mean(err ** 2))))


def _corr(x: np.ndarray, y: np.ndarray) -> float:
    if len(x) < 2:
        raise UndefinedMetric(f"need at least 2 samples, got {len(x)}")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise UndefinedMetric("constant series")
    dx = x - x.mean()
    dy = y - y.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0:
        raise UndefinedMetric("constant series")
    return float(np.clip((dx @ dy) / denom, -1.0, 1.0))


def pearson(pair: SignalPair) -> float:
    return _corr(*pair.at_lag(0))


def max_lag_r(pair: SignalPair, max_lag_frames: int = DEFAULT_MAX_LAG,
              min_overlap: int = DEFAULT_MIN_OVERLAP) -> LagCorrelation:
    """Largest Pearson r over integer lags in ``[-max_lag_frames, max_lag_frames]``.

    A positive lag means the prediction trails the ground truth. Lags with
    fewer than ``min_overlap`` common samples, or a constant overlap, are
    skipped. Ties go to the smallest ``|lag|``, negative before positive.
    """
    best: LagCorrelation | None = None
    for mag in range(max_lag_frames + 1):
        for lag in ((0,) if mag == 0 else (-mag, mag)):
            p, g = pair.at_lag(lag)
            if len(p) < min_overlap:
                continue
            try:
                r = _corr(p, g)
            except UndefinedMetric:
                continue
            if best is None or r > best.r + LAG_TIE_TOL:
                best = LagCorrelation(r, lag)
    if best is None:
        raise UndefinedMetric(f"no lag within +/-{max_lag_frames} has {min_overlap} usable samples")
    return best


def fisher_average(rs: Iterable[float]) -> float:
    """Mean correlation computed in Fisher z space."""
    r = np.asarray(list(rs), dtype=float)
    if r.size == 0:
        raise UndefinedMetric("no correlations to average")
    r = np.clip(r, -1.0 + FISHER_CLAMP, 1.0 - FISHER_CLAMP)
    return float(np.tanh(np.mean(np.arctanh(r))))


def reliability(speed_pair: SignalPair, frames_detected: int, frames_total: int) -> ReliabilityScore:
    """Speed correlation x ``1 / (1 + speed MAE)`` x detected fraction.

    Raises :class:`UndefinedMetric` when the speed correlation is undefined.
    """
    if not 0 <= frames_detected <= frames_total or frames_total <= 0:
        raise ValueError(f"need 0 <= detected ({frames_detected}) <= total ({frames_total}), total > 0")
    r_c = pearson(speed_pair)
    mae = amplitude_errors(speed_pair).mae
    return ReliabilityScore(r_c, 1.0 / (1.0 + mae), frames_detected / frames_total)


def stratum_size(n: int, fraction: float) -> int:
    if not 0 < fraction <= 0.5:
        raise ValueError(f"fraction must be in (0, 0.5], got {fraction}")
    return int(math.floor(fraction * n + 1e-9))


def rank(scores: Mapping[str, float]) -> list[str]:
    """Athlete ids by descending score, ties by id."""
    return sorted(scores, key=lambda a: (-scores[a], a))


@dataclass(frozen=True)
class Strata:
    top: list[str]
    bottom: list[str]


def stratify(scores: Mapping[str, float], fraction: float = 0.3) -> Strata:
    """Most and least reliable ``floor(fraction * n)`` athletes.

    ``bottom`` is listed from least reliable upwards.
    """
    order = rank(scores)
    k = stratum_size(len(order), fraction)
    return Strata(order[:k], order[::-1][:k] if k else [])


def mean_sd(values: Sequence[float]) -> tuple[float, float]:
    """Arithmetic mean and sample standard deviation across athletes (sd 0 for one value)."""
    v = np.asarray([x for x in values if x is not None and np.isfinite(x)], dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0
