"""Temporal smoothing of trajectory segments.

Smoothers run on one :class:`~pitchkin.data_model.Segment` at a time and
never see across a gap.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.signal import savgol_filter

from .data_model import Segment

METHODS = ("none", "kalman", "savgol")


class ConfigError(ValueError):
    """Invalid configuration value."""


class KalmanError(RuntimeError):
    def __init__(self, message: str, index: int | None = None) -> None:
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class SmoothingConfig:
    method: str = "kalman"
    process_accel_sigma: float = 2.0   # m/s^2, white-acceleration spectral density is its square
    measurement_sigma_m: float = 0.5
    window: int = 9
    poly_order: int = 2

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown smoothing method {self.method!r}; expected one of {METHODS}")
        if not (self.process_accel_sigma > 0 and self.measurement_sigma_m > 0):
            raise ConfigError("Kalman sigmas must be positive")
        if int(self.window) != self.window or self.window < 1 or self.window % 2 == 0:
            raise ConfigError(f"Savitzky-Golay window must be a positive odd integer, got {self.window}")
        if int(self.poly_order) != self.poly_order or not 0 <= self.poly_order < self.window:
            raise ConfigError(f"polynomial order must be in [0, window), got {self.poly_order}")

    def to_dict(self) -> dict:
        return asdict(self)


def kalman_filter_positions(xy: np.ndarray, dt: float, process_accel_sigma: float,
                            measurement_sigma_m: float, initial_velocity_var: float = 1e4):
    """Forward constant-velocity Kalman filter on an ``(n, 2)`` position array.

    Each axis is an independent ``(position, velocity)`` model with
    white-acceleration process noise. Because the measurement model and
    noise are identical on both axes, one covariance recursion serves both.

    Returns
    -------
    filtered : ndarray, shape (n, 2)
        Filtered (a posteriori) positions.
    innovations : ndarray, shape (n - 1, 2)
        Measurement minus predicted position, from the second sample on.
    innovation_var : ndarray, shape (n - 1,)
        Predicted innovation variance for each of those samples.
    """
    z = np.asarray(xy, dtype=float)
    n = len(z)
    q = process_accel_sigma ** 2
    r = measurement_sigma_m ** 2
    F = np.array([[1.0, dt], [0.0, 1.0]])
    Q = q * np.array([[dt ** 3 / 3.0, dt ** 2 / 2.0], [dt ** 2 / 2.0, dt]])

    state = np.vstack([z[0], np.zeros(2)])      # rows: position, velocity; columns: x, y
    P = np.diag([r, initial_velocity_var])
    filtered = np.empty_like(z)
    filtered[0] = z[0]
    innovations = np.empty((max(n - 1, 0), 2))
    innovation_var = np.empty(max(n - 1, 0))
    for k in range(1, n):
        state = F @ state
        P = F @ P @ F.T + Q
        s = P[0, 0] + r
        gain = P[:, 0] / s
        nu = z[k] - state[0]
        state = state + np.outer(gain, nu)
        P = P - np.outer(gain, P[0, :])
        if not np.all(np.isfinite(state)):
            raise KalmanError(f"non-finite Kalman state at sample {k}", k)
        filtered[k] = state[0]
        innovations[k - 1] = nu
        innovation_var[k - 1] = s
    return filtered, innovations, innovation_var


def kalman_forward(segment: Segment, config: SmoothingConfig) -> Segment:
    if len(segment) < 2:
        return segment.with_positions(segment.xy, "kalman")
    try:
        filtered, _, _ = kalman_filter_positions(segment.xy, segment.clock.dt,
                                                 config.process_accel_sigma, config.measurement_sigma_m)
    except KalmanError as exc:
        frame = segment.first_frame + exc.index
        raise KalmanError(f"track {segment.athlete_id}: non-finite Kalman state at frame {frame}",
                          exc.index) from None
    return segment.with_positions(filtered, "kalman")


def savgol_segment(segment: Segment, config: SmoothingConfig) -> Segment:
    # Shorter segments cannot hold a full window; they pass through unchanged.
    if len(segment) < config.window:
        return segment.with_positions(segment.xy, "passthrough")
    smoothed = savgol_filter(segment.xy, config.window, config.poly_order, axis=0, mode="mirror")
    return segment.with_positions(smoothed, "savgol")


def smooth_segment(segment: Segment, config: SmoothingConfig) -> Segment:
    """Replace the segment's positions by smoothed ones; frames and statuses are kept."""
    if config.method == "none":
        return segment.with_positions(segment.xy, "none")
    if config.method == "kalman":
        return kalman_forward(segment, config)
    return savgol_segment(segment, config)
