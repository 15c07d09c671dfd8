"""Speed, acceleration and acceleration-speed profiles from pitch trajectories.

The pipeline runs ingest, segmentation with short-gap interpolation,
smoothing (Kalman or Savitzky-Golay), windowed differentiation, A-S profile
fitting, and evaluation against ground truth.
"""

from .asprofile import ASProfile, ASProfileConfig, DegenerateProfile, build_profile, fit_profile, select_points
from .data_model import FrameClock, PitchConvention, Segment, Status, Trajectory, ValidationError, segment
from .ingest import ParseError, TrajectorySet, load_bundle, match_tracks, parse_trajectories
from .kinematics import KinematicsConfig, KinematicsSeries, trajectory_kinematics
from .metrics import SignalPair, UndefinedMetric, amplitude_errors, fisher_average, max_lag_r, pearson, reliability
from .preprocess import ConfigError, SmoothingConfig, smooth_segment
from .synth import MotionScenario, generate, synthesize_as_dataset, synthesize_sequence

__version__ = "0.1.0"

__all__ = [
    "ASProfile", "ASProfileConfig", "ConfigError", "DegenerateProfile", "FrameClock", "KinematicsConfig",
    "KinematicsSeries", "MotionScenario", "ParseError", "PitchConvention", "Segment", "SignalPair",
    "SmoothingConfig", "Status", "Trajectory", "TrajectorySet", "UndefinedMetric", "ValidationError",
    "amplitude_errors", "build_profile", "fisher_average", "fit_profile", "generate", "load_bundle",
    "match_tracks", "max_lag_r", "parse_trajectories", "pearson", "reliability", "segment", "select_points",
    "smooth_segment", "synthesize_as_dataset", "synthesize_sequence", "trajectory_kinematics",
]
