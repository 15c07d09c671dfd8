"""Run configuration shared by every CLI command."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .asprofile import ASProfileConfig
from .data_model import PitchConvention, ValidationError
from .evaluate import MetricOptions
from .kinematics import KinematicsConfig
from .preprocess import ConfigError, SmoothingConfig


@dataclass(frozen=True)
class SynthOptions:
    kind: str = "sequence"          # "sequence" or "as_dataset"
    n_athletes: int = 6
    duration_s: float = 30.0
    noise_sigma_m: float = 0.3
    detection_fractions: tuple[float, ...] | None = None
    gap_rate_per_min: float = 0.0
    A0: float = 6.0
    S0: float = 8.5
    as_bins: int = 25
    as_noise: float = 0.1
    as_outliers: int = 2

    def __post_init__(self) -> None:
        if self.kind not in ("sequence", "as_dataset"):
            raise ConfigError(f"unknown synth kind {self.kind!r}")
        if self.detection_fractions is not None:
            object.__setattr__(self, "detection_fractions", tuple(float(f) for f in self.detection_fractions))


_SECTIONS = {
    "pitch": PitchConvention,
    "smoothing": SmoothingConfig,
    "kinematics": KinematicsConfig,
    "profile": ASProfileConfig,
    "metrics": MetricOptions,
    "synth": SynthOptions,
}


@dataclass(frozen=True)
class RunConfig:
    predictions: tuple[str, ...] = ()
    ground_truth: tuple[str, ...] = ()
    format: str = "normalized_jsonl"
    gt_format: str | None = None
    frame_rate_hz: float | None = None
    kinematics_dir: str | None = None
    pitch: PitchConvention = field(default_factory=PitchConvention)
    g_max: int = 3
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    kinematics: KinematicsConfig = field(default_factory=KinematicsConfig)
    profile: ASProfileConfig = field(default_factory=ASProfileConfig)
    windows: int = 1
    metrics: MetricOptions = field(default_factory=MetricOptions)
    ablation: bool = False
    ablation_filters: tuple[str, ...] = ("none", "kalman", "savgol")
    ablation_l_n: tuple[int, ...] = (2, 5, 10, 15, 20)
    output_dir: str = "out"
    seed: int = 0
    synth: SynthOptions = field(default_factory=SynthOptions)

    def __post_init__(self) -> None:
        if self.g_max < 0:
            raise ConfigError("g_max must be non-negative")
        if self.windows < 1:
            raise ConfigError("windows must be at least 1")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration key(s): {', '.join(sorted(unknown))}")
        kwargs = {}
        for key, value in data.items():
            if key in _SECTIONS:
                section = _SECTIONS[key]
                names = {f.name for f in fields(section)}
                bad = set(value) - names
                if bad:
                    raise ConfigError(f"unknown key(s) in '{key}': {', '.join(sorted(bad))}")
                try:
                    kwargs[key] = section(**value)
                except (TypeError, ValidationError) as exc:
                    raise ConfigError(f"invalid '{key}' section: {exc}") from None
            elif key in ("predictions", "ground_truth", "ablation_filters", "ablation_l_n"):
                kwargs[key] = tuple(value)
            else:
                kwargs[key] = value
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    def portable_dict(self) -> dict:
        """Configuration with input paths replaced by file name and content hash, output dir dropped."""
        d = self.to_dict()
        d.pop("output_dir")
        for key in ("predictions", "ground_truth"):
            d[key] = [_file_identity(p) for p in d[key]]
        if d.get("kinematics_dir"):
            d["kinematics_dir"] = _file_identity(Path(d["kinematics_dir"]) / "manifest.json")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.portable_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _file_identity(path) -> dict:
    p = Path(path)
    digest = hashlib.sha256(p.read_bytes()).hexdigest() if p.is_file() else None
    return {"name": p.name, "sha256": digest}


def deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the JSON file at ``path``, then ``overrides``."""
    data = RunConfig().to_dict()
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = deep_merge(data, json.load(fh))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from None
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    data = deep_merge(data, overrides or {})
    return RunConfig.from_dict(data)
