"""Command-line front end.

Exit codes: 0 success, 1 input parse/validation failure (or nothing to
evaluate), 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import re
import sys
from pathlib import Path

import numpy as np

from .asprofile import DegenerateProfile, build_profile, compare_profiles
from .config import RunConfig, load_config
from .data_model import FrameClock, ValidationError
from .evaluate import QUANTITIES, ablation, aggregate, evaluate_bundle, strata_report, temporal_window_s
from .ingest import ParseError, load_bundle, parse_trajectories, write_normalized_jsonl
from .kinematics import read_kinematics_csv, trajectory_kinematics
from .preprocess import ConfigError, KalmanError
from .svg import profile_svg
from .synth import synthesize_as_dataset, synthesize_sequence, write_analytic_sidecar

log = logging.getLogger("pitchkin")

EXIT_OK, EXIT_INPUT, EXIT_CONFIG = 0, 1, 2


class InputError(RuntimeError):
    """Process-level failure caused by the inputs (exit code 1)."""


# --- output helpers ---------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, NaN/inf to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def safe_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", text) or "_"


class Output:
    """Writes files strictly below one directory."""

    def __init__(self, root, config: RunConfig) -> None:
        self.root = Path(root).resolve()
        self.config = config
        self.hash = config.config_hash()

    def path(self, rel: str) -> Path:
        p = (self.root / rel).resolve()
        if self.root != p and self.root not in p.parents:
            raise ConfigError(f"refusing to write outside the output directory: {rel}")
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def write(self, rel: str, text: str) -> Path:
        p = self.path(rel)
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        return p

    def json(self, rel: str, doc: dict) -> Path:
        doc = dict(doc)
        doc["config_hash"] = self.hash
        return self.write(rel, dumps(doc))

    def csv(self, rel: str, header: list[str], rows: list[list]) -> Path:
        buf = io.StringIO()
        buf.write(f"# config_hash={self.hash}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
        return self.write(rel, buf.getvalue())


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else ""
    return str(v)


# --- commands ---------------------------------------------------------------

def _require_predictions(cfg: RunConfig) -> None:
    if not cfg.predictions:
        raise ConfigError("no prediction file given (--pred)")


def cmd_ingest(cfg: RunConfig) -> int:
    _require_predictions(cfg)
    out = Output(cfg.output_dir, cfg)
    summary = {"config": cfg.portable_dict(), "files": []}
    inputs = [(p, cfg.format, "predictions") for p in cfg.predictions]
    inputs += [(p, cfg.gt_format or cfg.format, "ground_truth") for p in cfg.ground_truth]
    for path, fmt, role in inputs:
        tset = parse_trajectories(path, fmt, cfg.pitch, cfg.frame_rate_hz)
        rel = f"{role}/{safe_name(tset.sequence_id)}.jsonl"
        write_normalized_jsonl(tset, out.path(rel))
        summary["files"].append({
            "source": Path(path).name, "role": role, "output": rel, "sequence": tset.sequence_id,
            "tracks": len(tset), "clock": tset.clock.to_dict(),
            "observed_samples": sum(t.observed_count for t in tset), **tset.diagnostics})
    out.json("ingest.json", summary)
    return EXIT_OK


def cmd_synth(cfg: RunConfig) -> int:
    out = Output(cfg.output_dir, cfg)
    s = cfg.synth
    if s.kind == "as_dataset":
        ds = synthesize_as_dataset(s.A0, s.S0, bins=s.as_bins, noise_sigma=s.as_noise, outliers=s.as_outliers,
                                   min_speed=cfg.profile.min_speed_mps, bin_width=cfg.profile.bin_width_mps,
                                   seed=cfg.seed)
        series = ds.as_series()
        rel = "kinematics/as-synthetic.csv"
        out.write(rel, series.to_csv(comment=f"config_hash={out.hash}"))
        out.json("kinematics/manifest.json", {
            "clock": series.clock.to_dict(), "config": cfg.portable_dict(),
            "athletes": [{"athlete": series.athlete_id, "file": "as-synthetic.csv", "n_frames": len(series)}]})
        out.json("analytic.json", {"A0_mps2": ds.A0, "S0_mps": ds.S0, "slope_per_s": ds.slope,
                                   "outlier_points": ds.outliers})
        return EXIT_OK
    seq = synthesize_sequence(s.n_athletes, s.duration_s, s.noise_sigma_m, cfg.seed,
                              cfg.frame_rate_hz or 25.0, s.detection_fractions, s.gap_rate_per_min)
    write_normalized_jsonl(seq.predictions, out.path("predictions.jsonl"))
    write_normalized_jsonl(seq.ground_truth, out.path("ground_truth.jsonl"))
    write_analytic_sidecar(seq, out.path("analytic.json"), {"config_hash": out.hash, "seed": cfg.seed})
    return EXIT_OK


def _all_series(cfg: RunConfig, out: Output):
    """Kinematics for every predicted track, with per-athlete failures collected."""
    results, failures = [], []
    for path in cfg.predictions:
        tset = parse_trajectories(path, cfg.format, cfg.pitch, cfg.frame_rate_hz)
        for traj in tset:
            key = f"{tset.sequence_id}:{traj.athlete_id}"
            try:
                series = trajectory_kinematics(traj, cfg.smoothing, cfg.kinematics, cfg.g_max)
            except (KalmanError, ValidationError) as exc:
                failures.append({"athlete": key, "error": str(exc)})
                continue
            results.append((key, tset.sequence_id, traj.athlete_id, series))
    return results, failures


def cmd_kinematics(cfg: RunConfig) -> int:
    _require_predictions(cfg)
    out = Output(cfg.output_dir, cfg)
    results, failures = _all_series(cfg, out)
    entries, clock = [], None
    for key, seq, track, series in results:
        name = f"{safe_name(seq)}__{safe_name(track)}.csv"
        out.write(f"kinematics/{name}", series.to_csv(comment=f"config_hash={out.hash} athlete={key}"))
        clock = series.clock
        entries.append({"athlete": key, "sequence": seq, "track": track, "file": name,
                        "n_frames": len(series), "segments": series.segment_bounds,
                        "valid_speed": int(series.valid_speed.sum()),
                        "valid_accel": int(series.valid_accel.sum()), "flags": series.flags})
    out.json("kinematics/manifest.json", {"config": cfg.portable_dict(), "athletes": entries,
                                          "failures": failures,
                                          "clock": clock.to_dict() if clock else None})
    return EXIT_OK


def _load_kinematics_dir(directory) -> list:
    directory = Path(directory)
    try:
        manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{directory}/manifest.json: {exc}") from None
    clock = FrameClock(**manifest["clock"])
    out = []
    for entry in manifest["athletes"]:
        series = read_kinematics_csv(directory / entry["file"], entry["athlete"], clock)
        out.append((entry["athlete"], entry.get("sequence", ""), entry.get("track", entry["athlete"]), series))
    return out


def window_bounds(frame_count: int, n: int) -> list[tuple[int, int]]:
    """Split frames ``1..frame_count`` into ``n`` consecutive windows of near-equal length."""
    edges = [round(i * frame_count / n) for i in range(n + 1)]
    return [(edges[i] + 1, edges[i + 1]) for i in range(n)]


def cmd_profile(cfg: RunConfig) -> int:
    out = Output(cfg.output_dir, cfg)
    if cfg.kinematics_dir:
        results, failures = _load_kinematics_dir(cfg.kinematics_dir), []
    else:
        _require_predictions(cfg)
        results, failures = _all_series(cfg, out)
    entries = []
    for key, seq, track, series in results:
        windows = window_bounds(series.clock.frame_count, cfg.windows)
        profiles = []
        for w, (first, last) in enumerate(windows, 1):
            stem = safe_name(key.replace(":", "__"))
            stem = f"{stem}_w{w}of{cfg.windows}"
            doc = {"athlete": key, "window": w, "frames": [first, last],
                   "seconds": [float(series.clock.timestamp(first - 1)), float(series.clock.timestamp(last))]}
            try:
                prof = build_profile(series.frame_window(first, last), cfg.profile)
            except DegenerateProfile as exc:
                doc.update({"degenerate": exc.reason, "detail": str(exc)})
                out.json(f"profiles/{stem}.json", doc)
                profiles.append(None)
                entries.append({"athlete": key, "window": w, "json": f"{stem}.json", "svg": None,
                                "degenerate": exc.reason})
                continue
            doc["profile"] = prof.to_dict()
            out.json(f"profiles/{stem}.json", doc)
            title = f"{key}  window {w}/{cfg.windows}  ({doc['seconds'][0]:.0f}-{doc['seconds'][1]:.0f} s)"
            out.write(f"profiles/{stem}.svg", profile_svg(prof, title, f"config_hash={out.hash}"))
            profiles.append(prof)
            entries.append({"athlete": key, "window": w, "json": f"{stem}.json", "svg": f"{stem}.svg",
                            "A0_mps2": prof.A0_mps2, "S0_mps": prof.S0_mps, "slope_per_s": prof.slope})
        for w in range(1, len(profiles)):
            a, b = profiles[w - 1], profiles[w]
            if a is not None and b is not None:
                d = compare_profiles(a, b)
                entries.append({"athlete": key, "delta": [w, w + 1], "dA0": d.dA0, "dS0": d.dS0,
                                "dslope": d.dslope})
    out.json("profiles/manifest.json", {"config": cfg.portable_dict(), "profiles": entries,
                                        "failures": failures})
    return EXIT_OK


_METRIC_KEYS = ("mae", "rmse", "r", "max_lag_r")


def _athlete_rows(rows: list[dict]) -> tuple[list[str], list[list]]:
    header = ["athlete", "sequence", "predicted_id", "ground_truth_id", "overlap_frames", "mean_distance_m",
              "frames_detected", "frames_total"]
    header += [f"{q}_{k}" for q in QUANTITIES for k in _METRIC_KEYS + ("lag",)]
    header += ["R_c", "R_MAE", "R_d", "R"]
    table = []
    for r in rows:
        line = [r[h] for h in header[:8]]
        line += [r[q][k] for q in QUANTITIES for k in _METRIC_KEYS + ("lag",)]
        rel = r.get("reliability") or {}
        line += [rel.get(k) for k in ("R_c", "R_MAE", "R_d", "R")]
        table.append(line)
    return header, table


def _table3(strata: dict) -> tuple[list[str], list[list]]:
    header = ["metric", "top_mean", "top_sd", "bottom_mean", "bottom_sd"]
    top, bottom = strata.get("top_summary"), strata.get("bottom_summary")
    if not top:
        return header, []
    rows = [["n_athletes", top["n_athletes"], None, bottom["n_athletes"], None],
            ["avg_visible_frames", top["avg_visible_frames"], None, bottom["avg_visible_frames"], None],
            ["avg_visible_seconds", top["avg_visible_seconds"], None, bottom["avg_visible_seconds"], None],
            ["mean_R", top["mean_R"], None, bottom["mean_R"], None]]
    for q in QUANTITIES:
        rows.append([f"{q}_r_fisher", top[q]["r"]["fisher_mean"], top[q]["r"]["sd"],
                     bottom[q]["r"]["fisher_mean"], bottom[q]["r"]["sd"]])
        rows.append([f"{q}_max_lag_r_fisher", top[q]["max_lag_r"]["fisher_mean"], top[q]["max_lag_r"]["sd"],
                     bottom[q]["max_lag_r"]["fisher_mean"], bottom[q]["max_lag_r"]["sd"]])
        for k in ("mae", "rmse"):
            rows.append([f"{q}_{k}", top[q][k]["mean"], top[q][k]["sd"], bottom[q][k]["mean"], bottom[q][k]["sd"]])
    return header, rows


def _table1(sweep: list[dict]) -> tuple[list[str], list[list]]:
    header = ["l_n", "filter"] + [f"{q}_{k}" for q in QUANTITIES for k in _METRIC_KEYS]
    rows = []
    for cell in sweep:
        agg = cell["aggregate"]
        line = [cell["l_n"], cell["filter"]]
        for q in QUANTITIES:
            line += [agg[q]["mae"]["mean"], agg[q]["rmse"]["mean"], agg[q]["r"]["fisher_mean"],
                     agg[q]["max_lag_r"]["fisher_mean"]]
        rows.append(line)
    return header, rows


def _table2(sweep: list[dict], method: str, frame_rate_hz: float) -> tuple[list[str], list[list]]:
    header = ["l_n", "window_s", "filter"]
    for q in QUANTITIES:
        for k in _METRIC_KEYS:
            header += [f"{q}_{k}_mean", f"{q}_{k}_sd"]
    rows = []
    for cell in sweep:
        if cell["filter"] != method:
            continue
        agg = cell["aggregate"]
        line = [cell["l_n"], temporal_window_s(cell["l_n"], frame_rate_hz), method]
        for q in QUANTITIES:
            line += [agg[q]["mae"]["mean"], agg[q]["mae"]["sd"], agg[q]["rmse"]["mean"], agg[q]["rmse"]["sd"],
                     agg[q]["r"]["fisher_mean"], agg[q]["r"]["sd"],
                     agg[q]["max_lag_r"]["fisher_mean"], agg[q]["max_lag_r"]["sd"]]
        rows.append(line)
    return header, rows


def cmd_evaluate(cfg: RunConfig) -> int:
    _require_predictions(cfg)
    if len(cfg.ground_truth) != len(cfg.predictions):
        raise ConfigError("evaluate needs one --gt file per --pred file, in the same order")
    out = Output(cfg.output_dir, cfg)
    bundles = [load_bundle(p, g, cfg.format, cfg.gt_format, cfg.pitch, cfg.frame_rate_hz)
               for p, g in zip(cfg.predictions, cfg.ground_truth)]
    rows, n_pred, n_gt = [], 0, 0
    for b in bundles:
        rows += evaluate_bundle(b, cfg.smoothing, cfg.kinematics, cfg.g_max, cfg.metrics)
        n_pred += len(b.predictions)
        n_gt += len(b.ground_truth)
    if not rows:
        raise InputError(f"no predicted track matched ground truth (gate {cfg.metrics.gate_m} m, "
                         f"min overlap {cfg.metrics.min_overlap_frames} frames)")
    rows.sort(key=lambda r: r["athlete"])
    rate = bundles[0].clock.frame_rate_hz
    report = {
        "config": cfg.portable_dict(),
        "matching": {"gate_m": cfg.metrics.gate_m, "min_overlap_frames": cfg.metrics.min_overlap_frames,
                     "n_predicted": n_pred, "n_ground_truth": n_gt, "n_matched": len(rows)},
        "athletes": rows,
        "aggregate": aggregate(rows),
        "strata": strata_report(rows, cfg.metrics.stratify_fraction, rate),
    }
    out.csv("per_athlete.csv", *_athlete_rows(rows))
    out.csv("table3_reliability.csv", *_table3(report["strata"]))
    if cfg.ablation:
        sweep = ablation(bundles, cfg.smoothing, cfg.kinematics, cfg.g_max, cfg.metrics,
                         cfg.ablation_filters, cfg.ablation_l_n)
        report["ablation"] = sweep
        out.csv("table1_filter.csv", *_table1(sweep))
        out.csv("table2_ln.csv", *_table2(sweep, cfg.smoothing.method, rate))
    out.json("report.json", report)
    return EXIT_OK


def _fmt(v, digits=3) -> str:
    return "n/a" if v is None else f"{v:.{digits}f}"


def render_report(report: dict) -> str:
    """Plain-text (markdown) summary of an evaluation report."""
    agg = report["aggregate"]
    m = report["matching"]
    lines = [f"# Evaluation report ({report.get('config_hash', '')})", "",
             f"Matched {m['n_matched']} of {m['n_predicted']} predicted tracks "
             f"(gate {m['gate_m']} m, min overlap {m['min_overlap_frames']} frames).", "",
             "| quantity | MAE | RMSE | r (Fisher) | max-lag r (Fisher) |", "|---|---|---|---|---|"]
    for q in QUANTITIES:
        a = agg[q]
        lines.append(f"| {q} | {_fmt(a['mae']['mean'])} ± {_fmt(a['mae']['sd'])} | "
                     f"{_fmt(a['rmse']['mean'])} ± {_fmt(a['rmse']['sd'])} | {_fmt(a['r']['fisher_mean'])} | "
                     f"{_fmt(a['max_lag_r']['fisher_mean'])} |")
    st = report["strata"]
    if st.get("top_summary"):
        top, bot = st["top_summary"], st["bottom_summary"]
        each = f"{len(st['top'])} athlete" + ("" if len(st["top"]) == 1 else "s")
        lines += ["", f"## Reliability strata ({int(st['fraction'] * 100)}%, {each} each)", "",
                  "| metric | top | bottom |", "|---|---|---|",
                  f"| avg. visible frames | {top['avg_visible_frames']:.0f} ({top['avg_visible_seconds']:.2f} s) | "
                  f"{bot['avg_visible_frames']:.0f} ({bot['avg_visible_seconds']:.2f} s) |"]
        for q in QUANTITIES:
            lines.append(f"| {q} r | {_fmt(top[q]['r']['fisher_mean'])} ± {_fmt(top[q]['r']['sd'])} | "
                         f"{_fmt(bot[q]['r']['fisher_mean'])} ± {_fmt(bot[q]['r']['sd'])} |")
            for k in ("mae", "rmse"):
                lines.append(f"| {q} {k.upper()} | {_fmt(top[q][k]['mean'])} ± {_fmt(top[q][k]['sd'])} | "
                             f"{_fmt(bot[q][k]['mean'])} ± {_fmt(bot[q][k]['sd'])} |")
    if report.get("ablation"):
        lines += ["", "## Ablation", "", "| l_n | filter | speed MAE | speed r | accel MAE | accel r |",
                  "|---|---|---|---|---|---|"]
        for cell in report["ablation"]:
            a = cell["aggregate"]
            lines.append(f"| {cell['l_n']} | {cell['filter']} | {_fmt(a['speed']['mae']['mean'])} | "
                         f"{_fmt(a['speed']['r']['fisher_mean'])} | {_fmt(a['accel']['mae']['mean'])} | "
                         f"{_fmt(a['accel']['r']['fisher_mean'])} |")
    return "\n".join(lines) + "\n"


def cmd_report(cfg: RunConfig, report_path) -> int:
    try:
        report = json.loads(Path(report_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{report_path}: {exc}") from None
    text = render_report(report)
    Output(cfg.output_dir, cfg).write("report.md", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(fixture, candidate=None, write: bool = False) -> int:
    from .golden import verify_golden, write_manifest

    if write:
        write_manifest(fixture)
        return EXIT_OK
    result = verify_golden(fixture, candidate)
    if result.ok:
        print(f"PASS {fixture}")
        return EXIT_OK
    print(f"FAIL {fixture}")
    for line in result.diffs:
        print(f"  {line}")
    return EXIT_INPUT


# --- argument parsing -------------------------------------------------------

# flag dest -> dotted RunConfig key
_FLAG_KEYS = {
    "pred": "predictions", "gt": "ground_truth", "format": "format", "gt_format": "gt_format",
    "frame_rate": "frame_rate_hz", "output_dir": "output_dir", "kinematics_dir": "kinematics_dir",
    "pitch_origin": "pitch.origin", "pitch_length": "pitch.length_m", "pitch_width": "pitch.width_m",
    "flip_y": "pitch.flip_y", "g_max": "g_max",
    "filter": "smoothing.method", "kalman_process_sigma": "smoothing.process_accel_sigma",
    "kalman_measurement_sigma": "smoothing.measurement_sigma_m", "savgol_window": "smoothing.window",
    "savgol_order": "smoothing.poly_order",
    "l_n": "kinematics.l_n", "speed_cap": "kinematics.speed_cap_mps", "accel_window": "kinematics.accel_ma_window",
    "accel_mode": "kinematics.accel_mode",
    "windows": "windows", "min_speed": "profile.min_speed_mps", "bin_width": "profile.bin_width_mps",
    "top_k": "profile.per_bin_top_k", "ci_level": "profile.ci_level", "min_points": "profile.min_points",
    "min_bins": "profile.min_bins",
    "max_lag": "metrics.max_lag", "min_lag_overlap": "metrics.min_overlap",
    "stratify_fraction": "metrics.stratify_fraction", "gate": "metrics.gate_m",
    "min_overlap_frames": "metrics.min_overlap_frames", "ablation": "ablation",
    "ablation_filters": "ablation_filters", "ablation_l_n": "ablation_l_n",
    "seed": "seed", "synth_kind": "synth.kind", "athletes": "synth.n_athletes", "duration": "synth.duration_s",
    "noise": "synth.noise_sigma_m", "detection_fraction": "synth.detection_fractions",
    "gap_rate": "synth.gap_rate_per_min", "A0": "synth.A0", "S0": "synth.S0",
}


def _overrides(args: argparse.Namespace) -> dict:
    out: dict = {}
    for dest, key in _FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        node = out
        *parents, leaf = key.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    return out


def _parents():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run-config file; flags override it")
    common.add_argument("-o", "--output-dir", dest="output_dir")
    common.add_argument("-v", "--verbose", action="store_true")

    inputs = argparse.ArgumentParser(add_help=False)
    g = inputs.add_argument_group("inputs")
    g.add_argument("--pred", action="append", help="prediction trajectory file (repeatable)")
    g.add_argument("--gt", action="append", help="ground-truth trajectory file (repeatable, paired with --pred)")
    g.add_argument("--format", choices=("normalized_jsonl", "gsr_json"))
    g.add_argument("--gt-format", dest="gt_format", choices=("normalized_jsonl", "gsr_json"))
    g.add_argument("--frame-rate", dest="frame_rate", type=float)
    g.add_argument("--pitch-origin", dest="pitch_origin", choices=("centre", "corner"))
    g.add_argument("--pitch-length", dest="pitch_length", type=float)
    g.add_argument("--pitch-width", dest="pitch_width", type=float)
    g.add_argument("--flip-y", dest="flip_y", action="store_const", const=True)

    pipe = argparse.ArgumentParser(add_help=False)
    g = pipe.add_argument_group("trajectory processing")
    g.add_argument("--g-max", dest="g_max", type=int, help="longest gap (frames) bridged by interpolation")
    g.add_argument("--filter", choices=("none", "kalman", "savgol"))
    g.add_argument("--kalman-process-sigma", dest="kalman_process_sigma", type=float)
    g.add_argument("--kalman-measurement-sigma", dest="kalman_measurement_sigma", type=float)
    g.add_argument("--savgol-window", dest="savgol_window", type=int)
    g.add_argument("--savgol-order", dest="savgol_order", type=int)
    g.add_argument("--l-n", dest="l_n", type=int, help="differentiation half-window in frames")
    g.add_argument("--speed-cap", dest="speed_cap", type=float)
    g.add_argument("--accel-window", dest="accel_window", type=int)
    g.add_argument("--accel-mode", dest="accel_mode", choices=("magnitude", "tangential"))

    prof = argparse.ArgumentParser(add_help=False)
    g = prof.add_argument_group("A-S profile")
    g.add_argument("--windows", type=int, help="number of consecutive time windows (2 = halves)")
    g.add_argument("--kinematics", dest="kinematics_dir", help="read kinematics CSVs from this directory")
    g.add_argument("--min-speed", dest="min_speed", type=float)
    g.add_argument("--bin-width", dest="bin_width", type=float)
    g.add_argument("--top-k", dest="top_k", type=int)
    g.add_argument("--ci-level", dest="ci_level", type=float)
    g.add_argument("--min-points", dest="min_points", type=int)
    g.add_argument("--min-bins", dest="min_bins", type=int)

    met = argparse.ArgumentParser(add_help=False)
    g = met.add_argument_group("evaluation")
    g.add_argument("--max-lag", dest="max_lag", type=int)
    g.add_argument("--min-lag-overlap", dest="min_lag_overlap", type=int)
    g.add_argument("--stratify-fraction", dest="stratify_fraction", type=float)
    g.add_argument("--gate", type=float, help="matching gate in metres")
    g.add_argument("--min-overlap-frames", dest="min_overlap_frames", type=int)
    g.add_argument("--ablation", action="store_const", const=True, help="sweep filters x l_n")
    g.add_argument("--ablation-filters", dest="ablation_filters", nargs="+",
                   choices=("none", "kalman", "savgol"))
    g.add_argument("--ablation-l-n", dest="ablation_l_n", nargs="+", type=int)

    syn = argparse.ArgumentParser(add_help=False)
    g = syn.add_argument_group("synthesis")
    g.add_argument("--seed", type=int)
    g.add_argument("--kind", dest="synth_kind", choices=("sequence", "as_dataset"))
    g.add_argument("--athletes", type=int)
    g.add_argument("--duration", type=float, help="seconds")
    g.add_argument("--noise", type=float, help="positional noise sigma in metres")
    g.add_argument("--detection-fraction", dest="detection_fraction", type=float, nargs="+")
    g.add_argument("--gap-rate", dest="gap_rate", type=float, help="detection gaps per minute")
    g.add_argument("--A0", type=float)
    g.add_argument("--S0", type=float)
    g.add_argument("--frame-rate", dest="frame_rate", type=float)
    return common, inputs, pipe, prof, met, syn


def build_parser() -> argparse.ArgumentParser:
    common, inputs, pipe, prof, met, syn = _parents()
    parser = argparse.ArgumentParser(prog="pitchkin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common, inputs], help="normalise trajectory files to JSONL")
    sub.add_parser("synth", parents=[common, syn, prof], help="generate a synthetic sequence",
                   conflict_handler="resolve")
    sub.add_parser("kinematics", parents=[common, inputs, pipe], help="per-athlete speed/acceleration CSVs")
    sub.add_parser("profile", parents=[common, inputs, pipe, prof], help="A-S profiles (JSON + SVG)")
    sub.add_parser("evaluate", parents=[common, inputs, pipe, met], help="metrics against ground truth")
    rep = sub.add_parser("report", parents=[common], help="render an evaluation report.json")
    rep.add_argument("report", help="path to report.json")
    ver = sub.add_parser("verify", help="check a golden fixture")
    ver.add_argument("fixture", help="fixture directory (holds manifest.json)")
    ver.add_argument("--candidate", help="directory with freshly produced outputs to compare")
    ver.add_argument("--write", action="store_true", help="(re)write the fixture manifest hashes")
    return parser


COMMANDS = {"ingest": cmd_ingest, "synth": cmd_synth, "kinematics": cmd_kinematics,
            "profile": cmd_profile, "evaluate": cmd_evaluate}


def run(cfg: RunConfig, command: str, **kwargs) -> int:
    """Execute one command on a resolved config, mapping failures to exit codes."""
    try:
        if command == "report":
            return cmd_report(cfg, kwargs["report"])
        return COMMANDS[command](cfg)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (ParseError, ValidationError, InputError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        return cmd_verify(args.fixture, args.candidate, args.write)
    try:
        cfg = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    return run(cfg, args.command, report=getattr(args, "report", None))


if __name__ == "__main__":
    sys.exit(main())
