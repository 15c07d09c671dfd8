"""Golden fixtures: pinned outputs of a recorded sequence of CLI steps.

A fixture directory holds ``manifest.json`` plus the expected files. The
manifest records the seed, the steps (command name and config overrides,
with input paths relative to the fixture root) and a SHA-256 per file::

    {"name": "...", "seed": 7,
     "steps": [{"command": "synth", "output": "", "config": {...}}, ...],
     "files": {"per_athlete.csv": "<sha256>", ...}}

Verification regenerates every step into a scratch directory and compares
file by file: CSV numerically (1e-9), JSON structurally, anything else
byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

MANIFEST = "manifest.json"
CSV_ATOL = 1e-9


@dataclass
class VerifyResult:
    diffs: list[str] = field(default_factory=list)
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.diffs


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def read_manifest(fixture_dir) -> dict:
    with open(Path(fixture_dir) / MANIFEST, encoding="utf-8") as fh:
        return json.load(fh)


def _resolve(config: dict, root: Path) -> dict:
    cfg = json.loads(json.dumps(config))
    for key in ("predictions", "ground_truth"):
        if key in cfg:
            cfg[key] = [str(root / p) for p in cfg[key]]
    if cfg.get("kinematics_dir"):
        cfg["kinematics_dir"] = str(root / cfg["kinematics_dir"])
    return cfg


def regenerate(fixture_dir, out_dir) -> list[str]:
    """Run the recorded steps into ``out_dir``; return files listed in the manifest."""
    from .cli import run
    from .config import load_config

    manifest = read_manifest(fixture_dir)
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    for i, step in enumerate(manifest["steps"]):
        overrides = _resolve(step.get("config", {}), root)
        overrides.setdefault("seed", manifest.get("seed", 0))
        overrides["output_dir"] = str(root / step.get("output", ""))
        code = run(load_config(None, overrides), step["command"])
        if code != 0:
            raise RuntimeError(f"{MANIFEST}: step {i} ({step['command']}) exited with {code}")
    return sorted(manifest["files"])


def write_manifest(fixture_dir) -> dict:
    """Regenerate the fixture in place and pin the hashes of every produced file."""
    fixture_dir = Path(fixture_dir)
    manifest = read_manifest(fixture_dir)
    for old in manifest.get("files", {}):
        (fixture_dir / old).unlink(missing_ok=True)
    manifest["files"] = {}
    with tempfile.TemporaryDirectory() as tmp:
        regenerate(fixture_dir, tmp)
        for p in sorted(Path(tmp).rglob("*")):
            if p.is_file():
                rel = p.relative_to(tmp).as_posix()
                dest = fixture_dir / rel
                dest.parent.mkdir(parents=True, exist_ok=True)
                dest.write_bytes(p.read_bytes())
                manifest["files"][rel] = sha256(dest)
    with open(fixture_dir / MANIFEST, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


# --- comparisons ------------------------------------------------------------

def _number(text: str):
    try:
        return float(text)
    except ValueError:
        return None


def compare_csv(expected: Path, actual: Path, label: str, atol: float = CSV_ATOL) -> list[str]:
    with open(expected, encoding="utf-8", newline="") as fh:
        a = list(csv.reader(fh))
    with open(actual, encoding="utf-8", newline="") as fh:
        b = list(csv.reader(fh))
    diffs = []
    if len(a) != len(b):
        diffs.append(f"{label}: {len(b)} rows, expected {len(a)}")
    # leading "# key=value" lines are metadata; the first other row is the header
    h = next((i for i, row in enumerate(a) if not (row and row[0].startswith("#"))), None)
    header = a[h] if h is not None else []
    for i, (ra, rb) in enumerate(zip(a, b), 1):
        if len(ra) != len(rb):
            diffs.append(f"{label}:{i}: {len(rb)} cells, expected {len(ra)}")
            continue
        for j, (ca, cb) in enumerate(zip(ra, rb)):
            if ca == cb:
                continue
            xa, xb = _number(ca), _number(cb)
            if xa is not None and xb is not None and (abs(xa - xb) <= atol or (math.isnan(xa) and math.isnan(xb))):
                continue
            col = header[j] if h is not None and i > h + 1 and j < len(header) else f"col {j + 1}"
            diffs.append(f"{label}:{i}:{col}: {cb!r} != expected {ca!r}")
    return diffs


def compare_json(expected, actual, where: str = "$") -> list[str]:
    """Structural comparison: same keys, same list lengths, equal leaves."""
    if isinstance(expected, dict) and isinstance(actual, dict):
        diffs = []
        for key in sorted(set(expected) | set(actual)):
            if key not in actual:
                diffs.append(f"{where}.{key}: missing")
            elif key not in expected:
                diffs.append(f"{where}.{key}: unexpected")
            else:
                diffs += compare_json(expected[key], actual[key], f"{where}.{key}")
        return diffs
    if isinstance(expected, list) and isinstance(actual, list):
        if len(expected) != len(actual):
            return [f"{where}: length {len(actual)}, expected {len(expected)}"]
        diffs = []
        for i, (x, y) in enumerate(zip(expected, actual)):
            diffs += compare_json(x, y, f"{where}[{i}]")
        return diffs
    if type(expected) is not type(actual) or expected != actual:
        return [f"{where}: {actual!r} != expected {expected!r}"]
    return []


def compare_file(expected: Path, actual: Path, rel: str) -> list[str]:
    if not actual.is_file():
        return [f"{rel}: missing from candidate output"]
    suffix = expected.suffix.lower()
    if suffix == ".csv":
        return compare_csv(expected, actual, rel)
    if suffix == ".json":
        try:
            a = json.loads(expected.read_text(encoding="utf-8"))
            b = json.loads(actual.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            return [f"{rel}: invalid JSON ({exc})"]
        return [f"{rel}:{d}" for d in compare_json(a, b)]
    if expected.read_bytes() != actual.read_bytes():
        return [f"{rel}: bytes differ"]
    return []


def verify_golden(fixture_dir, candidate_dir=None) -> VerifyResult:
    """Check a fixture against its manifest and against freshly produced outputs.

    With ``candidate_dir`` omitted, the recorded steps are re-run into a
    temporary directory and that output is the candidate.
    """
    fixture_dir = Path(fixture_dir)
    result = VerifyResult()
    try:
        manifest = read_manifest(fixture_dir)
    except (OSError, json.JSONDecodeError) as exc:
        result.diffs.append(f"{fixture_dir / MANIFEST}: {exc}")
        return result
    files = manifest.get("files", {})
    for rel, digest in sorted(files.items()):
        p = fixture_dir / rel
        if not p.is_file():
            result.diffs.append(f"{rel}: missing from fixture")
        elif sha256(p) != digest:
            result.diffs.append(f"{rel}: sha256 differs from manifest")

    def _compare(cand: Path) -> None:
        for rel in sorted(files):
            if (fixture_dir / rel).is_file():
                result.diffs.extend(compare_file(fixture_dir / rel, cand / rel, rel))
                result.checked += 1

    if candidate_dir is not None:
        _compare(Path(candidate_dir))
    else:
        with tempfile.TemporaryDirectory() as tmp:
            try:
                regenerate(fixture_dir, tmp)
            except RuntimeError as exc:
                result.diffs.append(str(exc))
                return result
            _compare(Path(tmp))
    return result
