"""Dataset plumbing: archive fetching, layout detection, transcripts,
evaluation CSVs, and the clean-data preparation steps.

The published dataset is a set of zip archives, one per level, each holding
a clean folder, a recorded folder, and a transcript text file. Task 3
levels have no clean folder of their own; they alias the matching task 2
level. Transcript files are "filename<sep>sentence" lines where the
separator convention is auto-detected and echoed back for auditability.
"""

from __future__ import annotations

import csv
import errno
import hashlib
import logging
import math
import re
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import requests

from . import dsp
from .challenge import LevelId, LevelRegistry
from .errors import (ChecksumMismatch, DiskFull, DuplicateFilename,
                     NetworkFailure, UnparseableLine)
from .signals import AudioClip
from .textmetrics import NormalizationConfig, DEFAULT_CONFIG, cer

log = logging.getLogger(__name__)

DATASET_URL = "https://zenodo.org/records/11380835"

CHALLENGE_RATE = 16000
LEAD_PAD_SECONDS = 0.5
TRAIL_PAD_SECONDS = 0.5
CONVOLUTION_TRAIL_PAD_SECONDS = 5.0
OUTLIER_FRACTION = 0.05
PREP_PEAK_DBFS = -1.0

_LEVEL_DIR_RE = re.compile(r"Task_(\d)_Level_(\d+)", re.IGNORECASE)
MEASUREMENT_PATTERNS = ("sweep", "chirp", "noise", "burst", "impulse", "ir_")


# --- transcripts -----------------------------------------------------------

@dataclass(frozen=True)
class TranscriptTable:
    entries: tuple[tuple[str, str], ...]
    separator: str = "\t"

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    def as_dict(self) -> dict[str, str]:
        return dict(self.entries)

    @property
    def filenames(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.entries)


def parse_transcripts(path) -> TranscriptTable:
    """Parse a transcript file, auto-detecting tab vs whitespace separation."""
    text = Path(path).read_text(encoding="utf-8")
    separator = "\t" if "\t" in text else " "
    entries = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if separator == "\t":
            parts = line.split("\t", 1)
        else:
            parts = line.split(None, 1)
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise UnparseableLine(f"{path}:{lineno}: cannot split into filename and text")
        name, sentence = parts[0].strip(), parts[1].strip()
        if name in seen:
            raise DuplicateFilename(f"{path}:{lineno}: {name} listed twice")
        seen.add(name)
        entries.append((name, sentence))
    sep_label = "tab" if separator == "\t" else "whitespace"
    log.info("%s: %d transcripts, %s-separated", path, len(entries), sep_label)
    return TranscriptTable(tuple(entries), separator)


def render_transcripts(table: TranscriptTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name, sentence in table.entries:
            fh.write(f"{name}{table.separator}{sentence}\n")


# --- evaluation ------------------------------------------------------------

@dataclass(frozen=True)
class EvalRow:
    filename: str
    reference: str
    hypothesis: str
    cer: float
    empty_rule_applied: bool = False
    audio_missing: bool = False


@dataclass(frozen=True)
class EvaluationReport:
    rows: tuple[EvalRow, ...]
    mean_cer: float

    def write_csv(self, path, strict_compat: bool = False) -> None:
        """Normal mode: filename,reference,hypothesis,cer plus a MEAN row.
        Strict mode: the organizers' two-column transcription CSV."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if strict_compat:
                writer.writerow(["filename", "transcript"])
                for row in self.rows:
                    writer.writerow([row.filename, row.hypothesis])
                return
            writer.writerow(["filename", "reference", "hypothesis", "cer"])
            for row in self.rows:
                writer.writerow([row.filename, row.reference, row.hypothesis,
                                 f"{row.cer:.6f}"])
            writer.writerow(["MEAN", "", "", f"{self.mean_cer:.6f}"])


def load_hypotheses_csv(path) -> dict[str, str]:
    """Read a (filename, transcript) CSV, with or without a header row."""
    out: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for fields in csv.reader(fh):
            if not fields:
                continue
            if len(fields) < 2:
                raise UnparseableLine(f"{path}: row {fields!r} needs two columns")
            name, hypothesis = fields[0], fields[1]
            if name == "filename":
                continue
            out[name] = hypothesis
    return out


def evaluate_directory(audio_dir, table: TranscriptTable,
                       transcripts: Mapping[str, str],
                       config: NormalizationConfig = DEFAULT_CONFIG) -> EvaluationReport:
    """Score hypotheses against the reference table, row per filename.

    A filename with no hypothesis is scored through the empty-transcript
    rule (CER 1). Audio listed in the table but absent from audio_dir is
    flagged on its row but still scored.
    """
    audio_dir = Path(audio_dir)
    rows = []
    for name in sorted(table.filenames):
        reference = table.as_dict()[name]
        hypothesis = transcripts.get(name, "")
        result = cer(reference, hypothesis, config)
        missing = not (audio_dir / name).exists()
        if missing:
            log.warning("%s listed in the transcript table but not found in %s",
                        name, audio_dir)
        rows.append(EvalRow(name, reference, hypothesis, result.cer,
                            result.empty_hypothesis_rule_applied, missing))
    if not rows:
        raise UnparseableLine("transcript table is empty")
    mean = sum(r.cer for r in rows) / len(rows)
    return EvaluationReport(tuple(rows), mean)


def clean_outliers(records, fraction: float = OUTLIER_FRACTION) -> list[str]:
    """Drop the ceil(fraction * n) worst-CER entries; return kept filenames.

    Ties at the cut are broken by filename so the result is deterministic
    (the lexicographically last names go first).
    """
    if not 0 <= fraction < 1:
        raise ValueError(f"fraction must be in [0, 1), got {fraction}")
    records = list(records)
    drop_count = math.ceil(fraction * len(records))
    if drop_count == 0:
        return [name for name, _ in records]
    by_badness = sorted(records, key=lambda item: (item[1], item[0]))
    dropped = {name for name, _ in by_badness[len(records) - drop_count:]}
    return [name for name, _ in records if name not in dropped]


def prepare_clean_clip(raw: AudioClip, for_convolution: bool = False) -> AudioClip:
    """Resample to 16 kHz, normalize, and pad half a second each side
    (five seconds of trailing pad for clips to be played through a rig)."""
    clip = dsp.resample(raw, CHALLENGE_RATE)
    clip = dsp.normalize_peak(clip, PREP_PEAK_DBFS)
    trail = CONVOLUTION_TRAIL_PAD_SECONDS if for_convolution else TRAIL_PAD_SECONDS
    return dsp.pad(clip, LEAD_PAD_SECONDS, trail)


# --- archive fetching ------------------------------------------------------

@dataclass(frozen=True)
class ChecksumManifest:
    base_url: str
    entries: tuple[tuple[str, str], ...]  # (archive filename, sha256 hex)


def load_manifest(path, base_url: str = DATASET_URL) -> ChecksumManifest:
    """Manifest file: one "filename sha256" pair per line, # for comments."""
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("url="):
                base_url = line[4:].strip()
                continue
            fields = line.split()
            if len(fields) != 2:
                raise UnparseableLine(f"{path}:{lineno}: expected 'filename sha256'")
            entries.append((fields[0], fields[1].lower()))
    return ChecksumManifest(base_url, tuple(entries))


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _download(url: str, target: Path) -> None:
    """Stream url to target, resuming a previous partial download."""
    part = target.with_suffix(target.suffix + ".part")
    headers = {}
    mode = "wb"
    if part.exists() and part.stat().st_size > 0:
        headers["Range"] = f"bytes={part.stat().st_size}-"
        mode = "ab"
    try:
        with requests.get(url, stream=True, headers=headers, timeout=60) as resp:
            if headers and resp.status_code == 200:
                mode = "wb"  # server ignored the range request
            elif resp.status_code == 416:
                part.rename(target)
                return
            resp.raise_for_status()
            with open(part, mode) as fh:
                for block in resp.iter_content(1 << 20):
                    fh.write(block)
    except requests.RequestException as exc:
        raise NetworkFailure(f"download of {url} failed: {exc}") from exc
    except OSError as exc:
        if exc.errno == errno.ENOSPC:
            raise DiskFull(f"out of space writing {part}") from exc
        raise
    part.rename(target)


def fetch_dataset(manifest: ChecksumManifest, dest,
                  registry: LevelRegistry | None = None) -> "DatasetLayout":
    """Download, verify, and extract the archives into dest. Idempotent:
    verified archives are not re-downloaded, extracted archives not re-unzipped."""
    dest = Path(dest)
    archive_dir = dest / "archives"
    archive_dir.mkdir(parents=True, exist_ok=True)
    for filename, expected in manifest.entries:
        target = archive_dir / filename
        if not (target.exists() and _sha256(target) == expected):
            url = manifest.base_url.rstrip("/") + "/files/" + filename
            log.info("downloading %s", url)
            _download(url, target)
            actual = _sha256(target)
            if actual != expected:
                raise ChecksumMismatch(
                    f"{filename}: expected sha256 {expected}, got {actual}")
        stamp = archive_dir / (filename + ".extracted")
        if not stamp.exists():
            with zipfile.ZipFile(target) as zf:
                zf.extractall(dest)
            stamp.touch()
    return detect_layout(dest, registry)


# --- layout ----------------------------------------------------------------

@dataclass(frozen=True)
class LevelPaths:
    level: str
    clean_dir: Path | None
    recorded_dir: Path | None
    text_file: Path | None


@dataclass(frozen=True)
class DatasetLayout:
    root: Path
    levels: dict[str, LevelPaths] = field(default_factory=dict)

    def clean_dir_for(self, level, registry: LevelRegistry) -> Path | None:
        """Clean audio directory, following the task-3 aliases."""
        source = str(registry.clean_source(LevelId.parse(str(level))))
        paths = self.levels.get(source)
        return paths.clean_dir if paths else None


def detect_layout(root, registry: LevelRegistry | None = None) -> DatasetLayout:
    """Scan for Task_X_Level_Y directories and their contents."""
    root = Path(root)
    levels: dict[str, LevelPaths] = {}
    candidates = [d for d in sorted(root.rglob("*")) if d.is_dir()
                  and _LEVEL_DIR_RE.fullmatch(d.name)]
    for level_dir in candidates:
        m = _LEVEL_DIR_RE.fullmatch(level_dir.name)
        level = f"T{m.group(1)}L{m.group(2)}"
        clean = recorded = None
        text = None
        for child in sorted(level_dir.iterdir()):
            name = child.name.lower()
            if child.is_dir() and "clean" in name:
                clean = child
            elif child.is_dir() and "recorded" in name:
                recorded = child
            elif child.is_file() and child.suffix == ".txt":
                text = child
        levels[level] = LevelPaths(level, clean, recorded, text)
    return DatasetLayout(root, levels)


def classify_file(path, measurement_patterns=MEASUREMENT_PATTERNS) -> str:
    """Classify a file under a level directory.

    Returns one of clean / recorded / transcript / measurement / unknown.
    Measurement files are matched by configurable name patterns since the
    dataset does not pin their names.
    """
    path = Path(path)
    name = path.name.lower()
    if any(pattern in name for pattern in measurement_patterns):
        return "measurement"
    if path.suffix == ".txt":
        return "transcript"
    parent = path.parent.name.lower()
    if path.suffix == ".wav" and "clean" in parent:
        return "clean"
    if path.suffix == ".wav" and "recorded" in parent:
        return "recorded"
    return "unknown"
