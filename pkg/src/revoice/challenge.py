"""Challenge rules as executable logic.

Level identifiers, the level registry (difficulty setups plus reference
mean CERs), pass/fail decisions, point counting, tie-breaking, and
real-time-factor accounting. The registry ships as a plain-text table in
``data/levels.tsv``; scoring never mutates it.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping

from .errors import MalformedId, UnknownLevel, ZeroLengthAudio

PASS_THRESHOLD = 0.3
SUBMISSION_LIMIT = 3

_LEVEL_ID_RE = re.compile(r"^T(\d)L(\d+)$")


@dataclass(frozen=True, order=True)
class LevelId:
    task: int
    level: int

    def __str__(self) -> str:
        return f"T{self.task}L{self.level}"

    @classmethod
    def parse(cls, text: str) -> "LevelId":
        m = _LEVEL_ID_RE.match(text)
        if not m:
            raise MalformedId(f"{text!r} does not match the TXLY pattern")
        return cls(int(m.group(1)), int(m.group(2)))


@dataclass(frozen=True)
class LevelSpec:
    id: LevelId
    material: str
    distance_m: float | None
    gain_pct: float
    volume_pct: float
    total_length_s: float
    clean_mean_cer: float
    recorded_mean_cer: float
    clean_data_alias: LevelId | None = None


class LevelRegistry:
    """Immutable lookup of LevelSpec by id, in table order."""

    def __init__(self, specs: Iterable[LevelSpec]):
        self._by_id = {str(s.id): s for s in specs}
        for spec in self._by_id.values():
            if spec.recorded_mean_cer < spec.clean_mean_cer:
                raise ValueError(f"{spec.id}: recorded mean CER below clean mean CER")

    def __contains__(self, level) -> bool:
        return str(level) in self._by_id

    def __iter__(self):
        return iter(self._by_id.values())

    def __len__(self) -> int:
        return len(self._by_id)

    def get(self, level) -> LevelSpec:
        try:
            return self._by_id[str(level)]
        except KeyError:
            raise UnknownLevel(f"level {level} is not in the registry") from None

    def clean_source(self, level) -> LevelId:
        """Level whose clean audio this level uses (itself unless aliased)."""
        spec = self.get(level)
        return spec.clean_data_alias if spec.clean_data_alias else spec.id


def _parse_registry_rows(lines) -> list[LevelSpec]:
    specs = []
    for line in lines:
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 9:
            raise ValueError(f"registry row needs 9 fields, got {len(fields)}: {line!r}")
        (ident, material, distance, gain, volume, length, clean, recorded, alias) = fields
        specs.append(LevelSpec(
            id=LevelId.parse(ident),
            material=material,
            distance_m=None if distance == "-" else float(distance),
            gain_pct=float(gain),
            volume_pct=float(volume),
            total_length_s=float(length),
            clean_mean_cer=float(clean),
            recorded_mean_cer=float(recorded),
            clean_data_alias=None if alias == "-" else LevelId.parse(alias),
        ))
    return specs


def load_registry(path=None) -> LevelRegistry:
    """Load the level registry; default is the table shipped in the package."""
    if path is None:
        text = resources.files("revoice").joinpath("data/levels.tsv").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return LevelRegistry(_parse_registry_rows(text.splitlines()))


def parse_level_id(text: str) -> LevelId:
    return LevelId.parse(text)


def level_passes(submission_mean_cer: float, noisy_mean_cer: float,
                 threshold: float = PASS_THRESHOLD) -> bool:
    """Pass rule: strictly below the threshold, or strictly below the noisy
    baseline when that baseline is already under the threshold."""
    if submission_mean_cer < 0 or noisy_mean_cer < 0:
        raise ValueError("mean CER cannot be negative")
    bar = noisy_mean_cer if noisy_mean_cer < threshold else threshold
    return submission_mean_cer < bar


@dataclass(frozen=True)
class LevelResult:
    """One submitted level: mean CER plus the judges' manual sanity flag."""
    mean_cer: float
    sanity_check: bool = True


@dataclass(frozen=True)
class LevelScore:
    mean_cer: float
    bar: float
    passed: bool
    sanity_check: bool

    @property
    def counted(self) -> bool:
        return self.passed and self.sanity_check


@dataclass(frozen=True)
class ScoreCard:
    team: str
    per_level: dict  # level id string -> LevelScore, (task, level) order
    points: int
    tie_break: float | None
    mean_rtf: float | None = None
    warnings: tuple = ()


def score_submission(results: Mapping, registry: LevelRegistry,
                     team: str = "", mean_rtf: float | None = None) -> ScoreCard:
    """Apply the pass/point/tie-break rules to per-level results.

    ``results`` maps level id (string or LevelId) to LevelResult. Tasks are
    independent; every submitted level is judged on its own. A level that
    passes above a failed or skipped lower level of the same task still
    earns its point but is flagged in ``warnings``, since the rules leave
    that progression question to the organizers.
    """
    # canonical (task, level) order: reports and tie-break sums come out
    # identical no matter how the results were collected
    ordered = sorted((((k if isinstance(k, LevelId) else LevelId.parse(k)), r)
                      for k, r in results.items()), key=lambda kv: kv[0])
    per_level: dict[str, LevelScore] = {}
    for level, result in ordered:
        spec = registry.get(level)
        bar = spec.recorded_mean_cer if spec.recorded_mean_cer < PASS_THRESHOLD else PASS_THRESHOLD
        per_level[str(level)] = LevelScore(
            mean_cer=result.mean_cer,
            bar=bar,
            passed=level_passes(result.mean_cer, spec.recorded_mean_cer),
            sanity_check=result.sanity_check,
        )

    counted = [lid for lid, s in per_level.items() if s.counted]
    points = len(counted)
    tie_break = (sum(per_level[lid].mean_cer for lid in counted) / points
                 if points else None)

    warnings = []
    for lid in counted:
        level = LevelId.parse(lid)
        for lower in range(1, level.level):
            below = str(LevelId(level.task, lower))
            if below not in per_level or not per_level[below].counted:
                warnings.append(f"{lid} counted although {below} was not completed")
                break
    return ScoreCard(team=team, per_level=per_level, points=points,
                     tie_break=tie_break, mean_rtf=mean_rtf,
                     warnings=tuple(warnings))


def compute_rtf(processing_seconds: float, audio_seconds: float) -> float:
    """Real-time factor: processing time divided by audio length."""
    if audio_seconds <= 0:
        raise ZeroLengthAudio(f"audio length must be positive, got {audio_seconds}")
    if processing_seconds < 0:
        raise ValueError("processing time cannot be negative")
    return processing_seconds / audio_seconds


def rank_teams(cards) -> list[ScoreCard]:
    """Descending points; ties broken by ascending average mean CER.

    Teams without a defined tie-break sort after tied teams that have one;
    exact double ties keep their input order.
    """
    return sorted(cards, key=lambda c: (-c.points,
                                        c.tie_break if c.tie_break is not None else math.inf))


def submission_warning(submission_count: int, limit: int = SUBMISSION_LIMIT) -> str | None:
    """Advisory counter for the submissions-per-team rule (not a hard lock)."""
    if submission_count > limit:
        return f"submission {submission_count} exceeds the limit of {limit}"
    return None


def write_scorecard_csv(card: ScoreCard, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "mean_cer", "bar", "passed", "sanity_check", "point"])
        for lid, s in card.per_level.items():
            writer.writerow([lid, f"{s.mean_cer:.6f}", f"{s.bar:.6f}",
                             int(s.passed), int(s.sanity_check), int(s.counted)])
        writer.writerow(["points", card.points, "", "", "", ""])
        writer.writerow(["tie_break",
                         "" if card.tie_break is None else f"{card.tie_break:.6f}",
                         "", "", "", ""])
        writer.writerow(["mean_rtf",
                         "" if card.mean_rtf is None else f"{card.mean_rtf:.4f}",
                         "", "", "", ""])


def format_scorecard_report(card: ScoreCard) -> str:
    lines = [f"Score card: {card.team or '(unnamed team)'}",
             f"  points: {card.points}"]
    if card.tie_break is not None:
        lines.append(f"  tie-break (avg mean CER over completed levels): {card.tie_break:.4f}")
    if card.mean_rtf is not None:
        limit_note = "within" if card.mean_rtf <= 3.0 else "OVER"
        lines.append(f"  mean RTF: {card.mean_rtf:.3f} ({limit_note} the 3.0 limit)")
    lines.append("  levels:")
    for lid, s in card.per_level.items():
        status = "pass" if s.passed else "fail"
        sanity = "" if s.sanity_check else " (no sanity check: no point)"
        lines.append(f"    {lid}: mean CER {s.mean_cer:.4f} vs bar {s.bar:.4f} -> {status}{sanity}")
    for warning in card.warnings:
        lines.append(f"  note: {warning}")
    return "\n".join(lines) + "\n"
