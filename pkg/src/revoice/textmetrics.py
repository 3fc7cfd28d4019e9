"""Character-error-rate pipeline: normalization, edit counts, CER.

Transcripts are compared after aggressive normalization (lowercase, British
to American spelling, strip everything that is not a letter), so formatting
differences like "Bestfriend" vs "best friend" score zero. An empty
hypothesis scores CER 1 exactly. The ratio is not clamped: long insertions
can push it above 1.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import EmptyBatch, EmptyReference

# Starter spelling map. One pair per line in the overridable file format.
# This list is a heuristic, not a published standard; override it with
# NormalizationConfig(variant_map=load_variant_map(path)) when the scoring
# authority publishes theirs. The -ise/-ize family is covered by explicit
# word pairs rather than an open-ended suffix rule: after spaces are
# stripped a "-ise" tail is indistinguishable from a word, so only a fixed
# list keeps normalization idempotent without mangling words like
# "precise" or "surprise". Substring matching makes the -ed forms free
# (e.g. "realised" contains "realise").
DEFAULT_VARIANTS: tuple[tuple[str, str], ...] = (
    ("colour", "color"),
    ("favour", "favor"),
    ("honour", "honor"),
    ("labour", "labor"),
    ("neighbour", "neighbor"),
    ("flavour", "flavor"),
    ("behaviour", "behavior"),
    ("harbour", "harbor"),
    ("rumour", "rumor"),
    ("splendour", "splendor"),
    ("grey", "gray"),
    ("centre", "center"),
    ("theatre", "theater"),
    ("metre", "meter"),
    ("litre", "liter"),
    ("fibre", "fiber"),
    ("sombre", "somber"),
    ("practise", "practice"),
    ("defence", "defense"),
    ("offence", "offense"),
    ("realise", "realize"),
    ("realising", "realizing"),
    ("realisation", "realization"),
    ("recognise", "recognize"),
    ("recognising", "recognizing"),
    ("organise", "organize"),
    ("organising", "organizing"),
    ("organisation", "organization"),
    ("apologise", "apologize"),
    ("apologising", "apologizing"),
    ("criticise", "criticize"),
    ("criticising", "criticizing"),
    ("emphasise", "emphasize"),
    ("emphasising", "emphasizing"),
    ("memorise", "memorize"),
    ("summarise", "summarize"),
    ("characterise", "characterize"),
    ("civilise", "civilize"),
    ("civilisation", "civilization"),
    ("specialise", "specialize"),
    ("specialisation", "specialization"),
    ("sympathise", "sympathize"),
)


@dataclass(frozen=True)
class NormalizationConfig:
    lowercase: bool = True
    strip_non_letters: bool = True
    variant_map: tuple[tuple[str, str], ...] = DEFAULT_VARIANTS


DEFAULT_CONFIG = NormalizationConfig()


def load_variant_map(path) -> tuple[tuple[str, str], ...]:
    """Read (british, american) pairs from a two-column plain-text file."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) != 2:
                raise ValueError(f"{path}:{lineno}: expected two columns, got {line!r}")
            pairs.append((fields[0].lower(), fields[1].lower()))
    return tuple(pairs)


def _substitute_variants(text: str, variant_map) -> str:
    if not variant_map:
        return text
    table = dict(variant_map)
    # longest key first so e.g. "colours" is handled before any shorter key
    pattern = "|".join(re.escape(k) for k in sorted(table, key=len, reverse=True))
    return re.sub(pattern, lambda m: table[m.group(0)], text)


def normalize_text(raw: str, config: NormalizationConfig = DEFAULT_CONFIG) -> str:
    """Normalize a transcript for CER comparison. Idempotent.

    Substitution and stripping iterate to a fixed point so that spelling
    variants spanning removed formatting ("colo ur") still normalize the
    same way as their joined spelling.
    """
    # casefold, not lower: case pairs like the sharp s ("ß" vs "SS") must
    # land on the same letters before stripping
    text = raw.casefold() if config.lowercase else raw
    letters = "a-z" if config.lowercase else "a-zA-Z"
    for _ in range(10):
        before = text
        text = _substitute_variants(text, config.variant_map)
        if config.strip_non_letters:
            text = re.sub(f"[^{letters}]+", "", text)
        if text == before:
            break
    return text


@dataclass(frozen=True)
class EditCounts:
    substitutions: int
    deletions: int
    insertions: int
    reference_length: int

    @property
    def total(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def edit_counts(reference: str, hypothesis: str) -> EditCounts:
    """Levenshtein edit counts with unit costs.

    Among minimal edit scripts the one with the most substitutions is
    reported, which makes the (S, D, I) split deterministic: D and I are
    then fixed by the length difference.
    """
    n, m = len(reference), len(hypothesis)
    # single-int DP score: dist * width - substitutions, compared as
    # (dist asc, substitutions desc) since substitutions < width
    width = n + m + 2
    row = [j * width for j in range(m + 1)]
    for i in range(1, n + 1):
        prev_diag = row[0]
        row[0] = i * width
        ref_char = reference[i - 1]
        for j in range(1, m + 1):
            up = row[j]
            diag_step = prev_diag if ref_char == hypothesis[j - 1] else prev_diag + width - 1
            best = diag_step
            if up + width < best:
                best = up + width
            if row[j - 1] + width < best:
                best = row[j - 1] + width
            prev_diag = up
            row[j] = best
    q, r = divmod(row[m], width)
    dist, subs = (q, 0) if r == 0 else (q + 1, width - r)
    deletions = (dist - subs + (n - m)) // 2
    insertions = (dist - subs - (n - m)) // 2
    return EditCounts(subs, deletions, insertions, n)


@dataclass(frozen=True)
class CerResult:
    cer: float
    counts: EditCounts
    empty_hypothesis_rule_applied: bool = False


def cer(reference: str, hypothesis: str,
        config: NormalizationConfig = DEFAULT_CONFIG) -> CerResult:
    """CER = (S + D + I) / N over normalized text.

    An empty normalized hypothesis scores exactly 1 (completely wrong); an
    empty normalized reference leaves N undefined and raises EmptyReference.
    """
    ref = normalize_text(reference, config)
    hyp = normalize_text(hypothesis, config)
    if not ref:
        raise EmptyReference(f"reference {reference!r} normalizes to the empty string")
    if not hyp:
        counts = EditCounts(0, len(ref), 0, len(ref))
        return CerResult(1.0, counts, empty_hypothesis_rule_applied=True)
    counts = edit_counts(ref, hyp)
    return CerResult(counts.total / counts.reference_length, counts)


def mean_cer(records) -> float:
    """Arithmetic mean CER over a nonempty batch of CerResult records."""
    values = [r.cer for r in records]
    if not values:
        raise EmptyBatch("mean CER over zero records")
    return sum(values) / len(values)
