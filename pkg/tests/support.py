"""Shared fixtures and oracles for the test suite."""

import zipfile

import numpy as np

from revoice.signals import AudioClip


def speech_like(duration_seconds: float, seed: int, fs: int = 16000) -> AudioClip:
    """Deterministic voice-ish fixture: drifting pitch, formant-weighted
    harmonics, syllabic amplitude gating, and a whisper of noise."""
    rng = np.random.default_rng(seed)
    n = int(duration_seconds * fs)
    t = np.arange(n) / fs
    f0 = 120.0 + 30.0 * np.sin(2 * np.pi * 0.6 * t + rng.uniform(0, 2 * np.pi))
    phase = 2 * np.pi * np.cumsum(f0) / fs
    x = np.zeros(n)
    for h in range(1, 50):
        if h * 150 > 7000:
            break
        x += np.cos(h * phase + rng.uniform(0, 2 * np.pi)) / (1 + (h * 140 / 500) ** 1.5)
    x *= 0.55 + 0.45 * np.sin(2 * np.pi * 3.1 * t + rng.uniform(0, 2 * np.pi))
    x += 0.002 * rng.standard_normal(n)
    return AudioClip(0.89 * x / np.max(np.abs(x)), fs)


def shift_by(x: np.ndarray, shift: int) -> np.ndarray:
    """Shift right (positive) or left (negative), zero-filled, same length."""
    if shift == 0:
        return x
    if shift > 0:
        return np.concatenate([np.zeros(shift), x])[: len(x)]
    return np.concatenate([x[-shift:], np.zeros(-shift)])


def reconstruction_snr_db(reference: np.ndarray, estimate: np.ndarray,
                          max_shift: int = 16) -> float:
    """SNR of estimate vs reference, best over small residual shifts.

    Deconvolution output carries an arbitrary small delay; quality is
    shift-invariant for the downstream recognizer, so the oracle aligns
    before comparing.
    """
    n = min(len(reference), len(estimate))
    ref = reference[:n]
    best = -np.inf
    for s in range(-max_shift, max_shift + 1):
        err = np.sum((ref - shift_by(estimate[:n], s)) ** 2)
        if err == 0:
            return np.inf
        best = max(best, 10 * np.log10(np.sum(ref ** 2) / err))
    return best


def tap_error_db(estimated: np.ndarray, true: np.ndarray, search: int = 32) -> float:
    """Normalized IR tap error in dB, aligned over a small shift search."""
    n = len(true)
    best = np.inf
    for s in range(0, search + 1):
        segment = estimated[s:s + n]
        if len(segment) < n:
            segment = np.pad(segment, (0, n - len(segment)))
        best = min(best, np.sum((segment - true) ** 2))
    return 10 * np.log10(best / np.sum(true ** 2))


def build_level_zip(tmp_path, level="Task_1_Level_1"):
    """Miniature level archive: Clean/, Recorded/, transcript, one probe."""
    from revoice import audio_io

    root = tmp_path / "src" / level
    (root / "Clean").mkdir(parents=True)
    (root / "Recorded").mkdir()
    names = [f"clip_{i}.wav" for i in range(3)]
    lines = []
    for i, name in enumerate(names):
        clip = AudioClip(np.full(100, 0.1 * (i + 1)), 16000)
        audio_io.write_wav(clip, root / "Clean" / name)
        audio_io.write_wav(clip, root / "Recorded" / name)
        lines.append(f"{name}\tsample sentence number {i}")
    (root / f"{level}_text_samples.txt").write_text("\n".join(lines) + "\n")
    (root / "Recorded" / "sweep_response.wav").write_bytes(
        (root / "Recorded" / names[0]).read_bytes())
    archive = tmp_path / "files" / f"{level}.zip"
    archive.parent.mkdir(exist_ok=True)
    with zipfile.ZipFile(archive, "w") as zf:
        for path in sorted(root.rglob("*")):
            zf.write(path, path.relative_to(tmp_path / "src"))
    return archive


def brute_force_edit_distance(a: str, b: str) -> int:
    """Memoized recursive minimal edit distance: the independent oracle for
    the DP implementation (no tie-breaking, totals only)."""
    from functools import lru_cache

    @lru_cache(maxsize=None)
    def solve(i: int, j: int) -> int:
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        if a[i] == b[j]:
            return solve(i + 1, j + 1)
        return 1 + min(solve(i + 1, j + 1),   # substitute
                       solve(i + 1, j),       # delete
                       solve(i, j + 1))       # insert
    return solve(0, 0)
