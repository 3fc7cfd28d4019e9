"""Core signal types shared by every module.

An :class:`AudioClip` is the universal currency: a mono float waveform plus
its sample rate. :class:`ImpulseResponse` models a finite LTI system as a tap
sequence, and :class:`Stft` holds a complex spectrogram together with the
parameters needed to invert it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, InvalidRate


def _as_readonly_f64(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D sample array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("samples must be finite")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AudioClip:
    """Mono sampled waveform. Samples are float64; clips are immutable."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        object.__setattr__(self, "samples", _as_readonly_f64(self.samples))
        if self.sample_rate_hz <= 0:
            raise InvalidRate(f"sample rate must be positive, got {self.sample_rate_hz}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if len(self.samples) else 0.0

    def with_samples(self, samples) -> "AudioClip":
        """New clip with the same rate and different samples."""
        return AudioClip(samples, self.sample_rate_hz)


@dataclass(frozen=True)
class ImpulseResponse:
    """Finite tap sequence modeling an LTI system at a given sample rate."""

    taps: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        taps = _as_readonly_f64(self.taps)
        if len(taps) == 0:
            raise EmptyInput("impulse response must have at least one tap")
        object.__setattr__(self, "taps", taps)
        if self.sample_rate_hz <= 0:
            raise InvalidRate(f"sample rate must be positive, got {self.sample_rate_hz}")

    def __len__(self) -> int:
        return len(self.taps)

    @property
    def energy(self) -> float:
        return float(np.sum(self.taps**2))

    def normalized(self) -> "ImpulseResponse":
        """Energy-normalized copy: sum of squared taps equals 1."""
        e = self.energy
        if e == 0.0:
            raise EmptyInput("cannot normalize an all-zero impulse response")
        return ImpulseResponse(self.taps / np.sqrt(e), self.sample_rate_hz)


@dataclass(frozen=True)
class Stft:
    """Complex spectrogram (frequency_bins x time_frames) plus its geometry.

    ``length`` records the source sample count so the inverse transform can
    trim overlap-add padding exactly. ``center`` marks whether frames were
    taken centered on t*hop (with zero padding) or flush from t*hop.
    """

    frames: np.ndarray
    window_size: int
    hop: int
    sample_rate_hz: int
    length: int
    window: str = "hann"
    center: bool = True
    _window_values: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.complex128)
        if frames.ndim != 2 or frames.shape[0] != self.window_size // 2 + 1:
            raise ValueError(
                f"frames must be (window_size//2+1, n_frames), got {frames.shape} "
                f"for window_size {self.window_size}"
            )
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def frequency_bins(self) -> int:
        return self.frames.shape[0]

    @property
    def num_frames(self) -> int:
        return self.frames.shape[1]

    @property
    def bin_hz(self) -> float:
        return self.sample_rate_hz / self.window_size

    def magnitude(self) -> np.ndarray:
        return np.abs(self.frames)

    def with_frames(self, frames) -> "Stft":
        return Stft(frames, self.window_size, self.hop, self.sample_rate_hz,
                    self.length, self.window, self.center, self._window_values)
