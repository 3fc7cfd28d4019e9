"""Measurement signals and impulse-response estimation.

Three probe signals are supported: an exponential swept sine, a long
Gaussian noise clip, and (as a short noise clip) a burst. IRs are recovered
by regularized spectral division against the known reference; for the sweep
this is the classic inverse-filter method, with the time-reversed,
amplitude-compensated sweep expressed directly in the frequency domain as
conj(X) / (|X|^2 + lambda).

Nonlinear behavior (the low-frequency resonances of real rigs) is not
modeled; it lands in the reported residual, which quantifies how far the
system is from LTI.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy import fft as spfft
from scipy import signal as sps

from . import audio_io, dsp
from .errors import (DegenerateSpectrum, InvalidSpec, NoCorrelation,
                     NoSweepDetected, SampleRateMismatch)
from .signals import AudioClip, ImpulseResponse

DEFAULT_REGULARIZATION = 1e-3  # relative to mean power of the reference spectrum

_ONSET_THRESHOLD = 0.05  # of the deconvolved peak
_ONSET_GUARD = 8         # samples kept ahead of the detected rise
# normalized-correlation floor: unrelated signals peak near
# sqrt(2 ln L / N) (~0.03 for a second of audio), genuine matches through
# a rig with a direct path stay above 0.1
_CORR_THRESHOLD = 0.05


@dataclass(frozen=True)
class SweepSpec:
    """Exponential sine sweep parameters, default per the challenge probes."""

    f_min_hz: float = 20.0
    f_max_hz: float = 8000.0
    duration_seconds: float = 30.0
    sample_rate_hz: int = 16000
    pad_lead_seconds: float = 0.5
    pad_trail_seconds: float = 5.0

    def __post_init__(self):
        if not (0 < self.f_min_hz < self.f_max_hz <= self.sample_rate_hz / 2):
            raise InvalidSpec(
                f"need 0 < f_min < f_max <= Nyquist, got {self.f_min_hz}..{self.f_max_hz} "
                f"at {self.sample_rate_hz} Hz")
        if self.duration_seconds <= 0:
            raise InvalidSpec("sweep duration must be positive")
        if self.pad_lead_seconds < 0 or self.pad_trail_seconds < 0:
            raise InvalidSpec("padding must be nonnegative")

    def frequency_at(self, t: float) -> float:
        """Instantaneous frequency t seconds into the sweep (pads excluded)."""
        ratio = self.f_max_hz / self.f_min_hz
        return self.f_min_hz * ratio ** (t / self.duration_seconds)


def synth_sweep(spec: SweepSpec) -> AudioClip:
    """Constant-amplitude sweep rising exponentially from f_min to f_max."""
    n = int(round(spec.duration_seconds * spec.sample_rate_hz))
    t = np.arange(n) / spec.sample_rate_hz
    rate = np.log(spec.f_max_hz / spec.f_min_hz) / spec.duration_seconds
    phase = 2.0 * np.pi * spec.f_min_hz / rate * (np.exp(rate * t) - 1.0)
    sweep = AudioClip(np.sin(phase), spec.sample_rate_hz)
    return dsp.pad(sweep, spec.pad_lead_seconds, spec.pad_trail_seconds)


def synth_noise_probe(duration_seconds: float, seed: int,
                      sample_rate_hz: int = 16000,
                      pad_lead_seconds: float = 0.5,
                      pad_trail_seconds: float = 5.0) -> AudioClip:
    """Peak-normalized white Gaussian probe. A short duration makes a burst."""
    if duration_seconds <= 0:
        raise InvalidSpec("probe duration must be positive")
    rng = np.random.default_rng(seed)
    samples = rng.standard_normal(int(round(duration_seconds * sample_rate_hz)))
    clip = dsp.normalize_peak(AudioClip(samples, sample_rate_hz), 0.0)
    return dsp.pad(clip, pad_lead_seconds, pad_trail_seconds)


@dataclass(frozen=True)
class IrEstimate:
    """Estimated IR plus the diagnostics written to the sidecar file."""

    ir: ImpulseResponse
    onset_sample: int
    residual_energy_ratio: float
    method: str


def _normalized_peak_corr(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    corr = sps.correlate(a, b, mode="full", method="fft")
    return float(np.max(np.abs(corr)) / (na * nb))


def _spectral_division(recorded: np.ndarray, reference: np.ndarray,
                       regularization: float) -> np.ndarray:
    """ifft of R * conj(X) / (|X|^2 + lambda), linear (zero-padded) length."""
    n = spfft.next_fast_len(len(recorded) + len(reference))
    ref_spec = np.fft.rfft(reference, n)
    rec_spec = np.fft.rfft(recorded, n)
    power = np.abs(ref_spec) ** 2
    mean_power = float(np.mean(power))
    lam = regularization * mean_power
    if lam == 0.0 and np.min(power) < 1e-14 * mean_power:
        raise DegenerateSpectrum(
            "reference spectrum has a null; unregularized division would divide by zero")
    return np.fft.irfft(rec_spec * np.conj(ref_spec) / (power + lam), n)


def _truncate_at_onset(ir_full: np.ndarray, ir_length: int) -> tuple[np.ndarray, int]:
    """Locate the response onset and cut ir_length taps from there.

    The rise is searched in a window before the dominant peak, then backed
    off by a small guard so weak leading taps are not dropped.
    """
    env = np.abs(ir_full)
    peak_idx = int(np.argmax(env))
    window_start = max(0, peak_idx - ir_length + 1)
    window = env[window_start:peak_idx + 1]
    crossings = np.nonzero(window >= _ONSET_THRESHOLD * env[peak_idx])[0]
    onset = max(window_start, window_start + int(crossings[0]) - _ONSET_GUARD)
    taps = ir_full[onset:onset + ir_length]
    if len(taps) < ir_length:
        taps = np.pad(taps, (0, ir_length - len(taps)))
    return taps, onset


def _forward_residual(recorded: np.ndarray, reference: np.ndarray,
                      taps: np.ndarray, onset: int) -> float:
    model = sps.fftconvolve(reference, taps)[:max(len(recorded) - onset, 0)]
    predicted = np.zeros(len(recorded))
    predicted[onset:onset + len(model)] = model
    denom = float(np.sum(recorded ** 2))
    if denom == 0.0:
        return 1.0
    return float(np.sum((recorded - predicted) ** 2) / denom)


def estimate_ir_sweep(recorded: AudioClip, spec: SweepSpec, ir_length: int,
                      regularization: float | None = None) -> IrEstimate:
    """Recover an IR from a recording of the reference sweep.

    ``regularization`` scales the mean reference power (default 1e-3); use a
    much smaller value for near-noiseless measurements.
    """
    if recorded.sample_rate_hz != spec.sample_rate_hz:
        raise SampleRateMismatch(
            f"recording at {recorded.sample_rate_hz} Hz, sweep at {spec.sample_rate_hz} Hz")
    if ir_length < 1 or ir_length > len(recorded):
        raise InvalidSpec(f"ir_length {ir_length} outside 1..{len(recorded)}")
    reference = synth_sweep(spec)
    if _normalized_peak_corr(recorded.samples, reference.samples) < _CORR_THRESHOLD:
        raise NoSweepDetected("recording does not correlate with the reference sweep")
    lam = DEFAULT_REGULARIZATION if regularization is None else regularization
    ir_full = _spectral_division(recorded.samples, reference.samples, lam)
    taps, onset = _truncate_at_onset(ir_full, ir_length)
    residual = _forward_residual(recorded.samples, reference.samples, taps, onset)
    return IrEstimate(ImpulseResponse(taps, recorded.sample_rate_hz),
                      onset, residual, method="sweep")


def estimate_ir_noise(recorded: AudioClip, reference: AudioClip, ir_length: int,
                      regularization: float | None = None) -> IrEstimate:
    """Recover an IR from a recording of an arbitrary known reference clip."""
    if recorded.sample_rate_hz != reference.sample_rate_hz:
        raise SampleRateMismatch(
            f"recording at {recorded.sample_rate_hz} Hz, reference at "
            f"{reference.sample_rate_hz} Hz")
    if ir_length < 1 or ir_length > len(recorded):
        raise InvalidSpec(f"ir_length {ir_length} outside 1..{len(recorded)}")
    lam = DEFAULT_REGULARIZATION if regularization is None else regularization
    ir_full = _spectral_division(recorded.samples, reference.samples, lam)
    taps, onset = _truncate_at_onset(ir_full, ir_length)
    residual = _forward_residual(recorded.samples, reference.samples, taps, onset)
    return IrEstimate(ImpulseResponse(taps, recorded.sample_rate_hz),
                      onset, residual, method="noise")


def align(recorded: AudioClip, reference: AudioClip,
          max_lag_seconds: float = 0.5, ir_budget_samples: int = 1600) -> int:
    """Cross-correlation lag of the recording relative to the reference.

    Searches nonnegative lags up to the recording-delay bound plus an IR
    allowance. Raises NoCorrelation when no usable peak exists.
    """
    if recorded.sample_rate_hz != reference.sample_rate_hz:
        raise SampleRateMismatch("align needs a shared sample rate")
    x, y = recorded.samples, reference.samples
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        raise NoCorrelation("cannot align silent audio")
    corr = sps.correlate(x, y, mode="full", method="fft")
    zero_lag = len(y) - 1
    max_lag = int(round(max_lag_seconds * recorded.sample_rate_hz)) + ir_budget_samples
    search = corr[zero_lag:zero_lag + max_lag + 1]
    best = int(np.argmax(np.abs(search)))
    if np.abs(search[best]) / (nx * ny) < _CORR_THRESHOLD:
        raise NoCorrelation("correlation peak below detection threshold")
    return best


def save_ir(estimate: IrEstimate, wav_path, sweep_spec: SweepSpec | None = None) -> None:
    """Serialize an IR as a mono WAV (taps as samples) plus a JSON sidecar.

    Taps are peak-scaled to fit 16-bit range; the sidecar records the scale
    so :func:`load_ir` restores the original amplitudes.
    """
    taps = estimate.ir.taps
    peak = float(np.max(np.abs(taps)))
    scale = 0.999 / peak if peak > 0 else 1.0
    clip = AudioClip(taps * scale, estimate.ir.sample_rate_hz)
    audio_io.write_wav(clip, wav_path,
                       audio_io.WavSpec(sample_rate_hz=estimate.ir.sample_rate_hz))
    meta = {
        "onset_sample": estimate.onset_sample,
        "residual_energy_ratio": estimate.residual_energy_ratio,
        "method": estimate.method,
        "scale": scale,
        "sample_rate_hz": estimate.ir.sample_rate_hz,
    }
    if sweep_spec is not None:
        meta["sweep_spec"] = asdict(sweep_spec)
    with open(_sidecar_path(wav_path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def load_ir(wav_path) -> tuple[ImpulseResponse, dict]:
    """Inverse of :func:`save_ir`; returns taps plus the sidecar metadata."""
    clip = audio_io.read_wav(wav_path)
    with open(_sidecar_path(wav_path), encoding="utf-8") as fh:
        meta = json.load(fh)
    taps = clip.samples / float(meta.get("scale", 1.0))
    return ImpulseResponse(taps, clip.sample_rate_hz), meta


def _sidecar_path(wav_path) -> str:
    return str(wav_path) + ".json"
