"""Synthetic recording-chain corruption.

Reproduces the structure of the physical rigs so the toolkit can generate
paired clean/corrupted data without the recorded dataset: LTI convolution,
a recording delay of up to half a second, stationary Gaussian noise at a
target SNR, band-limited harmonic distortion, and hard clipping.

The per-level presets are qualitative stand-ins. Filter levels use low-pass
prototypes whose cutoff drops with the level index; reverb levels use
exponentially decaying tails whose decay time grows with speaker distance;
combined levels convolve both in series.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
from numpy.polynomial import chebyshev
from scipy import signal as sps

from .challenge import LevelId, LevelRegistry
from .dsp import fft_convolve
from .errors import InvalidSpec, SampleRateMismatch, UnknownLevel
from .signals import AudioClip, ImpulseResponse

MAX_DELAY_SECONDS = 0.5

_FILTER_TAPS = 257
_FILTER_ORDER = 8


@dataclass(frozen=True)
class DistortionSpec:
    """Harmonic distortion confined to a low-frequency band.

    harmonic_gains[k] is the amplitude of harmonic k+2 relative to an
    in-band fundamental; an empty sequence means no distortion.
    """

    band_low_hz: float = 50.0
    band_high_hz: float = 250.0
    harmonic_gains: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "harmonic_gains", tuple(self.harmonic_gains))
        if not 0 < self.band_low_hz < self.band_high_hz:
            raise InvalidSpec(
                f"need 0 < band_low < band_high, got {self.band_low_hz}..{self.band_high_hz}")


@dataclass(frozen=True)
class CorruptionModel:
    ir: ImpulseResponse
    snr_db: float
    delay_seconds: float = 0.0
    distortion: DistortionSpec | None = None
    clip_ceiling: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.delay_seconds <= MAX_DELAY_SECONDS:
            raise InvalidSpec(f"delay must be within [0, {MAX_DELAY_SECONDS}] s")
        if not np.isfinite(self.snr_db):
            raise InvalidSpec("snr_db must be finite")
        if not 0.0 < self.clip_ceiling <= 1.0:
            raise InvalidSpec("clip ceiling must be in (0, 1]")


def apply_harmonic_distortion(clip: AudioClip, spec: DistortionSpec) -> AudioClip:
    """Add overtones of the band-limited content via Chebyshev waveshaping.

    A pure tone inside the band gains harmonics at exactly the configured
    relative amplitudes; content outside the band passes unmodified apart
    from the (tiny) harmonics of whatever leaks through the band filter.
    """
    if not spec.harmonic_gains:
        return clip
    nyquist = clip.sample_rate_hz / 2
    if spec.band_high_hz >= nyquist:
        raise InvalidSpec(f"band_high {spec.band_high_hz} Hz must sit below Nyquist {nyquist}")
    # design edges sit outside the nominal band so in-band tones see ~unit
    # gain through the zero-phase (squared-magnitude) filtering
    sos = sps.butter(4, [0.8 * spec.band_low_hz,
                         min(1.25 * spec.band_high_hz, 0.95 * nyquist)],
                     btype="bandpass", fs=clip.sample_rate_hz, output="sos")
    band = sps.sosfiltfilt(sos, clip.samples)
    # percentile amplitude ignores filter edge transients, so a steady
    # in-band tone maps to a unit-amplitude waveshaper input
    scale = float(np.percentile(np.abs(band), 98))
    if scale < 1e-9:
        return clip
    shaped = clip.samples.copy()
    u = band / scale
    for k, gain in enumerate(spec.harmonic_gains):
        overtone = chebyshev.Chebyshev.basis(k + 2)(u)
        overtone -= overtone.mean()
        shaped += gain * scale * overtone
    return clip.with_samples(shaped)


def apply_corruption(clean: AudioClip, model: CorruptionModel, noise_seed: int) -> AudioClip:
    """clip( distort( delay( ir * clean ) ) + noise at snr_db ).

    Deterministic for a given seed. Output length is
    len(clean) + len(ir) - 1 + delay samples.
    """
    if clean.sample_rate_hz != model.ir.sample_rate_hz:
        raise SampleRateMismatch(
            f"clean at {clean.sample_rate_hz} Hz, model IR at {model.ir.sample_rate_hz} Hz")
    x = fft_convolve(clean, model.ir).samples
    delay = int(round(model.delay_seconds * clean.sample_rate_hz))
    if delay:
        x = np.concatenate([np.zeros(delay), x])
    if model.distortion is not None:
        x = apply_harmonic_distortion(
            AudioClip(x, clean.sample_rate_hz), model.distortion).samples

    rng = np.random.default_rng(noise_seed)
    signal_power = float(np.mean(x**2))
    noise_scale = np.sqrt(signal_power * 10.0 ** (-model.snr_db / 10.0))
    y = x + noise_scale * rng.standard_normal(len(x))
    return AudioClip(np.clip(y, -model.clip_ceiling, model.clip_ceiling),
                     clean.sample_rate_hz)


def filter_prototype_ir(cutoff_hz: float, sample_rate_hz: int = 16000,
                        n_taps: int = _FILTER_TAPS) -> ImpulseResponse:
    """Causal low-pass IR with its energy packed at the start.

    Built as the truncated impulse response of a Butterworth filter, so the
    direct path stays near tap zero (important for delay estimation).
    """
    sos = sps.butter(_FILTER_ORDER, cutoff_hz, fs=sample_rate_hz, output="sos")
    impulse = np.zeros(n_taps)
    impulse[0] = 1.0
    return ImpulseResponse(sps.sosfilt(sos, impulse), sample_rate_hz)


def reverb_prototype_ir(rt60_seconds: float, direct_to_reverb_db: float,
                        sample_rate_hz: int, rng: np.random.Generator) -> ImpulseResponse:
    """Unit direct path plus an exponentially decaying Gaussian tail.

    The tail level is set by the direct-to-reverb energy ratio and the whole
    response is energy-normalized.
    """
    n = int(round(1.2 * rt60_seconds * sample_rate_hz))
    t = np.arange(n) / sample_rate_hz
    # -60 dB at rt60
    envelope = np.exp(-t * np.log(1000.0) / rt60_seconds)
    taps = np.zeros(n)
    taps[0] = 1.0
    tail = rng.standard_normal(n - 1) * envelope[1:]
    tail_energy = float(np.sum(tail**2))
    target_tail_energy = 10.0 ** (-direct_to_reverb_db / 10.0)
    taps[1:] = tail * np.sqrt(target_tail_energy / tail_energy)
    taps /= np.sqrt(np.sum(taps**2))
    return ImpulseResponse(taps, sample_rate_hz)


def load_presets(path=None) -> dict:
    """Per-level corruption presets (the packaged file unless overridden)."""
    if path is None:
        text = resources.files("revoice").joinpath("data/corruption_presets.json").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    presets = json.loads(text)
    presets.pop("_comment", None)
    return presets


def make_level_model(level, registry: LevelRegistry, rng_seed: int,
                     presets: dict | None = None,
                     sample_rate_hz: int = 16000) -> CorruptionModel:
    """Synthetic corruption model for a registry level.

    Severity is monotone in the level index: filter cutoffs fall for task 1,
    reverb times grow for task 2, and task 3 composes its two named
    components in series. The seed fixes the reverb tail and the recording
    delay.
    """
    lid = LevelId.parse(str(level))
    if lid not in registry:
        raise UnknownLevel(f"level {lid} is not in the registry")
    if presets is None:
        presets = load_presets()
    try:
        preset = presets[str(lid)]
    except KeyError:
        raise UnknownLevel(f"no corruption preset for level {lid}") from None

    rng = np.random.default_rng(rng_seed)
    delay = float(rng.uniform(0.0, MAX_DELAY_SECONDS))

    if "compose" in preset:
        filter_preset = presets[preset["compose"][0]]
        reverb_preset = presets[preset["compose"][1]]
        filter_ir = filter_prototype_ir(filter_preset["filter_cutoff_hz"], sample_rate_hz)
        reverb_ir = reverb_prototype_ir(reverb_preset["reverb_rt60_s"],
                                        reverb_preset["direct_to_reverb_db"],
                                        sample_rate_hz, rng)
        taps = np.convolve(filter_ir.taps, reverb_ir.taps)
        taps /= np.sqrt(np.sum(taps**2))
        ir = ImpulseResponse(taps, sample_rate_hz)
        snr_db = min(filter_preset["snr_db"], reverb_preset["snr_db"])
        gains = tuple(filter_preset.get("distortion_gains", ()))
        ceiling = min(filter_preset.get("clip_ceiling", 1.0),
                      reverb_preset.get("clip_ceiling", 1.0))
    elif "filter_cutoff_hz" in preset:
        ir = filter_prototype_ir(preset["filter_cutoff_hz"], sample_rate_hz)
        snr_db = preset["snr_db"]
        gains = tuple(preset.get("distortion_gains", ()))
        ceiling = preset.get("clip_ceiling", 1.0)
    else:
        ir = reverb_prototype_ir(preset["reverb_rt60_s"], preset["direct_to_reverb_db"],
                                 sample_rate_hz, rng)
        snr_db = preset["snr_db"]
        gains = tuple(preset.get("distortion_gains", ()))
        ceiling = preset.get("clip_ceiling", 1.0)

    distortion = DistortionSpec(harmonic_gains=gains) if gains else None
    return CorruptionModel(ir=ir, snr_db=snr_db, delay_seconds=delay,
                           distortion=distortion, clip_ceiling=ceiling)
