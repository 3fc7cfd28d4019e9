"""Reading, writing, and validating the challenge WAV format.

All challenge-facing audio is little-endian integer PCM, mono, 16-bit,
16 kHz. The reader additionally decodes 8/24/32-bit integer PCM so that
foreign files can at least be inspected; compressed and float encodings are
rejected. Multi-channel input is rejected rather than silently downmixed.
"""

from __future__ import annotations

import logging
import struct
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (IoFailure, MalformedContainer, MultiChannel,
                     SampleRateMismatch, UnsupportedEncoding)
from .signals import AudioClip

log = logging.getLogger(__name__)

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True)
class WavSpec:
    """Container parameters; defaults are the challenge contract."""

    bit_depth: int = 16
    channels: int = 1
    sample_rate_hz: int = 16000


CHALLENGE_SPEC = WavSpec()


@dataclass(frozen=True)
class _WavHeader:
    format_code: int
    channels: int
    sample_rate_hz: int
    bit_depth: int
    data_offset: int
    data_size: int

    @property
    def spec(self) -> WavSpec:
        return WavSpec(self.bit_depth, self.channels, self.sample_rate_hz)


def _parse_header(raw: bytes, path) -> _WavHeader:
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise MalformedContainer(f"{path}: not a RIFF/WAVE file")
    pos = 12
    fmt = None
    data = None
    while pos + 8 <= len(raw):
        chunk_id = raw[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", raw, pos + 4)
        body = pos + 8
        if chunk_id == b"fmt ":
            if chunk_size < 16 or body + 16 > len(raw):
                raise MalformedContainer(f"{path}: truncated fmt chunk")
            code, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", raw, body)
            if code == WAVE_FORMAT_EXTENSIBLE and chunk_size >= 40:
                # sub-format GUID starts with the effective format code
                (code,) = struct.unpack_from("<H", raw, body + 24)
            fmt = (code, channels, rate, bits)
        elif chunk_id == b"data":
            data = (body, min(chunk_size, len(raw) - body))
        # chunks are word-aligned
        pos = body + chunk_size + (chunk_size & 1)
    if fmt is None or data is None:
        raise MalformedContainer(f"{path}: missing fmt or data chunk")
    code, channels, rate, bits = fmt
    if channels < 1 or rate < 1 or bits < 1:
        raise MalformedContainer(f"{path}: nonsense fmt fields {fmt}")
    return _WavHeader(code, channels, rate, bits, data[0], data[1])


def _read_file(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def read_wav(path) -> AudioClip:
    """Decode an integer-PCM WAV file into samples scaled to [-1, 1].

    Raises MalformedContainer for broken containers, UnsupportedEncoding for
    float or compressed data, and MultiChannel for anything but mono.
    """
    blob = _read_file(path)
    header = _parse_header(blob, path)
    if header.format_code != WAVE_FORMAT_PCM:
        kind = "float" if header.format_code == WAVE_FORMAT_IEEE_FLOAT else \
            f"format 0x{header.format_code:04x}"
        raise UnsupportedEncoding(f"{path}: {kind} WAV is not supported, expected integer PCM")
    if header.channels != 1:
        raise MultiChannel(f"{path}: {header.channels} channels, only mono is supported")

    raw = blob[header.data_offset:header.data_offset + header.data_size]
    bits = header.bit_depth
    if bits == 16:
        ints = np.frombuffer(raw[:len(raw) - len(raw) % 2], dtype="<i2").astype(np.float64)
        samples = ints / 32768.0
    elif bits == 8:
        ints = np.frombuffer(raw, dtype=np.uint8).astype(np.float64)
        samples = (ints - 128.0) / 128.0
    elif bits == 24:
        usable = len(raw) - len(raw) % 3
        b = np.frombuffer(raw[:usable], dtype=np.uint8).reshape(-1, 3).astype(np.int64)
        ints = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        ints[ints >= 1 << 23] -= 1 << 24
        samples = ints.astype(np.float64) / float(1 << 23)
    elif bits == 32:
        ints = np.frombuffer(raw[:len(raw) - len(raw) % 4], dtype="<i4").astype(np.float64)
        samples = ints / float(1 << 31)
    else:
        raise UnsupportedEncoding(f"{path}: {bits}-bit PCM is not supported")
    return AudioClip(samples, header.sample_rate_hz)


def write_wav(clip: AudioClip, path, spec: WavSpec = CHALLENGE_SPEC) -> int:
    """Write a clip as 16-bit PCM. Returns the count of clamped samples.

    Samples outside [-1, 1] are clamped to full scale (the challenge's own
    recordings clip, so out-of-range data is a warning, not an error).
    """
    if clip.sample_rate_hz != spec.sample_rate_hz:
        raise SampleRateMismatch(
            f"clip is {clip.sample_rate_hz} Hz but spec wants {spec.sample_rate_hz} Hz")
    if spec.bit_depth != 16 or spec.channels != 1:
        raise UnsupportedEncoding("only 16-bit mono output is supported")

    x = clip.samples
    clipped = int(np.count_nonzero((x < -1.0) | (x > 1.0)))
    if clipped:
        log.warning("%s: clamped %d out-of-range samples", path, clipped)
    ints = np.clip(np.rint(x * 32768.0), -32768, 32767).astype("<i2")
    try:
        with wave.open(str(path), "wb") as wf:
            wf.setnchannels(1)
            wf.setsampwidth(2)
            wf.setframerate(spec.sample_rate_hz)
            wf.writeframes(ints.tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return clipped


def validate_challenge_format(path) -> tuple[WavSpec, list[str]]:
    """Check a file against the challenge contract (16-bit mono 16 kHz PCM).

    Returns the decoded spec and the list of violated fields (empty when
    conformant). Broken containers raise MalformedContainer.
    """
    header = _parse_header(_read_file(path), path)
    violations = []
    if header.format_code != WAVE_FORMAT_PCM:
        violations.append("encoding")
    if header.bit_depth != CHALLENGE_SPEC.bit_depth:
        violations.append("bit_depth")
    if header.channels != CHALLENGE_SPEC.channels:
        violations.append("channels")
    if header.sample_rate_hz != CHALLENGE_SPEC.sample_rate_hz:
        violations.append("sample_rate_hz")
    return header.spec, violations
