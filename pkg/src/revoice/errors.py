"""Exception types raised across the toolkit."""


class RevoiceError(Exception):
    """Base class for all toolkit errors."""


# --- audio file I/O ---

class MalformedContainer(RevoiceError):
    """File is not a well-formed RIFF/WAVE container."""


class UnsupportedEncoding(RevoiceError):
    """WAV encoding other than integer PCM."""


class MultiChannel(RevoiceError):
    """More than one channel where mono is required."""


class IoFailure(RevoiceError):
    """Underlying OS-level read/write failure."""


class SampleRateMismatch(RevoiceError):
    """Two signals (or a signal and a target spec) disagree on sample rate."""


# --- DSP ---

class EmptyInput(RevoiceError):
    """Zero-length signal or kernel."""


class InvalidWindow(RevoiceError):
    """STFT window/hop parameters out of range."""


class NonReconstructibleParameters(RevoiceError):
    """Window/hop pair does not admit overlap-add reconstruction."""


class InvalidRate(RevoiceError):
    """Non-positive sample rate."""


class SilentInput(RevoiceError):
    """All-zero signal where a nonzero peak is required."""


# --- corruption simulation / levels ---

class UnknownLevel(RevoiceError):
    """Level id not present in the registry."""


class MalformedId(RevoiceError):
    """String does not match the TXLY level-id pattern."""


# --- system identification ---

class InvalidSpec(RevoiceError):
    """Measurement-signal specification violates its constraints."""


class NoSweepDetected(RevoiceError):
    """Recording does not correlate with the reference sweep."""


class NoCorrelation(RevoiceError):
    """No usable cross-correlation peak between two signals."""


class DegenerateSpectrum(RevoiceError):
    """Unregularized spectral division would hit an exact null."""


# --- deconvolution ---

class DegenerateKernel(RevoiceError):
    """All-zero impulse response cannot be inverted."""


class ProfileShapeMismatch(RevoiceError):
    """Noise profile bins do not match the STFT configuration."""


# --- text metrics ---

class EmptyReference(RevoiceError):
    """Normalized reference text is empty, so CER is undefined."""


class EmptyBatch(RevoiceError):
    """Aggregate requested over zero records."""


# --- challenge scoring ---

class ZeroLengthAudio(RevoiceError):
    """Real-time factor requested for zero seconds of audio."""


# --- dataset management ---

class ChecksumMismatch(RevoiceError):
    """Downloaded archive does not match its expected SHA-256."""


class NetworkFailure(RevoiceError):
    """Download failed and no cached copy exists."""


class DiskFull(RevoiceError):
    """Out of disk space while writing an archive."""


class DuplicateFilename(RevoiceError):
    """Transcript table lists the same filename twice."""


class UnparseableLine(RevoiceError):
    """Transcript line that cannot be split into filename and text."""
