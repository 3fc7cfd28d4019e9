"""Speech enhancement challenge toolkit.

Simulates the challenge's recording-chain corruption, estimates impulse
responses from probe recordings, runs regularized deconvolution baselines,
and scores submissions with the character-error-rate pipeline and the
level-based challenge rules.
"""

from .audio_io import WavSpec, read_wav, validate_challenge_format, write_wav
from .challenge import (LevelId, LevelRegistry, LevelResult, LevelSpec,
                        ScoreCard, compute_rtf, level_passes, load_registry,
                        parse_level_id, rank_teams, score_submission)
from .corruption import (CorruptionModel, DistortionSpec, apply_corruption,
                         apply_harmonic_distortion, make_level_model)
from .dataset import (DatasetLayout, TranscriptTable, clean_outliers,
                      evaluate_directory, fetch_dataset, parse_transcripts,
                      prepare_clean_clip)
from .deconv import (WienerParams, spectral_denoise, tikhonov_deconvolve,
                     wiener_deconvolve)
from .dsp import (fft_convolve, istft, normalize_peak, pad, resample, stft)
from .signals import AudioClip, ImpulseResponse, Stft
from .sysid import (IrEstimate, SweepSpec, align, estimate_ir_noise,
                    estimate_ir_sweep, synth_noise_probe, synth_sweep)
from .textmetrics import (CerResult, EditCounts, NormalizationConfig, cer,
                          edit_counts, mean_cer, normalize_text)

__version__ = "0.1.0"
