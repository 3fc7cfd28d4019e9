"""Figure rendering for the report-producing commands.

Every figure is written straight to a file (Agg backend); these sit next to
the delimited outputs so a run leaves both machine- and human-readable
artifacts.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from . import dsp  # noqa: E402
from .challenge import ScoreCard  # noqa: E402
from .signals import Stft  # noqa: E402
from .sysid import IrEstimate  # noqa: E402


def save_spectrogram_figure(spec: Stft, path, title: str | None = None) -> None:
    db = dsp.magnitude_db(spec)
    duration = spec.length / spec.sample_rate_hz
    fig, ax = plt.subplots(figsize=(8, 4))
    image = ax.imshow(db, origin="lower", aspect="auto",
                      extent=(0.0, duration, 0.0, spec.sample_rate_hz / 2000.0),
                      cmap="magma", vmin=db.max() - 90.0, vmax=db.max())
    ax.set_xlabel("time [s]")
    ax.set_ylabel("frequency [kHz]")
    if title:
        ax.set_title(title)
    fig.colorbar(image, ax=ax, label="magnitude [dB]")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_scorecard_figure(card: ScoreCard, path) -> None:
    levels = list(card.per_level)
    cers = [card.per_level[l].mean_cer for l in levels]
    bars = [card.per_level[l].bar for l in levels]
    colors = ["tab:green" if card.per_level[l].counted else "tab:red" for l in levels]
    fig, ax = plt.subplots(figsize=(max(6, 0.8 * len(levels) + 2), 4))
    ax.bar(levels, cers, color=colors)
    ax.plot(levels, bars, "k_", markersize=18, label="pass bar")
    ax.set_ylabel("mean CER")
    title = f"{card.team or 'submission'}: {card.points} point(s)"
    if card.mean_rtf is not None:
        title += f", mean RTF {card.mean_rtf:.2f}"
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_ir_figure(estimate: IrEstimate, path) -> None:
    import numpy as np

    ir = estimate.ir
    t = np.arange(len(ir)) / ir.sample_rate_hz * 1000.0
    spectrum = np.fft.rfft(ir.taps, max(1024, len(ir)))
    freqs = np.fft.rfftfreq(max(1024, len(ir)), 1.0 / ir.sample_rate_hz)
    mag_db = 20.0 * np.log10(np.maximum(np.abs(spectrum), 1e-9))
    fig, (ax_time, ax_freq) = plt.subplots(1, 2, figsize=(10, 4))
    ax_time.plot(t, ir.taps, linewidth=0.8)
    ax_time.set_xlabel("time [ms]")
    ax_time.set_title(f"taps (onset {estimate.onset_sample}, "
                      f"residual {estimate.residual_energy_ratio:.3g})")
    ax_freq.semilogx(freqs[1:], mag_db[1:], linewidth=0.8)
    ax_freq.set_xlabel("frequency [Hz]")
    ax_freq.set_ylabel("magnitude [dB]")
    ax_freq.set_title("frequency response")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
