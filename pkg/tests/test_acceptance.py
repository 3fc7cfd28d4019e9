"""Acceptance gate: one test per release criterion, at its stated tolerance.

Each test prints a [PASS]/[FAIL] line (run with ``pytest -s`` to see them
live). The headline corpus statistics are not reproducible at desk scale,
so acceptance rests on oracle equivalence, exactly specified micro-facts,
and property suites over the synthetic simulator.
"""

import dataclasses
import hashlib
import time

import numpy as np
import pytest
from scipy.signal import hilbert

from revoice import audio_io, dsp
from revoice.challenge import (LevelResult, compute_rtf, level_passes,
                               load_registry, score_submission)
from revoice.cli import main
from revoice.corruption import apply_corruption, make_level_model
from revoice.dataset import clean_outliers, prepare_clean_clip
from revoice.deconv import WienerParams, wiener_deconvolve
from revoice.signals import AudioClip, ImpulseResponse
from revoice.sysid import (SweepSpec, align, estimate_ir_noise,
                           estimate_ir_sweep, synth_noise_probe, synth_sweep)
from revoice.textmetrics import cer, edit_counts

from support import (brute_force_edit_distance, reconstruction_snr_db,
                     speech_like, tap_error_db)

FS = 16000


def check(name: str, ok: bool, detail: str = ""):
    suffix = f" ({detail})" if detail else ""
    print(f"[{'PASS' if ok else 'FAIL'}] {name}{suffix}")
    assert ok, f"{name}{suffix}"


def test_cer_oracle_equivalence():
    rng = np.random.default_rng(2024)
    alphabet = "abcd"
    start = time.perf_counter()
    mismatches = 0
    for _ in range(500):
        a = "".join(rng.choice(list(alphabet), size=rng.integers(0, 13)))
        b = "".join(rng.choice(list(alphabet), size=rng.integers(0, 13)))
        if edit_counts(a, b).total != brute_force_edit_distance(a, b):
            mismatches += 1
    elapsed = time.perf_counter() - start
    check("CER oracle equivalence",
          mismatches == 0 and elapsed < 10.0,
          f"500 pairs, {mismatches} mismatches, {elapsed:.2f} s")


def test_cer_paper_rules():
    empty = cer("hello world", "")
    colour = cer("colour", "color")
    formatting = cer("Bestfriend", "best friend")
    spaced_case = cer("The Time, Machine!", "the  time machine")
    ok = (empty.cer == 1.0 and empty.empty_hypothesis_rule_applied
          and colour.cer == 0.0 and formatting.cer == 0.0
          and spaced_case.cer == 0.0)
    check("CER special rules", ok,
          f"empty={empty.cer}, colour={colour.cer}, case/space={spaced_case.cer}")


def test_convolution_oracle():
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(100):
        signal = AudioClip(rng.standard_normal(int(rng.integers(2, 4097))), FS)
        kernel = ImpulseResponse(rng.standard_normal(int(rng.integers(1, 258))), FS)
        fast = dsp.fft_convolve(signal, kernel).samples
        direct = np.convolve(signal.samples, kernel.taps)
        worst = max(worst, np.linalg.norm(fast - direct) / np.linalg.norm(direct))
    check("convolution oracle", worst <= 1e-9, f"worst relative error {worst:.2e}")


def test_deconvolution_round_trip():
    registry = load_registry()
    model = make_level_model("T1L2", registry, rng_seed=5)
    model = dataclasses.replace(model, snr_db=60.0, delay_seconds=0.25)
    clean = speech_like(3.0, seed=11)
    start = time.perf_counter()
    corrupted = apply_corruption(clean, model, noise_seed=99)
    lag = align(corrupted, clean)
    trimmed = AudioClip(corrupted.samples[lag:], FS)
    estimate = wiener_deconvolve(trimmed, model.ir, WienerParams(noise_power=1e-4))
    elapsed = time.perf_counter() - start
    snr = reconstruction_snr_db(clean.samples, estimate.samples)
    check("deconvolution round trip", snr >= 20.0 and elapsed < 5.0,
          f"reconstruction SNR {snr:.1f} dB in {elapsed:.2f} s")


def test_system_id_recovery():
    rng = np.random.default_rng(10)
    taps = rng.standard_normal(64) * np.exp(-np.arange(64) / 32)
    taps /= np.sqrt(np.sum(taps ** 2))
    true = ImpulseResponse(taps, FS)
    spec = SweepSpec()  # 20 Hz - 8 kHz, 30 s, 16 kHz
    sweep_recording = dsp.fft_convolve(synth_sweep(spec), true)

    clean_est = estimate_ir_sweep(sweep_recording, spec, ir_length=128,
                                  regularization=1e-9)
    noiseless_db = tap_error_db(clean_est.ir.taps, true.taps)

    noise = rng.standard_normal(len(sweep_recording))
    noise *= np.sqrt(np.mean(sweep_recording.samples ** 2) * 1e-4)  # 40 dB SNR
    noisy_est = estimate_ir_sweep(
        AudioClip(sweep_recording.samples + noise, FS), spec, ir_length=128)
    noisy_db = tap_error_db(noisy_est.ir.taps, true.taps)

    probe = synth_noise_probe(10.0, seed=3)
    probe_recording = dsp.fft_convolve(probe, true)
    w = rng.standard_normal(len(probe_recording))
    w *= np.sqrt(np.mean(probe_recording.samples ** 2) * 1e-6)  # 60 dB SNR
    probe_est = estimate_ir_noise(AudioClip(probe_recording.samples + w, FS),
                                  probe, ir_length=128)
    agreement_db = tap_error_db(noisy_est.ir.taps, probe_est.ir.taps[:64])

    check("system-id recovery",
          noiseless_db <= -30 and noisy_db <= -20 and agreement_db <= -20,
          f"noiseless {noiseless_db:.1f} dB, 40 dB SNR {noisy_db:.1f} dB, "
          f"estimator agreement {agreement_db:.1f} dB")


def test_sweep_spec_checks():
    spec = SweepSpec()
    endpoints_exact = (spec.frequency_at(0.0) == 20.0
                       and spec.frequency_at(30.0) == 8000.0)
    sweep = synth_sweep(SweepSpec(pad_lead_seconds=0, pad_trail_seconds=0))
    mid = int(15.0 * FS)
    phase = np.unwrap(np.angle(hilbert(sweep.samples[mid - 4000:mid + 4000])))
    measured = float(np.mean((np.gradient(phase) * FS / (2 * np.pi))[3900:4100]))
    check("sweep frequency checks",
          endpoints_exact and abs(measured - 400.0) <= 1.0,
          f"midpoint {measured:.3f} Hz")


def test_scoring_rules():
    registry = load_registry()
    cases = [
        # (submission, noisy baseline, expected pass)
        (0.29, 0.91, True),    # plain threshold
        (0.30, 0.91, False),   # strictly below
        (0.299999, 0.91, True),
        (0.05, 0.0419, False),  # T1L1: noisy data already beats 0.3
        (0.04, 0.0419, True),
        (0.0419, 0.0419, False),
        (0.0, 0.0419, True),
        (0.31, 0.32, False),
    ]
    rule_ok = all(level_passes(s, n) is expected for s, n, expected in cases)

    card = score_submission(
        {"T1L1": LevelResult(0.03), "T1L2": LevelResult(0.06),
         "T1L3": LevelResult(0.2), "T1L4": LevelResult(0.5),
         "T2L1": LevelResult(0.1)}, registry)
    points_ok = card.points == 4
    tie_ok = card.tie_break == pytest.approx((0.03 + 0.06 + 0.2 + 0.1) / 4)
    sanity_card = score_submission({"T1L1": LevelResult(0.01, sanity_check=False)},
                                   registry)
    sanity_ok = sanity_card.points == 0
    check("scoring rules", rule_ok and points_ok and tie_ok and sanity_ok,
          f"{len(cases)} threshold cases, points {card.points}, "
          f"tie-break {card.tie_break:.4f}")


def test_registry_fidelity():
    from test_challenge import EXPECTED_LEVELS
    registry = load_registry()
    mismatched = []
    for lid, row in EXPECTED_LEVELS.items():
        spec = registry.get(lid)
        material, distance, gain, volume, length, clean, recorded, alias = row
        actual = (spec.material, spec.distance_m, spec.gain_pct, spec.volume_pct,
                  spec.total_length_s, spec.clean_mean_cer, spec.recorded_mean_cer,
                  str(spec.clean_data_alias) if spec.clean_data_alias else None)
        if actual != row:
            mismatched.append(lid)
    check("registry fidelity", len(registry) == 12 and not mismatched,
          f"12 levels, mismatches: {mismatched or 'none'}")


def test_rtf(tmp_path):
    exact = (compute_rtf(30.0, 10.0) == 3.0 and compute_rtf(5.0, 10.0) == 0.5
             and compute_rtf(0.0, 10.0) == 0.0)

    in_dir, out_dir = tmp_path / "in", tmp_path / "out"
    in_dir.mkdir()
    for i in range(10):
        audio_io.write_wav(speech_like(10.0, seed=200 + i), in_dir / f"f{i}.wav")
    start = time.perf_counter()
    status = main(["enhance", str(in_dir), str(out_dir), "T1L3"])
    wall = time.perf_counter() - start
    mean_rtf = wall / (10 * 10.0)
    check("real-time factor", exact and status == 0 and mean_rtf < 3.0,
          f"mean RTF {mean_rtf:.4f} over 100 s of audio "
          f"({'meets' if mean_rtf < 0.5 else 'misses'} the 0.5 target)")


def test_padding_and_outlier_rules():
    raw24 = AudioClip(0.5 * np.random.default_rng(0).standard_normal(48000), 24000)
    plain = prepare_clean_clip(raw24)
    convolution = prepare_clean_clip(raw24, for_convolution=True)
    pad_ok = len(plain) == 3 * FS and len(convolution) == int(7.5 * FS)
    lead_ok = not plain.samples[:8000].any() and not plain.samples[-8000:].any()

    import math
    drop_ok = all(
        len(clean_outliers([(f"f{i}.wav", float(i)) for i in range(n)], 0.05))
        == n - math.ceil(0.05 * n)
        for n in (1, 20, 99, 100, 611))
    check("padding and outlier rules", pad_ok and lead_ok and drop_ok,
          f"3.0 s / 7.5 s totals, ceil(0.05 n) drops")


def test_cli_determinism(tmp_path):
    clean_dir = tmp_path / "clean"
    clean_dir.mkdir()
    for i in range(2):
        audio_io.write_wav(speech_like(1.0, seed=300 + i), clean_dir / f"c{i}.wav")

    def digest(directory):
        return [hashlib.sha256(p.read_bytes()).hexdigest()
                for p in sorted(directory.iterdir()) if p.is_file()]

    runs = {}
    for tag in ("one", "two"):
        corrupted = tmp_path / f"corrupted_{tag}"
        enhanced = tmp_path / f"enhanced_{tag}"
        assert main(["corrupt", str(clean_dir), "--level", "T1L2",
                     "--out", str(corrupted), "--seed", "9"]) == 0
        assert main(["enhance", str(corrupted), str(enhanced), "T1L2"]) == 0

        text = tmp_path / "text.txt"
        text.write_text("c0.wav\tfirst fixture sentence\nc1.wav\tsecond one\n")
        hyp = tmp_path / "hyp.csv"
        hyp.write_text("filename,transcript\nc0.wav,first fixture sentence\nc1.wav,other\n")
        csv_out = tmp_path / f"eval_{tag}.csv"
        assert main(["evaluate", "--audio_dir", str(corrupted),
                     "--text_file", str(text), "--output_csv", str(csv_out),
                     "--hypotheses", str(hyp)]) == 0
        runs[tag] = (digest(corrupted), digest(enhanced),
                     hashlib.sha256(csv_out.read_bytes()).hexdigest())

    check("subcommand determinism", runs["one"] == runs["two"],
          "corrupt/enhance/evaluate byte-identical across runs")
