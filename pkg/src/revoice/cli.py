"""Single entry-point CLI for the toolkit.

Subcommands: fetch, corrupt, estimate-ir, enhance, evaluate, score,
spectrogram. ``enhance`` follows the submission contract exactly: three
positional arguments (input folder, output folder, task id), one enhanced
16-bit 16 kHz WAV per input file, same names.

Exit codes: 0 success, 1 usage error, 2 data error, 3 partial per-file
failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import os
import sys
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

from . import audio_io, corruption, dataset, deconv, dsp, sysid
from .challenge import (LevelResult, format_scorecard_report, load_registry,
                        parse_level_id, score_submission, write_scorecard_csv)
from .deconv import WienerParams
from .errors import MalformedId, RevoiceError

log = logging.getLogger("revoice")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PARTIAL = 3

OUTPUT_PEAK_DBFS = -1.0
CACHE_ENV_VAR = "REVOICE_CACHE_DIR"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the toolkit reserves 2 for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _wav_files(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir()
                  if p.is_file() and p.suffix.lower() == ".wav")


def _load_enhance_config(path: str | None) -> tuple[configparser.ConfigParser, Path | None]:
    config = configparser.ConfigParser()
    config.read_string(
        resources.files("revoice").joinpath("data/enhance.cfg").read_text("utf-8"))
    base = None
    if path:
        with open(path, encoding="utf-8") as fh:
            config.read_file(fh)
        base = Path(path).parent
    return config, base


def _resolve_level_ir(level: str, config: configparser.ConfigParser,
                      config_dir: Path | None):
    section = level if config.has_section(level) else configparser.DEFAULTSECT
    lam = config.getfloat(section, "lambda", fallback=0.003)
    seed = config.getint(section, "seed", fallback=0)
    ir_path = config.get(section, "ir", fallback=None)
    if ir_path:
        full = Path(ir_path)
        if not full.is_absolute() and config_dir is not None:
            full = config_dir / full
        ir, _ = sysid.load_ir(full)
        return ir, lam
    registry = load_registry()
    return corruption.make_level_model(level, registry, seed).ir, lam


# --- subcommands ------------------------------------------------------------

def cmd_fetch(args) -> int:
    manifest = dataset.load_manifest(args.manifest, base_url=args.base_url)
    layout = dataset.fetch_dataset(manifest, args.dest)
    print(f"dataset ready under {layout.root}: {len(layout.levels)} level folder(s)")
    for level, paths in sorted(layout.levels.items()):
        print(f"  {level}: clean={paths.clean_dir} recorded={paths.recorded_dir} "
              f"text={paths.text_file}")
    return EXIT_OK


def cmd_corrupt(args) -> int:
    level = parse_level_id(args.level)
    registry = load_registry()
    presets = corruption.load_presets(args.presets) if args.presets else None
    model = corruption.make_level_model(level, registry, args.seed, presets)
    in_path = Path(args.input)
    files = _wav_files(in_path) if in_path.is_dir() else [in_path]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path in files:
        clip = audio_io.read_wav(path)
        noise_seed = (args.seed ^ zlib.crc32(path.name.encode())) & 0x7FFFFFFF
        corrupted = corruption.apply_corruption(clip, model, noise_seed)
        audio_io.write_wav(corrupted, out_dir / path.name)
        log.info("corrupted %s -> %s", path.name, out_dir / path.name)
    print(f"{len(files)} file(s) corrupted as {level} into {out_dir}")
    return EXIT_OK


def cmd_estimate_ir(args) -> int:
    recorded = audio_io.read_wav(args.recorded)
    if args.method == "sweep":
        spec = sysid.SweepSpec(
            f_min_hz=args.f_min, f_max_hz=args.f_max,
            duration_seconds=args.duration, sample_rate_hz=recorded.sample_rate_hz,
            pad_lead_seconds=args.pad_lead, pad_trail_seconds=args.pad_trail)
        estimate = sysid.estimate_ir_sweep(recorded, spec, args.ir_length,
                                           args.regularization)
        sysid.save_ir(estimate, args.out, sweep_spec=spec)
    else:
        if not args.reference:
            raise MalformedId("--reference is required for the noise method")
        reference = audio_io.read_wav(args.reference)
        estimate = sysid.estimate_ir_noise(recorded, reference, args.ir_length,
                                           args.regularization)
        sysid.save_ir(estimate, args.out)
    if args.figure:
        from . import report
        report.save_ir_figure(estimate, Path(args.out).with_suffix(".png"))
    print(f"IR written to {args.out} (onset {estimate.onset_sample} samples, "
          f"residual energy ratio {estimate.residual_energy_ratio:.4g})")
    return EXIT_OK


def _enhance_one(path: Path, out_dir: Path, ir, lam: float) -> float:
    clip = audio_io.read_wav(path)
    if clip.sample_rate_hz != ir.sample_rate_hz:
        clip = dsp.resample(clip, ir.sample_rate_hz)
    start = time.perf_counter()
    enhanced = deconv.wiener_deconvolve(clip, ir, WienerParams(noise_power=lam))
    enhanced = dsp.normalize_peak(enhanced, OUTPUT_PEAK_DBFS)
    elapsed = time.perf_counter() - start
    audio_io.write_wav(enhanced, out_dir / path.name)
    rtf = elapsed / clip.duration_seconds
    log.info("%s: %.2f s audio in %.3f s (RTF %.3f)",
             path.name, clip.duration_seconds, elapsed, rtf)
    return rtf


def cmd_enhance(args) -> int:
    level = parse_level_id(args.task_id)
    config, config_dir = _load_enhance_config(args.config)
    ir, lam = _resolve_level_ir(str(level), config, config_dir)

    in_dir = Path(args.input_dir)
    if not in_dir.is_dir():
        raise RevoiceError(f"input folder {in_dir} does not exist")
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = _wav_files(in_dir)
    if not files:
        log.warning("no .wav files found in %s", in_dir)
        print("0 files enhanced")
        return EXIT_OK

    rtfs: list[float] = []
    failures: list[tuple[Path, Exception]] = []
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            futures = {pool.submit(_enhance_one, p, out_dir, ir, lam): p for p in files}
            for future, path in futures.items():
                try:
                    rtfs.append(future.result())
                except Exception as exc:  # collected, processing continues
                    failures.append((path, exc))
    else:
        for path in files:
            try:
                rtfs.append(_enhance_one(path, out_dir, ir, lam))
            except Exception as exc:
                failures.append((path, exc))

    for path, exc in failures:
        log.error("failed on %s: %s", path.name, exc)
    if rtfs:
        mean_rtf = sum(rtfs) / len(rtfs)
        print(f"{len(rtfs)} file(s) enhanced for {level}, mean RTF {mean_rtf:.3f}")
    if failures:
        print(f"{len(failures)} file(s) failed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_evaluate(args) -> int:
    table = dataset.parse_transcripts(args.text_file)
    hypotheses = dataset.load_hypotheses_csv(args.hypotheses) if args.hypotheses else {}
    result = dataset.evaluate_directory(args.audio_dir, table, hypotheses)
    result.write_csv(args.output_csv, strict_compat=args.strict_compat)
    if args.verbose:
        for row in result.rows:
            flags = " [missing audio]" if row.audio_missing else ""
            print(f"{row.filename}: cer {row.cer:.6f}{flags}")
    print(f"mean CER: {result.mean_cer:.6f}")
    return EXIT_OK


def _parse_results_csv(path) -> dict[str, LevelResult]:
    results: dict[str, LevelResult] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            sanity = row.get("sanity_check", "1").strip()
            results[row["level"].strip()] = LevelResult(
                mean_cer=float(row["mean_cer"]),
                sanity_check=sanity not in ("0", "false", "no", ""))
    return results


def cmd_score(args) -> int:
    registry = load_registry()
    results = _parse_results_csv(args.results)
    card = score_submission(results, registry, team=args.team, mean_rtf=args.mean_rtf)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_scorecard_csv(card, out_dir / "scorecard.csv")
    text = format_scorecard_report(card)
    (out_dir / "scorecard.txt").write_text(text, encoding="utf-8")
    if args.figure:
        from . import report
        report.save_scorecard_figure(card, out_dir / "scorecard.png")
    print(text, end="")
    return EXIT_OK


def cmd_spectrogram(args) -> int:
    clip = audio_io.read_wav(args.input)
    spec = dsp.stft(clip, args.window, args.hop)
    dsp.export_spectrogram_csv(spec, args.out)
    if args.figure:
        from . import report
        report.save_spectrogram_figure(spec, Path(args.out).with_suffix(".png"),
                                       title=Path(args.input).name)
    print(f"spectrogram: {spec.frequency_bins} bins x {spec.num_frames} frames -> {args.out}")
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="revoice",
                     description="Speech enhancement challenge toolkit")
    parser.add_argument("-v", "--verbose-log", action="store_true",
                        help="debug-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", help="download and unpack the challenge dataset")
    p.add_argument("--manifest", required=True,
                   help="plain-text file of archive filename + sha256 pairs")
    p.add_argument("--dest", default=os.environ.get(CACHE_ENV_VAR, "./challenge_data"),
                   help=f"target directory (default ${CACHE_ENV_VAR} or ./challenge_data)")
    p.add_argument("--base-url", default=dataset.DATASET_URL)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("corrupt", help="simulate a level's corruption on clean audio")
    p.add_argument("input", help="clean .wav file or directory of files")
    p.add_argument("--level", required=True, help="level id, e.g. T1L3")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--presets", help="alternative corruption presets (JSON)")
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("estimate-ir", help="estimate an impulse response from a recording")
    p.add_argument("--recorded", required=True, help="recording of the probe signal")
    p.add_argument("--method", choices=("sweep", "noise"), default="sweep")
    p.add_argument("--reference", help="reference probe .wav (noise method)")
    p.add_argument("--out", required=True, help="output IR .wav (sidecar JSON added)")
    p.add_argument("--ir-length", type=int, default=4000)
    p.add_argument("--regularization", type=float, default=None,
                   help="relative spectral floor (default 1e-3 of mean power)")
    p.add_argument("--f-min", type=float, default=20.0)
    p.add_argument("--f-max", type=float, default=8000.0)
    p.add_argument("--duration", type=float, default=30.0)
    p.add_argument("--pad-lead", type=float, default=0.5)
    p.add_argument("--pad-trail", type=float, default=5.0)
    p.add_argument("--no-figure", dest="figure", action="store_false")
    p.set_defaults(func=cmd_estimate_ir)

    p = sub.add_parser("enhance", help="run the baseline enhancement over a folder")
    p.add_argument("input_dir", help="folder with input audio files")
    p.add_argument("output_dir", help="folder for enhanced audio files")
    p.add_argument("task_id", help="level id on the TXLY form, e.g. T1L3")
    p.add_argument("--config", help="enhancement config (INI) overriding the default")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("evaluate", help="score hypothesis transcripts against references")
    p.add_argument("--audio_dir", required=True)
    p.add_argument("--text_file", required=True)
    p.add_argument("--output_csv", required=True)
    p.add_argument("--hypotheses", help="CSV of (filename, transcript) hypotheses")
    p.add_argument("--verbose", type=int, default=0, choices=(0, 1))
    p.add_argument("--strict-compat", action="store_true",
                   help="emit only (filename, transcript) columns")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("score", help="apply the challenge scoring rules")
    p.add_argument("--results", required=True,
                   help="CSV with level, mean_cer[, sanity_check] rows")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--team", default="")
    p.add_argument("--mean-rtf", type=float, default=None)
    p.add_argument("--no-figure", dest="figure", action="store_false")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("spectrogram", help="export a dB magnitude matrix (CSV + PNG)")
    p.add_argument("input", help="input .wav")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--window", type=int, default=512)
    p.add_argument("--hop", type=int, default=256)
    p.add_argument("--no-figure", dest="figure", action="store_false")
    p.set_defaults(func=cmd_spectrogram)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse signals usage errors (and --help)
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose_log else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MalformedId as exc:
        print(f"revoice: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RevoiceError as exc:
        print(f"revoice: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
