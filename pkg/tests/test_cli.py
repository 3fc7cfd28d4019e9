import hashlib
import http.server
import threading

import numpy as np
import pytest

from revoice import audio_io
from revoice.cli import main
from revoice.signals import AudioClip

from support import build_level_zip, speech_like

FS = 16000


def file_hashes(directory):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(directory.iterdir()) if p.is_file()}


def write_clips(directory, count, seconds=0.5):
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for i in range(count):
        name = f"clip_{i:02d}.wav"
        audio_io.write_wav(speech_like(seconds, seed=100 + i), directory / name)
        names.append(name)
    return names


class TestEnhance:
    def test_three_in_three_out(self, tmp_path, capsys):
        in_dir, out_dir = tmp_path / "in", tmp_path / "out"
        names = write_clips(in_dir, 3)
        assert main([ "enhance", str(in_dir), str(out_dir), "T1L3"]) == 0
        assert sorted(p.name for p in out_dir.iterdir()) == names
        for name in names:
            spec, violations = audio_io.validate_challenge_format(out_dir / name)
            assert violations == []

    def test_empty_input_dir(self, tmp_path, capsys):
        in_dir, out_dir = tmp_path / "in", tmp_path / "out"
        in_dir.mkdir()
        assert main(["enhance", str(in_dir), str(out_dir), "T1L1"]) == 0
        assert "0 files" in capsys.readouterr().out

    def test_partial_failure(self, tmp_path, capsys):
        in_dir, out_dir = tmp_path / "in", tmp_path / "out"
        write_clips(in_dir, 2)
        (in_dir / "broken.wav").write_bytes(b"not audio")
        assert main(["enhance", str(in_dir), str(out_dir), "T1L2"]) == 3
        assert len(list(out_dir.iterdir())) == 2

    def test_malformed_task_id(self, tmp_path):
        in_dir = tmp_path / "in"
        in_dir.mkdir()
        assert main(["enhance", str(in_dir), str(tmp_path / "out"), "X1L3"]) == 1

    def test_deterministic_and_input_untouched(self, tmp_path):
        in_dir = tmp_path / "in"
        write_clips(in_dir, 2)
        before = file_hashes(in_dir)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["enhance", str(in_dir), str(out_a), "T1L2"]) == 0
        assert main(["enhance", str(in_dir), str(out_b), "T1L2"]) == 0
        assert file_hashes(out_a) == file_hashes(out_b)
        assert file_hashes(in_dir) == before

    def test_jobs_flag_matches_sequential(self, tmp_path):
        in_dir = tmp_path / "in"
        write_clips(in_dir, 4)
        seq, par = tmp_path / "seq", tmp_path / "par"
        assert main(["enhance", str(in_dir), str(seq), "T1L2"]) == 0
        assert main(["enhance", str(in_dir), str(par), "T1L2", "--jobs", "4"]) == 0
        assert file_hashes(seq) == file_hashes(par)


class TestCorrupt:
    def test_deterministic(self, tmp_path):
        in_dir = tmp_path / "clean"
        write_clips(in_dir, 2)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            assert main(["corrupt", str(in_dir), "--level", "T1L3",
                         "--out", str(out), "--seed", "5"]) == 0
        assert file_hashes(out_a) == file_hashes(out_b)

    def test_different_seed_differs(self, tmp_path):
        in_dir = tmp_path / "clean"
        write_clips(in_dir, 1)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["corrupt", str(in_dir), "--level", "T1L3",
                     "--out", str(out_a), "--seed", "5"]) == 0
        assert main(["corrupt", str(in_dir), "--level", "T1L3",
                     "--out", str(out_b), "--seed", "6"]) == 0
        assert file_hashes(out_a) != file_hashes(out_b)

    def test_unknown_level_is_data_error(self, tmp_path):
        in_dir = tmp_path / "clean"
        write_clips(in_dir, 1)
        assert main(["corrupt", str(in_dir), "--level", "T9L1",
                     "--out", str(tmp_path / "o")]) == 2


class TestEvaluate:
    @pytest.fixture
    def fixture_dir(self, tmp_path):
        audio_dir = tmp_path / "Recorded"
        audio_dir.mkdir()
        for name in ("a.wav", "b.wav"):
            audio_io.write_wav(AudioClip(np.zeros(100), FS), audio_dir / name)
        text = tmp_path / "text.txt"
        text.write_text("a.wav\tthe time machine\nb.wav\temma woodhouse\n")
        hyp = tmp_path / "hyp.csv"
        hyp.write_text("filename,transcript\na.wav,the time machine\nb.wav,emma\n")
        return audio_dir, text, hyp

    def test_golden_csv(self, fixture_dir, tmp_path, capsys):
        audio_dir, text, hyp = fixture_dir
        out_csv = tmp_path / "out.csv"
        assert main(["evaluate", "--audio_dir", str(audio_dir),
                     "--text_file", str(text), "--output_csv", str(out_csv),
                     "--hypotheses", str(hyp), "--verbose", "1"]) == 0
        # b: "emmawoodhouse" (13) vs "emma" -> 9 deletions -> 0.692308
        golden = ("filename,reference,hypothesis,cer\n"
                  "a.wav,the time machine,the time machine,0.000000\n"
                  "b.wav,emma woodhouse,emma,0.692308\n"
                  "MEAN,,,0.346154\n")
        assert out_csv.read_text() == golden
        out = capsys.readouterr().out
        assert "a.wav: cer 0.000000" in out
        assert "mean CER: 0.346154" in out

    def test_missing_text_file_is_usage_failure(self, tmp_path):
        assert main(["evaluate", "--audio_dir", str(tmp_path),
                     "--output_csv", str(tmp_path / "o.csv")]) == 1

    def test_deterministic(self, fixture_dir, tmp_path):
        audio_dir, text, hyp = fixture_dir
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert main(["evaluate", "--audio_dir", str(audio_dir),
                         "--text_file", str(text), "--output_csv", str(out),
                         "--hypotheses", str(hyp)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestScore:
    def test_bundled_example_results(self, tmp_path, capsys):
        from importlib import resources
        results = resources.files("revoice").joinpath("data/example_results.csv")
        out_dir = tmp_path / "card"
        assert main(["score", "--results", str(results), "--out-dir", str(out_dir),
                     "--team", "demo", "--mean-rtf", "0.4"]) == 0
        assert "points: 4" in capsys.readouterr().out
        assert (out_dir / "scorecard.csv").exists()
        assert (out_dir / "scorecard.txt").exists()
        assert (out_dir / "scorecard.png").exists()

    def test_no_figure_flag(self, tmp_path):
        from importlib import resources
        results = resources.files("revoice").joinpath("data/example_results.csv")
        out_dir = tmp_path / "card"
        assert main(["score", "--results", str(results), "--out-dir", str(out_dir),
                     "--no-figure"]) == 0
        assert not (out_dir / "scorecard.png").exists()


class TestFetch:
    def test_fetch_via_cli(self, tmp_path, capsys):
        archive = build_level_zip(tmp_path)
        server = http.server.ThreadingHTTPServer(
            ("127.0.0.1", 0),
            lambda *a, **kw: http.server.SimpleHTTPRequestHandler(
                *a, directory=str(tmp_path), **kw))
        threading.Thread(target=server.serve_forever, daemon=True).start()
        try:
            url = f"http://127.0.0.1:{server.server_address[1]}"
            digest = hashlib.sha256(archive.read_bytes()).hexdigest()
            manifest = tmp_path / "manifest.txt"
            manifest.write_text(f"url={url}\n{archive.name} {digest}\n")
            dest = tmp_path / "dataset"
            assert main(["fetch", "--manifest", str(manifest),
                         "--dest", str(dest)]) == 0
            assert "T1L1" in capsys.readouterr().out
            assert (dest / "Task_1_Level_1" / "Recorded").is_dir()
        finally:
            server.shutdown()


class TestSpectrogramAndIr:
    def test_spectrogram_outputs(self, tmp_path):
        wav = tmp_path / "x.wav"
        audio_io.write_wav(speech_like(0.5, seed=9), wav)
        out_csv = tmp_path / "spec.csv"
        assert main(["spectrogram", str(wav), "--out", str(out_csv)]) == 0
        assert out_csv.exists()
        assert (tmp_path / "spec.png").exists()
        header = out_csv.read_text().splitlines()[0]
        assert header.startswith("# bins=257")

    def test_estimate_ir_writes_sidecar(self, tmp_path):
        from revoice import dsp, sysid
        from revoice.signals import ImpulseResponse

        rng = np.random.default_rng(0)
        taps = rng.standard_normal(32) * np.exp(-np.arange(32) / 8)
        taps /= np.sqrt(np.sum(taps ** 2))
        spec = sysid.SweepSpec(duration_seconds=5.0)
        recorded = dsp.fft_convolve(sysid.synth_sweep(spec),
                                    ImpulseResponse(taps, FS))
        wav = tmp_path / "recorded.wav"
        audio_io.write_wav(AudioClip(recorded.samples / recorded.peak, FS), wav)

        out = tmp_path / "ir.wav"
        assert main(["estimate-ir", "--recorded", str(wav), "--out", str(out),
                     "--duration", "5.0", "--ir-length", "64"]) == 0
        assert out.exists()
        assert (tmp_path / "ir.wav.json").exists()
        assert (tmp_path / "ir.png").exists()
        ir, meta = sysid.load_ir(out)
        assert meta["method"] == "sweep"
        assert len(ir) == 64
