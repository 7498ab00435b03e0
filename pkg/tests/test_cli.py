"""Tests for the command-line interface."""

import numpy as np
import pandas as pd
import pytest
from typer.testing import CliRunner

from gvox import __version__
from gvox.cli import app
from gvox.core.bitstream import HEADER_SIZE, payload_size
from gvox.core.signal_io import mulaw_transcode, read_wav, write_wav
from gvox.core.weights import init_weights, write_weights
from gvox.models.network import Architecture
from gvox.models.signal import PcmSignal

runner = CliRunner()

SMALL_CONFIG = """\
# tiny network for tests
stacks = 1
layers_per_stack = 2
residual_channels = 8
skip_channels = 8
steps = 3
batch_size = 2
sequence_length = 64
log_every = 0
"""


@pytest.fixture
def short_wav(tmp_path, speech):
    """0.1 s of speech-like audio: 5 frames, 1600 samples."""
    path = tmp_path / "short.wav"
    write_wav(PcmSignal(speech.samples[:1600].copy(), 16000), path)
    return path


@pytest.fixture
def weights_file(tmp_path, micro_weights):
    path = tmp_path / "micro.weights"
    write_weights(micro_weights, path)
    return path


class TestTopLevel:
    """Version and help."""

    def test_version(self):
        """--version prints the package version."""
        result = runner.invoke(app, ["--version"])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_no_command_shows_help(self):
        """Running bare prints usage."""
        result = runner.invoke(app, [])
        assert result.exit_code == 0
        assert "parametric" in result.output
        assert "waveform" in result.output


class TestParametric:
    """Parametric encode and decode."""

    def test_encode_size(self, tmp_path, short_wav):
        """Five frames take a header plus 32 payload bytes."""
        dest = tmp_path / "short.gvp"
        result = runner.invoke(app, ["parametric", "encode", str(short_wav), str(dest)])
        assert result.exit_code == 0, result.output
        assert dest.stat().st_size == HEADER_SIZE + payload_size(5)
        assert "Encoded 5 frames" in result.output

    def test_missing_input(self, tmp_path):
        """A missing source exits with the I/O code."""
        result = runner.invoke(
            app, ["parametric", "encode", str(tmp_path / "none.wav"), str(tmp_path / "x.gvp")]
        )
        assert result.exit_code == 5

    def test_fallback_decode(self, tmp_path, short_wav):
        """The sinusoidal renderer needs no model and writes 8 kHz."""
        coded = tmp_path / "short.gvp"
        out = tmp_path / "out.wav"
        runner.invoke(app, ["parametric", "encode", str(short_wav), str(coded)])
        result = runner.invoke(
            app, ["parametric", "decode", str(coded), str(out), "--fallback-sinusoidal"]
        )
        assert result.exit_code == 0, result.output
        signal = read_wav(out)
        assert signal.sample_rate_hz == 8000
        assert len(signal) == 5 * 160

    def test_decode_needs_weights(self, tmp_path, short_wav):
        """Generative decoding without weights is a usage error."""
        coded = tmp_path / "short.gvp"
        runner.invoke(app, ["parametric", "encode", str(short_wav), str(coded)])
        result = runner.invoke(app, ["parametric", "decode", str(coded), str(tmp_path / "o.wav")])
        assert result.exit_code == 2

    def test_generative_decode_seeded(self, tmp_path, short_wav, weights_file):
        """Sampling writes 16 kHz and repeats exactly for a seed."""
        coded = tmp_path / "short.gvp"
        runner.invoke(app, ["parametric", "encode", str(short_wav), str(coded)])
        outputs = []
        for name in ("a.wav", "b.wav"):
            out = tmp_path / name
            result = runner.invoke(
                app,
                ["parametric", "decode", str(coded), str(out), "-w", str(weights_file), "-s", "3"],
            )
            assert result.exit_code == 0, result.output
            assert "Generation rate" in result.output
            outputs.append(read_wav(out))
        assert outputs[0].sample_rate_hz == 16000
        assert len(outputs[0]) == 5 * 320
        np.testing.assert_array_equal(outputs[0].samples, outputs[1].samples)

    def test_bad_bitstream(self, tmp_path):
        """Foreign bytes exit with the format code."""
        junk = tmp_path / "junk.gvp"
        junk.write_bytes(b"not a bitstream at all")
        result = runner.invoke(
            app,
            ["parametric", "decode", str(junk), str(tmp_path / "o.wav"), "--fallback-sinusoidal"],
        )
        assert result.exit_code == 3

    def test_batch(self, tmp_path, short_wav):
        """Batch encoding writes one file per input and reports failures."""
        out_dir = tmp_path / "coded"
        result = runner.invoke(
            app,
            [
                "parametric",
                "encode-batch",
                str(short_wav),
                str(tmp_path / "missing.wav"),
                "--out-dir",
                str(out_dir),
            ],
        )
        assert result.exit_code == 5
        assert (out_dir / "short.gvp").exists()
        assert not (out_dir / "missing.gvp").exists()


class TestWaveform:
    """Lossless waveform coding through the CLI."""

    def test_round_trip(self, tmp_path, short_wav, weights_file):
        """Decoding gives the mu-law transcode of the input."""
        coded = tmp_path / "short.gvw"
        out = tmp_path / "out.wav"
        result = runner.invoke(
            app, ["waveform", "encode", str(short_wav), str(weights_file), str(coded), "--text"]
        )
        assert result.exit_code == 0, result.output
        assert "payload_bits_per_sample = " in result.output
        result = runner.invoke(app, ["waveform", "decode", str(coded), str(weights_file), str(out)])
        assert result.exit_code == 0, result.output
        expected = mulaw_transcode(read_wav(short_wav)).samples
        np.testing.assert_array_equal(read_wav(out).samples, expected)

    def test_wrong_weights(self, tmp_path, short_wav, weights_file, micro_arch):
        """Decoding with other weights exits with the integrity code."""
        coded = tmp_path / "short.gvw"
        other = tmp_path / "other.weights"
        write_weights(init_weights(micro_arch, np.random.default_rng(99), zero_head=False), other)
        runner.invoke(app, ["waveform", "encode", str(short_wav), str(weights_file), str(coded)])
        result = runner.invoke(
            app, ["waveform", "decode", str(coded), str(other), str(tmp_path / "o.wav")]
        )
        assert result.exit_code == 4

    def test_invalid_levels(self, tmp_path, short_wav, weights_file):
        """A quantizer size that is not a power of two is a usage error."""
        result = runner.invoke(
            app,
            [
                "waveform",
                "encode",
                str(short_wav),
                str(weights_file),
                str(tmp_path / "x.gvw"),
                "--levels",
                "100",
            ],
        )
        assert result.exit_code == 2


class TestTrainAndAnalyze:
    """Training runs and rate analysis."""

    @pytest.fixture
    def corpus(self, tmp_path, speech):
        directory = tmp_path / "corpus"
        directory.mkdir()
        for k in range(2):
            part = speech.samples[k * 1600 : (k + 1) * 1600].copy()
            write_wav(PcmSignal(part, 16000), directory / f"item{k}.wav")
        config = tmp_path / "train.cfg"
        config.write_text(SMALL_CONFIG)
        return directory, config

    def test_train_deterministic(self, tmp_path, corpus):
        """Two runs with one seed write identical weights."""
        directory, config = corpus
        files = []
        for name in ("a.weights", "b.weights"):
            out = tmp_path / name
            result = runner.invoke(
                app, ["train", str(directory), str(config), "-o", str(out), "--seed", "5"]
            )
            assert result.exit_code == 0, result.output
            files.append(out.read_bytes())
        assert files[0] == files[1]

    def test_loss_log(self, tmp_path, corpus):
        """The loss log has one row per step."""
        directory, config = corpus
        log = tmp_path / "loss.csv"
        result = runner.invoke(
            app,
            [
                "train",
                str(directory),
                str(config),
                "-o",
                str(tmp_path / "m.weights"),
                "--loss-log",
                str(log),
                "--steps",
                "4",
            ],
        )
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(log)
        assert len(frame) == 4
        assert list(frame.columns) == ["step", "loss_bits", "learning_rate"]

    def test_empty_corpus(self, tmp_path):
        """A directory without WAV files is a usage error."""
        empty = tmp_path / "empty"
        empty.mkdir()
        result = runner.invoke(app, ["train", str(empty)])
        assert result.exit_code == 2

    def test_resume_other_architecture(self, tmp_path, corpus):
        """Resuming from weights of another shape is refused."""
        directory, config = corpus
        other = tmp_path / "wide.weights"
        wide = init_weights(Architecture(stacks=1, layers_per_stack=3), np.random.default_rng(0))
        write_weights(wide, other)
        result = runner.invoke(
            app, ["train", str(directory), str(config), "--resume", str(other)]
        )
        assert result.exit_code == 2

    def test_analyze_trace(self, tmp_path, short_wav, weights_file):
        """The trace has one row per sample."""
        trace = tmp_path / "trace.csv"
        result = runner.invoke(
            app, ["analyze", str(short_wav), str(weights_file), "--trace", str(trace), "--text"]
        )
        assert result.exit_code == 0, result.output
        assert "h_bar = " in result.output
        frame = pd.read_csv(trace)
        assert len(frame) == 1600
        assert list(frame.columns) == ["index", "h_bits", "r_bits", "silent_flag"]
