"""Tests for entropy-rate measurements, traces and the chain-rule check."""

import numpy as np
import pandas as pd
import pytest

from gvox.core.conditional_model import ConstantModel, MarkovOracle
from gvox.core.rate_analysis import (
    MAX_BLOCK_STATES,
    TRACE_COLUMNS,
    JointSource,
    chain_rule_check,
    conditional_entropy,
    export_trace,
    flag_poor_fit,
    info_trace,
    likelihood_excess,
    load_trace,
)
from gvox.core.signal_io import mulaw_decode_array
from gvox.errors import StateSpaceTooLargeError, StorageError
from gvox.models.rates import InfoTrace, RateReport, SymbolDistribution
from gvox.models.signal import CONDITIONING_DIM, ConditioningTrack, PcmSignal


def entropy(p):
    p = np.asarray(p, dtype=np.float64).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def two_code_chain(rng):
    """Each code leads to one of two others, never the negative zero code."""
    codes = np.delete(np.arange(256), 0x7F)
    transition = np.zeros((256, 256))
    for row in range(256):
        transition[row, rng.choice(codes, size=2, replace=False)] = rng.dirichlet(np.ones(2))
    return transition


def regime_track(intervals, switch_at):
    vectors = np.zeros((intervals, CONDITIONING_DIM))
    vectors[switch_at:, 0] = 1.0
    return ConditioningTrack(vectors, 160)


class TestChainRule:
    """H(S, Theta) = H(S | Theta) + H(Theta) on enumerable sources."""

    def test_iid(self, rng):
        """A dependent i.i.d. pair source adds up."""
        source = JointSource.iid(rng.dirichlet(np.ones(6)).reshape(3, 2))
        result = chain_rule_check(source, block_length=3)
        assert result.additivity_error <= 1e-9
        assert result.joint == pytest.approx(entropy(source.initial))

    def test_independent(self, rng):
        """Independent conditioning leaves H(S) untouched."""
        p_s = rng.dirichlet(np.ones(4))
        p_theta = rng.dirichlet(np.ones(3))
        result = chain_rule_check(JointSource.independent(p_s, p_theta), block_length=2)
        assert result.conditional == pytest.approx(entropy(p_s), abs=1e-12)
        assert result.conditioning == pytest.approx(entropy(p_theta), abs=1e-12)
        assert result.additivity_error <= 1e-9

    def test_copy(self, rng):
        """A copied source costs nothing once the copy is known."""
        p_s = rng.dirichlet(np.ones(4))
        result = chain_rule_check(JointSource.copy(p_s), block_length=3)
        assert result.conditional == pytest.approx(0.0, abs=1e-12)
        assert result.joint == pytest.approx(entropy(p_s))
        assert result.additivity_error <= 1e-9

    def test_markov(self, rng):
        """Memory across the block still adds up."""
        transition = rng.dirichlet(np.ones(4), size=4)
        source = JointSource.markov(2, 2, rng.dirichlet(np.ones(4)), transition)
        assert source.block_pmf(4).sum() == pytest.approx(1.0)
        for length in (1, 2, 3, 4):
            assert chain_rule_check(source, block_length=length).additivity_error <= 1e-9

    def test_markov_conditioning_helps(self, rng):
        """Conditioning never increases the entropy of S."""
        transition = rng.dirichlet(np.ones(4), size=4)
        source = JointSource.markov(2, 2, rng.dirichlet(np.ones(4)), transition)
        result = chain_rule_check(source, block_length=3)
        assert result.conditional <= result.joint + 1e-12

    def test_state_space_limit(self):
        """Blocks beyond a million states are refused."""
        source = JointSource.independent(np.full(4, 0.25), np.full(4, 0.25))
        assert 16**5 <= MAX_BLOCK_STATES
        chain_rule_check(source, block_length=5)
        with pytest.raises(StateSpaceTooLargeError):
            chain_rule_check(source, block_length=6)

    def test_block_length_positive(self):
        """Empty blocks are meaningless."""
        with pytest.raises(ValueError):
            chain_rule_check(JointSource.iid(np.ones((2, 2))), block_length=0)


class TestInfoTrace:
    """H and R per sample given the true history."""

    def test_uniform_model(self, speech):
        """A uniform model gives eight bits everywhere."""
        track = ConditioningTrack(np.zeros((50, CONDITIONING_DIM)), 160)
        trace = info_trace(speech, track, ConstantModel())
        assert len(trace) == len(speech)
        np.testing.assert_allclose(trace.h, 8.0)
        np.testing.assert_allclose(trace.r, 8.0)
        assert not trace.silent.any()

    def test_silence_flags(self, speech):
        """Digital silence is flagged when a threshold is given."""
        samples = speech.samples.copy()
        samples[:1600] = 0
        signal = PcmSignal(samples, 16000)
        track = ConditioningTrack(np.zeros((50, CONDITIONING_DIM)), 160)
        trace = info_trace(signal, track, ConstantModel(), silence_db=-40.0)
        assert trace.silent[:1600].all()
        assert not trace.silent[2000:].any()

    def test_regimes_separate(self, rng):
        """Switching the conditioning regime moves the rate by the entropy gap."""
        calm = two_code_chain(rng)
        busy = np.full((256, 256), 1.0 / 255)
        busy[:, 0x7F] = 0.0
        oracle = MarkovOracle(np.stack([calm, busy]), regime_slot=0)
        track = regime_track(100, 50)
        symbols = oracle.generate(16000, rng, track.rows)
        signal = PcmSignal(mulaw_decode_array(symbols), 16000)
        trace = info_trace(signal, track, oracle)
        first, second = slice(0, 8000), slice(8000, 16000)
        gap_r = trace.r[second].mean() - trace.r[first].mean()
        gap_h = trace.h[second].mean() - trace.h[first].mean()
        assert trace.h[second].mean() == pytest.approx(np.log2(255), abs=1e-3)
        assert trace.r[first].mean() == pytest.approx(trace.h[first].mean(), abs=0.1)
        assert gap_r == pytest.approx(gap_h, abs=0.1)
        assert gap_h > 5.0

    def test_report_consistent_with_trace(self, rng):
        """Report averages are the trace means over counted samples."""
        h = rng.uniform(0, 8, 1000)
        r = rng.uniform(0, 12, 1000)
        silent = rng.random(1000) < 0.3
        trace = InfoTrace(h, r, silent)
        report = RateReport.from_trace(trace, 16000)
        assert report.h_bar == pytest.approx(h[~silent].mean(), abs=1e-12)
        assert report.r == pytest.approx(r[~silent].mean(), abs=1e-12)
        assert report.generation_estimate == report.h_bar
        assert report.samples_counted + report.silence_excluded == 1000
        assert report.per_second(report.r) == pytest.approx(16000 * report.r)

    def test_conditional_entropy(self):
        """Entropy of a single predicted distribution."""
        assert conditional_entropy(SymbolDistribution.uniform()) == pytest.approx(8.0)


class TestTraceFiles:
    """CSV export and reload."""

    def test_export_and_load(self, tmp_path, rng):
        """One row per sample, values to nine decimals."""
        trace = InfoTrace(rng.uniform(0, 8, 300), rng.uniform(0, 16, 300), rng.random(300) < 0.5)
        path = tmp_path / "trace.csv"
        export_trace(trace, path)
        frame = pd.read_csv(path)
        assert list(frame.columns) == TRACE_COLUMNS
        assert len(frame) == 300
        assert frame["index"].tolist() == list(range(300))
        loaded = load_trace(path)
        np.testing.assert_allclose(loaded.h, trace.h, atol=1e-9)
        np.testing.assert_allclose(loaded.r, trace.r, atol=1e-9)
        np.testing.assert_array_equal(loaded.silent, trace.silent)

    def test_missing_columns(self, tmp_path):
        """A CSV without the trace columns is rejected."""
        path = tmp_path / "other.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            load_trace(path)

    def test_missing_file(self, tmp_path):
        """Reading a missing trace is an I/O error."""
        with pytest.raises(StorageError):
            load_trace(tmp_path / "absent.csv")


class TestPoorFit:
    """Windowed likelihood excess."""

    def test_constant_excess(self):
        """A constant gap averages to itself."""
        trace = InfoTrace(np.full(50, 3.0), np.full(50, 5.0), np.zeros(50, dtype=bool))
        np.testing.assert_allclose(likelihood_excess(trace, 10), 2.0)

    def test_flags_burst(self):
        """A burst of surprising samples is flagged once the window fills with it."""
        h = np.full(400, 4.0)
        r = np.full(400, 4.0)
        r[200:300] = 7.0
        trace = InfoTrace(h, r, np.zeros(400, dtype=bool))
        flags = flag_poor_fit(trace, window=20, threshold_bits=1.0)
        assert not flags[:200].any()
        assert flags[220:300].all()
        assert not flags[330:].any()

    def test_window_positive(self):
        """Windows must hold at least one sample."""
        trace = InfoTrace(np.zeros(3), np.zeros(3), np.zeros(3, dtype=bool))
        with pytest.raises(ValueError):
            likelihood_excess(trace, 0)
