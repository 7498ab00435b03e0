"""Tests for the conditional model interface, oracles and the frequency table."""

import numpy as np
import pytest

from gvox.core.conditional_model import (
    ConstantModel,
    FrequencyTableModel,
    MarkovOracle,
    aligned_rows,
    entropy_bits,
    log_likelihood,
    sample_symbol,
    score_signal,
    signal_symbols,
)
from gvox.core.signal_io import MULAW_ZERO, mulaw_decode_array
from gvox.errors import AlignmentError, DimensionMismatchError, EmptyCorpusError
from gvox.models.rates import PROB_FLOOR, SymbolDistribution, floor_probs
from gvox.models.signal import CONDITIONING_DIM, ConditioningTrack, PcmSignal


def zero_rows(n, dim=CONDITIONING_DIM):
    return np.zeros((n, dim))


def track_for(n, rate=16000):
    per_vector = rate // 100
    intervals = -(-n // per_vector)
    return ConditioningTrack(np.zeros((intervals, CONDITIONING_DIM)), per_vector)


class TestDistributions:
    """Flooring, entropy and sampling."""

    def test_floor_keeps_unit_mass(self, rng):
        """Flooring raises small entries and preserves the total."""
        probs = rng.dirichlet(np.full(256, 0.01))
        floored = floor_probs(probs)
        assert floored.sum() == pytest.approx(1.0, abs=1e-12)
        assert floored.min() >= PROB_FLOOR * (1 - 1e-12)

    def test_floor_noop_when_above(self):
        """A distribution above the floor is left alone."""
        uniform = np.full(256, 1 / 256)
        np.testing.assert_array_equal(floor_probs(uniform), uniform)

    def test_floored_distribution_valid(self):
        """A point mass floors into a valid distribution."""
        probs = np.zeros(256)
        probs[5] = 1.0
        dist = SymbolDistribution.floored(probs)
        assert dist.is_valid()
        assert dist.prob(5) == pytest.approx(1.0 - 255 * PROB_FLOOR)

    def test_entropy(self):
        """Uniform is 8 bits; a point mass is 0."""
        assert entropy_bits(np.full(256, 1 / 256)) == pytest.approx(8.0)
        point = np.zeros(256)
        point[0] = 1.0
        assert entropy_bits(point) == 0.0

    def test_sampling_frequencies(self, rng):
        """Draws follow the distribution."""
        probs = np.zeros(256)
        probs[[1, 2]] = [0.25, 0.75]
        draws = sample_symbol(SymbolDistribution(probs), rng, size=20_000)
        assert set(np.unique(draws).tolist()) == {1, 2}
        assert np.mean(draws == 2) == pytest.approx(0.75, abs=0.02)

    def test_temperature_zero_is_argmax(self, rng):
        """Temperature 0 picks the most probable symbol, lowest index on ties."""
        probs = np.full(256, 0.5 / 254)
        probs[[40, 90]] = 0.25
        assert sample_symbol(SymbolDistribution(probs), rng, temperature=0.0) == 40

    def test_low_temperature_sharpens(self, rng):
        """Cooling concentrates mass on the mode."""
        probs = np.zeros(256)
        probs[[3, 4]] = [0.6, 0.4]
        dist = SymbolDistribution(probs)
        cold = sample_symbol(dist, rng, temperature=0.25, size=5000)
        assert np.mean(cold == 3) > 0.8

    def test_seeded_sampling_reproducible(self):
        """Equal seeds give equal draws."""
        dist = SymbolDistribution.uniform()
        a = sample_symbol(dist, np.random.default_rng(5), size=100)
        b = sample_symbol(dist, np.random.default_rng(5), size=100)
        np.testing.assert_array_equal(a, b)


class TestAlignment:
    """Conditioning rows versus samples."""

    def test_exact_cover(self):
        """A track ending within the last interval pair is accepted."""
        track = track_for(1000)
        assert aligned_rows(1000, track).shape == (1000, CONDITIONING_DIM)

    def test_short_track(self):
        """Fewer rows than samples is an alignment error."""
        with pytest.raises(AlignmentError):
            aligned_rows(1000, track_for(500))

    def test_long_track(self):
        """A track far longer than the signal is an alignment error."""
        with pytest.raises(AlignmentError):
            aligned_rows(100, track_for(2000))


class TestMarkovOracle:
    """Oracle with a known entropy rate."""

    def test_distributions_valid(self, oracle):
        """Every row is a floored distribution."""
        state = oracle.initial_state()
        dist = oracle.next_distribution(state, zero_rows(1)[0])
        assert dist.is_valid()

    def test_incremental_matches_score(self, oracle, rng):
        """Vectorised scoring equals the step-by-step interface."""
        symbols = oracle.generate(300, rng)
        rows = zero_rows(300)
        h_fast, r_fast = oracle.score(symbols, rows)
        h_slow, r_slow = super(MarkovOracle, oracle).score(symbols, rows)
        np.testing.assert_allclose(h_fast, h_slow)
        np.testing.assert_allclose(r_fast, r_slow)

    def test_rate_concentration(self, oracle, rng):
        """On its own output, mean H and mean R agree with the entropy rate."""
        n = 100_000
        symbols = oracle.generate(n, rng)
        h, r = oracle.score(symbols, zero_rows(n))
        rate = oracle.entropy_rate()
        assert abs(r.mean() - h.mean()) <= 0.03
        assert abs(h.mean() - rate) <= 0.03
        assert abs(r.mean() - rate) <= 0.03

    def test_stationary(self, oracle):
        """The stationary vector is a fixed point of the chain."""
        pi = oracle.stationary()
        np.testing.assert_allclose(pi @ oracle.transition[0], pi, atol=1e-10)
        assert pi.sum() == pytest.approx(1.0)

    def test_regimes(self):
        """The regime slot of theta selects the transition matrix."""
        calm = np.zeros((256, 256))
        calm[:, 7] = 1.0
        busy = np.full((256, 256), 1 / 255)
        busy[:, 0x7F] = 0.0
        oracle = MarkovOracle(np.stack([calm, busy]), regime_slot=0)
        state = oracle.initial_state()
        assert entropy_bits(oracle.next_distribution(state, np.array([0.0])).probs) < 0.1
        assert entropy_bits(oracle.next_distribution(state, np.array([1.0])).probs) == (
            pytest.approx(np.log2(255), abs=1e-3)
        )

    def test_negative_zero_folded(self, rng):
        """Mass on 0x7F moves to the zero code and is never generated."""
        transition = np.zeros((256, 256))
        transition[:, 0x7F] = 0.5
        transition[:, 0x10] = 0.5
        oracle = MarkovOracle(transition)
        row = oracle.transition[0, 0x10]
        assert row[MULAW_ZERO] == pytest.approx(0.5, abs=1e-3)
        assert row[0x7F] <= 2 * PROB_FLOOR
        symbols = oracle.generate(5000, rng)
        assert not np.any(symbols == 0x7F)
        assert set(np.unique(symbols).tolist()) >= {MULAW_ZERO, 0x10}

    def test_generated_codes_survive_pcm(self, oracle, rng):
        """Generated codes are reproduced by mu-law encoding their decoded values."""
        symbols = oracle.generate(20_000, rng)
        signal = PcmSignal(mulaw_decode_array(symbols), 16000)
        np.testing.assert_array_equal(signal_symbols(signal), symbols)

    def test_generation_seeded(self, oracle):
        """Equal seeds give equal sequences."""
        a = oracle.generate(500, np.random.default_rng(3))
        b = oracle.generate(500, np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)


class TestModelInterface:
    """State handling and scoring on the true history."""

    def test_fresh_state_is_silence(self, oracle):
        """History starts filled with the zero code."""
        state = oracle.initial_state()
        assert state.last_symbol == MULAW_ZERO
        assert state.position == 0

    def test_advance(self, oracle):
        """Advancing pushes the symbol and moves the position."""
        state = oracle.initial_state()
        oracle.advance(state, 12)
        assert state.last_symbol == 12
        assert state.position == 1

    def test_score_signal_uses_quantized_history(self, oracle, rng):
        """Scoring a signal scores its mu-law symbols."""
        symbols = oracle.generate(1600, rng)
        signal = PcmSignal(mulaw_decode_array(symbols), 16000)
        trace = score_signal(oracle, signal, track_for(1600))
        _, r = oracle.score(symbols, zero_rows(1600))
        np.testing.assert_allclose(trace.r, r)
        assert len(trace) == 1600

    def test_log_likelihood(self):
        """A uniform model assigns -8 bits to every sample."""
        signal = PcmSignal(np.zeros(320, dtype=np.int16), 16000)
        per_sample, mean = log_likelihood(ConstantModel(), signal, track_for(320))
        np.testing.assert_allclose(per_sample, -8.0)
        assert mean == pytest.approx(-8.0)


class TestFrequencyTable:
    """Count-based model."""

    def test_learns_deterministic_sequence(self):
        """A repeating cycle becomes nearly certain."""
        cycle = np.tile(np.array([1, 2, 3, 4]), 500)
        model = FrequencyTableModel(order=1).fit([(cycle, zero_rows(cycle.size))])
        h, r = model.score(cycle, zero_rows(cycle.size))
        assert r[1:].max() < 0.01
        assert h[1:].max() < 0.1

    def test_unseen_context_uniform(self):
        """Contexts never seen predict the uniform distribution."""
        model = FrequencyTableModel(order=1).fit([(np.array([1, 2]), zero_rows(2))])
        state = model.initial_state()
        model.advance(state, 200)
        dist = model.next_distribution(state, zero_rows(1)[0])
        np.testing.assert_allclose(dist.probs, 1 / 256)

    def test_power_buckets(self):
        """With buckets the model checks the conditioning dimension."""
        model = FrequencyTableModel(order=0, power_buckets=4)
        model.fit([(np.array([5, 5]), zero_rows(2))])
        with pytest.raises(DimensionMismatchError):
            model.next_distribution(model.initial_state(), np.zeros(3))

    def test_power_buckets_split_contexts(self):
        """Loud and quiet rows are counted in separate tables."""
        model = FrequencyTableModel(order=0, power_buckets=2)
        quiet = zero_rows(4)
        quiet[:, 11] = -50.0 / 60.0
        loud = zero_rows(4)
        loud[:, 11] = -10.0 / 60.0
        model.fit([(np.full(4, 7), quiet), (np.full(4, 200), loud)])
        state = model.initial_state()
        assert model.next_distribution(state, quiet[0]).probs.argmax() == 7
        assert model.next_distribution(state, loud[0]).probs.argmax() == 200

    def test_empty_corpus(self):
        """Fitting nothing is an error."""
        with pytest.raises(EmptyCorpusError):
            FrequencyTableModel().fit([])

    def test_fingerprint_tracks_counts(self):
        """Different training data gives a different fingerprint."""
        a = FrequencyTableModel().fit([(np.array([1, 2, 3]), zero_rows(3))])
        b = FrequencyTableModel().fit([(np.array([1, 2, 4]), zero_rows(3))])
        assert len(a.fingerprint()) == 32
        assert a.fingerprint() != b.fingerprint()


class TestConstantModel:
    """History-free model."""

    def test_uniform_default(self):
        """Default is eight bits per symbol."""
        h, r = ConstantModel().score(np.arange(10), zero_rows(10))
        np.testing.assert_allclose(h, 8.0)
        np.testing.assert_allclose(r, 8.0)

    def test_custom_probs(self):
        """Given probabilities are floored and used for every sample."""
        probs = np.zeros(256)
        probs[:2] = 0.5
        model = ConstantModel(probs)
        _, r = model.score(np.array([0, 1]), zero_rows(2))
        np.testing.assert_allclose(r, 1.0, atol=0.01)
