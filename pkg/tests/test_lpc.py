"""Tests for linear prediction and LSF conversion."""

import numpy as np
import pytest
import scipy.signal

from gvox.core import lpc


def stable_polynomial(rng, order=10, radius=0.9):
    """A(z) with complex-conjugate roots inside the unit circle."""
    angles = np.sort(rng.uniform(0.2, 2.9, order // 2))
    roots = radius * np.exp(1j * angles)
    return np.real(np.poly(np.concatenate([roots, roots.conj()])))


class TestLevinson:
    """Levinson-Durbin recursion."""

    def test_recovers_ar_process(self, rng):
        """Coefficients of a known AR(2) process are recovered."""
        a_true = np.array([1.0, -1.2, 0.5])
        x = scipy.signal.lfilter([1.0], a_true, rng.standard_normal(40000))
        r = lpc.autocorrelation(x, 2)
        a, error = lpc.levinson(r, 2)
        np.testing.assert_allclose(a, a_true, atol=0.02)
        assert error > 0.0

    def test_zero_signal(self):
        """Zero energy gives the trivial predictor."""
        a, error = lpc.levinson(np.zeros(11), 10)
        assert a.tolist() == [1.0] + [0.0] * 10
        assert error == 0.0

    def test_analysis_is_minimum_phase(self, rng):
        """Windowed analysis always yields roots inside the unit circle."""
        frame = rng.standard_normal(200)
        a, _ = lpc.lpc_analysis(frame, 10, 8000)
        assert np.all(np.abs(np.roots(a)) < 1.0)

    def test_lag_window_starts_at_one(self):
        """No attenuation at lag zero, decreasing after."""
        w = lpc.lag_window(10, 8000)
        assert w[0] == 1.0
        assert np.all(np.diff(w) < 0)


class TestLsf:
    """LPC <-> LSF conversion."""

    def test_flat_spectrum(self):
        """A(z) = 1 has equally spaced LSFs."""
        a = np.zeros(11)
        a[0] = 1.0
        np.testing.assert_allclose(lpc.lpc_to_lsf(a), lpc.flat_lsf(10), atol=1e-9)

    def test_round_trip(self, rng):
        """LSF conversion inverts for stable filters."""
        for _ in range(20):
            a = stable_polynomial(rng)
            lsf = lpc.lpc_to_lsf(a)
            np.testing.assert_allclose(lpc.lsf_to_lpc(lsf), a, atol=1e-6)

    def test_lsfs_interlace(self, rng):
        """Stable filters give strictly increasing LSFs inside (0, pi)."""
        for _ in range(20):
            lsf = lpc.lpc_to_lsf(stable_polynomial(rng))
            assert np.all(np.diff(lsf) > 0)
            assert lsf[0] > 0.0 and lsf[-1] < np.pi

    def test_ordered_lsfs_give_stable_filter(self, rng):
        """Any increasing LSF set reconstructs a minimum-phase A(z)."""
        for _ in range(20):
            lsf = np.sort(rng.uniform(0.05, np.pi - 0.05, 10))
            a = lpc.lsf_to_lpc(lsf)
            assert a[0] == pytest.approx(1.0)
            assert np.all(np.abs(np.roots(a)) < 1.0)

    def test_envelope_of_flat_filter(self):
        """A(z) = 1 has a flat unit envelope scaled by gain."""
        a = np.zeros(11)
        a[0] = 1.0
        env = lpc.envelope(a, np.linspace(0, np.pi, 9), gain=2.0)
        np.testing.assert_allclose(env, 2.0)
