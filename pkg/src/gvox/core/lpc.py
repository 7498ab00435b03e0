"""Linear prediction: autocorrelation analysis, Levinson-Durbin, LSF conversion.

Polynomials follow A(z) = 1 + a1 z^-1 + ... + ap z^-p.
"""

from __future__ import annotations

import numpy as np

LAG_WINDOW_HZ = 60.0  # Gaussian lag window bandwidth
WHITE_NOISE_CORRECTION = 1.0001  # r[0] scaling, a -40 dB noise floor


def autocorrelation(frame: np.ndarray, order: int) -> np.ndarray:
    """Biased autocorrelation r[0..order] of an already windowed frame."""
    n = frame.size
    full = np.correlate(frame, frame, mode="full")
    return full[n - 1 : n + order].copy()


def lag_window(order: int, sample_rate_hz: int, bandwidth_hz: float = LAG_WINDOW_HZ) -> np.ndarray:
    k = np.arange(order + 1)
    return np.exp(-0.5 * (2.0 * np.pi * bandwidth_hz * k / sample_rate_hz) ** 2)


def levinson(r: np.ndarray, order: int) -> tuple[np.ndarray, float]:
    """Solve the normal equations; returns (A coefficients incl. leading 1, error)."""
    a = np.zeros(order + 1)
    a[0] = 1.0
    error = float(r[0])
    if error <= 0.0:
        return a, 0.0
    for i in range(1, order + 1):
        acc = r[i] + np.dot(a[1:i], r[i - 1 : 0 : -1])
        k = -acc / error
        a[1:i] = a[1:i] + k * a[i - 1 : 0 : -1]
        a[i] = k
        error *= 1.0 - k * k
        if error <= 0.0:
            break
    return a, error


def lpc_analysis(frame: np.ndarray, order: int, sample_rate_hz: int) -> tuple[np.ndarray, float]:
    """Hamming-windowed autocorrelation LPC with lag windowing."""
    windowed = frame * np.hamming(frame.size)
    r = autocorrelation(windowed, order)
    r = r * lag_window(order, sample_rate_hz)
    r[0] *= WHITE_NOISE_CORRECTION
    return levinson(r, order)


def flat_lsf(order: int) -> np.ndarray:
    """LSFs of A(z) = 1: equally spaced k*pi/(order+1)."""
    return np.arange(1, order + 1) * np.pi / (order + 1)


def _pair_angles(poly: np.ndarray) -> np.ndarray:
    roots = np.roots(poly)
    angles = np.sort(np.abs(np.angle(roots)))
    # conjugate pairs give each angle twice
    return angles[::2]


def lpc_to_lsf(a: np.ndarray) -> np.ndarray:
    """Line spectral frequencies (radians, ascending) of an even-order A(z)."""
    a = np.asarray(a, dtype=np.float64)
    order = a.size - 1
    extended = np.concatenate([a, [0.0]])
    p = extended + extended[::-1]
    q = extended - extended[::-1]
    # remove the trivial roots at z = -1 (P) and z = +1 (Q)
    p_reduced, _ = np.polydiv(p, [1.0, 1.0])
    q_reduced, _ = np.polydiv(q, [1.0, -1.0])
    lsf = np.sort(np.concatenate([_pair_angles(p_reduced), _pair_angles(q_reduced)]))
    if lsf.size != order or not np.all(np.isfinite(lsf)):
        raise ValueError("LSF root finding failed")
    return lsf


def lsf_to_lpc(lsf: np.ndarray) -> np.ndarray:
    """Inverse of lpc_to_lsf: A(z) coefficients with leading 1."""
    lsf = np.asarray(lsf, dtype=np.float64)
    p_poly = np.array([1.0, 1.0])
    q_poly = np.array([1.0, -1.0])
    for w in lsf[0::2]:
        p_poly = np.convolve(p_poly, [1.0, -2.0 * np.cos(w), 1.0])
    for w in lsf[1::2]:
        q_poly = np.convolve(q_poly, [1.0, -2.0 * np.cos(w), 1.0])
    a = 0.5 * (p_poly + q_poly)
    return a[: lsf.size + 1]


def envelope(a: np.ndarray, freqs_rad: np.ndarray, gain: float = 1.0) -> np.ndarray:
    """Magnitude of gain / A(e^jw) at the given frequencies."""
    k = np.arange(a.size)
    response = np.exp(-1j * np.outer(freqs_rad, k)) @ a
    return gain / np.maximum(np.abs(response), 1e-9)
