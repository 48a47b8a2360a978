"""Shared fixtures and independent brute-force oracles.

The oracles here recompute spectral quantities with plain loops and the
defining sums, never through the package's FFT paths, so tests compare
two genuinely independent routes.
"""

import numpy as np
import pytest

TWO_PI = 2.0 * np.pi


def brute_periodogram(values: np.ndarray, omega) -> float:
    """Defining double sum, O(n) per frequency, sites starting at 1."""
    n1, n2 = values.shape
    total = 0.0 + 0.0j
    for s1 in range(1, n1 + 1):
        for s2 in range(1, n2 + 1):
            total += values[s1 - 1, s2 - 1] * np.exp(
                -1j * (s1 * omega[0] + s2 * omega[1]))
    return abs(total) ** 2 / (TWO_PI ** 2 * n1 * n2)


def brute_spectral_mean(values: np.ndarray, psi_fn) -> float:
    """Riemann sum over the nonzero Fourier grid with loops and the
    brute-force periodogram."""
    n1, n2 = values.shape
    total = 0.0
    for j1 in range(-((n1 - 1) // 2), n1 // 2 + 1):
        for j2 in range(-((n2 - 1) // 2), n2 // 2 + 1):
            if (j1, j2) == (0, 0):
                continue
            w = (TWO_PI * j1 / n1, TWO_PI * j2 / n2)
            total += psi_fn(w) * brute_periodogram(values, w)
    return TWO_PI ** 2 / (n1 * n2) * total


def brute_negation_table(n1: int, n2: int):
    """Modular negation of every nonzero index, by definition."""
    def wrap(j, n):
        r = (-j) % n
        return r if r <= n // 2 else r - n

    table = {}
    for j1 in range(-((n1 - 1) // 2), n1 // 2 + 1):
        for j2 in range(-((n2 - 1) // 2), n2 // 2 + 1):
            if (j1, j2) != (0, 0):
                table[(j1, j2)] = (wrap(j1, n1), wrap(j2, n2))
    return table


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
