"""Poisson emission statistics on ray sinograms.

Counts are drawn from a counter-based stream: the variate for sinogram cell
``i`` is a pure function of ``(seed, i, draw counter)``, so results do not
depend on how the work is scheduled across threads.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels

N_STRONG = 50.0
N_WEAK = 500.0


@dataclass(frozen=True)
class NoiseModel:
    n_level: float
    C_n: float
    seed: int


def calibrate(sino, n_level):
    """``C_n`` such that ``C_n * max(sino) == n_level``."""
    if not n_level > 0:
        raise ValueError("n_level must be positive")
    peak = float(np.max(sino))
    if not peak > 0:
        raise ValueError("cannot calibrate on a sinogram with no positive value")
    return float(n_level) / peak


def sample_counts(sino, C_n, seed):
    """Independent ``Poisson(C_n * sino)`` counts, same shape as ``sino``."""
    sino = np.asarray(sino, dtype=float)
    if np.any(sino < 0):
        raise ValueError("sinogram has negative entries; Poisson intensities must be >= 0")
    if not C_n > 0:
        raise ValueError("C_n must be positive")
    lam = np.ascontiguousarray((C_n * sino).ravel())
    seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    return kernels.poisson_counts(lam, seed).reshape(sino.shape)


def normalize_counts(counts, C_n):
    if not C_n > 0:
        raise ValueError("C_n must be positive")
    return np.asarray(counts, dtype=float) / C_n


def simulate(sino, n_level, seed):
    """Calibrate, sample and normalize; returns ``(estimate, NoiseModel)``."""
    C_n = calibrate(sino, n_level)
    counts = sample_counts(sino, C_n, seed)
    return normalize_counts(counts, C_n), NoiseModel(float(n_level), C_n, int(seed))


def derive_seed(base, *labels):
    """Deterministic 64-bit seed for a named cell of an experiment."""
    words = [int(base) & 0xFFFFFFFF]
    for lab in labels:
        words.extend(str(lab).encode())
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])
