"""
Wasserstein-1 Distance to the Standard Normal
=============================================

In one dimension W1(P, N(0,1)) = integral |F_P(x) - Phi(x)| dx. For an
empirical law F_P is a step function, so the integral is evaluated exactly
piece by piece with the antiderivative

    Psi(x) = x Phi(x) + phi(x),   Psi' = Phi

splitting each step at Phi^{-1}(c). Tails are Psi(x_min) and Psi(-x_max).
Estimator error bars come from a nonparametric bootstrap.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import special

from gausslimit.errors import ConfigError, SampleMismatchError
from gausslimit.noise import STREAM_BOOTSTRAP, innovation_stream

logger = logging.getLogger(__name__)

DEFAULT_RESAMPLES = 200
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class EmpiricalSample:
    """Sorted sample with the seed and config hash it was drawn under."""

    values: np.ndarray
    seed: int | None = None
    config_hash: str | None = None

    @classmethod
    def from_values(cls, values, seed: int | None = None, config_hash: str | None = None) -> EmpiricalSample:
        arr = np.sort(np.asarray(values, dtype=float).ravel())
        if arr.size == 0:
            raise ConfigError("empirical sample is empty")
        if not np.all(np.isfinite(arr)):
            raise ConfigError("empirical sample contains non-finite values")
        arr.setflags(write=False)
        return cls(arr, seed, config_hash)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class W1Estimate:
    n: int
    w1: float
    se: float

    def as_row(self) -> dict:
        return {"N": self.n, "w1": self.w1, "se": self.se}


# =============================================================================
# NORMAL HELPERS
# =============================================================================

def std_normal_cdf(x):
    """Phi(x) via erfc, accurate in both tails."""
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


def _psi(x):
    x = np.asarray(x, dtype=float)
    return x * std_normal_cdf(x) + _INV_SQRT_2PI * np.exp(-0.5 * x * x)


# =============================================================================
# DISTANCES
# =============================================================================

def _w1_weighted(x: np.ndarray, weights: np.ndarray) -> float:
    """W1 between sum_k weights_k delta_{x_k} (x sorted, weights summing to 1) and N(0,1)."""
    total = _psi(x[0]) + _psi(-x[-1])
    if x.size == 1:
        return float(total)
    a, b = x[:-1], x[1:]
    c = np.clip(np.cumsum(weights)[:-1], 0.0, 1.0)
    with np.errstate(divide="ignore"):
        q = np.clip(special.ndtri(c), a, b)
    psi_a, psi_b, psi_q = _psi(a), _psi(b), _psi(q)
    pieces = c * (q - a) - (psi_q - psi_a) + (psi_b - psi_q) - c * (b - q)
    return float(total + pieces.sum())


def w1_to_std_normal(sample: EmpiricalSample) -> float:
    """Exact W1 between the empirical law of ``sample`` and N(0,1)."""
    values = sample.values if isinstance(sample, EmpiricalSample) else np.sort(np.asarray(sample, float))
    return _w1_weighted(values, np.full(values.size, 1.0 / values.size))


def w1_two_sample(a: EmpiricalSample, b: EmpiricalSample) -> float:
    """(1/N) sum |a_(i) - b_(i)| for equal-size samples."""
    if a.n != b.n:
        raise SampleMismatchError(a.n, b.n)
    return float(np.mean(np.abs(a.values - b.values)))


def bootstrap_se(
    sample: EmpiricalSample,
    n_resamples: int = DEFAULT_RESAMPLES,
    seed: int = 0,
    key: tuple[int, ...] = (),
    threads: int | None = None,
) -> float:
    """
    Bootstrap standard error of w1_to_std_normal.

    Resample r draws from stream (STREAM_BOOTSTRAP, *key, r), so the result
    does not depend on the number of threads.

    Args:
        sample: Sorted sample
        n_resamples: Number of bootstrap resamples
        seed: Root seed
        key: Extra spawn-key entries separating independent estimates
        threads: Worker threads (None lets the executor decide)

    Returns:
        Sample standard deviation of the resampled distances
    """
    if n_resamples < 2:
        logger.info("bootstrap disabled; standard error reported as 0")
        return 0.0
    n = sample.n

    def one(r: int) -> float:
        rng = innovation_stream(seed, (STREAM_BOOTSTRAP, *key, r))
        counts = np.bincount(rng.integers(0, n, size=n), minlength=n)
        return _w1_weighted(sample.values, counts / n)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        distances = np.fromiter(pool.map(one, range(n_resamples)), dtype=float, count=n_resamples)
    return float(np.std(distances, ddof=1))


def estimate_w1(
    sample: EmpiricalSample,
    n_resamples: int = DEFAULT_RESAMPLES,
    seed: int = 0,
    key: tuple[int, ...] = (),
    threads: int | None = None,
) -> W1Estimate:
    w1 = w1_to_std_normal(sample)
    se = bootstrap_se(sample, n_resamples, seed, key, threads)
    logger.info("W1 estimate N=%d: %.6g (se %.2g)", sample.n, w1, se)
    return W1Estimate(sample.n, w1, se)


# =============================================================================
# SAMPLE FILES
# =============================================================================

def read_sample_file(path) -> EmpiricalSample:
    """One float per line; blank lines and '#' comments are ignored."""
    path = Path(path)
    try:
        values = np.loadtxt(path, dtype=float, comments="#", ndmin=1)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return EmpiricalSample.from_values(values)


def write_sample_file(path, sample: EmpiricalSample):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, sample.values, fmt="%.17g")
