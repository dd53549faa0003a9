"""
Monte-Carlo Harness
===================

Simulates populations of normalised outputs y_t / sigma_t, compares their
empirical W1 distance to N(0,1) against the Stein bounds, and fits
convergence rates on log-log axes.

Replicates are simulated in fixed-size blocks. Block b draws from stream
(STREAM_SIMULATION, b) and blocks are concatenated in order, so the output
never depends on the number of worker threads.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import signal

from gausslimit.config import ExperimentConfig
from gausslimit.errors import DegenerateOutputError, NoiseFloorError, PreconditionError
from gausslimit.lti_core import ArmaSpec, impulse_response
from gausslimit.noise import (
    STREAM_SIMULATION,
    NoiseModel,
    innovation_stream,
    ma_filter,
    sample_innovations,
)
from gausslimit.stein_bound import assemble_bound, prop1_bound
from gausslimit.variance_engine import VarianceReport, sigma2_exact, variance_report
from gausslimit.wasserstein import EmpiricalSample, estimate_w1

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 4096
NON_VANISHING_SLOPE = -0.1
MAX_DEFAULT_WORKERS = 4


# =============================================================================
# SIMULATION
# =============================================================================

def simulate_block(
    spec: ArmaSpec,
    noise: NoiseModel,
    horizon: int,
    rows: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Simulate ``rows`` independent paths up to ``horizon``.

    Returns:
        (w, y): innovations of shape (rows, m + horizon) with column c holding
        w_{c+1-m}, and outputs of shape (rows, horizon) holding y_1..y_horizon
    """
    w = sample_innovations(noise, rng, rows, horizon)
    y = signal.lfilter([1.0], spec.ar_polynomial, ma_filter(noise, w), axis=-1)
    return w, y


def worker_count(threads: int | None) -> int:
    """Explicit thread count, else the CPU count capped at MAX_DEFAULT_WORKERS.

    Each worker holds one block of innovations and outputs in memory.
    """
    if threads is not None:
        return threads
    return max(1, min(MAX_DEFAULT_WORKERS, os.cpu_count() or 1))


def simulate_outputs(
    spec: ArmaSpec,
    noise: NoiseModel,
    t_grid,
    replicates: int,
    seed: int,
    *,
    block_size: int = DEFAULT_BLOCK_SIZE,
    threads: int | None = None,
) -> np.ndarray:
    """
    y_t for every t in ``t_grid`` across ``replicates`` independent paths.

    Returns:
        Array of shape (replicates, len(t_grid))
    """
    t_grid = np.asarray(t_grid, dtype=int)
    horizon = int(t_grid.max())
    columns = t_grid - 1
    n_blocks = math.ceil(replicates / block_size)

    def run(block: int) -> np.ndarray:
        rows = min(block_size, replicates - block * block_size)
        rng = innovation_stream(seed, (STREAM_SIMULATION, block))
        y = simulate_block(spec, noise, horizon, rows, rng)[1]
        return y[:, columns]

    logger.info("simulating %d replicates to t=%d in %d blocks", replicates, horizon, n_blocks)
    with ThreadPoolExecutor(max_workers=worker_count(threads)) as pool:
        parts = list(pool.map(run, range(n_blocks)))
    return np.vstack(parts)


def simulate_normalized_outputs(
    config: ExperimentConfig, t: int, *, threads: int | None = None
) -> EmpiricalSample:
    """N replicates of y_t / sigma_t under ``config``."""
    spec, noise = config.arma_spec(), config.noise_model()
    sigma2 = sigma2_exact(_impulse(config, t), noise, t)
    if sigma2 <= 0:
        raise DegenerateOutputError(t)
    y = simulate_outputs(
        spec,
        noise,
        [t],
        config.study.replicates,
        config.seed,
        block_size=config.study.block_size,
        threads=threads,
    )
    return EmpiricalSample.from_values(y[:, 0] / math.sqrt(sigma2), config.seed, config.config_hash())


def _impulse(config: ExperimentConfig, horizon: int):
    return impulse_response(
        config.arma_spec(),
        horizon,
        config.study.eps,
        edge_of_stability=config.system.edge_of_stability,
    )


def variance_table(config: ExperimentConfig) -> list[VarianceReport]:
    """Exact variance and both lower bounds at every t of the study grid."""
    ir = _impulse(config, max(config.study.t_grid))
    noise = config.noise_model()
    return [variance_report(ir, noise, t) for t in config.study.t_grid]


# =============================================================================
# RATE FITS
# =============================================================================

@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def fit_rate(rows) -> RateFit:
    """
    Least squares of log w1 on log t over rows above the noise floor.

    Args:
        rows: StudyRow objects or (t, w1_hat, se) tuples

    Returns:
        RateFit over the rows with w1_hat > 3 se
    """
    data = [(r.t, r.w1_hat, r.se) if isinstance(r, StudyRow) else tuple(r) for r in rows]
    usable = [(t, w) for t, w, se in data if w > 0 and w > 3 * se]
    if len(usable) < len(data):
        logger.warning("%d of %d rows below the noise floor excluded from the rate fit", len(data) - len(usable), len(data))
    if len(usable) < 3:
        raise NoiseFloorError(len(usable))

    x = np.log([t for t, _ in usable])
    y = np.log([w for _, w in usable])
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(residual**2)) / ss_tot
    return RateFit(float(slope), float(intercept), min(max(r_squared, 0.0), 1.0), len(usable))


# =============================================================================
# CONVERGENCE STUDIES
# =============================================================================

@dataclass(frozen=True)
class StudyRow:
    t: int
    w1_hat: float
    se: float
    bound_f: float
    sigma2: float
    case: str
    prop1: float

    def as_row(self) -> dict:
        return self.__dict__


@dataclass(frozen=True)
class StudyTable:
    rows: tuple[StudyRow, ...]
    alpha_mode: str
    config_hash: str

    def dominance_failures(self) -> list[StudyRow]:
        """Rows where w1_hat exceeds prop1 or f(alpha, t) by more than 3 se.

        Bounds evaluated outside the literal alpha are not bounds for the
        simulated system, so only prop1 is checked for them.
        """
        failures = []
        for row in self.rows:
            limits = [row.prop1]
            if self.alpha_mode == "literal":
                limits.append(row.bound_f)
            if any(np.isfinite(f) and row.w1_hat > f + 3 * row.se for f in limits):
                failures.append(row)
        return failures

    def rate(self) -> RateFit | None:
        try:
            return fit_rate(self.rows)
        except NoiseFloorError as exc:
            logger.info("no rate fit: %s", exc)
            return None

    @property
    def non_vanishing(self) -> bool:
        """The distance does not decay: fitted slope above NON_VANISHING_SLOPE."""
        rate = self.rate()
        return rate is not None and rate.slope > NON_VANISHING_SLOPE


def run_convergence_study(config: ExperimentConfig, *, threads: int | None = None) -> StudyTable:
    """One row (t, w1_hat, se, f(alpha, t), sigma2, case) per t in the grid."""
    study = config.study
    spec, noise = config.arma_spec(), config.noise_model()
    ir = _impulse(config, max(study.t_grid))
    outputs = simulate_outputs(
        spec,
        noise,
        study.t_grid,
        study.replicates,
        config.seed,
        block_size=study.block_size,
        threads=threads,
    )
    digest = config.config_hash()

    rows = []
    for column, t in enumerate(study.t_grid):
        sigma2 = sigma2_exact(ir, noise, t)
        if sigma2 <= 0:
            raise DegenerateOutputError(t)
        sample = EmpiricalSample.from_values(outputs[:, column] / math.sqrt(sigma2), config.seed, digest)
        estimate = estimate_w1(sample, study.bootstrap, config.seed, key=(t,), threads=threads)

        try:
            report = assemble_bound(ir, noise, t, study.case, alpha_mode=study.alpha_mode)
            bound_f, case = report.f, report.case
        except PreconditionError as exc:
            logger.warning("t=%d: no bound (%s)", t, exc)
            bound_f, case = float("nan"), "none"

        rows.append(
            StudyRow(
                t=t,
                w1_hat=estimate.w1,
                se=estimate.se,
                bound_f=bound_f,
                sigma2=sigma2,
                case=case,
                prop1=prop1_bound(ir, noise, t, sigma2),
            )
        )
        logger.info("t=%d w1_hat=%.5f se=%.2g bound=%.5g", t, estimate.w1, estimate.se, bound_f)

    return StudyTable(tuple(rows), study.alpha_mode, digest)
