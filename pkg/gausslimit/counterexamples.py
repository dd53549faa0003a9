"""
Systems Whose Outputs Do Not Become Gaussian
============================================

Two edge-of-stability systems driven by Rademacher innovations, each with a
closed form showing that y_t keeps a fixed non-Gaussian law:

    pole -1, u_t = w_t + w_{t-1}:
        y_t = -y_{t-1} + u_t,          y_n = w_n + (-1)^{n+1} w_0

    poles +-i, u_t = w_t + w_{t-2}:
        y_t = -y_{t-2} + u_t,          y_k = w_k + (-1)^{(k-1)/2} w_{-1}   (k odd)
                                       y_k = w_k + (-1)^{k/2+1} w_0        (k even)

Both identities involve the pre-sample innovations, so these systems are
simulated with random prehistory.

For the stable family pole -rho, u_t = w_t + a w_{t-1}, the output variance
converges to ((1 + a^2) - 2 a rho) / (1 - rho^2), which stays bounded as
rho -> 1 when a = 1 (limit 2 / (1 + rho)).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from gausslimit.config import ExperimentConfig, NoiseSection, StudySection, SystemSection
from gausslimit.lti_core import ArmaSpec, impulse_response
from gausslimit.noise import STREAM_SIMULATION, InnovationDistribution, NoiseModel, innovation_stream
from gausslimit.sim_harness import StudyTable, run_convergence_study, simulate_block
from gausslimit.variance_engine import sigma2_exact

logger = logging.getLogger(__name__)

VARIANCE_RHOS = (0.5, 0.9, 0.99)
VARIANCE_HORIZON = 5000


# =============================================================================
# SYSTEMS AND CLOSED FORMS
# =============================================================================

def alternating_system(rho: float = 1.0, a: float = 1.0) -> tuple[ArmaSpec, NoiseModel]:
    """y_t = -rho y_{t-1} + w_t + a w_{t-1} with random prehistory."""
    ma = (1.0, a)
    return ArmaSpec((-rho,), ma), NoiseModel(ma, InnovationDistribution.rademacher(), prehistory="random")


def imaginary_pole_system() -> tuple[ArmaSpec, NoiseModel]:
    """y_t = -y_{t-2} + w_t + w_{t-2} with random prehistory."""
    ma = (1.0, 0.0, 1.0)
    return ArmaSpec((0.0, -1.0), ma), NoiseModel(ma, InnovationDistribution.rademacher(), prehistory="random")


def alternating_closed_form(w: np.ndarray) -> np.ndarray:
    """y_1..y_n from innovations whose column c holds w_c (c = 0..n)."""
    n = np.arange(1, w.shape[-1])
    return w[..., 1:] + (-1.0) ** (n + 1) * w[..., :1]


def imaginary_pole_closed_form(w: np.ndarray) -> np.ndarray:
    """y_1..y_n from innovations whose column c holds w_{c-1} (c = 0..n+1)."""
    k = np.arange(1, w.shape[-1] - 1)
    w_minus1, w_0 = w[..., :1], w[..., 1:2]
    odd = (-1.0) ** ((k - 1) // 2) * w_minus1
    even = (-1.0) ** (k // 2 + 1) * w_0
    return w[..., 2:] + np.where(k % 2 == 1, odd, even)


def variance_limit(rho: float, a: float = 1.0) -> float:
    """lim_t Var(y_t) for pole -rho and u_t = w_t + a w_{t-1}, unit innovations."""
    return ((1.0 + a * a) - 2.0 * a * rho) / (1.0 - rho * rho)


def quoted_variance_form(rho: float, a: float = 1.0) -> float:
    """The form (2 - rho a - a/rho) / (1 - rho^2); negative for rho in (0, 1) at a = 1."""
    return (2.0 - rho * a - a / rho) / (1.0 - rho * rho)


# =============================================================================
# CHECKS
# =============================================================================

@dataclass(frozen=True)
class IdentityCheck:
    name: str
    n_max: int
    replicates: int
    max_abs_error: float

    @property
    def holds(self) -> bool:
        return self.max_abs_error == 0.0

    def as_row(self) -> dict:
        return {**self.__dict__, "holds": self.holds}


@dataclass(frozen=True)
class VarianceLimitRow:
    rho: float
    sigma2_exact: float
    limit: float
    quoted_form: float

    def as_row(self) -> dict:
        return self.__dict__


def check_identity(name: str, n_max: int = 1000, replicates: int = 1000, seed: int = 0) -> IdentityCheck:
    """Simulate the named system and compare y_1..y_n_max with its closed form."""
    if name == "alternating":
        spec, noise = alternating_system()
        closed_form = alternating_closed_form
    elif name == "imaginary_pole":
        spec, noise = imaginary_pole_system()
        closed_form = imaginary_pole_closed_form
    else:
        raise ValueError(f"unknown system {name!r}")
    rng = innovation_stream(seed, (STREAM_SIMULATION, 0))
    w, y = simulate_block(spec, noise, n_max, replicates, rng)
    error = float(np.max(np.abs(y - closed_form(w))))
    logger.info("%s identity over n<=%d, %d replicates: max error %g", name, n_max, replicates, error)
    return IdentityCheck(name, n_max, replicates, error)


def variance_limits(rhos=VARIANCE_RHOS, horizon: int = VARIANCE_HORIZON) -> list[VarianceLimitRow]:
    rows = []
    for rho in rhos:
        spec, noise = alternating_system(rho)
        ir = impulse_response(spec, horizon)
        rows.append(
            VarianceLimitRow(
                rho=rho,
                sigma2_exact=sigma2_exact(ir, noise, horizon),
                limit=variance_limit(rho),
                quoted_form=quoted_variance_form(rho),
            )
        )
    return rows


def study_config(
    name: str,
    t_grid=(16, 32, 64, 128, 256, 512),
    replicates: int = 10_000,
    seed: int = 0,
    bootstrap: int = 200,
) -> ExperimentConfig:
    """Convergence-study config for one of the two systems."""
    if name == "alternating":
        system = SystemSection(ar=(-1.0,), ma=(1.0, 1.0), edge_of_stability=True)
    elif name == "imaginary_pole":
        system = SystemSection(ar=(0.0, -1.0), ma=(1.0, 0.0, 1.0), edge_of_stability=True)
    else:
        raise ValueError(f"unknown system {name!r}")
    return ExperimentConfig(
        system=system,
        noise=NoiseSection(prehistory="random", seed=seed),
        study=StudySection(t_grid=tuple(t_grid), replicates=replicates, bootstrap=bootstrap),
    )


@dataclass(frozen=True)
class CounterexampleReport:
    identities: tuple[IdentityCheck, ...]
    variance: tuple[VarianceLimitRow, ...]
    studies: dict[str, StudyTable]

    @property
    def ok(self) -> bool:
        return all(check.holds for check in self.identities)


def run_counterexamples(
    *,
    n_max: int = 1000,
    identity_replicates: int = 1000,
    t_grid=(16, 32, 64, 128, 256, 512),
    replicates: int = 10_000,
    seed: int = 0,
    threads: int | None = None,
) -> CounterexampleReport:
    names = ("alternating", "imaginary_pole")
    identities = tuple(check_identity(name, n_max, identity_replicates, seed) for name in names)
    studies = {
        name: run_convergence_study(study_config(name, t_grid, replicates, seed), threads=threads)
        for name in names
    }
    return CounterexampleReport(identities, tuple(variance_limits()), studies)
