"""
Stein Bounds on the Wasserstein-1 Distance
==========================================

For the normalised output y_t / sigma_t every bound here has the shape

    f(alpha, t) = D^2 s3 N3 / V^{3/2} + 2 D^{3/2} sqrt(s4 N4) / (sqrt(pi) V)

where N3 and N4 bound sum |G|^3 and sum G^4 from above (exact head plus
enveloped tail) and V bounds sigma_t^2 from below. The three cases differ
in V and in the dependency degree D:

    independent   D = 1,      V = exact head + s2 c_lo^2 e^{-2eps} sum i^{2d} e^{-2 alpha i}
    poscorr       D = 2m + 1, V = sigma2_lower_poscorr
    decay         D = 2m + 1, V = sigma2_lower_decay (needs a < delta C)

prop1_bound is the underlying inequality evaluated with exact per-index
moments and the exact sigma_t, used as a sanity ceiling for the others.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from gausslimit.errors import (
    ConfigError,
    DegenerateOutputError,
    InadmissibleDecayError,
    PreconditionError,
)
from gausslimit.lti_core import ImpulseResponse
from gausslimit.noise import CorrelationClass, NoiseModel
from gausslimit.variance_engine import (
    AlphaMode,
    _check_horizon,
    effective_alpha,
    exp_weights,
    head_constant,
    impulse_values,
    sigma2_exact,
    sigma2_lower_decay,
    sigma2_lower_poscorr,
)

logger = logging.getLogger(__name__)

SQRT_PI = math.sqrt(math.pi)
CASES = ("independent", "positively_correlated", "decay")
CASE_ALIASES = {"poscorr": "positively_correlated"}


@dataclass(frozen=True)
class BoundReport:
    case: str
    t: int
    alpha: float
    d: int
    D: int
    M: int
    term1: float
    term2: float
    sigma2_exact: float
    sigma2_lower: float
    prop1: float | None = None

    @property
    def f(self) -> float:
        return self.term1 + self.term2

    def as_row(self) -> dict:
        return {
            "case": self.case,
            "t": self.t,
            "alpha": self.alpha,
            "term1": self.term1,
            "term2": self.term2,
            "f": self.f,
            "sigma2": self.sigma2_exact,
        }


# =============================================================================
# EXACT-MOMENT BOUND
# =============================================================================

def _index_moments(noise: NoiseModel, t: int) -> tuple[np.ndarray, np.ndarray]:
    """E|u_p|^3 and E u_p^4 for p = 1..t, reusing one period of stationary indices."""
    first, period = noise.first_stationary, noise.period
    p = np.arange(1, t + 1)
    rep = np.where(p < first, p, first + (p - first) % period)
    table = {int(q): noise.index_moments(int(q)) for q in np.unique(rep)}
    m3 = np.array([table[int(q)].m3 for q in rep])
    m4 = np.array([table[int(q)].m4 for q in rep])
    return m3, m4


def dependency_degree(noise: NoiseModel) -> int:
    profile = noise.profile
    return 1 if profile.correlation is CorrelationClass.INDEPENDENT else profile.D


def prop1_bound(g, noise: NoiseModel, t: int, sigma2: float | None = None) -> float:
    """
    D^2/sigma^3 sum E|u_i|^3 |G_{t-i}|^3 + 2 D^{3/2}/(sqrt(pi) sigma^2) sqrt(sum E u_i^4 G_{t-i}^4)

    Args:
        g: Impulse response (array or ImpulseResponse)
        noise: Input model
        t: Output index
        sigma2: Var(y_t); computed exactly when omitted

    Returns:
        The bound on W1(y_t / sigma_t, N(0,1))
    """
    g = impulse_values(g)
    _check_horizon(g, t)
    if sigma2 is None:
        sigma2 = sigma2_exact(g, noise, t)
    if sigma2 <= 0:
        raise DegenerateOutputError(t)

    D = dependency_degree(noise)
    weights = g[:t][::-1]  # G_{t-p} for p = 1..t
    m3, m4 = _index_moments(noise, t)
    term1 = D**2 * float(np.abs(weights) ** 3 @ m3) / sigma2**1.5
    term2 = 2 * D**1.5 * math.sqrt(float(weights**4 @ m4)) / (SQRT_PI * sigma2)
    return term1 + term2


# =============================================================================
# ENVELOPE BOUNDS
# =============================================================================

def _numerators(ir: ImpulseResponse, t: int, start: int, alpha: float, alpha_mode: AlphaMode):
    """Upper bounds on sum_{j<t} |G_j|^3 and sum_{j<t} G_j^4."""
    g = ir.g
    env = ir.envelope
    head = g[: min(start, t)]
    n3 = float(np.sum(np.abs(head) ** 3))
    n4 = float(np.sum(head**4))
    if env is not None and start <= t - 1:
        i = np.arange(start, t, dtype=float)
        n3 += env.c_hi**3 * math.exp(3 * env.eps) * float(
            np.sum(i ** (3 * env.d) * exp_weights(i, 3, alpha, alpha_mode, upper=True))
        )
        n4 += env.c_hi**4 * math.exp(4 * env.eps) * float(
            np.sum(i ** (4 * env.d) * exp_weights(i, 4, alpha, alpha_mode, upper=True))
        )
    return n3, n4


def _assemble(case, ir, noise, t, D, start, lower, alpha_mode) -> BoundReport:
    if lower <= 0:
        raise PreconditionError(f"variance lower bound {lower:.6g} is not positive at t={t}")
    profile = noise.profile
    env = ir.envelope
    alpha = effective_alpha(env, alpha_mode) if env is not None else float("inf")
    n3, n4 = _numerators(ir, t, start, alpha, alpha_mode)
    term1 = D**2 * profile.s3 * n3 / lower**1.5
    term2 = 2 * D**1.5 * math.sqrt(profile.s4 * n4) / (SQRT_PI * lower)
    logger.debug("%s bound t=%d: term1=%.6g term2=%.6g lower=%.6g", case, t, term1, term2, lower)
    return BoundReport(
        case=case,
        t=t,
        alpha=alpha,
        d=env.d if env is not None else 0,
        D=D,
        M=profile.M,
        term1=term1,
        term2=term2,
        sigma2_exact=sigma2_exact(ir, noise, t),
        sigma2_lower=lower,
    )


def bound_independent(
    ir: ImpulseResponse, noise: NoiseModel, t: int, *, alpha_mode: AlphaMode = "literal"
) -> BoundReport:
    """A + B for mutually independent inputs."""
    _check_horizon(ir.g, t)
    profile = noise.profile
    if profile.correlation is not CorrelationClass.INDEPENDENT:
        raise PreconditionError(f"the independent-input bound requires independent inputs, got {profile.describe()}")
    env = ir.envelope
    start = env.t_eps if env is not None else t
    c, lo, hi = head_constant(ir, noise, t, start)
    lower = c
    if env is not None and lo <= hi:
        alpha = effective_alpha(env, alpha_mode)
        i = np.arange(lo, hi + 1, dtype=float)
        lower += profile.s2 * env.c_lo**2 * math.exp(-2 * env.eps) * float(
            np.sum(i ** (2 * env.d) * exp_weights(i, 2, alpha, alpha_mode, upper=False))
        )
    return _assemble("independent", ir, noise, t, 1, start, lower, alpha_mode)


def bound_poscorr(
    ir: ImpulseResponse, noise: NoiseModel, t: int, *, alpha_mode: AlphaMode = "literal"
) -> BoundReport:
    """P + Q for positively correlated m-dependent inputs."""
    _check_horizon(ir.g, t)
    profile = noise.profile
    lower = sigma2_lower_poscorr(ir, noise, t, alpha_mode=alpha_mode)
    env = ir.envelope
    if env is None:
        start = t
    else:
        start = env.start if profile.M > 0 else env.t_eps
    return _assemble("positively_correlated", ir, noise, t, dependency_degree(noise), start, lower, alpha_mode)


def bound_decay(
    ir: ImpulseResponse, noise: NoiseModel, t: int, *, alpha_mode: AlphaMode = "literal"
) -> BoundReport:
    """Bound for inputs with correlation decay a below the admissible threshold."""
    _check_horizon(ir.g, t)
    profile = noise.profile
    result = sigma2_lower_decay(ir, noise, t, alpha_mode=alpha_mode)
    if not result.admissible:
        raise InadmissibleDecayError(profile.decay_a, result.threshold)
    env = ir.envelope
    start = env.t_eps if env is not None else t
    return _assemble("decay", ir, noise, t, dependency_degree(noise), start, result.bound, alpha_mode)


_BY_CASE = {
    "independent": bound_independent,
    "positively_correlated": bound_poscorr,
    "decay": bound_decay,
}

_AUTO = {
    CorrelationClass.INDEPENDENT: "independent",
    CorrelationClass.POSITIVELY_CORRELATED: "positively_correlated",
    CorrelationClass.DECAY: "decay",
}


def resolve_case(noise: NoiseModel, case: str = "auto") -> str:
    case = CASE_ALIASES.get(case, case)
    if case != "auto":
        if case not in _BY_CASE:
            raise ConfigError(f"case must be 'auto' or one of {CASES}, got {case!r}")
        return case
    correlation = noise.profile.correlation
    if correlation not in _AUTO:
        raise PreconditionError(f"no bound case covers correlation class {correlation.value!r}")
    return _AUTO[correlation]


def assemble_bound(
    ir: ImpulseResponse,
    noise: NoiseModel,
    t: int,
    case: str = "auto",
    *,
    alpha_mode: AlphaMode = "literal",
) -> BoundReport:
    """Dispatch to the case matching the input correlation (or the one named)."""
    report = _BY_CASE[resolve_case(noise, case)](ir, noise, t, alpha_mode=alpha_mode)
    prop1 = prop1_bound(ir, noise, t, report.sigma2_exact) if report.sigma2_exact > 0 else None
    return BoundReport(**{**report.__dict__, "prop1": prop1})


def halving_ratio(ir: ImpulseResponse, noise: NoiseModel, t: int, case: str = "auto") -> float:
    """f(0, 2t) / f(0, t); tends to 1/sqrt(2) when the bound decays like t^{-1/2}."""
    first = assemble_bound(ir, noise, t, case, alpha_mode="edge")
    second = assemble_bound(ir, noise, 2 * t, case, alpha_mode="edge")
    return second.f / first.f
