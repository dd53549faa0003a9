"""Exact output variance and its lower bounds.

sigma_t^2 = Var(y_t) is computed exactly from the composite kernel H = G * b.
The lower bounds split the double sum sum_{i,j} G_i G_j E[u_{t-i} u_{t-j}]
(lags i, j in [0, t-1]) into an exact head and an enveloped tail. The head
holds every pair touching a lag below the envelope start, or one of the m
oldest inputs whose MA sums are truncated under zero prehistory. The tail
pairs are bounded through the dominant-pole envelope.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np

from gausslimit.errors import ConfigError, PreconditionError
from gausslimit.lti_core import Envelope, ImpulseResponse, composite_kernel
from gausslimit.noise import NoiseModel

logger = logging.getLogger(__name__)

AlphaMode = Literal["literal", "edge", "taylor"]
ALPHA_MODES = ("literal", "edge", "taylor")


def impulse_values(g) -> np.ndarray:
    return np.asarray(g.g if isinstance(g, ImpulseResponse) else g, dtype=float)


def _check_horizon(g: np.ndarray, t: int):
    if t < 1:
        raise ConfigError(f"t must be >= 1, got {t}")
    if g.size < t:
        raise ConfigError(f"t={t} exceeds the impulse response horizon {g.size - 1}")


def exp_weights(i, k: int, alpha: float, mode: AlphaMode, *, upper: bool) -> np.ndarray:
    """
    Stand-in for e^{-k alpha i} under an alpha mode.

    Args:
        i: Lag indices
        k: Power in the exponent
        alpha: Decay rate of the dominant mode
        mode: "literal" (exact), "edge" (alpha = 0) or "taylor"
        upper: Whether the caller needs an upper or a lower bound on the exponential

    Returns:
        Weights; in "taylor" mode 1 - x + x^2/2 (upper) or max(0, 1 - x) (lower)
    """
    x = k * alpha * np.asarray(i, dtype=float)
    if mode == "literal":
        return np.exp(-x)
    if mode == "edge":
        return np.ones_like(x)
    if mode == "taylor":
        return 1.0 - x + 0.5 * x**2 if upper else np.maximum(0.0, 1.0 - x)
    raise ConfigError(f"alpha_mode must be one of {ALPHA_MODES}, got {mode!r}")


def effective_alpha(envelope: Envelope, mode: AlphaMode) -> float:
    return 0.0 if mode == "edge" else envelope.alpha


# =============================================================================
# EXACT VARIANCE
# =============================================================================

def sigma2_exact(g, noise: NoiseModel, t: int) -> float:
    """
    Var(y_t) = sum_k (coefficient of w_k in y_t)^2 E[w_k^2].

    For k >= 1 the coefficient is H_{t-k}; pre-sample innovations (random
    prehistory only) enter through the part of the MA window reaching back
    before time 1.
    """
    g = impulse_values(g)
    _check_horizon(g, t)
    h = composite_kernel(g[:t], noise.ma_coeffs)
    total = float(h[::-1] ** 2 @ noise.variance(np.arange(1, t + 1)))

    if noise.prehistory == "random":
        b = noise.ma_coeffs
        for k in range(1 - noise.m, 1):
            coef = sum(b[j] * g[t - k - j] for j in range(1 - k, min(noise.m, t - k) + 1))
            total += coef**2 * float(noise.variance(k))
    return total


def _band_sum(g: np.ndarray, noise: NoiseModel, t: int, lo: int, hi: int) -> float:
    """sum G_i G_j E[u_{t-i} u_{t-j}] over lags i, j in [lo, hi]."""
    lo = max(lo, 0)
    if lo > hi:
        return 0.0
    i = np.arange(lo, hi + 1)
    total = float(g[i] ** 2 @ noise.covariance(t - i, 0))
    for lag in range(1, noise.m + 1):
        i = np.arange(lo, hi - lag + 1)
        if i.size:
            total += 2.0 * float((g[i] * g[i + lag]) @ noise.covariance(t - i - lag, lag))
    return total


def sigma2_double_sum(g, noise: NoiseModel, t: int) -> float:
    """Var(y_t) through the band-limited double sum over input covariances."""
    g = impulse_values(g)
    _check_horizon(g, t)
    return _band_sum(g, noise, t, 0, t - 1)


def head_constant(g, noise: NoiseModel, t: int, start: int) -> tuple[float, int, int]:
    """
    Exact head c(start) and the lag range of the enveloped tail.

    Returns:
        (c, lo, hi): c sums every pair outside the tail square [lo, hi]^2,
        lo = start and hi = t - 1 - (m if zero prehistory else 0)
    """
    g = impulse_values(g)
    _check_horizon(g, t)
    hi = t - 1 - (noise.m if noise.prehistory == "zero" else 0)
    lo = max(start, 0)
    if lo > hi:
        return _band_sum(g, noise, t, 0, t - 1), lo, hi
    head = _band_sum(g, noise, t, 0, t - 1) - _band_sum(g, noise, t, lo, hi)
    return head, lo, hi


# =============================================================================
# LOWER BOUNDS
# =============================================================================

def sigma2_lower_poscorr(
    ir: ImpulseResponse,
    noise: NoiseModel,
    t: int,
    *,
    alpha_mode: AlphaMode = "literal",
) -> float:
    """
    sigma_t^2 >= c(T') + s_c e^{-2 eps - M alpha} c_lo^2 sum_{i=T'} i^d (i-M)_+^d e^{-2 alpha i}

    with s_c = min(s2_lo, sc_lo) and T' = max(T_eps, T_sign). Valid when every
    neighbour covariance is positive and the dominant pole is real and positive.
    """
    profile = noise.profile
    env = ir.envelope
    M = profile.M
    if M > 0 and not profile.is_positively_correlated:
        raise PreconditionError("the positive-correlation bound requires positively correlated inputs")
    if env is None:
        return sigma2_exact(ir, noise, t)
    if M > 0 and not (env.dominant_pole.imag == 0 and env.dominant_pole.real > 0):
        raise PreconditionError(
            f"the positive-correlation bound requires a real positive dominant pole, got {env.dominant_pole:.6g}"
        )

    start = env.start if M > 0 else env.t_eps
    c, lo, hi = head_constant(ir, noise, t, start)
    if lo > hi:
        return c

    alpha = effective_alpha(env, alpha_mode)
    s_c = min(profile.s2_lo, profile.sc_lo) if M > 0 else profile.s2_lo
    i = np.arange(lo, hi + 1, dtype=float)
    shape = i**env.d * np.maximum(i - M, 0.0) ** env.d * exp_weights(i, 2, alpha, alpha_mode, upper=False)
    return c + s_c * np.exp(-2 * env.eps - M * alpha) * env.c_lo**2 * float(shape.sum())


@dataclass(frozen=True)
class DecayLowerBound:
    bound: float
    admissible: bool
    threshold: float


def decay_threshold(env: Envelope, M: int, alpha: float) -> float:
    """delta * C: the largest admissible correlation decay a."""
    if M == 0:
        return float("inf")
    delta = (env.t_eps / (env.t_eps + M)) ** env.d
    if env.c_hi == 0.0:
        return float("inf")
    C = env.c_lo**2 * np.exp(-2 * env.eps) / (env.c_hi**2 * np.exp(2 * env.eps) * 2 * M * np.exp(alpha * M))
    return float(delta * C)


def sigma2_lower_decay(
    ir: ImpulseResponse,
    noise: NoiseModel,
    t: int,
    *,
    alpha_mode: AlphaMode = "literal",
) -> DecayLowerBound:
    """
    sigma_t^2 >= c(T_eps) + sum_i s2_lo (c_lo^2 e^{-2eps} i^{2d}
                 - c_hi^2 e^{2eps} a 2M e^{alpha M} i^d (i+M)^d) e^{-2 alpha i}

    together with whether a < delta C holds.
    """
    profile = noise.profile
    env = ir.envelope
    if env is None:
        return DecayLowerBound(sigma2_exact(ir, noise, t), True, float("inf"))

    M, a = profile.M, profile.decay_a
    alpha = effective_alpha(env, alpha_mode)
    threshold = decay_threshold(env, M, alpha)
    admissible = a == 0.0 or a < threshold

    c, lo, hi = head_constant(ir, noise, t, env.t_eps)
    if lo > hi:
        return DecayLowerBound(c, admissible, threshold)

    i = np.arange(lo, hi + 1, dtype=float)
    diag = env.c_lo**2 * np.exp(-2 * env.eps) * i ** (2 * env.d)
    cross = env.c_hi**2 * np.exp(2 * env.eps) * a * 2 * M * np.exp(alpha * M) * i**env.d * (i + M) ** env.d
    terms = diag * exp_weights(i, 2, alpha, alpha_mode, upper=False) - cross * exp_weights(
        i, 2, alpha, alpha_mode, upper=True
    )
    return DecayLowerBound(c + profile.s2_lo * float(terms.sum()), admissible, threshold)


# =============================================================================
# REPORTS
# =============================================================================

@dataclass(frozen=True)
class VarianceReport:
    t: int
    sigma2_exact: float
    sigma2_lower_poscorr: float | None
    sigma2_lower_decay: float | None
    decay_admissible: bool | None
    decay_threshold: float | None

    def as_row(self) -> dict:
        return asdict(self)


def variance_report(ir: ImpulseResponse, noise: NoiseModel, t: int) -> VarianceReport:
    """All three variance quantities at t; a bound whose case does not apply is None."""
    exact = sigma2_exact(ir, noise, t)
    try:
        poscorr = sigma2_lower_poscorr(ir, noise, t)
    except PreconditionError as exc:
        logger.debug("no positive-correlation bound at t=%d: %s", t, exc)
        poscorr = None
    decay = sigma2_lower_decay(ir, noise, t)
    return VarianceReport(
        t=t,
        sigma2_exact=exact,
        sigma2_lower_poscorr=poscorr,
        sigma2_lower_decay=decay.bound,
        decay_admissible=bool(decay.admissible),
        decay_threshold=float(decay.threshold),
    )
