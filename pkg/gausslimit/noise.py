"""
Innovations and the Locally Dependent Input
===========================================

The innovations w_k are independent and zero-mean. The variance of w_k is
E[z^2] * v_k, where z follows one InnovationDistribution and v_k cycles
through a variance schedule. They drive the moving-average input

    u_p = b_0 w_p + b_1 w_{p-1} + ... + b_m w_{p-m}

so u_p and u_q are dependent only when |p - q| <= m. This module samples u,
computes its exact covariances and absolute moments, and classifies the
correlation structure the Stein bounds distinguish between.

Prehistory:
-----------
    "zero"   w_0 = w_{-1} = ... = w_{1-m} = 0, so u_1..u_m are truncated sums
    "random" the pre-sample innovations are drawn like every other w_k
"""

from __future__ import annotations

import enum
import functools
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np
from scipy import integrate, signal, special

from gausslimit.errors import ConfigError, MomentUnavailableError

logger = logging.getLogger(__name__)

Prehistory = Literal["zero", "random"]

# spawn-key heads of the counter-based streams
STREAM_SAMPLE_U = 0
STREAM_SIMULATION = 1
STREAM_BOOTSTRAP = 2

MAX_ENUMERATION = 2**20


def innovation_stream(seed: int, key) -> np.random.Generator:
    """Independent Philox generator for ``(seed, key)``; key is an int or tuple of ints."""
    key = (key,) if isinstance(key, int) else tuple(int(k) for k in key)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


# =============================================================================
# INNOVATION FAMILIES
# =============================================================================

class InnovationKind(str, enum.Enum):
    RADEMACHER = "rademacher"
    CENTERED_UNIFORM = "centered_uniform"
    CENTERED_EXPONENTIAL = "centered_exponential"
    TWO_POINT_MIXTURE = "two_point_mixture"


@dataclass(frozen=True)
class InnovationDistribution:
    """A zero-mean innovation law with closed-form moments."""

    kind: InnovationKind = InnovationKind.RADEMACHER
    half_width: float = 1.0
    rate: float = 1.0
    values: tuple[float, ...] = ()
    probabilities: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", InnovationKind(self.kind))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        if self.kind is InnovationKind.CENTERED_UNIFORM and not self.half_width > 0:
            raise ConfigError(f"half_width must be positive, got {self.half_width}")
        if self.kind is InnovationKind.CENTERED_EXPONENTIAL and not self.rate > 0:
            raise ConfigError(f"rate must be positive, got {self.rate}")
        if self.kind is InnovationKind.TWO_POINT_MIXTURE:
            self._check_mixture()

    def _check_mixture(self):
        if len(self.values) != 2 or len(self.probabilities) != 2:
            raise ConfigError("two_point_mixture needs exactly two values and two probabilities")
        probs = np.asarray(self.probabilities)
        if np.any(probs <= 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ConfigError("mixture probabilities must be positive and sum to 1")
        values = np.asarray(self.values)
        if not np.all(np.isfinite(values)):
            return  # reported as missing moments when a profile is requested
        if values[0] == values[1]:
            raise ConfigError("mixture values must differ")
        if abs(float(probs @ values)) > 1e-12 * float(np.max(np.abs(values))):
            raise ConfigError("mixture must have zero mean")

    @classmethod
    def rademacher(cls) -> InnovationDistribution:
        return cls(InnovationKind.RADEMACHER)

    @classmethod
    def centered_uniform(cls, half_width: float) -> InnovationDistribution:
        return cls(InnovationKind.CENTERED_UNIFORM, half_width=half_width)

    @classmethod
    def centered_exponential(cls, rate: float) -> InnovationDistribution:
        return cls(InnovationKind.CENTERED_EXPONENTIAL, rate=rate)

    @classmethod
    def two_point_mixture(cls, values, probabilities) -> InnovationDistribution:
        return cls(InnovationKind.TWO_POINT_MIXTURE, values=tuple(values), probabilities=tuple(probabilities))

    @property
    def is_discrete(self) -> bool:
        return self.kind in (InnovationKind.RADEMACHER, InnovationKind.TWO_POINT_MIXTURE)

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Atoms and probabilities of a discrete law."""
        if self.kind is InnovationKind.RADEMACHER:
            return np.array([-1.0, 1.0]), np.array([0.5, 0.5])
        if self.kind is InnovationKind.TWO_POINT_MIXTURE:
            return np.asarray(self.values), np.asarray(self.probabilities)
        raise TypeError(f"{self.kind.value} is not discrete")

    @cached_property
    def moments(self) -> tuple[float, float, float]:
        """(E w^2, E|w|^3, E w^4)."""
        if self.kind is InnovationKind.RADEMACHER:
            return 1.0, 1.0, 1.0
        if self.kind is InnovationKind.CENTERED_UNIFORM:
            h = self.half_width
            return h**2 / 3.0, h**3 / 4.0, h**4 / 5.0
        if self.kind is InnovationKind.CENTERED_EXPONENTIAL:
            lam = self.rate
            return 1.0 / lam**2, (12.0 / math.e - 2.0) / lam**3, 9.0 / lam**4
        values, probs = self.support()
        result = tuple(float(probs @ np.abs(values) ** k) for k in (2, 3, 4))
        if not all(np.isfinite(result)):
            raise MomentUnavailableError("mixture atoms are not finite")
        return result

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind is InnovationKind.RADEMACHER:
            return 2.0 * rng.integers(0, 2, size=size).astype(float) - 1.0
        if self.kind is InnovationKind.CENTERED_UNIFORM:
            return rng.uniform(-self.half_width, self.half_width, size=size)
        if self.kind is InnovationKind.CENTERED_EXPONENTIAL:
            scale = 1.0 / self.rate
            return rng.exponential(scale, size=size) - scale
        values, probs = self.support()
        return rng.choice(values, size=size, p=probs)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is InnovationKind.CENTERED_UNIFORM:
            h = self.half_width
            return np.where(np.abs(x) <= h, 0.5 / h, 0.0)
        if self.kind is InnovationKind.CENTERED_EXPONENTIAL:
            lam = self.rate
            shifted = x + 1.0 / lam
            return np.where(shifted >= 0, lam * np.exp(-lam * np.maximum(shifted, 0.0)), 0.0)
        raise TypeError(f"{self.kind.value} has no density")

    def interval(self) -> tuple[float, float]:
        if self.kind is InnovationKind.CENTERED_UNIFORM:
            return -self.half_width, self.half_width
        if self.kind is InnovationKind.CENTERED_EXPONENTIAL:
            return -1.0 / self.rate, np.inf
        values, _ = self.support()
        return float(values.min()), float(values.max())

    def abs_third_shifted(self, s, c: float) -> np.ndarray:
        """E|s + c w|^3 for an array of shifts s, in closed form."""
        s = np.asarray(s, dtype=float)
        if c == 0.0:
            return np.abs(s) ** 3
        if self.is_discrete:
            values, probs = self.support()
            return np.abs(s[..., None] + c * values) ** 3 @ probs
        if self.kind is InnovationKind.CENTERED_UNIFORM:
            a = abs(c) * self.half_width
            return (_quartic_antiderivative(s + a) - _quartic_antiderivative(s - a)) / (2.0 * a)
        return _exponential_abs_third(s, c, self.rate)


def _quartic_antiderivative(y):
    return y**3 * np.abs(y) / 4.0


def _exponential_abs_third(s: np.ndarray, c: float, rate: float) -> np.ndarray:
    # s + c (X - 1)/rate = A + B X with X ~ Exp(1)
    a = s - c / rate
    b = c / rate
    if b < 0:
        a, b = -a, -b
    full = a**3 + 3 * a**2 * b + 6 * a * b**2 + 6 * b**3
    x0 = np.maximum(-a / b, 0.0)
    partial = np.zeros_like(a)
    for k in range(4):
        # int_0^x0 x^k e^{-x} dx = k! P(k+1, x0)
        partial += math.comb(3, k) * a ** (3 - k) * b**k * math.factorial(k) * special.gammainc(k + 1, x0)
    return np.where(a < 0, full - 2.0 * partial, full)


# =============================================================================
# MOMENTS OF A FINITE WEIGHTED SUM
# =============================================================================

@dataclass(frozen=True)
class SumMoments:
    m2: float
    m3: float
    m4: float
    exact: bool = True


def ma_abs_moments(coeffs, innovation: InnovationDistribution) -> SumMoments:
    """
    Moments of u = sum_j c_j z_j with z_j iid ``innovation``.

    E u^2 and E u^4 are always exact. E|u|^3 is exact by enumeration for
    discrete laws, by quadrature over a closed-form inner expectation for
    continuous laws with at most three terms, and otherwise replaced by
    min(Minkowski, Lyapunov) upper bounds.

    Args:
        coeffs: Weights c_j (zero weights are dropped)
        innovation: Law of each z_j

    Returns:
        SumMoments with ``exact=False`` when the third moment is a bound
    """
    return _ma_abs_moments(tuple(float(c) for c in coeffs if c != 0.0), innovation)


@functools.lru_cache(maxsize=256)
def _ma_abs_moments(coeffs: tuple[float, ...], innovation: InnovationDistribution) -> SumMoments:
    w2, w3, w4 = innovation.moments
    if not coeffs:
        return SumMoments(0.0, 0.0, 0.0)
    c = np.asarray(coeffs)
    c2 = c**2
    m2 = float(c2.sum() * w2)
    cross = (c2.sum() ** 2 - (c2**2).sum()) / 2.0
    m4 = float((c**4).sum() * w4 + 6.0 * cross * w2**2)

    if c.size == 1:
        return SumMoments(m2, float(abs(c[0]) ** 3 * w3), m4)

    if innovation.is_discrete:
        values, probs = innovation.support()
        if values.size ** c.size <= MAX_ENUMERATION:
            sums, weights = np.zeros(1), np.ones(1)
            for cj in c:
                sums = (sums[:, None] + cj * values[None, :]).ravel()
                weights = (weights[:, None] * probs[None, :]).ravel()
            return SumMoments(m2, float(weights @ np.abs(sums) ** 3), m4)
    elif c.size <= 3:
        return SumMoments(m2, _quadrature_abs_third(c, innovation), m4)

    minkowski = float(np.abs(c).sum() ** 3 * w3)
    lyapunov = m4**0.75
    logger.warning(
        "E|u|^3 for %d-term sum replaced by upper bound min(%.6g, %.6g)", c.size, minkowski, lyapunov
    )
    return SumMoments(m2, min(minkowski, lyapunov), m4, exact=False)


def _quadrature_abs_third(c: np.ndarray, innovation: InnovationDistribution) -> float:
    lo, hi = innovation.interval()
    options = dict(epsabs=1e-13, epsrel=1e-11, limit=200)

    def inner(shift: float) -> float:
        # integrate out the second-to-last term against the closed-form last one
        def f(w):
            return float(innovation.abs_third_shifted(shift + c[-2] * w, c[-1])) * float(innovation.pdf(w))

        return integrate.quad(f, lo, hi, **options)[0]

    if c.size == 2:
        return inner(0.0)

    def outer(w):
        return inner(c[0] * w) * float(innovation.pdf(w))

    return integrate.quad(outer, lo, hi, **options)[0]


# =============================================================================
# MOVING-AVERAGE INPUT
# =============================================================================

class CorrelationClass(str, enum.Enum):
    INDEPENDENT = "independent"
    POSITIVELY_CORRELATED = "positively_correlated"
    DECAY = "decay"
    OTHER = "other"


@dataclass(frozen=True)
class MomentProfile:
    s2: float
    s3: float
    s4: float
    s2_lo: float
    s2_hi: float
    sc_lo: float
    sc_hi: float
    decay_a: float
    D: int
    M: int
    correlation: CorrelationClass
    exact: bool = True

    @property
    def is_positively_correlated(self) -> bool:
        """Every neighbour covariance E[u_p u_q], 0 < |p-q| <= M, is positive."""
        return self.M > 0 and self.sc_lo > 0

    def describe(self) -> str:
        if self.correlation is CorrelationClass.DECAY:
            return f"decay(a={self.decay_a:.6g})"
        return self.correlation.value


@dataclass(frozen=True)
class NoiseModel:
    """MA coefficients, innovation law, variance schedule and prehistory."""

    ma_coeffs: tuple[float, ...] = (1.0,)
    innovation: InnovationDistribution = InnovationDistribution()
    variance_schedule: tuple[float, ...] = (1.0,)
    prehistory: Prehistory = "zero"

    def __post_init__(self):
        ma = tuple(float(b) for b in self.ma_coeffs)
        schedule = tuple(float(v) for v in self.variance_schedule)
        if not ma or not any(b != 0.0 for b in ma):
            raise ConfigError("MA coefficients need at least one non-zero entry")
        if not schedule or not all(v > 0 and math.isfinite(v) for v in schedule):
            raise ConfigError("variance_schedule entries must be positive and finite")
        if self.prehistory not in ("zero", "random"):
            raise ConfigError(f"prehistory must be 'zero' or 'random', got {self.prehistory!r}")
        object.__setattr__(self, "ma_coeffs", ma)
        object.__setattr__(self, "variance_schedule", schedule)

    @property
    def m(self) -> int:
        return len(self.ma_coeffs) - 1

    @property
    def period(self) -> int:
        return len(self.variance_schedule)

    @property
    def first_stationary(self) -> int:
        """First input index whose MA sum uses no missing prehistory."""
        return self.m + 1 if self.prehistory == "zero" else 1

    def multiplier(self, k) -> np.ndarray:
        """Variance multiplier v_k of w_k, zero for absent prehistory."""
        k = np.asarray(k, dtype=int)
        v = np.asarray(self.variance_schedule)[np.mod(k - 1, self.period)]
        if self.prehistory == "zero":
            v = np.where(k >= 1, v, 0.0)
        return v

    def variance(self, k) -> np.ndarray:
        """E[w_k^2]."""
        return self.innovation.moments[0] * self.multiplier(k)

    def covariance(self, p, lag: int) -> np.ndarray:
        """E[u_p u_{p+lag}] for an array of indices p."""
        p = np.asarray(p, dtype=int)
        lag = abs(int(lag))
        b = np.asarray(self.ma_coeffs)
        out = np.zeros(p.shape)
        for j in range(self.m + 1 - lag):
            out += b[j] * b[j + lag] * self.variance(p - j)
        return out

    def effective_coeffs(self, p: int) -> np.ndarray:
        """Weights c_j = b_j sqrt(v_{p-j}) of u_p on the base law."""
        j = np.arange(self.m + 1)
        return np.asarray(self.ma_coeffs) * np.sqrt(self.multiplier(p - j))

    def index_moments(self, p: int) -> SumMoments:
        return ma_abs_moments(self.effective_coeffs(p), self.innovation)

    @cached_property
    def profile(self) -> MomentProfile:
        return moment_profile(
            self.ma_coeffs,
            self.innovation,
            variance_schedule=self.variance_schedule,
            prehistory=self.prehistory,
        )


def covariance_u(ma_coeffs, var_w: float, lag: int) -> float:
    """Stationary E[u_t u_{t+lag}] = var_w sum_k b_k b_{k+|lag|}."""
    b = np.asarray(ma_coeffs, dtype=float)
    lag = abs(int(lag))
    if lag >= b.size:
        return 0.0
    return float(var_w * np.dot(b[: b.size - lag], b[lag:]))


def moment_profile(
    ma_coeffs,
    innovation: InnovationDistribution,
    *,
    variance_schedule=(1.0,),
    prehistory: Prehistory = "zero",
) -> MomentProfile:
    """
    Moment envelopes and correlation class of u.

    Second moments and covariances are taken over one full period of
    stationary indices. Third and fourth moments are the maxima over every
    index, truncated head included.

    Classification, first match wins:
        independent    no non-zero covariance between distinct indices
        decay(a)       0 < a < 1/(2M), the largest threshold any system admits
        positively_correlated   every neighbour covariance is positive
        other
    """
    noise = NoiseModel(tuple(ma_coeffs), innovation, tuple(variance_schedule), prehistory)
    m = noise.m
    stationary = noise.first_stationary + np.arange(noise.period)

    variances = noise.covariance(stationary, 0)
    s2_lo, s2_hi = float(variances.min()), float(variances.max())

    moments = [noise.index_moments(p) for p in range(1, stationary[-1] + 1)]
    s3 = max(mo.m3 for mo in moments)
    s4 = max(mo.m4 for mo in moments)
    if not math.isfinite(s4):
        raise MomentUnavailableError()

    if m == 0:
        sc_lo = sc_hi = decay_a = 0.0
    else:
        covs = np.array([noise.covariance(stationary, lag) for lag in range(1, m + 1)])
        sc_lo, sc_hi = float(covs.min()), float(covs.max())
        decay_a = float(np.abs(covs).max() / s2_lo)

    if decay_a == 0.0:
        correlation = CorrelationClass.INDEPENDENT
    elif decay_a < 1.0 / (2 * m):
        correlation = CorrelationClass.DECAY
    elif sc_lo > 0:
        correlation = CorrelationClass.POSITIVELY_CORRELATED
    else:
        correlation = CorrelationClass.OTHER

    return MomentProfile(
        s2=s2_lo,
        s3=float(s3),
        s4=float(s4),
        s2_lo=s2_lo,
        s2_hi=s2_hi,
        sc_lo=sc_lo,
        sc_hi=sc_hi,
        decay_a=decay_a,
        D=2 * m + 1,
        M=m,
        correlation=correlation,
        exact=all(mo.exact for mo in moments),
    )


# =============================================================================
# SAMPLING
# =============================================================================

def sample_innovations(noise: NoiseModel, rng: np.random.Generator, rows: int, length: int) -> np.ndarray:
    """
    Innovations w_{1-m}..w_length for ``rows`` independent replicates.

    Returns:
        Array of shape (rows, m + length); column c holds w_{c + 1 - m}
    """
    k = np.arange(1 - noise.m, length + 1)
    z = noise.innovation.sample(rng, (rows, k.size))
    return z * np.sqrt(noise.multiplier(k))


def ma_filter(noise: NoiseModel, w: np.ndarray) -> np.ndarray:
    """u_1..u_length from innovations laid out as by sample_innovations."""
    return signal.lfilter(noise.ma_coeffs, [1.0], w, axis=-1)[..., noise.m :]


def sample_u(noise: NoiseModel, length: int, seed: int) -> np.ndarray:
    """u_1..u_length, bitwise reproducible for a given seed."""
    if length < 1:
        raise ConfigError(f"length must be >= 1, got {length}")
    rng = innovation_stream(seed, STREAM_SAMPLE_U)
    return ma_filter(noise, sample_innovations(noise, rng, 1, length))[0]
