"""
ARMA Systems, Poles and Impulse Responses
=========================================

An ARMA system

    y_t = a_1 y_{t-1} + ... + a_n y_{t-n} + b_0 w_t + ... + b_m w_{t-m}

is split into its moving-average input u_t = sum_j b_j w_{t-j} and the
autoregressive filter u -> y. Everything in this module concerns the filter:
its characteristic polynomial z^n - a_1 z^{n-1} - ... - a_n, the roots of that
polynomial, and the impulse response G_j in y_t = sum_i G_{t-i} u_i.

The impulse response is computed twice:
    - recursively (scipy.signal.lfilter on a unit impulse), the reference values
    - modally, G_j = sum_k c_k(j) r_k^j, from the poles alone

The modal form feeds the dominant-pole envelope

    c_lo e^{-eps} i^d e^{-alpha i} <= |G_i| <= c_hi e^{eps} i^d e^{-alpha i},  i >= T_eps

that the Stein bounds are built on.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, signal

from gausslimit.errors import (
    ConfigError,
    DominanceError,
    GaussLimitError,
    RootFindingError,
    UnstableSystemError,
)

logger = logging.getLogger(__name__)


# =============================================================================
# TOLERANCES
# =============================================================================

MAX_ITERATIONS = 200
STEP_TOLERANCE = 1e-13
CLUSTER_TOLERANCE = 1e-6
CONFLUENCE_RADIUS = 0.02
REFINEMENT_WINDOW = 64
REFINEMENT_CONDITION = 1e6
UNIT_CIRCLE_TOLERANCE = 1e-9
TIE_TOLERANCE = 1e-9
RECONSTRUCTION_TOLERANCE = 1e-9
DEFAULT_EPS = 0.01


# =============================================================================
# SYSTEM DESCRIPTION
# =============================================================================

@dataclass(frozen=True)
class ArmaSpec:
    """AR coefficients a_1..a_n and MA coefficients b_0..b_m of one system."""

    ar_coeffs: tuple[float, ...] = ()
    ma_coeffs: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        ar = tuple(float(a) for a in self.ar_coeffs)
        ma = tuple(float(b) for b in self.ma_coeffs)
        if not np.all(np.isfinite(ar + ma)):
            raise ConfigError("ARMA coefficients must be finite")
        if not ma or not any(b != 0.0 for b in ma):
            raise ConfigError("MA coefficients need at least one non-zero entry")
        object.__setattr__(self, "ar_coeffs", ar)
        object.__setattr__(self, "ma_coeffs", ma)

    @property
    def n(self) -> int:
        return len(self.ar_coeffs)

    @property
    def m(self) -> int:
        return len(self.ma_coeffs) - 1

    @property
    def ar_polynomial(self) -> np.ndarray:
        """Denominator [1, -a_1, ..., -a_n] in lfilter convention."""
        return np.concatenate(([1.0], -np.asarray(self.ar_coeffs, dtype=float)))


def char_poly(spec: ArmaSpec) -> np.ndarray:
    """Coefficients of z^n - a_1 z^{n-1} - ... - a_n, highest power first."""
    if spec.n == 0:
        raise ConfigError("no characteristic polynomial: the AR part is empty")
    return spec.ar_polynomial


# =============================================================================
# POLES
# =============================================================================

@dataclass(frozen=True)
class Pole:
    value: complex
    multiplicity: int

    @property
    def modulus(self) -> float:
        return abs(self.value)

    @property
    def is_real(self) -> bool:
        return self.value.imag == 0.0


@dataclass(frozen=True)
class PoleSet:
    """Distinct roots with multiplicities, sorted by descending modulus."""

    poles: tuple[Pole, ...]

    @property
    def degree(self) -> int:
        return sum(p.multiplicity for p in self.poles)

    @property
    def dominant_modulus(self) -> float:
        return max((p.modulus for p in self.poles), default=0.0)

    def expanded(self) -> np.ndarray:
        """Every root repeated by its multiplicity."""
        return np.array(
            [p.value for p in self.poles for _ in range(p.multiplicity)], dtype=complex
        )

    def polynomial(self) -> np.ndarray:
        """Monic coefficients of prod (z - r_k)^{d_k}."""
        return np.real(np.poly(self.expanded())) if self.poles else np.ones(1)

    def is_stable(self) -> bool:
        return self.dominant_modulus < 1.0 - UNIT_CIRCLE_TOLERANCE


def _aberth(coeffs: np.ndarray) -> np.ndarray:
    """
    Simultaneous Aberth-Ehrlich iteration started from companion eigenvalues.

    A root is frozen once its step drops below STEP_TOLERANCE (relative) or its
    residual reaches rounding level, which is where estimates of multiple roots
    stall.

    Args:
        coeffs: Monic coefficients, highest power first, non-zero constant term

    Returns:
        Complex root estimates (unordered)
    """
    degree = len(coeffs) - 1
    z = np.linalg.eigvals(linalg.companion(coeffs)).astype(complex)
    if degree == 1:
        return z

    deriv = np.polyder(coeffs)
    abs_coeffs = np.abs(coeffs)
    rounding = 4.0 * degree * np.finfo(float).eps
    active = np.ones(degree, dtype=bool)

    for iteration in range(MAX_ITERATIONS):
        value = np.polyval(coeffs, z)
        active &= np.abs(value) > rounding * np.polyval(abs_coeffs, np.abs(z))
        if not active.any():
            logger.debug("aberth converged after %d iterations", iteration)
            return z

        with np.errstate(divide="ignore", invalid="ignore"):
            newton = value / np.polyval(deriv, z)
            gaps = z[:, None] - z[None, :]
            np.fill_diagonal(gaps, np.inf)
            step = newton / (1.0 - newton * np.sum(1.0 / gaps, axis=1))
        # coincident estimates: nudge apart
        stuck = ~np.isfinite(step)
        step[stuck] = 1e-8 * (1.0 + np.abs(z[stuck])) * (1 + 1j)
        step[~active] = 0.0

        z = z - step
        active &= np.abs(step) >= STEP_TOLERANCE * np.maximum(1.0, np.abs(z))
        if not active.any():
            return z

    raise RootFindingError(np.abs(np.polyval(coeffs, z)))


def _cluster(roots: np.ndarray) -> list[tuple[complex, int]]:
    """Single-linkage grouping of root estimates into (mean, multiplicity).

    Two groups join when their means are within CLUSTER_TOLERANCE (relative),
    widened to the accuracy eps^(1/k) attainable for a k-fold root.
    """
    groups = [[r] for r in roots]
    merged = True
    while merged:
        merged = False
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                a, b = np.mean(groups[i]), np.mean(groups[j])
                k = len(groups[i]) + len(groups[j])
                scale = max(1.0, abs(a), abs(b))
                tol = max(CLUSTER_TOLERANCE, 4.0 * np.finfo(float).eps ** (1.0 / k)) * scale
                if abs(a - b) < tol:
                    groups[i].extend(groups.pop(j))
                    merged = True
                    break
            if merged:
                break
    return [(complex(np.mean(g)), len(g)) for g in groups]


def _close_conjugates(clusters: list[tuple[complex, int]]) -> list[Pole]:
    poles: list[Pole] = []
    upper: list[tuple[complex, int]] = []
    lower: list[tuple[complex, int]] = []
    for value, mult in clusters:
        if abs(value.imag) <= CLUSTER_TOLERANCE * max(1.0, abs(value)):
            poles.append(Pole(complex(value.real, 0.0), mult))
        elif value.imag > 0:
            upper.append((value, mult))
        else:
            lower.append((value, mult))

    if len(upper) != len(lower):
        raise RootFindingError([abs(v.imag) for v, _ in upper + lower])
    for value, mult in upper:
        idx = int(np.argmin([abs(np.conj(v) - value) for v, _ in lower]))
        partner, partner_mult = lower.pop(idx)
        if partner_mult != mult:
            raise RootFindingError([abs(np.conj(partner) - value)])
        centre = 0.5 * (value + np.conj(partner))
        poles.append(Pole(complex(centre), mult))
        poles.append(Pole(complex(np.conj(centre)), mult))
    return poles


def find_roots(poly) -> PoleSet:
    """
    Roots of a real monic polynomial with multiplicities.

    Args:
        poly: Coefficients, highest power first (leading coefficient 1)

    Returns:
        PoleSet sorted by descending modulus (real before complex on ties,
        upper half-plane before its conjugate)
    """
    coeffs = np.asarray(poly, dtype=float)
    if coeffs.ndim != 1 or coeffs.size < 2:
        raise ConfigError("root finding needs a polynomial of degree >= 1")
    if coeffs[0] == 0.0:
        raise ConfigError("leading coefficient must be non-zero")
    coeffs = coeffs / coeffs[0]

    # exact zero roots come from trailing zero coefficients
    nonzero = np.flatnonzero(coeffs)
    n_zero = coeffs.size - 1 - nonzero[-1]
    core = coeffs[: coeffs.size - n_zero]

    poles = []
    if core.size > 1:
        poles = _close_conjugates(_cluster(_aberth(core)))
    if n_zero:
        poles.append(Pole(0j, int(n_zero)))

    poles.sort(key=lambda p: (-p.modulus, abs(p.value.imag), -p.value.imag))
    result = PoleSet(tuple(poles))

    rebuilt = result.polynomial()
    scale = np.maximum(1.0, np.abs(coeffs))
    worst = float(np.max(np.abs(rebuilt - coeffs) / scale))
    if worst > RECONSTRUCTION_TOLERANCE:
        raise RootFindingError([worst])
    return result


def is_stable(spec: ArmaSpec) -> bool:
    if spec.n == 0:
        return True
    return find_roots(char_poly(spec)).is_stable()


def _checked_modulus(poles: PoleSet, edge_of_stability: bool) -> float:
    """Dominant modulus, snapped to 1.0 on the unit circle when overridden."""
    modulus = poles.dominant_modulus
    if modulus < 1.0 - UNIT_CIRCLE_TOLERANCE:
        return modulus
    if edge_of_stability and modulus <= 1.0 + UNIT_CIRCLE_TOLERANCE:
        logger.info("edge-of-stability override: dominant modulus %.12g treated as 1", modulus)
        return 1.0
    raise UnstableSystemError(modulus)


# =============================================================================
# MODAL FORM
# =============================================================================

def _newton_rows(nodes, length: int) -> np.ndarray:
    """Rows h_{j-l}(nodes[0..l]) for l < len(nodes), j < length (zero for j < l).

    h_k is the complete homogeneous symmetric polynomial of degree k, which is the
    divided difference of z^j over the leading nodes. It stays bounded as the
    nodes coalesce, where the powers z^j of the individual nodes do not.
    """
    rows = np.zeros((len(nodes), length), dtype=complex)
    if length == 0:
        return rows
    h = np.zeros(length, dtype=complex)
    h[0] = 1.0
    for level, node in enumerate(nodes):
        h = signal.lfilter([1.0], [1.0, -node], h)
        rows[level, level:] = h[: length - level]
    return rows


@dataclass(frozen=True)
class Mode:
    """A group of nearly coincident poles, or a conjugate pair of such groups.

    With rho the largest node modulus and zeta = nodes / rho, the mode
    contributes c(j) rho^j to G_j, where

        c(j) = factor * Re(sum_l gamma_l h_{j-l}(zeta_0, ..., zeta_l))

    and factor is 2 for a pair represented by its upper half-plane member. A
    single pole of multiplicity k gives c(j) a polynomial in j of degree k - 1.
    """

    nodes: tuple[complex, ...]
    coefficients: tuple[complex, ...]
    paired: bool
    multiplicity: int = 1

    @property
    def pole(self) -> complex:
        return self.nodes[0]

    @property
    def modulus(self) -> float:
        return abs(self.pole)

    def amplitude(self, j) -> np.ndarray:
        j = np.asarray(j)
        index = j.astype(int)
        length = int(index.max()) + 1 if index.size else 0
        rows = _newton_rows(np.asarray(self.nodes) / self.modulus, length)
        values = np.asarray(self.coefficients) @ rows
        return (2.0 if self.paired else 1.0) * np.real(values[index])

    def evaluate(self, j) -> np.ndarray:
        j = np.asarray(j, dtype=float)
        return self.amplitude(j) * self.modulus**j


@dataclass(frozen=True)
class ModalForm:
    modes: tuple[Mode, ...]

    @property
    def order(self) -> int:
        return sum(len(m.nodes) * (2 if m.paired else 1) for m in self.modes)

    def evaluate(self, horizon: int) -> np.ndarray:
        j = np.arange(horizon + 1)
        if not self.modes:
            g = np.zeros(horizon + 1)
            g[0] = 1.0
            return g
        return np.sum([mode.evaluate(j) for mode in self.modes], axis=0)


def _confluent_groups(poles: list[Pole]) -> list[list[complex]]:
    """Single-linkage groups of roots closer than CONFLUENCE_RADIUS (relative).

    Nodes inside a group are ordered by descending modulus, real before
    complex, upper half-plane first.
    """
    groups = [[p.value] * p.multiplicity for p in poles]
    merged = True
    while merged:
        merged = False
        for i in range(len(groups)):
            for k in range(i + 1, len(groups)):
                gap = min(abs(a - b) for a in groups[i] for b in groups[k])
                scale = max(1.0, max(abs(a) for a in groups[i] + groups[k]))
                if gap < CONFLUENCE_RADIUS * scale:
                    groups[i].extend(groups.pop(k))
                    merged = True
                    break
            if merged:
                break
    return [sorted(g, key=lambda z: (-abs(z), abs(z.imag), -z.imag)) for g in groups]


def _basis(groups: list[list[complex]], length: int) -> np.ndarray:
    columns = []
    j = np.arange(length)
    for nodes in groups:
        rho = abs(nodes[0])
        rows = _newton_rows(np.asarray(nodes) / rho, length)
        columns.extend(rows * rho**j)
    return np.column_stack(columns)


def modal_form(poles: PoleSet) -> ModalForm:
    """
    Solve for the modal coefficients of G_j from the poles alone.

    Zero roots contribute no modes. The first values of G are the complete
    homogeneous symmetric polynomials h_j(r) of the roots. They fix the
    coefficients through a square solve in the Newton basis of each group of
    nearly coincident roots, refined once by least squares over a longer window
    when the square system is badly conditioned.
    """
    nonzero = [p for p in poles.poles if p.value != 0]
    roots = np.array([p.value for p in nonzero for _ in range(p.multiplicity)], dtype=complex)
    order = roots.size
    if order == 0:
        return ModalForm(())

    window = order + REFINEMENT_WINDOW
    h = np.zeros(window, dtype=complex)
    h[0] = 1.0
    for r in roots:
        h = signal.lfilter([1.0], [1.0, -r], h)

    groups = _confluent_groups(nonzero)
    basis = _basis(groups, window)
    square = basis[:order]
    beta = np.linalg.solve(square, h[:order])
    condition = np.linalg.cond(square)
    if condition > REFINEMENT_CONDITION:
        logger.debug("modal basis condition number %.3e: refining by least squares", condition)
        correction, *_ = np.linalg.lstsq(basis, h - basis @ beta, rcond=None)
        beta = beta + correction

    modes = []
    offset = 0
    for nodes in groups:
        coeffs = beta[offset : offset + len(nodes)]
        offset += len(nodes)
        multiplicity = sum(1 for z in nodes if z == nodes[0])
        imag = [z.imag for z in nodes]
        if all(v == 0.0 for v in imag):
            coeffs = np.real(coeffs)
            paired = False
        elif all(v > 0.0 for v in imag):
            paired = True
        elif all(v < 0.0 for v in imag):
            continue
        else:
            paired = False
        modes.append(Mode(tuple(nodes), tuple(complex(c) for c in coeffs), paired, multiplicity))
    modes.sort(key=lambda m: -m.modulus)
    return ModalForm(tuple(modes))


# =============================================================================
# IMPULSE RESPONSES
# =============================================================================

def impulse_recursive(spec: ArmaSpec, horizon: int) -> np.ndarray:
    """G_0..G_T from driving the AR recursion with a unit impulse in u."""
    if horizon < 0:
        raise ConfigError(f"horizon must be >= 0, got {horizon}")
    char_poly(spec)
    impulse = np.zeros(horizon + 1)
    impulse[0] = 1.0
    return signal.lfilter([1.0], spec.ar_polynomial, impulse)


def impulse_modal(
    poles: PoleSet,
    spec: ArmaSpec,
    horizon: int,
    *,
    edge_of_stability: bool = False,
) -> np.ndarray:
    """G_0..G_T evaluated from the modal expansion of ``poles``."""
    if not np.allclose(poles.polynomial(), char_poly(spec), rtol=0.0, atol=RECONSTRUCTION_TOLERANCE):
        raise GaussLimitError("pole set does not match the system's characteristic polynomial")
    _checked_modulus(poles, edge_of_stability)
    return modal_form(poles).evaluate(horizon)


def composite_kernel(g, ma_coeffs) -> np.ndarray:
    """H = G * b truncated to len(g): the response of y to a unit impulse in w."""
    g = np.asarray(g, dtype=float)
    return np.convolve(g, np.asarray(ma_coeffs, dtype=float))[: g.size]


# =============================================================================
# DOMINANT-POLE ENVELOPE
# =============================================================================

@dataclass(frozen=True)
class Envelope:
    alpha: float
    d: int
    c_lo: float
    c_hi: float
    eps: float
    t_eps: int
    dominant_pole: complex
    t_sign: int | None = None
    found: bool = True

    @property
    def start(self) -> int:
        """max(T_eps, T_sign): first index with envelope and constant sign."""
        return max(self.t_eps, self.t_sign or 1)

    def upper(self, i) -> np.ndarray:
        i = np.asarray(i, dtype=float)
        return self.c_hi * np.exp(self.eps) * i**self.d * np.exp(-self.alpha * i)

    def lower(self, i) -> np.ndarray:
        i = np.asarray(i, dtype=float)
        return self.c_lo * np.exp(-self.eps) * i**self.d * np.exp(-self.alpha * i)


def sign_stabilization_index(mode: Mode, horizon: int) -> int | None:
    """First index T with sign(c_1(i)) constant for T <= i <= horizon.

    Only defined for a real dominant pole.
    """
    if mode.pole.imag != 0.0 or horizon < 1:
        return None
    signs = np.sign(mode.amplitude(np.arange(1, horizon + 1)))
    changes = np.flatnonzero(signs != signs[-1])
    return int(changes[-1]) + 2 if changes.size else 1


def dominant_envelope(
    modal: ModalForm,
    g,
    eps: float = DEFAULT_EPS,
    *,
    edge_of_stability: bool = False,
) -> Envelope | None:
    """
    Envelope constants of the dominant mode over indices 1..T.

    T_eps is the smallest T >= 1 such that the modal remainder ratio
    G_i / (c_1(i) |r_1|^i) stays within [e^{-eps}, e^{eps}] for every i in [T, horizon].

    Args:
        modal: Modal form of the system
        g: Impulse response G_0..G_T (reference values)
        eps: Band half-width in log scale
        edge_of_stability: Allow a dominant modulus of exactly 1

    Returns:
        Envelope, or None for a memoryless system (no non-zero poles)
    """
    if eps <= 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    if not modal.modes:
        return None
    g = np.asarray(g, dtype=float)
    horizon = g.size - 1
    if horizon < 1:
        raise ConfigError("envelope needs a horizon of at least 1")

    first, rest = modal.modes[0], modal.modes[1:]
    if rest and abs(rest[0].modulus - first.modulus) <= TIE_TOLERANCE * first.modulus:
        raise DominanceError([first.modulus, rest[0].modulus])

    modulus = first.modulus
    if modulus >= 1.0 - UNIT_CIRCLE_TOLERANCE:
        if not edge_of_stability or modulus > 1.0 + UNIT_CIRCLE_TOLERANCE:
            raise UnstableSystemError(modulus)
        modulus = 1.0
    alpha = max(0.0, -np.log(modulus))
    d = first.multiplicity - 1

    idx = np.arange(1, horizon + 1)
    c1 = first.amplitude(idx)
    remainder = np.zeros(horizon)
    for mode in rest:
        remainder += mode.amplitude(idx) * (mode.modulus / first.modulus) ** idx
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(remainder == 0.0, 1.0, 1.0 + remainder / c1)
    inside = (ratio >= np.exp(-eps)) & (ratio <= np.exp(eps))

    outside = np.flatnonzero(~inside)
    found = outside.size == 0 or outside[-1] + 1 < horizon
    t_eps = 1 if outside.size == 0 else int(outside[-1]) + 2
    if not found:
        t_eps = horizon
        logger.warning(
            "remainder ratio never settles within e^{+-%g} up to horizon %d; "
            "envelope constants taken from |G| directly",
            eps,
            horizon,
        )

    tail = idx[t_eps - 1 :].astype(float)
    if found:
        scaled = np.abs(c1[t_eps - 1 :]) / tail**d
        c_lo, c_hi = float(scaled.min()), float(scaled.max())
    else:
        shape = tail**d * np.exp(-alpha * tail)
        magnitude = np.abs(g[t_eps:])
        c_lo = float(np.min(magnitude / (np.exp(-eps) * shape)))
        c_hi = float(np.max(magnitude / (np.exp(eps) * shape)))

    return Envelope(
        alpha=float(alpha),
        d=d,
        c_lo=c_lo,
        c_hi=c_hi,
        eps=float(eps),
        t_eps=t_eps,
        dominant_pole=first.pole,
        t_sign=sign_stabilization_index(first, horizon),
        found=bool(found),
    )


@dataclass(frozen=True)
class ImpulseResponse:
    """Impulse response G_0..G_T with its poles, modal form and envelope."""

    g: np.ndarray
    poles: PoleSet
    modal: ModalForm
    envelope: Envelope | None

    @property
    def horizon(self) -> int:
        return self.g.size - 1

    @property
    def dominant_modulus(self) -> float:
        return self.modal.modes[0].modulus if self.modal.modes else 0.0

    @property
    def alpha(self) -> float:
        return self.envelope.alpha if self.envelope else float("inf")

    @property
    def d1(self) -> int:
        return self.envelope.d + 1 if self.envelope else 0


def impulse_response(
    spec: ArmaSpec,
    horizon: int,
    eps: float = DEFAULT_EPS,
    *,
    edge_of_stability: bool = False,
) -> ImpulseResponse:
    """Recursive G, pole set, modal form and envelope for ``spec`` in one go."""
    poles = find_roots(char_poly(spec))
    _checked_modulus(poles, edge_of_stability)
    g = impulse_recursive(spec, horizon)
    modal = modal_form(poles)

    drift = float(np.max(np.abs(modal.evaluate(horizon) - g)))
    if drift > 1e-9:
        logger.warning("modal and recursive impulse responses differ by %.3e", drift)
    else:
        logger.debug("modal/recursive agreement %.3e over horizon %d", drift, horizon)

    envelope = (
        dominant_envelope(modal, g, eps, edge_of_stability=edge_of_stability)
        if horizon >= 1
        else None
    )
    g = g.copy()
    g.setflags(write=False)
    return ImpulseResponse(g=g, poles=poles, modal=modal, envelope=envelope)
