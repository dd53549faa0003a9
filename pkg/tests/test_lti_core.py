"""Tests for pole finding, impulse responses and the dominant-pole envelope.

Key properties tested:

- The modal impulse response rebuilt from the poles alone agrees with the
  recursive one, including repeated and complex roots.
- T_eps is the first index from which the modal remainder stays in the band.
- Unit-circle poles are rejected unless the edge-of-stability override is set.
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gausslimit.errors import ConfigError, DominanceError, UnstableSystemError
from gausslimit.lti_core import (
    ArmaSpec,
    char_poly,
    composite_kernel,
    dominant_envelope,
    find_roots,
    impulse_modal,
    impulse_recursive,
    impulse_response,
    is_stable,
    modal_form,
)


# =============================================================================
# ROOTS
# =============================================================================

def test_char_poly_coefficients():
    assert_allclose(char_poly(ArmaSpec((0.4, 0.45))), [1.0, -0.4, -0.45])


def test_char_poly_needs_ar_part():
    with pytest.raises(ConfigError, match="no characteristic polynomial"):
        char_poly(ArmaSpec((), (1.0, 0.5)))


def test_ma_part_needs_nonzero_entry():
    with pytest.raises(ConfigError):
        ArmaSpec((0.5,), (0.0, 0.0))


def test_distinct_real_roots_sorted_by_modulus():
    poles = find_roots([1.0, -0.4, -0.45])
    assert [p.multiplicity for p in poles.poles] == [1, 1]
    assert_allclose([p.value.real for p in poles.poles], [0.9, -0.5], atol=1e-12)


def test_double_root_is_clustered():
    poles = find_roots([1.0, -1.0, 0.25])
    assert len(poles.poles) == 1
    assert poles.poles[0].multiplicity == 2
    assert abs(poles.poles[0].value - 0.5) < 1e-7


def test_conjugate_pair_is_closed():
    poles = find_roots([1.0, 0.0, 1.0])
    values = [p.value for p in poles.poles]
    assert values[0] == np.conj(values[1])
    assert values[0].imag > 0
    assert_allclose(abs(values[0]), 1.0, atol=1e-12)


def test_zero_roots_deflated_exactly():
    poles = find_roots([1.0, -0.5, 0.0, 0.0])
    assert poles.poles[-1].value == 0
    assert poles.poles[-1].multiplicity == 2
    assert poles.degree == 3


@pytest.mark.parametrize("coeffs, stable", [((0.5,), True), ((1.2,), False), ((0.0, -1.0), False)])
def test_is_stable(coeffs, stable):
    assert is_stable(ArmaSpec(coeffs)) is stable


# =============================================================================
# IMPULSE RESPONSES
# =============================================================================

def test_ar1_impulse_response_is_geometric():
    g = impulse_recursive(ArmaSpec((0.9,)), 20)
    assert_allclose(g, 0.9 ** np.arange(21), rtol=1e-13)


def test_horizon_zero_is_single_value():
    assert_allclose(impulse_recursive(ArmaSpec((0.9,)), 0), [1.0])


def test_repeated_root_impulse_response():
    spec = ArmaSpec((1.0, -0.25))
    j = np.arange(41)
    expected = (j + 1) * 0.5**j
    assert_allclose(impulse_recursive(spec, 40), expected, atol=1e-14)
    poles = find_roots(char_poly(spec))
    assert_allclose(impulse_modal(poles, spec, 40), expected, atol=1e-9)


def test_imaginary_poles_give_period_four():
    spec = ArmaSpec((0.0, -1.0))
    g = impulse_recursive(spec, 11)
    assert_allclose(g, [1, 0, -1, 0] * 3)
    poles = find_roots(char_poly(spec))
    assert_allclose(impulse_modal(poles, spec, 11, edge_of_stability=True), g, atol=1e-12)


def test_modal_requires_override_on_unit_circle():
    spec = ArmaSpec((0.0, -1.0))
    poles = find_roots(char_poly(spec))
    with pytest.raises(UnstableSystemError, match="system unstable"):
        impulse_modal(poles, spec, 10)


def _random_stable_poly(rng, degree):
    roots = []
    while len(roots) < degree:
        radius = rng.uniform(0.1, 0.95)
        if degree - len(roots) >= 2 and rng.random() < 0.5:
            root = radius * np.exp(1j * rng.uniform(0.2, math.pi - 0.2))
            roots.extend([root, np.conj(root)])
        else:
            roots.append(radius * rng.choice([-1.0, 1.0]))
    return np.real(np.poly(roots))


def test_modal_matches_recursive_for_random_systems():
    rng = np.random.default_rng(12345)
    for _ in range(200):
        degree = int(rng.integers(1, 5))
        poly = _random_stable_poly(rng, degree)
        ma = tuple(rng.normal(size=int(rng.integers(1, 4))))
        spec = ArmaSpec(tuple(-poly[1:]), ma)
        poles = find_roots(char_poly(spec))
        modal = impulse_modal(poles, spec, 500)
        recursive = impulse_recursive(spec, 500)
        assert np.max(np.abs(modal - recursive)) < 1e-9


@pytest.mark.parametrize(
    "roots",
    [
        (0.402 + 0.0003j, 0.402 - 0.0003j, 0.4024),
        (0.95, 0.9499, 0.9498),
        (0.9, 0.89, -0.5, -0.51),
    ],
    ids=["complex-cluster", "real-triple", "two-pairs"],
)
def test_modal_matches_recursive_for_nearly_coincident_roots(roots):
    spec = ArmaSpec(tuple(-np.real(np.poly(roots))[1:]))
    poles = find_roots(char_poly(spec))
    modal = impulse_modal(poles, spec, 500)
    assert np.max(np.abs(modal - impulse_recursive(spec, 500))) < 1e-9


def test_nearly_coincident_roots_share_one_mode():
    spec = ArmaSpec(tuple(-np.real(np.poly((0.95, 0.9499, 0.9498)))[1:]))
    modal = modal_form(find_roots(char_poly(spec)))
    assert len(modal.modes) == 1
    assert modal.modes[0].multiplicity == 1
    assert modal.order == 3


def test_composite_kernel_convolves_ma_part():
    g = 0.5 ** np.arange(5)
    assert_allclose(composite_kernel(g, (1.0, 1.0)), [1.0, 1.5, 0.75, 0.375, 0.1875])


def test_impulse_response_is_read_only():
    ir = impulse_response(ArmaSpec((0.9,)), 50)
    assert not ir.g.flags.writeable
    assert ir.horizon == 50
    assert ir.d1 == 1


# =============================================================================
# ENVELOPE
# =============================================================================

def test_ar1_envelope_constants():
    env = impulse_response(ArmaSpec((0.9,)), 100).envelope
    assert_allclose(env.alpha, -math.log(0.9))
    assert env.d == 0
    assert_allclose([env.c_lo, env.c_hi], [1.0, 1.0], rtol=1e-12)
    assert env.t_eps == 1
    assert env.t_sign == 1


def test_t_eps_for_mixed_poles():
    env = impulse_response(ArmaSpec((0.4, 0.45)), 200, eps=0.1).envelope
    assert env.t_eps == 4
    assert env.found
    assert_allclose(env.c_lo, 0.9 / 1.4, rtol=1e-9)


def test_envelope_brackets_impulse_response():
    ir = impulse_response(ArmaSpec((0.4, 0.45)), 200, eps=0.1)
    env = ir.envelope
    i = np.arange(env.t_eps, 201)
    assert np.all(np.abs(ir.g[i]) <= env.upper(i) * (1 + 1e-12))
    assert np.all(np.abs(ir.g[i]) >= env.lower(i) * (1 - 1e-12))


def test_envelope_brackets_random_systems():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        poly = _random_stable_poly(rng, int(rng.integers(1, 5)))
        ir = impulse_response(ArmaSpec(tuple(-poly[1:])), 200, eps=0.05)
        env = ir.envelope
        i = np.arange(env.t_eps, 201)
        magnitude = np.abs(ir.g[i])
        assert np.all(magnitude <= env.upper(i) * (1 + 1e-6))
        assert np.all(magnitude >= env.lower(i) * (1 - 1e-6))


def test_repeated_root_envelope_degree():
    env = impulse_response(ArmaSpec((1.6, -0.64)), 300).envelope
    assert env.d == 1
    assert_allclose(env.alpha, -math.log(0.8), rtol=1e-6)


def test_tied_moduli_have_no_dominant_mode():
    with pytest.raises(DominanceError, match="no strictly dominant mode"):
        impulse_response(ArmaSpec((0.0, 0.25)), 50)


def test_unstable_system_rejected():
    with pytest.raises(UnstableSystemError, match="system unstable"):
        impulse_response(ArmaSpec((1.2,)), 10)


def test_edge_override_sets_alpha_zero():
    ir = impulse_response(ArmaSpec((-1.0,)), 50, edge_of_stability=True)
    assert ir.alpha == 0.0
    assert ir.envelope.dominant_pole.real < 0


def test_memoryless_system_has_no_envelope():
    spec = ArmaSpec((0.0,), (1.0, 1.0))
    poles = find_roots(char_poly(spec))
    assert dominant_envelope(modal_form(poles), impulse_recursive(spec, 5)) is None


def test_eps_must_be_positive():
    with pytest.raises(ConfigError):
        impulse_response(ArmaSpec((0.9,)), 10, eps=0.0)
