"""Geometry tests: norms, duality mappings, eps-subgradient calculus.

Derived expected values were computed first through independent routes
(central finite differences for gradients, closed-form norms, hand reduction
of the Fenchel gap) and are frozen here as literals.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monotonelab import InputError, NormedSpace
from monotonelab.errors import DimensionMismatchError

ALGEBRA_RTOL = 1e-10
ROUNDTRIP_TOL = 1e-9
FD_TOL = 1e-6

P_GRID = [1.5, 2.0, 3.0, 4.0]
N_GRID = [1, 2, 3]


def _sample(rng, n, scale=2.0):
    return scale * rng.standard_normal(n)


# -- norms ---------------------------------------------------------------


def test_norm_closed_forms():
    assert NormedSpace(2, 2.0).norm([3.0, 4.0]) == pytest.approx(5.0, abs=1e-14)
    assert NormedSpace(2, 4.0).norm([1.0, 1.0]) == pytest.approx(2.0 ** 0.25, rel=1e-14)
    assert NormedSpace(3, 3.0).norm([1.0, 2.0, 2.0]) == pytest.approx(
        17.0 ** (1.0 / 3.0), rel=1e-14
    )


def test_dual_norm_closed_form():
    # J(1,1) at p=4 is (2**-0.5, 2**-0.5); its l^{4/3} norm is 2**0.25.
    sp = NormedSpace(2, 4.0)
    xstar = np.array([2.0 ** -0.5, 2.0 ** -0.5])
    assert sp.dual_norm(xstar) == pytest.approx(2.0 ** 0.25, rel=1e-14)


@pytest.mark.parametrize("p", P_GRID)
@pytest.mark.parametrize("n", N_GRID)
def test_holder_inequality_sampled(n, p):
    sp = NormedSpace(n, p)
    rng = np.random.default_rng(42)
    for _ in range(100):
        x = _sample(rng, n)
        y = _sample(rng, n)
        lhs = abs(float(np.dot(x, y)))
        rhs = sp.norm(x) * sp.dual_norm(y)
        assert lhs <= rhs * (1.0 + ALGEBRA_RTOL) + 1e-14


def test_norm_rejects_bad_input():
    sp = NormedSpace(2, 2.0)
    with pytest.raises(DimensionMismatchError):
        sp.norm([1.0, 2.0, 3.0])
    with pytest.raises(InputError):
        sp.norm([np.nan, 0.0])
    with pytest.raises(InputError):
        NormedSpace(2, 1.0)
    with pytest.raises(InputError):
        NormedSpace(2, math.inf)
    with pytest.raises(InputError):
        NormedSpace(0, 2.0)


# -- duality mapping -----------------------------------------------------


def test_duality_map_matches_finite_differences():
    # Independent oracle: central differences of (1/2)||.||_p^2.
    h = 1e-6
    rng = np.random.default_rng(3)
    for p in P_GRID:
        for n in [2, 3]:
            sp = NormedSpace(n, p)
            x = _sample(rng, n) + 0.1  # keep away from coordinate zeros
            grad = np.zeros(n)
            for k in range(n):
                e = np.zeros(n)
                e[k] = h
                fp = 0.5 * np.linalg.norm(x + e, ord=p) ** 2
                fm = 0.5 * np.linalg.norm(x - e, ord=p) ** 2
                grad[k] = (fp - fm) / (2.0 * h)
            assert np.allclose(sp.duality_map(x), grad, atol=FD_TOL)


def test_duality_map_frozen_example():
    # p=4, x=(1,1): finite differences gave (0.70710678, 0.70710678).
    sp = NormedSpace(2, 4.0)
    out = sp.duality_map([1.0, 1.0])
    assert np.allclose(out, [2.0 ** -0.5, 2.0 ** -0.5], atol=1e-12)


def test_duality_map_zero():
    for p in P_GRID:
        sp = NormedSpace(3, p)
        assert np.all(sp.duality_map(np.zeros(3)) == 0.0)
        assert np.all(sp.dual_duality_map(np.zeros(3)) == 0.0)


@pytest.mark.parametrize("p", P_GRID)
@pytest.mark.parametrize("n", N_GRID)
def test_duality_map_identities(n, p):
    sp = NormedSpace(n, p)
    rng = np.random.default_rng(11)
    for _ in range(50):
        x = _sample(rng, n)
        j = sp.duality_map(x)
        nx = sp.norm(x)
        scale = max(1.0, nx ** 2)
        assert abs(float(np.dot(j, x)) - nx ** 2) <= ALGEBRA_RTOL * scale
        assert abs(sp.dual_norm(j) - nx) <= ALGEBRA_RTOL * max(1.0, nx)


@pytest.mark.parametrize("p", P_GRID)
@pytest.mark.parametrize("n", N_GRID)
def test_inversion_round_trip(n, p):
    sp = NormedSpace(n, p)
    rng = np.random.default_rng(17)
    for _ in range(200):
        x = _sample(rng, n)
        back = sp.dual_duality_map(sp.duality_map(x))
        assert np.linalg.norm(back - x, ord=p) <= ROUNDTRIP_TOL * max(1.0, sp.norm(x))
        xs = _sample(rng, n)
        back2 = sp.duality_map(sp.dual_duality_map(xs))
        assert np.linalg.norm(back2 - xs, ord=sp.q) <= ROUNDTRIP_TOL * max(
            1.0, sp.dual_norm(xs)
        )


@given(
    st.lists(st.floats(-50.0, 50.0), min_size=2, max_size=2),
    st.floats(-8.0, 8.0),
)
@settings(max_examples=200, deadline=None)
def test_duality_map_is_homogeneous(coords, lam):
    sp = NormedSpace(2, 3.0)
    x = np.asarray(coords)
    lhs = sp.duality_map(lam * x)
    rhs = lam * sp.duality_map(x)
    assert np.allclose(lhs, rhs, atol=1e-8 * (1.0 + abs(lam) * sp.norm(x)))


# -- eps-subdifferential -------------------------------------------------


def test_membership_exact_member():
    for p in P_GRID:
        sp = NormedSpace(3, p)
        rng = np.random.default_rng(5)
        for _ in range(20):
            x = _sample(rng, 3)
            assert sp.eps_subdiff_contains(x, sp.duality_map(x), 0.0)


def test_membership_boundary_cases():
    # Hand reduction at p=2, x=(1,0): gap(x, (s,0)) = (s-1)^2/2.
    sp = NormedSpace(2, 2.0)
    assert sp.eps_subdiff_contains([1.0, 0.0], [1.1, 0.0], 0.005)
    assert not sp.eps_subdiff_contains([1.0, 0.0], [1.2, 0.0], 0.005)


def test_membership_rejects_negative_eps():
    sp = NormedSpace(2, 2.0)
    with pytest.raises(InputError):
        sp.eps_subdiff_contains([1.0, 0.0], [1.0, 0.0], -1e-3)


def test_element_frozen_examples():
    sp = NormedSpace(2, 2.0)
    out = sp.eps_subdiff_element([1.0, 0.0], 0.005, [1.0, 0.0])
    assert np.allclose(out, [1.1, 0.0], atol=1e-9)
    out0 = sp.eps_subdiff_element([0.0, 0.0], 0.02, [1.0, 0.0])
    assert np.allclose(out0, [0.2, 0.0], atol=1e-9)


@pytest.mark.parametrize("p", P_GRID)
@pytest.mark.parametrize("n", N_GRID)
def test_element_lands_in_band(n, p):
    sp = NormedSpace(n, p)
    rng = np.random.default_rng(23)
    for _ in range(25):
        x = _sample(rng, n)
        eps = float(rng.uniform(1e-4, 0.5))
        hint = _sample(rng, n)
        xs = sp.eps_subdiff_element(x, eps, hint)
        gap = sp.fenchel_gap(x, xs)
        assert 0.9 * eps <= gap <= eps * (1.0 + 1e-9)
        assert sp.eps_subdiff_contains(x, xs, eps)


@pytest.mark.parametrize("p", P_GRID)
def test_symmetry_and_scaling_invariants(p):
    # Membership is symmetric under joint negation and scales with lam**2.
    sp = NormedSpace(3, p)
    rng = np.random.default_rng(31)
    for _ in range(50):
        x = _sample(rng, 3)
        eps = float(rng.uniform(1e-4, 0.3))
        lam = float(rng.uniform(0.1, 3.0))
        xs = sp.eps_subdiff_element(x, eps, _sample(rng, 3))
        assert sp.eps_subdiff_contains(-x, -xs, eps)
        assert sp.eps_subdiff_contains(lam * x, lam * xs, lam * lam * eps)


@pytest.mark.parametrize("p", P_GRID)
def test_norm_and_pairing_bounds(p):
    # Members certified by the gap obey the two closeness bounds.
    sp = NormedSpace(2, p)
    rng = np.random.default_rng(37)
    for _ in range(60):
        x = _sample(rng, 2)
        eps = float(rng.uniform(1e-5, 0.4))
        xs = sp.eps_subdiff_element(x, eps, _sample(rng, 2))
        nx = sp.norm(x)
        assert abs(nx - sp.dual_norm(xs)) <= math.sqrt(2.0 * eps) + 1e-10
        assert abs(float(np.dot(xs, x)) - nx ** 2) <= math.sqrt(eps) * (
            1.0 + 0.5 * nx ** 2
        ) + 1e-10


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_membership_agrees_with_defining_inequality(p):
    # Cross-check the gap criterion against the variational definition on a
    # seeded cloud of y, augmented with the exact worst case y = J*(xstar).
    sp = NormedSpace(2, p)
    rng = np.random.default_rng(41)
    for _ in range(30):
        x = _sample(rng, 2)
        xs = _sample(rng, 2)
        eps = float(rng.uniform(1e-4, 0.5))
        member = sp.eps_subdiff_contains(x, xs, eps)
        cloud = [_sample(rng, 2, scale=3.0) for _ in range(40)]
        cloud.append(sp.dual_duality_map(xs))
        worst = min(
            0.5 * sp.norm(y) ** 2
            - 0.5 * sp.norm(x) ** 2
            - float(np.dot(xs, np.asarray(y) - x))
            + eps
            for y in cloud
        )
        if member:
            assert worst >= -1e-9
        else:
            assert worst < 1e-9  # the appended worst case witnesses failure


# -- strict convexity probe ----------------------------------------------


@pytest.mark.parametrize("p", P_GRID)
@pytest.mark.parametrize("n", [2, 3])
def test_strict_convexity_probe_positive(n, p):
    probe = NormedSpace(n, p).strict_convexity_probe(trials=200, seed=9)
    assert probe.min_margin > 0.0
    assert probe.trials == 200


def test_strict_convexity_probe_deterministic():
    sp = NormedSpace(2, 3.0)
    a = sp.strict_convexity_probe(trials=50, seed=4)
    b = sp.strict_convexity_probe(trials=50, seed=4)
    assert a.min_margin == b.min_margin
