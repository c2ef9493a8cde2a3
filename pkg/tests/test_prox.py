import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rsmooth.prox import (
    L1Norm,
    ParameterError,
    ShiftedL1,
    Zero,
    check_envelope_ordering,
    envelope_ordering_gap,
    moreau_grad,
    moreau_value,
    prox_l1,
    soft_threshold,
)

reals = st.floats(-5, 5, allow_nan=False)
mus = st.floats(1e-3, 2.0)
lams = st.floats(0.0, 3.0)


def _brute_prox_scalar(y, mu, obj, half_width=12.0, pts=24001):
    # dense grid, then a refinement pass around the best point
    grid = np.linspace(y - half_width, y + half_width, pts)
    z = grid[np.argmin(obj(grid))]
    fine = np.linspace(z - 2e-3, z + 2e-3, 4001)
    return fine[np.argmin(obj(fine))]


@given(reals, mus, lams)
def test_prox_l1_matches_grid(y, mu, lam):
    z = prox_l1(np.array([y]), mu, lam)[0]
    zb = _brute_prox_scalar(y, mu, lambda t: lam * np.abs(t) + (t - y) ** 2 / (2 * mu))
    assert abs(z - zb) <= 1e-4


@given(reals, st.floats(1e-3, 0.9), lams, st.floats(0.05, 0.5))
def test_shifted_prox_matches_grid(y, mu, lam, rho):
    h = ShiftedL1(lam, 1, rho, radius=10.0)
    z = h.prox(np.array([y]), mu)[0]
    zb = _brute_prox_scalar(y, mu, lambda t: lam * np.abs(t) - 0.5 * rho * t**2 + (t - y) ** 2 / (2 * mu),
                            half_width=30.0, pts=60001)
    assert abs(z - zb) <= 1e-4


def test_soft_threshold_values():
    Y = np.array([-3.0, -0.5, 0.0, 0.5, 3.0])
    assert np.array_equal(soft_threshold(Y, 1.0), [-2.0, 0.0, 0.0, 0.0, 2.0])


def test_prox_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        prox_l1(np.ones(2), 0.0, 1.0)
    with pytest.raises(ParameterError):
        prox_l1(np.ones(2), 1.0, -1.0)
    with pytest.raises(ParameterError):
        L1Norm(1.0, 2, rho=2.0).prox(np.ones(2), 0.5)
    with pytest.raises(ParameterError):
        ShiftedL1(1.0, 2, rho=0.0, radius=1.0)


@given(st.integers(0, 2**32 - 1), mus, lams)
def test_moreau_grad_matches_finite_differences(seed, mu, lam):
    rng = np.random.default_rng(seed)
    h = L1Norm(lam, 12)
    Y = 2.0 * rng.standard_normal((4, 3))
    D = rng.standard_normal((4, 3))
    eps = 1e-6
    fd = (moreau_value(h, Y + eps * D, mu) - moreau_value(h, Y - eps * D, mu)) / (2 * eps)
    an = float(np.sum(moreau_grad(h, Y, mu) * D))
    assert abs(fd - an) <= 1e-5 * max(1.0, abs(an))


@given(st.integers(0, 2**32 - 1), mus, lams)
def test_envelope_bounds(seed, mu, lam):
    rng = np.random.default_rng(seed)
    h = L1Norm(lam, 6)
    Y = 3.0 * rng.standard_normal((3, 2))
    Z = h.prox(Y, mu)
    # Y - Z loses about one ulp of ||Y||; allow a few
    ulp = 8 * np.finfo(float).eps * np.linalg.norm(Y)
    assert np.linalg.norm(moreau_grad(h, Y, mu, Z)) <= h.lipschitz + ulp / mu
    assert np.linalg.norm(Y - Z) <= mu * h.lipschitz + ulp
    # the envelope sits below h and above h - mu l_h^2 / 2
    hm = moreau_value(h, Y, mu, Z)
    assert hm <= h(Y) + 1e-12
    assert hm >= h(Y) - 0.5 * mu * h.lipschitz**2 - 1e-12


def test_moreau_value_precomputed_prox():
    h = L1Norm(0.7, 4)
    Y = np.array([[1.0, -0.2], [0.0, 3.0]])
    assert moreau_value(h, Y, 0.3) == moreau_value(h, Y, 0.3, h.prox(Y, 0.3))


@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1.0), st.floats(0.01, 1.0), lams)
def test_envelope_ordering(seed, mu1, frac, lam):
    rng = np.random.default_rng(seed)
    h = L1Norm(lam, 8)
    Y = 2.0 * rng.standard_normal(8)
    assert check_envelope_ordering(h, Y, mu1, frac * mu1)


def test_envelope_ordering_argument_order():
    with pytest.raises(ParameterError):
        envelope_ordering_gap(L1Norm(1.0, 1), np.ones(1), 0.1, 0.2)


def test_envelope_monotone_in_mu():
    h = L1Norm(1.0, 5)
    Y = np.linspace(-2, 2, 5)
    vals = [moreau_value(h, Y, mu) for mu in (1.0, 0.5, 0.1, 0.01)]
    assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))


@given(st.integers(0, 2**32 - 1), st.floats(0.1, 2.0))
def test_shifted_l1_is_weakly_convex(seed, rho):
    # h + (rho/2)||.||^2 is convex: midpoint inequality on random pairs
    rng = np.random.default_rng(seed)
    h = ShiftedL1(0.5, 4, rho, radius=5.0)
    g = lambda y: h(y) + 0.5 * rho * float(np.sum(y * y))  # noqa: E731
    a, b = rng.standard_normal(4), rng.standard_normal(4)
    assert g(0.5 * (a + b)) <= 0.5 * (g(a) + g(b)) + 1e-12


def test_subgradient_selector():
    h = L1Norm(2.0, 4)
    Y = np.array([-1.0, 0.0, 0.0, 3.0])
    assert np.array_equal(h.subgradient(Y), [-2.0, 0.0, 0.0, 2.0])
    lo, hi = h.subdifferential_box(Y)
    assert np.array_equal(lo, [-2.0, -2.0, -2.0, 2.0])
    assert np.array_equal(hi, [-2.0, 2.0, 2.0, 2.0])


def test_zero_function():
    h = Zero()
    Y = np.arange(6.0).reshape(3, 2)
    assert h(Y) == 0.0
    assert np.array_equal(h.prox(Y, 0.3), Y)
    assert moreau_value(h, Y, 0.3) == 0.0
    assert h.envelope_curvature(0.3) == 0.0


def test_envelope_curvature():
    assert L1Norm(1.0, 1).envelope_curvature(0.25) == 4.0
    h = ShiftedL1(1.0, 1, rho=0.5, radius=1.0)
    assert h.envelope_curvature(1.0) == 1.0
    assert h.envelope_curvature(1.9) == pytest.approx(0.5 / 0.05)
