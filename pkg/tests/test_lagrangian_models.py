import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nledlab import forms4d
from nledlab.errors import DomainError
from nledlab.lagrangian_models import (
    BornInfeld,
    DualityFamily,
    DualityProfile,
    GeneralFamily,
    Maxwell,
    PolynomialProfile,
    duality_residual,
    duality_rotate,
    model_from_dict,
)

MODELS = [
    Maxwell(),
    BornInfeld(1.0),
    BornInfeld(0.6),
    DualityFamily(0.25),
    GeneralFamily(0.25, PolynomialProfile((1.0,))),
    GeneralFamily(0.1, PolynomialProfile((0.3, -0.05)), c1=0.2, c2=0.1),
]
IDS = ["maxwell", "bi1", "bi06", "duality", "xi2", "poly-c1c2"]


def _points(n, bound, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(-bound, bound, n), rng.uniform(-bound, bound, n)


def _second_fd(model, X, Y, h=1e-4):
    """Central-difference derivatives of L for comparison with the analytic ones."""
    L = model.lagrangian
    LX = (L(X + h, Y) - L(X - h, Y)) / (2 * h)
    LY = (L(X, Y + h) - L(X, Y - h)) / (2 * h)
    LXX = (L(X + h, Y) - 2 * L(X, Y) + L(X - h, Y)) / h**2
    LYY = (L(X, Y + h) - 2 * L(X, Y) + L(X, Y - h)) / h**2
    LXY = (L(X + h, Y + h) - L(X + h, Y - h) - L(X - h, Y + h) + L(X - h, Y - h)) / (4 * h * h)
    return LX, LY, LXX, LXY, LYY


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_derivatives_match_finite_differences(model):
    X, Y = _points(200, 0.4, 7)
    d = model.eval(X, Y)
    fd = _second_fd(model, X, Y)
    for name, got, want in zip(("L_X", "L_Y", "L_XX", "L_XY", "L_YY"),
                               (d.L_X, d.L_Y, d.L_XX, d.L_XY, d.L_YY), fd):
        np.testing.assert_allclose(got, want, atol=2e-6, rtol=1e-6, err_msg=name)


@pytest.mark.parametrize("kappa", [0.3, 1.0, 2.0])
def test_born_infeld_closed_form(kappa):
    # 50-digit evaluation of (1 - sqrt(1 - k^2 X - k^4 Y^2 / 4)) / k^2
    mpmath = pytest.importorskip("mpmath")
    X, Y = _points(200, 0.2 / kappa**2, 1)
    X = np.concatenate([X, 1e-9 * X])
    Y = np.concatenate([Y, 1e-9 * Y])
    with mpmath.workdps(50):
        k2 = mpmath.mpf(kappa) ** 2
        ref = [float((1 - mpmath.sqrt(1 - k2 * mpmath.mpf(x) - k2 * k2 * mpmath.mpf(y) ** 2 / 4)) / k2)
               for x, y in zip(X, Y)]
    np.testing.assert_allclose(BornInfeld(kappa).lagrangian(X, Y), ref, rtol=1e-14, atol=0)


@pytest.mark.parametrize("kappa", [0.5, 1.0, 1.7])
def test_born_infeld_is_duality_family_member(kappa):
    X, Y = _points(1000, 0.3 / kappa**2, 2)
    a = BornInfeld(kappa).eval(X, Y).as_tuple()
    b = DualityFamily(kappa**2 / 4.0).eval(X, Y).as_tuple()
    for u, w in zip(a, b):
        np.testing.assert_allclose(u, w, rtol=0, atol=1e-12)


@pytest.mark.parametrize("model", MODELS[1:], ids=IDS[1:])
def test_weak_field_limit_is_maxwell(model):
    eps = 1e-4
    X, Y = _points(50, eps, 3)
    L = model.lagrangian(X, Y) - getattr(model, "c1", 0.0) - getattr(model, "c2", 0.0) * Y
    np.testing.assert_allclose(L, X / 2.0, atol=10 * eps**2)


def test_domain_errors():
    with pytest.raises(DomainError):
        BornInfeld(1.0).eval(2.0, 0.0)
    with pytest.raises(DomainError):
        DualityFamily(0.25).eval(5.0, 0.0)
    assert not BornInfeld(1.0).in_domain(1.0, 0.0)
    assert BornInfeld(1.0).in_domain(0.99, 0.0)
    with pytest.raises(ValueError):
        BornInfeld(0.0)
    with pytest.raises(ValueError):
        DualityProfile(0.0)


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_dict_round_trip(model):
    m2 = model_from_dict(model.to_dict())
    X, Y = _points(20, 0.3, 4)
    np.testing.assert_array_equal(m2.eval(X, Y).as_tuple(), model.eval(X, Y).as_tuple())


def test_dict_accepts_config_strings():
    m = model_from_dict({"kind": "family", "lambda": "0.25", "coeffs": "0.5, 0.1"})
    assert m.profile.coeffs == (0.5, 0.1)
    with pytest.raises(ValueError):
        model_from_dict({"kind": "nope"})


field = st.floats(-0.5, 0.5, allow_nan=False)


@settings(max_examples=150, deadline=None)
@given(st.tuples(field, field, field), st.tuples(field, field, field))
def test_duality_residual_vanishes_for_invariant_theories(E, B):
    E, B = np.array(E), np.array(B)
    for model in (Maxwell(), BornInfeld(1.0), DualityFamily(0.1)):
        assert abs(duality_residual(model, E, B)) <= 1e-12


def test_duality_residual_nonzero_for_polynomial_tail():
    rng = np.random.default_rng(5)
    E = rng.uniform(-0.5, 0.5, (1000, 3))
    B = rng.uniform(-0.5, 0.5, (1000, 3))
    C = duality_residual(GeneralFamily(0.25, PolynomialProfile((1.0,))), E, B)
    assert np.max(np.abs(C)) > 1e-3


def _star_G(model, F):
    E, B = forms4d.to_EB(F)
    X, Y = forms4d.invariants(E, B)
    d = model.eval(X, Y)
    return forms4d.hodge(F * (2 * d.L_X) - forms4d.hodge(F) * (2 * d.L_Y))


def _rotation_defect(model, F, alpha):
    """How far the rotated pair is from satisfying the constitutive relation."""
    F2, starG2 = duality_rotate(F, _star_G(model, F), alpha)
    return float(np.max(np.abs(_star_G(model, F2).coeffs - starG2.coeffs)))


def test_finite_duality_rotation_invariance():
    rng = np.random.default_rng(6)
    F = forms4d.from_EB(rng.uniform(-0.3, 0.3, (200, 3)), rng.uniform(-0.3, 0.3, (200, 3)))
    poly = GeneralFamily(0.25, PolynomialProfile((1.0,)))
    alphas = [0.1, 0.05, 0.025]
    for model in (Maxwell(), BornInfeld(1.0)):
        for a in alphas:
            assert _rotation_defect(model, F, a) <= 1e-12 * (1 + a * a)
    # a non-invariant member picks up a first-order defect
    d = [_rotation_defect(poly, F, a) for a in alphas]
    orders = [math.log2(d[i] / d[i + 1]) for i in range(2)]
    assert min(d) > 1e-4
    assert all(abs(o - 1.0) < 0.1 for o in orders)


def test_rotation_by_zero_is_identity():
    F = forms4d.from_EB([0.1, 0.2, 0.3], [0.3, -0.1, 0.2])
    G = _star_G(BornInfeld(1.0), F)
    F2, G2 = duality_rotate(F, G, 0.0)
    np.testing.assert_array_equal(F2.coeffs, F.coeffs)
    np.testing.assert_array_equal(G2.coeffs, G.coeffs)


def test_maxwell_values():
    d = Maxwell().eval(np.array([0.3, -2.0]), np.array([1.0, 5.0]))
    np.testing.assert_array_equal(d.L, [0.15, -1.0])
    np.testing.assert_array_equal(d.L_X, 0.5)
    for arr in (d.L_Y, d.L_XX, d.L_XY, d.L_YY):
        np.testing.assert_array_equal(arr, 0.0)


def test_born_infeld_reference_values():
    d = BornInfeld(1.7).eval(0.0, 0.0)
    assert (float(d.L), float(d.L_X), float(d.L_Y)) == (0.0, 0.5, 0.0)
    # L_X at X = -1 from a step sweep of central differences of the closed form
    L = BornInfeld(1.0).lagrangian
    fd = [(L(-1.0 + h, 0.0) - L(-1.0 - h, 0.0)) / (2 * h) for h in (1e-3, 1e-4, 1e-5)]
    assert float(BornInfeld(1.0).eval(-1.0, 0.0).L_X) == pytest.approx(1 / (2 * math.sqrt(2)), abs=1e-15)
    assert max(abs(f - 1 / (2 * math.sqrt(2))) for f in fd) < 1e-7


def test_duality_profile_values():
    F = DualityProfile(0.25)
    f, f1, _ = F.derivs(np.array([0.0, 0.75]))
    np.testing.assert_allclose(f, [0.0, 0.5], atol=1e-15)
    assert f1[0] == 0.5
    with pytest.raises(DomainError):
        F.derivs(1.0)


def test_weak_field_bound_without_constants():
    for model in (BornInfeld(1.3), DualityFamily(0.4), GeneralFamily(0.25, PolynomialProfile((1.0,)))):
        c = model.kappa if isinstance(model, BornInfeld) else 2 * math.sqrt(model.lam)
        rng = np.random.default_rng(8)
        E = rng.uniform(-1, 1, (200, 3)) * 1e-3 / c / math.sqrt(3)
        B = rng.uniform(-1, 1, (200, 3)) * 1e-3 / c / math.sqrt(3)
        X, Y = forms4d.invariants(E, B)
        assert np.all(np.abs(model.lagrangian(X, Y) - X / 2) <= 10 * (X * X + Y * Y))


def test_quarter_rotation():
    F = forms4d.from_EB([0.1, 0.2, 0.3], [0.3, -0.1, 0.2])
    G = _star_G(BornInfeld(1.0), F)
    F2, G2 = duality_rotate(F, G, math.pi / 2)
    np.testing.assert_allclose(F2.coeffs, G.coeffs, atol=1e-16)
    np.testing.assert_allclose(G2.coeffs, -F.coeffs, atol=1e-16)


def test_duality_residual_closed_form():
    from nledlab.constitutive import to_DH

    model = GeneralFamily(0.25, PolynomialProfile((1.0,)))
    E, B = np.array([0.3, 0.0, 0.0]), np.array([0.2, 0.1, 0.0])
    ex = to_DH(model, E, B)
    C = duality_residual(model, E, B)
    assert C != 0.0
    assert C == pytest.approx(2 * E @ B - 2 * ex.D @ ex.H, abs=1e-12)
