import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nledlab.constitutive import (
    energy_density,
    invert_DB,
    jacobian_D_of_E,
    to_DH,
    to_DH_via_forms,
)
from nledlab.errors import NoConvergence
from nledlab.lagrangian_models import (
    BornInfeld,
    DualityFamily,
    GeneralFamily,
    Maxwell,
    PolynomialProfile,
)
from nledlab.tof_lab import sample_fields

MODELS = [
    Maxwell(),
    BornInfeld(1.0),
    DualityFamily(0.25),
    GeneralFamily(0.25, PolynomialProfile((0.02,))),
    GeneralFamily(0.1, PolynomialProfile((0.3,)), c2=0.2),
]
IDS = ["maxwell", "bi", "duality", "poly002", "poly-c2"]


def test_maxwell_is_identity():
    rng = np.random.default_rng(0)
    E, B = rng.standard_normal((2, 10, 3))
    ex = to_DH(Maxwell(), E, B)
    np.testing.assert_array_equal(ex.D, E)
    np.testing.assert_array_equal(ex.H, B)
    np.testing.assert_allclose(energy_density(Maxwell(), E, B), 0.5 * np.sum(E * E + B * B, -1))


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_component_and_form_routes_agree(model):
    E, B = sample_fields(model, 300, 0.5, seed=1)
    a = to_DH(model, E, B)
    b = to_DH_via_forms(model, E, B)
    np.testing.assert_allclose(a.D, b.D, atol=1e-14)
    np.testing.assert_allclose(a.H, b.H, atol=1e-14)


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_round_trip(model):
    E, B = sample_fields(model, 1000, 0.5, seed=2)
    D = to_DH(model, E, B).D
    E2 = invert_DB(model, D, B)
    assert np.max(np.abs(E2 - E)) <= 1e-10


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_jacobian_against_finite_differences(model):
    E, B = sample_fields(model, 50, 0.5, seed=3)
    J = jacobian_D_of_E(model, E, B)
    h = 1e-6
    for k in range(3):
        dE = np.zeros(3)
        dE[k] = h
        col = (to_DH(model, E + dE, B).D - to_DH(model, E - dE, B).D) / (2 * h)
        np.testing.assert_allclose(J[:, :, k], col, atol=1e-6)


def test_born_infeld_near_domain_edge():
    # E nearly at the field-strength limit: margin 1e-3
    kappa = 1.0
    B = np.array([[0.0, 0.0, 0.0]])
    E = np.array([[np.sqrt(1.0 - 1e-3), 0.0, 0.0]])
    D = to_DH(BornInfeld(kappa), E, B).D
    E2, info = invert_DB(BornInfeld(kappa), D, B, return_info=True)
    np.testing.assert_allclose(E2, E, rtol=1e-10)
    assert info.halvings[0] > 0
    # residual history decreases monotonically
    h = np.array([r[0] for r in info.history])
    assert np.all(np.diff(h) < 0)


def test_guess_outside_domain_is_replaced():
    model = BornInfeld(1.0)
    E = np.array([[0.3, 0.1, 0.0]])
    B = np.array([[0.2, 0.0, 0.5]])
    D = to_DH(model, E, B).D
    np.testing.assert_allclose(invert_DB(model, D, B, guess=[[5.0, 0.0, 0.0]]), E, atol=1e-12)


def test_iteration_budget_exhaustion_reports_cells():
    # one Newton step from E = 0 is not enough for a nonlinear model
    model = BornInfeld(1.0)
    E, B = sample_fields(model, 20, 0.5, seed=4)
    D = to_DH(model, E, B).D
    with pytest.raises(NoConvergence) as exc:
        invert_DB(model, D, B, guess=np.zeros_like(D), max_iter=1)
    assert len(exc.value.cells) > 0
    assert all(0 <= c < 20 for c in exc.value.cells)


@pytest.mark.parametrize("model", MODELS[1:], ids=IDS[1:])
def test_energy_density_positive_and_zero_at_vacuum(model):
    E, B = sample_fields(model, 500, 0.5, seed=5)
    u = energy_density(model, E, B)
    assert np.all(u >= 0)
    assert energy_density(model, np.zeros(3), np.zeros(3)) == pytest.approx(
        -getattr(model, "c1", 0.0), abs=1e-15
    )


component = st.floats(-0.4, 0.4, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(st.lists(component, min_size=6, max_size=6))
def test_round_trip_property(vals):
    E = np.array(vals[:3])
    B = np.array(vals[3:])
    for model in (BornInfeld(1.0), DualityFamily(0.25)):
        D = to_DH(model, E, B).D
        assert np.max(np.abs(invert_DB(model, D, B) - E)) <= 1e-10


def test_born_infeld_excitation_reference():
    ex = to_DH(BornInfeld(1.0), np.zeros(3), np.array([1.0, 0.0, 0.0]))
    np.testing.assert_array_equal(ex.D, 0.0)
    np.testing.assert_allclose(ex.H, [1 / np.sqrt(2), 0, 0], atol=1e-15)


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_vacuum_maps_to_vacuum(model):
    ex = to_DH(model, np.zeros(3), np.zeros(3))
    np.testing.assert_array_equal(ex.D, 0.0)
    np.testing.assert_array_equal(ex.H, 0.0)


def test_jacobian_weak_field_limit():
    np.testing.assert_array_equal(jacobian_D_of_E(Maxwell(), [0.3, 0.1, 0.2], [1.0, 0, 0]), np.eye(3))
    for scale in (1e-2, 1e-4):
        J = jacobian_D_of_E(BornInfeld(1.0), scale * np.array([0.3, 0.1, 0.2]), scale * np.array([0.5, 0, 0.1]))
        assert np.max(np.abs(J - np.eye(3))) <= 2 * scale**2


def test_maxwell_inverts_in_one_step():
    E, info = invert_DB(Maxwell(), np.array([[0.1, 0.2, 0.3]]), np.zeros((1, 3)),
                        guess=np.zeros((1, 3)), return_info=True)
    np.testing.assert_allclose(E, [[0.1, 0.2, 0.3]], atol=1e-16)
    assert info.iterations[0] == 1
