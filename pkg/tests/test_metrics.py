import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import modeshape as ms
from modeshape.errors import DegenerateReferenceError, ValidationError
from modeshape.metrics import (
    error_at,
    fractional_error,
    predict_population,
    shots_required,
    square_probe,
)
from modeshape.modes import TWO_PI


def test_fractional_error_basics():
    assert fractional_error(0.5, 0.5) == 0.0
    assert fractional_error(0.6, 0.5) == pytest.approx(0.2)
    assert fractional_error(0.4, 0.5) == pytest.approx(0.2)


def test_fractional_error_degenerate_reference():
    with pytest.raises(DegenerateReferenceError):
        fractional_error(0.3, 0.0)


def test_fractional_error_monotone_in_gap():
    ref = 0.3
    gaps = [0.0, 0.05, 0.1, 0.2]
    errs = [fractional_error(ref + g, ref) for g in gaps]
    assert errs == sorted(errs)


def test_predict_population_values():
    assert predict_population(0.0625, 1.0) == pytest.approx(
        np.sin(0.0625) ** 2, rel=1e-12
    )
    assert predict_population(0.0625, 1.0) == pytest.approx(3.9012e-3, rel=1e-4)
    assert predict_population(0.1, 0.0) == 0.0


def test_predict_population_correction_reduces():
    base = predict_population(0.0625, 1.0)
    assert predict_population(0.0625, 1.0, theta2_diag=0.0) == pytest.approx(base)
    corrected = predict_population(0.0625, 1.0, theta2_diag=20.0)
    assert corrected < base


def test_predict_population_validity_window():
    with pytest.raises(ValidationError):
        predict_population(0.5, 10.0)


def test_predict_population_matches_two_level_sim(chain):
    # exact two-level case: resonant square pulse in the single-mode model
    from modeshape.dynamics import SimConfig, bright_population, evolve

    tau = 100e-6
    eta = chain.eta[2, 2]
    for alpha in (0.5, 1.0, 2.0):
        pulse = square_probe(chain, 2, alpha, tau)
        state = evolve(
            pulse, chain, SimConfig(model="single_mode", n_max=2, target=2, ion=2)
        )
        assert bright_population(state) == pytest.approx(
            predict_population(eta, alpha), abs=1e-8
        )


def test_shots_required_values():
    assert shots_required(1.0, 0.005) == 10000
    assert shots_required(2.0, 0.005) == 2500
    assert shots_required(1.0, 0.05) == 100


def test_shots_required_monotone():
    assert shots_required(1.0, 0.004) >= shots_required(1.0, 0.005)
    assert shots_required(0.5, 0.005) >= shots_required(1.0, 0.005)


@given(
    alpha=st.floats(0.01, 10.0),
    delta_eta=st.floats(1e-4, 0.5),
    grow=st.floats(1.0, 4.0),
)
@settings(max_examples=60, deadline=None)
def test_shots_required_non_increasing_property(alpha, delta_eta, grow):
    base = shots_required(alpha, delta_eta)
    assert shots_required(alpha * grow, delta_eta) <= base
    assert shots_required(alpha, delta_eta * grow) <= base
    assert base >= 1


def test_shots_required_validation():
    with pytest.raises(ValidationError):
        shots_required(0.0, 0.01)


def test_square_probe_alpha(chain):
    tau = 200e-6
    p = square_probe(chain, 2, 1.5, tau)
    assert abs(ms.theta1(p, chain, 2)) == pytest.approx(1.5, rel=1e-9)


def test_error_at_square_recipe(chain):
    ep = error_at("square", chain, 0.0, target=2, alpha=1.0, tau=150e-6)
    assert ep.moment == "square"
    assert 0 <= ep.p_full <= 1 and 0 <= ep.p_model <= 1
    assert ep.error >= 0
    assert ep.p_model == pytest.approx(np.sin(0.0625) ** 2, rel=1e-6)


def test_error_at_unknown_recipe(chain):
    with pytest.raises(ValidationError):
        error_at("triangle", chain, 0.0, target=2, alpha=1.0, tau=1e-4)


def test_error_at_shaped_beats_square(chain):
    tau = 150e-6
    sol = ms.solve_pulse(ms.ShapeRequest(spec=chain, target=2, tau=tau, alpha=1.0))
    shaped = error_at(sol.pulse, chain, 0.0, target=2, alpha=1.0, moment=0)
    square = error_at("square", chain, 0.0, target=2, alpha=1.0, tau=tau)
    assert shaped.error < square.error


def test_error_at_detuned_reference_stays_nominal(chain):
    tau = 150e-6
    delta = TWO_PI * 100.0
    base = error_at("square", chain, 0.0, target=2, alpha=1.0, tau=tau)
    moved = error_at("square", chain, delta, target=2, alpha=1.0, tau=tau)
    assert moved.p_model == pytest.approx(base.p_model, rel=1e-9)
    assert moved.delta == pytest.approx(delta)
