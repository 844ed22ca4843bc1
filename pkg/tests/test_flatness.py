from functools import lru_cache

import numpy as np
import pytest

from hcfbeam.backstepping import flat_output, solve_kernel
from hcfbeam.flatness import (DegenerateWindow, a0_integral, constant_reference, input_from_flat, make_reference,
                              parametrize_input, parametrize_state, reference_state, sigma_quadrature)
from hcfbeam.model import BeamParameters, build_model


# --------------------------------------------------------------------------- #
@lru_cache(maxsize=None)
def _model(n: int = 41):
    return build_model(BeamParameters.nominal(), n)


@lru_cache(maxsize=None)
def _kernel(n: int = 41):
    return solve_kernel(_model(n), 1.0 / (n - 1))


REF = make_reference((0.0, 0.0), (0.1, -0.2), 4.5, 5.5)


# --------------------------------------------------------------------------- #
def test_reference_is_piecewise():
    assert REF.y(1, 0.0) == 0.0 and REF.y(2, 4.5) == 0.0
    assert REF.y(1, 5.5) == pytest.approx(0.1) and REF.y(2, 9.0) == pytest.approx(-0.2)
    assert REF.y(1, 5.0) == pytest.approx(0.05)
    np.testing.assert_allclose(REF(np.array([0.0, 10.0])), [[0.0, 0.0], [0.1, -0.2]])


def test_reference_has_flat_ends():
    """Both one-sided slopes vanish at t0 and tT."""
    eps = 1e-6
    for t in (REF.t0, REF.tT):
        for i in (1, 2):
            assert abs(REF.y(i, t + eps) - REF.y(i, t - eps)) / (2 * eps) < 1e-5


def test_degenerate_window():
    with pytest.raises(DegenerateWindow):
        make_reference((0, 0), (1, 1), 2.0, 2.0)


def test_sigma_quadrature():
    model = _model()
    nodes, weights = sigma_quadrature(model, 0.1, model.tau2)
    assert nodes[0] == 0.1 and nodes[-1] == model.tau2
    assert np.sum(weights) == pytest.approx(model.tau2 - 0.1)
    assert sigma_quadrature(model, 0.3, 0.3)[0].size == 0
    assert a0_integral(model, _kernel(), "+", 0.3, 0.3, np.ones_like) == 0.0


# --------------------------------------------------------------------------- #
def test_state_reads_a_bounded_window():
    """The parametrized state and input only look ahead by tau1 + 2 tau2 in y1 and 2 tau2 in y2."""
    model, kernel = _model(), _kernel()
    t = 4.0
    ref = REF.recording()
    parametrize_state(model, kernel, ref, t)
    parametrize_input(model, kernel, ref, t)
    lo1, hi1 = ref.window(1)
    lo2, hi2 = ref.window(2)
    assert lo1 >= t - 1e-12 and hi1 <= t + model.tau1 + 2 * model.tau2 + 1e-12
    assert lo2 >= t - 1e-12 and hi2 <= t + 2 * model.tau2 + 1e-12


def test_reference_state_is_clamped():
    model, kernel = _model(), _kernel()
    for t in (4.2, 4.9, 5.3):
        assert reference_state(model, kernel, REF, t).clamped_residual() < 1e-12


def test_flat_output_of_reference_state():
    """Reading y off the reconstructed state returns y_r(t)."""
    model, kernel = _model(), _kernel()
    for t in (3.9, 4.6, 5.0, 5.8):
        y = flat_output(model, kernel, reference_state(model, kernel, REF, t))
        np.testing.assert_allclose(y, REF(t), atol=1e-8)


def test_input_matches_target_boundary():
    """xbar-(1) equals the parametrized input up to quadrature error."""
    model, kernel = _model(), _kernel()
    for t in (4.1, 4.8, 5.2):
        xbar = parametrize_state(model, kernel, REF, t)
        np.testing.assert_allclose(xbar.minus[-1], parametrize_input(model, kernel, REF, t), atol=1e-4)


def test_constant_reference_is_stationary():
    model, kernel = _model(), _kernel()
    ref = constant_reference((0.1, -0.2))
    u_a = parametrize_input(model, kernel, ref, 0.0)
    u_b = parametrize_input(model, kernel, ref, 17.0)
    np.testing.assert_allclose(u_a, u_b, atol=1e-14)
    assert u_a[0] == pytest.approx(-0.1)
    x_a = parametrize_state(model, kernel, ref, 0.0).stack()
    x_b = parametrize_state(model, kernel, ref, 17.0).stack()
    np.testing.assert_allclose(x_a, x_b, atol=1e-14)


def test_input_is_linear_in_predictions():
    model, kernel = _model(), _kernel()
    y1 = lambda tau: 0.3 * np.sin(np.asarray(tau))
    y2 = lambda tau: np.cos(np.asarray(tau))
    twice = input_from_flat(model, kernel, lambda s: 2 * y1(s), lambda s: 2 * y2(s))
    np.testing.assert_allclose(twice, 2 * input_from_flat(model, kernel, y1, y2), atol=1e-13)
