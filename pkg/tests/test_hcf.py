from functools import lru_cache

import numpy as np
import pytest
from scipy.integrate import quad

from hcfbeam.backstepping import apply_volterra, flat_output, solve_kernel
from hcfbeam.hcf import (HcfState, InputHistory, Profile, WindowUnderflow, eta1_profile, eta_integral, hcf_boundary,
                         hcf_to_xbar, heaviside, prediction_integral, xbar_to_hcf, y1_lookup)
from hcfbeam.control import ControllerConfig, decoupling_feedback, future_v1
from hcfbeam.flatness import make_reference
from hcfbeam.model import BeamParameters, RiemannField, build_model, with_coupling


# --------------------------------------------------------------------------- #
@lru_cache(maxsize=None)
def _model(n: int = 41):
    return build_model(BeamParameters.nominal(), n)


@lru_cache(maxsize=None)
def _kernel(n: int = 41):
    return solve_kernel(_model(n), 1.0 / (n - 1))


def _state(z: np.ndarray, seed: int = 0) -> RiemannField:
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(4, 3))
    x = np.stack([c[a, 0] + c[a, 1] * np.sin(np.pi * z) + c[a, 2] * z ** 2 for a in range(4)], axis=-1)
    x[0, 2:] = -x[0, :2]
    return RiemannField.from_array(z, x)


def _horizon(model) -> float:
    return model.delta_tau + model.tau2


# --------------------------------------------------------------------------- #
def test_heaviside_midpoint():
    np.testing.assert_array_equal(heaviside([-1.0, 0.0, 2.0]), [0.0, 0.5, 1.0])


def test_profile_interpolates():
    p = Profile(np.array([0.0, 1.0, 2.0]), np.array([0.0, 2.0, 0.0]))
    assert p.span == 2.0
    assert p(0.5) == pytest.approx(1.0)


def test_state_rejects_bad_nodes():
    with pytest.raises(AssertionError):
        HcfState(np.array([0.0, 1.0, 1.0]), np.zeros(3), np.array([0.0, 1.0]), np.zeros(2))
    with pytest.raises(AssertionError):
        HcfState(np.array([0.1, 1.0]), np.zeros(2), np.array([0.0, 1.0]), np.zeros(2))


def test_window_underflow():
    model = _model()
    short = HcfState(np.array([0.0, model.tau1]), np.zeros(2), np.array([0.0, 2 * model.tau2]), np.zeros(2))
    with pytest.raises(WindowUnderflow):
        short.check_window(model)
    with pytest.raises(WindowUnderflow):
        InputHistory.zero(0.5 * _horizon(model)).require(model)
    HcfState.zeros(model).check_window(model)


def test_resample_keeps_linear_profiles():
    model = with_coupling(_model(), None)
    tau1 = np.array([0.0, 0.3, 2 * model.tau1])
    eta = HcfState(tau1, 2.0 * tau1, np.array([0.0, 2 * model.tau2]), np.array([1.0, 1.0]))
    dtau = 2 * model.tau1 / 8
    fine = eta.resample(dtau)
    assert fine.tau1.size == 9
    np.testing.assert_allclose(fine.eta1, 2.0 * fine.tau1, atol=1e-14)


# --------------------------------------------------------------------------- #
def test_y1_lookup_switches_to_inputs():
    model = _model()
    tau = np.array([0.0, 2 * model.tau1])
    look = y1_lookup(model, tau, np.array([1.0, 3.0]), InputHistory.constant(0.25, _horizon(model)))
    assert look(model.tau1) == pytest.approx(2.0)
    assert look(2 * model.tau1 + 0.1) == pytest.approx(-0.25)


def test_eta1_needs_no_predictions():
    model = _model()
    xbar = _state(model.z)
    p = eta1_profile(model, xbar)
    assert p.tau[0] == pytest.approx(0.0, abs=1e-14)
    assert p.span == pytest.approx(2 * model.tau1)
    assert p.values[0] == xbar.xp1[-1] and p.values[-1] == -xbar.xm1[-1]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_roundtrip_is_exact(seed):
    model, kernel = _model(), _kernel()
    xbar = _state(model.z, seed)
    inputs = InputHistory(lambda tau: 0.1 * np.cos(3 * tau), _horizon(model))
    back = hcf_to_xbar(model, kernel, xbar_to_hcf(model, kernel, xbar, inputs), inputs)
    np.testing.assert_allclose(back.stack(), xbar.stack(), atol=1e-12)


def test_eta_at_zero_is_flat_output():
    model, kernel = _model(), _kernel()
    x = _state(model.z, 5)
    eta = xbar_to_hcf(model, kernel, apply_volterra(kernel, x), InputHistory.zero(_horizon(model)))
    np.testing.assert_allclose(eta.flat_output, flat_output(model, kernel, x), atol=1e-12)


# --------------------------------------------------------------------------- #
def test_uncoupled_boundary_is_the_input():
    model = with_coupling(_model(), None)
    kernel = solve_kernel(model, model.dz)
    eta = xbar_to_hcf(model, kernel, _state(model.z), InputHistory.zero(_horizon(model)))
    inflow = hcf_boundary(model, kernel, eta, [0.3, -0.7], InputHistory.constant(1.0, _horizon(model)))
    assert inflow == pytest.approx((-0.3, 0.7))


def test_integrals_are_linear():
    model, kernel = _model(), _kernel()
    f = lambda tau: np.sin(tau) + 0.5
    assert prediction_integral(model, kernel, lambda tau: 3 * f(tau)) == pytest.approx(
        3 * prediction_integral(model, kernel, f), rel=1e-12)
    assert eta_integral(model, kernel, np.zeros_like) == 0.0


def test_decoupling_closes_the_loop():
    """Feeding the decoupling input into the boundary map returns v."""
    model, kernel = _model(), _kernel()
    cfg = ControllerConfig(0.3, -0.4, make_reference((0, 0), (0.1, -0.2), 1.0, 2.0))
    eta = xbar_to_hcf(model, kernel, _state(model.z, 3), InputHistory.zero(_horizon(model)))
    v_now = np.array([0.12, -0.05])
    v_future = future_v1(eta.profile(1), cfg, 0.5, _horizon(model))
    u_bar = decoupling_feedback(eta, v_now, v_future, model, kernel)
    inflow = hcf_boundary(model, kernel, eta, u_bar, InputHistory(lambda tau: -v_future(tau), _horizon(model)))
    np.testing.assert_allclose(inflow, v_now, atol=1e-10)


def test_slow_channel_matches_travel_time_quadrature():
    """eta2 against adaptive quadrature of the a0 integrals written in the travel time of the slow channel."""
    model, kernel = _model(161), _kernel(161)
    t = model.transport
    xbar = _state(model.z, 4)
    # continuous at s = 2 tau1, where y1 switches from -x1- to the predicted input
    inputs = InputHistory(lambda tau: xbar.xm1[-1] + 0.1 * np.sin(3 * tau), _horizon(model))
    eta = xbar_to_hcf(model, kernel, xbar, inputs)

    def y1(s: float) -> float:
        if s <= t.tau1: return float(np.interp(t.tau1 - s, t.phi1, xbar.xp1))
        if s <= 2 * t.tau1: return float(np.interp(s - t.tau1, t.phi1, -xbar.xm1))
        return -float(inputs(s - 2 * t.tau1))

    a0 = lambda sign, sigma: float(kernel.a0(sign, model.psi(2, sigma)))
    integral = lambda f, lo, hi: quad(f, lo, hi, limit=200)[0]
    upper, lower = [], []
    for k in range(0, model.n, 8):
        p = t.phi2[k]
        upper.append(integral(lambda s: a0("+", s) * y1(t.tau1 - p + s), p, t.tau2))
        lower.append(integral(lambda s: a0("+", s) * y1(t.tau1 + p + s), 0.0, t.tau2)
                     + integral(lambda s: a0("-", s) * y1(t.tau1 + p - s), 0.0, p))
    nodes = np.arange(0, model.n, 8)
    assert np.max(np.abs(upper)) > 1e-2
    np.testing.assert_allclose(eta.eta2_at(t.tau2 - t.phi2[nodes]), xbar.xp2[nodes] + np.array(upper), atol=1e-3)
    np.testing.assert_allclose(eta.eta2_at(t.tau2 + t.phi2[nodes]), np.array(lower) - xbar.xm2[nodes], atol=1e-3)
