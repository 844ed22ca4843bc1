from functools import lru_cache

import numpy as np
import pytest

from hcfbeam.backstepping import solve_kernel
from hcfbeam.control import ControllerConfig
from hcfbeam.flatness import make_reference
from hcfbeam.model import BeamParameters, RiemannField, build_model, with_coupling
from hcfbeam.simulation import (ClosedLoopInput, CflViolation, FeedforwardInput, NotRegisteredException, Scheme,
                                SchemeUnsupported, SimConfig, ZeroInput, delay_line_step, initial_conditions,
                                make_input, registered_initial_conditions, settle_time, simulate, stationary_flat_output,
                                stationary_profile, tracking_tolerance)


# --------------------------------------------------------------------------- #
@lru_cache(maxsize=None)
def _model(n: int = 21):
    return build_model(BeamParameters.nominal(), n)


@lru_cache(maxsize=None)
def _kernel(n: int = 21):
    return solve_kernel(_model(n), 1.0 / (n - 1))


REF = make_reference((0.0, 0.0), (0.1, -0.2), 1.0, 2.0)
DT = 0.04


def _closed_loop(g1: float = 0.0, g2: float = 0.0) -> ClosedLoopInput:
    return ClosedLoopInput(ControllerConfig(g1, g2, REF))


# --------------------------------------------------------------------------- #
def test_registries():
    assert {"upwind", "delay-line"} <= set(Scheme.registered())
    assert {"zero", "sin2", "physical"} <= set(registered_initial_conditions())
    with pytest.raises(NotRegisteredException):
        Scheme.get_registered("leapfrog")
    with pytest.raises(NotRegisteredException):
        initial_conditions("gauss", _model())
    assert isinstance(make_input("feedforward", ref=REF), FeedforwardInput)
    with pytest.raises(AssertionError):
        make_input("closed-loop")


def test_initial_conditions_are_clamped():
    model = _model()
    assert initial_conditions("sin2", model).clamped_residual() < 1e-15
    x = initial_conditions("physical", model, w0="0.1*z**2", phi0="0.2*z")
    assert x.clamped_residual() < 1e-12
    assert np.max(np.abs(x.stack())) > 0.0


def test_sim_config():
    sim = SimConfig(t_end=1.0, dt=0.04, snapshot_dt=0.2)
    assert sim.steps == 25 and sim.snapshot_every == 5
    with pytest.raises(AssertionError):
        SimConfig(t_end=0.0, dt=0.1)


def test_delay_line_step():
    assert delay_line_step(_model(), 0.04) == pytest.approx(0.04)
    assert delay_line_step(_model(), 0.3) == pytest.approx(0.2)


# --------------------------------------------------------------------------- #
def test_upwind_rejects_large_steps():
    with pytest.raises(CflViolation):
        simulate(_model(), _kernel(), SimConfig(t_end=1.0, dt=0.1))


def test_upwind_zero_stays_zero():
    traj = simulate(_model(), _kernel(), SimConfig(t_end=1.0, dt=DT))
    assert not np.any(traj.y) and not np.any(traj.u)
    assert traj.e is None
    assert traj.t.size == 26 and traj.w.shape == (traj.snapshot_t.size, _model().n)


def test_upwind_closed_loop_tracks():
    """Zero gains from the sin2 state: errors settle, y arrives at yT and w at w_T within 5 dz A."""
    model, kernel = _model(101), _kernel(101)
    dt = 0.008
    settled = [settle_time(model, i, "upwind", dt) for i in (1, 2)]
    t_end = settled[1] + 0.5
    traj = simulate(model, kernel, SimConfig(t_end=t_end, dt=dt, ic="sin2", source=_closed_loop(), snapshot_dt=t_end))
    tol = tracking_tolerance(model)
    assert tol == pytest.approx(0.01)
    for i in range(2):
        assert np.max(np.abs(traj.e[traj.t >= settled[i], i])) < tol
    assert np.max(np.abs(traj.y[traj.t >= settled[1]] - np.asarray(REF.yT))) < tol
    w_T, _ = stationary_profile(model, kernel, REF.yT)
    np.testing.assert_allclose(traj.w[-1], w_T, atol=tol)


def test_upwind_keeps_the_clamped_end():
    traj = simulate(_model(), _kernel(), SimConfig(t_end=1.0, dt=DT, ic="sin2", source=_closed_loop(), snapshot_dt=DT))
    assert traj.snapshot_t.size == traj.t.size
    assert max(x.clamped_residual() for x in traj.x) <= 1e-12


def test_settle_time():
    model = _model(101)
    assert settle_time(model, 1, "delay-line", 0.01) == pytest.approx(2 * model.tau1 + 0.02)
    assert settle_time(model, 2, "upwind", 0.01) == pytest.approx(2 * model.tau2 + 0.6)


def test_upwind_converges_to_the_delay_line():
    """From rest the delay line tracks exactly; the upwind gap in y shrinks at first order."""
    start = _model().tau1 + 2 * _model().tau2
    ref = make_reference((0.0, 0.0), (0.1, -0.2), start, start + 1.0)
    source = ClosedLoopInput(ControllerConfig(0.0, 0.0, ref))
    t_end = ref.tT + 0.5
    exact = simulate(_model(), _kernel(), SimConfig(t_end=t_end, dt=DT, scheme="delay-line", source=source,
                                                    snapshot_dt=t_end))
    assert np.max(np.abs(exact.e)) < 1e-9
    gaps = []
    for n in (41, 81):
        model = _model(n)
        traj = simulate(model, _kernel(n), SimConfig(t_end=t_end, dt=model.dz / 1.25, source=source, snapshot_dt=t_end))
        gaps.append(np.max(np.abs(traj.y - ref(traj.t))))
    assert gaps[1] < 0.01
    assert np.log2(gaps[0] / gaps[1]) >= 0.6


# --------------------------------------------------------------------------- #
def test_delay_line_rejects_unsupported_setups():
    coeffs = dict(rho=0.8, S="1 + 0.1*z", kappa=1.25, J=0.98, EI=0.5)
    tapered = build_model(BeamParameters.from_values(**coeffs), 21)
    with pytest.raises(SchemeUnsupported):
        simulate(tapered, solve_kernel(tapered, 0.05), SimConfig(t_end=1.0, dt=DT, scheme="delay-line"))
    with pytest.raises(SchemeUnsupported):
        simulate(_model(), _kernel(), SimConfig(t_end=1.0, dt=0.03, scheme="delay-line", source=_closed_loop()))
    with pytest.raises(SchemeUnsupported):
        simulate(_model(), _kernel(), SimConfig(t_end=1.0, dt=DT, scheme="delay-line", source=ZeroInput()))


def test_delay_line_lossless_transport():
    """Without coupling and input, y_i(t + 2 tau_i) = -y_i(t) on the delay grid."""
    model = with_coupling(_model(), None)
    kernel = solve_kernel(model, model.dz)
    z = model.z
    bump = 0.3 * np.sin(np.pi * z) ** 2 + 0.1 * z ** 2
    x0 = RiemannField(z=z, xm1=bump, xm2=0.5 * bump, xp1=-bump + 0.2 * z ** 2, xp2=-0.5 * bump + 0.1 * z ** 2)
    traj = simulate(model, kernel, SimConfig(t_end=3.2, dt=DT, scheme="delay-line", ic=x0))
    k1 = int(round(2 * model.tau1 / DT))
    assert traj.y[0, 0] == pytest.approx(x0.xp1[-1])
    assert traj.y[k1, 0] == pytest.approx(-x0.xm1[-1], abs=1e-12)
    assert traj.y[2 * k1, 0] == pytest.approx(-traj.y[k1, 0], abs=1e-12)
    k2 = int(round(2 * model.tau2 / DT))
    assert traj.y[k2, 1] == pytest.approx(-x0.xm2[-1], abs=1e-12)


def test_delay_line_deadbeat():
    """With zero gains the error vanishes one step after 2 tau_i has elapsed."""
    model, kernel = _model(), _kernel()
    traj = simulate(model, kernel, SimConfig(t_end=5.0, dt=DT, scheme="delay-line", source=_closed_loop()))
    for i, tau in ((0, model.tau1), (1, model.tau2)):
        settled = traj.t > 2 * tau + 0.5 * DT
        assert np.max(np.abs(traj.e[settled, i])) < 1e-9


def test_delay_line_geometric_decay():
    model, kernel = _model(), _kernel()
    g = 0.5
    traj = simulate(model, kernel, SimConfig(t_end=5.0, dt=DT, scheme="delay-line", source=_closed_loop(g, g)))
    k1 = int(round(2 * model.tau1 / DT))
    for k in range(1, traj.t.size - k1):
        assert traj.e[k + k1, 0] == pytest.approx(-g * traj.e[k, 0], abs=1e-9)


def test_delay_line_settles_on_stationary_profile():
    model, kernel = _model(), _kernel()
    traj = simulate(model, kernel, SimConfig(t_end=5.0, dt=DT, scheme="delay-line", source=_closed_loop(),
                                             snapshot_dt=1.0))
    w_T, phi_T = stationary_profile(model, kernel, REF.yT)
    np.testing.assert_allclose(traj.w[-1], w_T, atol=1e-9)
    np.testing.assert_allclose(traj.phi[-1], phi_T, atol=1e-9)


# --------------------------------------------------------------------------- #
def test_stationary_profile_is_linear():
    model, kernel = _model(41), _kernel(41)
    w1, phi1 = stationary_profile(model, kernel, (0.1, -0.2))
    w2, phi2 = stationary_profile(model, kernel, (0.2, -0.4))
    np.testing.assert_allclose(w2, 2 * w1, atol=1e-12)
    np.testing.assert_allclose(phi2, 2 * phi1, atol=1e-12)
    assert w1[0] == 0.0 and phi1[0] == 0.0


def test_stationary_flat_output_recovers_y():
    model, kernel = _model(41), _kernel(41)
    w, phi = stationary_profile(model, kernel, (0.1, -0.2))
    np.testing.assert_allclose(stationary_flat_output(model, kernel, w, phi), [0.1, -0.2], atol=2e-3)
