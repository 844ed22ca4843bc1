from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..backstepping import TriangularKernel, apply_volterra, backstepping_input
from ..flatness import ReferenceTrajectory
from ..hcf import HcfState, InputHistory, Profile, eta1_profile, eta_integral, prediction_integral, xbar_to_hcf
from ..model import BeamModel, RiemannField
from .exceptions import GainOutOfRange, NegativeOffset

_SLACK = 1e-12


@dataclass(frozen=True)
class ControllerConfig:
    """Tracking gains of the error recursion e_i(t + 2 tau_i) + gamma_i e_i(t) = 0, and the reference."""
    gamma1: float
    gamma2: float
    ref: ReferenceTrajectory

    def __post_init__(self):
        for name, g in (("gamma1", self.gamma1), ("gamma2", self.gamma2)):
            if not abs(g) < 1.0:
                raise GainOutOfRange(f"{name} = {g} must satisfy |{name}| < 1")

    def gamma(self, i: int) -> float:
        return self.gamma1 if i == 1 else self.gamma2


# ---------------------------------------------------------------------- #
# PER-CHANNEL TRACKING
# ---------------------------------------------------------------------- #
def tracking_v(eta: HcfState, cfg: ControllerConfig, t: float) -> np.ndarray:
    """v_i(t) = y_ir(t + 2 tau_i) - gamma_i (eta_i(0, t) - y_ir(t))."""
    ref = cfg.ref
    return np.array([
        float(ref.y(i, t + span)) - cfg.gamma(i) * (float(y0) - float(ref.y(i, t)))
        for i, span, y0 in ((1, eta.tau1[-1], eta.eta1[0]), (2, eta.tau2[-1], eta.eta2[0]))
    ])


def resolve_prediction(eta1: Profile, cfg: ControllerConfig, t: float, tau) -> np.ndarray:
    """
    eta1(0, t + tau). Offsets inside the profile are read off it; beyond it the
    closed-loop error recursion is applied until the offset falls back inside:
    eta1(0, t + tau) = y1r(t + tau) - gamma1 (eta1(0, t + tau - 2 tau1) - y1r(t + tau - 2 tau1)).
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < -_SLACK):
        raise NegativeOffset(f"Prediction offset {float(np.min(tau)):.6g} < 0")
    tau = np.maximum(tau, 0.0)
    span = eta1.span
    flat = tau.reshape(-1)
    out = np.array(eta1(np.minimum(flat, span)), dtype=float)
    beyond = flat > span
    if np.any(beyond):
        s = flat[beyond]
        prev = resolve_prediction(eta1, cfg, t, s - span)
        out[beyond] = cfg.ref.y(1, t + s) - cfg.gamma1 * (prev - cfg.ref.y(1, t + s - span))
    return out.reshape(tau.shape)


def future_v1(eta1: Profile, cfg: ControllerConfig, t: float, horizon: float) -> InputHistory:
    """v1(t + tau) on [0, horizon], each value built from a resolved prediction."""
    span = eta1.span

    def v1(tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        return cfg.ref.y(1, t + tau + span) - cfg.gamma1 * (resolve_prediction(eta1, cfg, t, tau) - cfg.ref.y(1, t + tau))

    return InputHistory(v1, horizon)


def predicted_inputs(eta1: Profile, cfg: ControllerConfig, t: float, horizon: float) -> InputHistory:
    """ū1(t + tau) = -v1(t + tau): the input predictions of the closed loop, free of future plant data."""
    v1 = future_v1(eta1, cfg, t, horizon)
    return InputHistory(lambda tau: -v1(tau), horizon)


# ---------------------------------------------------------------------- #
# DECOUPLING AND COMPOSITION
# ---------------------------------------------------------------------- #
def decoupling_feedback(eta: HcfState, v_now, v_future: InputHistory, model: BeamModel,
                        kernel: TriangularKernel) -> np.ndarray:
    """Target-system input that turns both HCF inflow boundaries into eta_i(2 tau_i, t) = v_i(t)."""
    v_future.require(model)
    v1, v2 = (float(v) for v in np.asarray(v_now, dtype=float))
    u2 = -v2 + eta_integral(model, kernel, eta.eta1_at) + prediction_integral(model, kernel, v_future)
    return np.array([-v1, u2])


def hcf_law(eta: HcfState, cfg: ControllerConfig, model: BeamModel, kernel: TriangularKernel,
            t: float) -> tuple[np.ndarray, InputHistory]:
    """ū(t) from the HCF state, together with the input predictions it is consistent with."""
    horizon = model.delta_tau + model.tau2
    profile = eta.profile(1)
    v_future = future_v1(profile, cfg, t, horizon)
    u_bar = decoupling_feedback(eta, tracking_v(eta, cfg, t), v_future, model, kernel)
    return u_bar, predicted_inputs(profile, cfg, t, horizon)


def control_law(x: RiemannField, cfg: ControllerConfig, model: BeamModel, kernel: TriangularKernel,
                t: float) -> np.ndarray:
    """Physical boundary input u(t) from the state x(., t) and the reference alone."""
    xbar = apply_volterra(kernel, x, "forward")
    inputs = predicted_inputs(eta1_profile(model, xbar), cfg, t, model.delta_tau + model.tau2)
    eta = xbar_to_hcf(model, kernel, xbar, inputs)
    u_bar, _ = hcf_law(eta, cfg, model, kernel, t)
    return backstepping_input(model, kernel, x, u_bar)
