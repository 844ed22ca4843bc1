from __future__ import annotations

from typing import Callable

import numpy as np

from ..backstepping import TriangularKernel
from ..flatness import a0_bar, a0_integral
from ..model import BeamModel
from .HcfState import HcfState, InputHistory


def heaviside(x) -> np.ndarray:
    """Unit step with h(0) = 1/2."""
    x = np.asarray(x, dtype=float)
    return np.where(x > 0.0, 1.0, np.where(x < 0.0, 0.0, 0.5))


def a0_tilde(model: BeamModel, kernel: TriangularKernel, tau) -> np.ndarray:
    """Input-prediction weight on [0, delta_tau + tau2]: the a0- branch before delta_tau, a0+ after."""
    tau = np.asarray(tau, dtype=float)
    d = model.delta_tau
    return (a0_bar(model, kernel, "-", np.clip(d - tau, 0.0, model.tau2)) * heaviside(d - tau)
            + a0_bar(model, kernel, "+", np.clip(tau - d, 0.0, model.tau2)) * heaviside(tau - d))


def eta_integral(model: BeamModel, kernel: TriangularKernel, eta1: Callable[[np.ndarray], np.ndarray]) -> float:
    """int_{tau1}^{2 tau1} a0-(tau1 + tau2 - tau) eta1(tau) d tau."""
    s = model.tau1 + model.tau2
    return a0_integral(model, kernel, "-", model.delta_tau, model.tau2, lambda sigma: eta1(s - sigma))


def prediction_integral(model: BeamModel, kernel: TriangularKernel, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """
    int_0^{delta_tau + tau2} a0_tilde(tau) f(tau) d tau, split at the switching
    point delta_tau and evaluated branch by branch.
    """
    d = model.delta_tau
    return (a0_integral(model, kernel, "-", 0.0, d, lambda sigma: f(d - sigma))
            + a0_integral(model, kernel, "+", 0.0, model.tau2, lambda sigma: f(d + sigma)))


def hcf_boundary(model: BeamModel, kernel: TriangularKernel, eta: HcfState, u_bar_now,
                 inputs: InputHistory) -> tuple[float, float]:
    """Inflow values (eta1(2 tau1, t), eta2(2 tau2, t)) driven by the target-system input."""
    eta.check_window(model)
    inputs.require(model)
    u1, u2 = (float(v) for v in np.asarray(u_bar_now, dtype=float))
    eta2_in = -u2 + eta_integral(model, kernel, eta.eta1_at) - prediction_integral(model, kernel, inputs)
    return -u1, eta2_in
