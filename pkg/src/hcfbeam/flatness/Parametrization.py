from __future__ import annotations

from typing import Callable, Literal

import numpy as np

from ..backstepping import TriangularKernel, apply_volterra, backstepping_input, trapezoid_weights
from ..model import BeamModel, RiemannField
from .Reference import ReferenceTrajectory

# Maps a prediction offset tau >= 0 to y_i(t + tau) at a fixed time t.
FlatLookup = Callable[[np.ndarray], np.ndarray]

_SNAP = 1e-12


# ---------------------------------------------------------------------- #
# QUADRATURE IN THE PREDICTION VARIABLE
# ---------------------------------------------------------------------- #
def a0_bar(model: BeamModel, kernel: TriangularKernel, sign: Literal["-", "+"], sigma) -> np.ndarray:
    """a0(psi_2(sigma)), the coupling re-expressed in travel time of the slow channel."""
    return kernel.a0(sign, model.psi(2, sigma))


def sigma_quadrature(model: BeamModel, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Trapezoid nodes and weights on [lo, hi] built from the travel times phi_2(z_k)
    of the model grid, with both limits inserted as nodes.
    """
    if hi - lo <= _SNAP:
        return np.empty(0), np.empty(0)
    phi2 = model.transport.phi2
    inner = phi2[(phi2 > lo + _SNAP) & (phi2 < hi - _SNAP)]
    nodes = np.concatenate([[lo], inner, [hi]])
    gaps = np.diff(nodes)
    weights = np.zeros_like(nodes)
    weights[:-1] += 0.5 * gaps
    weights[1:] += 0.5 * gaps
    return nodes, weights


def a0_integral(model: BeamModel, kernel: TriangularKernel, sign: Literal["-", "+"],
                lo: float, hi: float, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """int_lo^hi a0_bar(sigma) f(sigma) d sigma."""
    nodes, weights = sigma_quadrature(model, lo, hi)
    if nodes.size == 0: return 0.0
    return float(np.sum(weights * a0_bar(model, kernel, sign, nodes) * f(nodes)))


# ---------------------------------------------------------------------- #
# FLAT PARAMETRIZATION
# ---------------------------------------------------------------------- #
def slow_channel_integrals(model: BeamModel, kernel: TriangularKernel, y1: FlatLookup) -> tuple[np.ndarray, np.ndarray]:
    """
    The a0-weighted y1 integrals of the slow channel at every grid point z_k:
    ``upper[k] = int_{z_k}^1 a0+/lambda2 y1(tau1 - phi2(z_k) + phi2(zeta))`` and
    ``lower[k] = int_0^1 a0+/lambda2 y1(tau1 + phi2(z_k) + phi2(zeta))
    + int_0^{z_k} a0-/lambda2 y1(tau1 + phi2(z_k) - phi2(zeta))``.
    """
    t = model.transport
    z, tau1, phi2 = model.z, t.tau1, t.phi2
    g_minus = kernel.a0("-", z) / t.lambda2
    g_plus = kernel.a0("+", z) / t.lambda2

    W = trapezoid_weights(z)                  # int_0^{z_k}
    W_up = W[-1][None, :] - W                 # int_{z_k}^1
    dphi = phi2[None, :] - phi2[:, None]      # phi2(zeta_l) - phi2(z_k)

    arg_up = np.where(W_up > 0.0, tau1 + dphi, tau1)
    upper = np.sum(W_up * g_plus[None, :] * y1(arg_up), axis=1)

    arg_full = tau1 + phi2[:, None] + phi2[None, :]
    arg_low = np.where(W > 0.0, tau1 - dphi, tau1)
    lower = (np.sum(W[-1][None, :] * g_plus[None, :] * y1(arg_full), axis=1)
             + np.sum(W * g_minus[None, :] * y1(arg_low), axis=1))
    return upper, lower


def state_from_flat(model: BeamModel, kernel: TriangularKernel, y1: FlatLookup, y2: FlatLookup) -> RiemannField:
    """Target-system state xbar(., t) from the flat-output predictions y_i(t + tau)."""
    t = model.transport
    upper, lower = slow_channel_integrals(model, kernel, y1)
    return RiemannField(
        z=model.z,
        xm1=-y1(t.tau1 + t.phi1),
        xm2=-y2(t.tau2 + t.phi2) + lower,
        xp1=y1(t.tau1 - t.phi1),
        xp2=y2(t.tau2 - t.phi2) - upper,
    )


def input_from_flat(model: BeamModel, kernel: TriangularKernel, y1: FlatLookup, y2: FlatLookup) -> np.ndarray:
    """Target-system input u_bar(t) from the flat-output predictions."""
    tau1, tau2, dtau = model.tau1, model.tau2, model.delta_tau
    u1 = -float(y1(np.asarray(2.0 * tau1)))
    u2 = (-float(y2(np.asarray(2.0 * tau2)))
          + a0_integral(model, kernel, "+", 0.0, tau2, lambda s: y1(tau1 + tau2 + s))
          + a0_integral(model, kernel, "-", 0.0, dtau, lambda s: y1(tau1 + tau2 - s))
          + a0_integral(model, kernel, "-", dtau, tau2, lambda s: y1(tau1 + tau2 - s)))
    return np.array([u1, u2])


def _lookups(ref: ReferenceTrajectory, t: float) -> tuple[FlatLookup, FlatLookup]:
    return (lambda tau: ref.y(1, t + np.asarray(tau)), lambda tau: ref.y(2, t + np.asarray(tau)))


def parametrize_state(model: BeamModel, kernel: TriangularKernel, ref: ReferenceTrajectory, t: float) -> RiemannField:
    return state_from_flat(model, kernel, *_lookups(ref, t))


def parametrize_input(model: BeamModel, kernel: TriangularKernel, ref: ReferenceTrajectory, t: float) -> np.ndarray:
    return input_from_flat(model, kernel, *_lookups(ref, t))


def reference_state(model: BeamModel, kernel: TriangularKernel, ref: ReferenceTrajectory, t: float) -> RiemannField:
    """x_r(., t) = T^-1(xbar_r(., t))."""
    return apply_volterra(kernel, parametrize_state(model, kernel, ref, t), "inverse")


def feedforward_physical(model: BeamModel, kernel: TriangularKernel, ref: ReferenceTrajectory, t: float) -> np.ndarray:
    """Physical feedforward u_r(t): input parametrization composed with the backstepping feedback."""
    x_r = reference_state(model, kernel, ref, t)
    return backstepping_input(model, kernel, x_r, parametrize_input(model, kernel, ref, t))
