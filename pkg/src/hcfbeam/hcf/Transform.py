from __future__ import annotations

import numpy as np

from ..backstepping import TriangularKernel
from ..flatness import slow_channel_integrals, state_from_flat
from ..flatness.Parametrization import FlatLookup
from ..model import BeamModel, RiemannField
from ..model.Riemann import check_grid
from .HcfState import HcfState, InputHistory, Profile


# ---------------------------------------------------------------------- #
# FLAT-OUTPUT LOOKUPS
# ---------------------------------------------------------------------- #
def y1_lookup(model: BeamModel, tau: np.ndarray, eta1: np.ndarray, inputs: InputHistory) -> FlatLookup:
    """
    y1(t + s): read off the eta1 profile for s <= 2 tau1, and off the predicted
    input beyond it, y1(t + s) = -ū1(t + s - 2 tau1).
    """
    edge = 2.0 * model.tau1

    def lookup(s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.where(s <= edge, np.interp(s, tau, eta1), -inputs(np.maximum(s - edge, 0.0)))

    return lookup


def flat_lookups(model: BeamModel, eta: HcfState, inputs: InputHistory) -> tuple[FlatLookup, FlatLookup]:
    return y1_lookup(model, eta.tau1, eta.eta1, inputs), eta.eta2_at


# ---------------------------------------------------------------------- #
# TRANSFORMS
# ---------------------------------------------------------------------- #
def eta1_profile(model: BeamModel, xbar: RiemannField) -> Profile:
    """eta1 on the nodes tau1 -+ phi1(z_k): x1+ read backwards, then -x1-. Needs no input predictions."""
    check_grid(model, xbar.z)
    t = model.transport
    return Profile(np.concatenate([(t.tau1 - t.phi1)[::-1], (t.tau1 + t.phi1)[1:]]),
                   np.concatenate([xbar.xp1[::-1], -xbar.xm1[1:]]))


def xbar_to_hcf(model: BeamModel, kernel: TriangularKernel, xbar: RiemannField, inputs: InputHistory) -> HcfState:
    """
    HCF state of a target-system state. The profiles are sampled where the
    characteristics through the model grid hit the prediction axis,
    tau = tau_i -+ phi_i(z_k), so the map is inverted exactly by :func:`hcf_to_xbar`.
    """
    inputs.require(model)
    t = model.transport
    p1 = eta1_profile(model, xbar)

    upper, lower = slow_channel_integrals(model, kernel, y1_lookup(model, p1.tau, p1.values, inputs))
    tau2 = np.concatenate([(t.tau2 - t.phi2)[::-1], (t.tau2 + t.phi2)[1:]])
    eta2 = np.concatenate([(xbar.xp2 + upper)[::-1], (lower - xbar.xm2)[1:]])
    return HcfState(tau1=p1.tau, eta1=p1.values, tau2=tau2, eta2=eta2)


def hcf_to_xbar(model: BeamModel, kernel: TriangularKernel, eta: HcfState, inputs: InputHistory) -> RiemannField:
    eta.check_window(model)
    inputs.require(model)
    return state_from_flat(model, kernel, *flat_lookups(model, eta, inputs))
