from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..model import BeamModel
from .exceptions import WindowUnderflow

_SLACK = 1e-12


@dataclass(frozen=True)
class Profile:
    """One sampled component eta_i(., t), linearly interpolated between samples."""
    tau: np.ndarray
    values: np.ndarray

    def __call__(self, s) -> np.ndarray:
        return np.interp(s, self.tau, self.values)

    @property
    def span(self) -> float:
        return float(self.tau[-1])


@dataclass(frozen=True)
class HcfState:
    """
    The HCF state at a fixed time t: two sampled profiles eta_i(tau, t) on
    tau in [0, 2 tau_i]. eta_i(0, t) is the flat output y_i(t).

    The sample grids are kept per component and need not be uniform;
    values between samples are linear interpolants.
    """
    tau1: np.ndarray
    eta1: np.ndarray
    tau2: np.ndarray
    eta2: np.ndarray

    def __post_init__(self):
        for name, tau, eta in (("eta1", self.tau1, self.eta1), ("eta2", self.tau2, self.eta2)):
            assert tau.shape == eta.shape, f"{name} has {eta.size} samples on {tau.size} nodes."
            assert tau.size >= 2 and np.all(np.diff(tau) > 0.0), f"{name} nodes must be strictly increasing."
            assert abs(tau[0]) <= _SLACK, f"{name} must start at tau = 0."

    def eta1_at(self, tau) -> np.ndarray:
        return np.interp(tau, self.tau1, self.eta1)

    def eta2_at(self, tau) -> np.ndarray:
        return np.interp(tau, self.tau2, self.eta2)

    def profile(self, i: int) -> Profile:
        return Profile(self.tau1, self.eta1) if i == 1 else Profile(self.tau2, self.eta2)

    @property
    def flat_output(self) -> np.ndarray:
        return np.array([self.eta1[0], self.eta2[0]])

    def check_window(self, model: BeamModel) -> None:
        if self.tau1[-1] < 2.0 * model.tau1 - 1e-9 or self.tau2[-1] < 2.0 * model.tau2 - 1e-9:
            raise WindowUnderflow(
                f"eta profiles end at ({self.tau1[-1]:.6g}, {self.tau2[-1]:.6g}), "
                f"need ({2.0 * model.tau1:.6g}, {2.0 * model.tau2:.6g})")

    def resample(self, dtau: float) -> HcfState:
        """The same profiles on uniform grids of spacing ``dtau``; each 2 tau_i must be a multiple of it."""
        grids = []
        for tau in (self.tau1, self.tau2):
            steps = tau[-1] / dtau
            assert abs(steps - round(steps)) < 1e-8, f"2 tau = {tau[-1]} is not a multiple of {dtau}."
            grids.append(np.linspace(0.0, tau[-1], int(round(steps)) + 1))
        return HcfState(grids[0], self.eta1_at(grids[0]), grids[1], self.eta2_at(grids[1]))

    @classmethod
    def zeros(cls, model: BeamModel, samples: int = 2) -> HcfState:
        tau1 = np.linspace(0.0, 2.0 * model.tau1, samples)
        tau2 = np.linspace(0.0, 2.0 * model.tau2, samples)
        return cls(tau1, np.zeros_like(tau1), tau2, np.zeros_like(tau2))


@dataclass(frozen=True)
class InputHistory:
    """ū1(t + tau) for tau in [0, horizon], as a callable of the offset tau."""
    u1: Callable[[np.ndarray], np.ndarray]
    horizon: float

    def require(self, model: BeamModel) -> None:
        need = model.delta_tau + model.tau2
        if self.horizon < need - _SLACK:
            raise WindowUnderflow(f"Input predictions cover [0, {self.horizon:.6g}], need [0, {need:.6g}]")

    def __call__(self, tau) -> np.ndarray:
        return np.asarray(self.u1(np.asarray(tau, dtype=float)), dtype=float)

    @classmethod
    def zero(cls, horizon: float) -> InputHistory:
        return cls(lambda tau: np.zeros_like(np.asarray(tau, dtype=float)), horizon)

    @classmethod
    def constant(cls, value: float, horizon: float) -> InputHistory:
        return cls(lambda tau: np.full_like(np.asarray(tau, dtype=float), value), horizon)

    @classmethod
    def from_samples(cls, offsets: np.ndarray, values: np.ndarray) -> InputHistory:
        offsets, values = np.asarray(offsets, dtype=float), np.asarray(values, dtype=float)
        return cls(lambda tau: np.interp(tau, offsets, values), float(offsets[-1]))
