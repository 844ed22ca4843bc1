from __future__ import annotations

import math
from abc import ABC, abstractmethod
from fractions import Fraction
from typing import ClassVar, NamedTuple, Optional, Type

import numpy as np

from ..backstepping import (TriangularKernel, apply_volterra, backstepping_input, flat_output,
                            target_input)
from ..hcf import HcfState, InputHistory, eta1_profile, hcf_boundary, hcf_to_xbar, xbar_to_hcf
from ..model import BeamModel, RiemannField
from ..model.Riemann import check_grid
from .exceptions import AlreadyRegisteredException, CflViolation, NotRegisteredException, SchemeUnsupported
from .Inputs import InputSource


class Sample(NamedTuple):
    """Signals observed at one time instant."""
    y: np.ndarray
    u: np.ndarray
    u_bar: np.ndarray


def scheme(identifier: str):
    def decorator(cls: Type[Scheme]):
        cls.id = identifier
        cls.__name__ = identifier.title().replace("-", "") + "Scheme"
        Scheme._register_scheme(cls)
        return cls
    return decorator


class Scheme(ABC):
    """A time stepper for the closed or open boundary-controlled beam."""
    id: ClassVar[str]
    _registry: ClassVar[dict[str, Type[Scheme]]] = {}

    def __init__(self, model: BeamModel, kernel: TriangularKernel, dt: float, source: InputSource):
        self.model = model
        self.kernel = kernel
        self.dt = float(dt)
        self.source = source

    @classmethod
    def _register_scheme(cls, scheme_: Type[Scheme]):
        if scheme_.id in cls._registry: raise AlreadyRegisteredException(scheme_.id)
        cls._registry[scheme_.id] = scheme_

    @classmethod
    def is_registered(cls, identifier: str) -> bool:
        return identifier in cls._registry

    @classmethod
    def get_registered(cls, identifier: str) -> Type[Scheme]:
        if not cls.is_registered(identifier):
            raise NotRegisteredException(f"Unknown scheme {identifier!r}, expected one of {sorted(cls._registry)}")
        return cls._registry[identifier]

    @classmethod
    def registered(cls) -> list[str]:
        return sorted(cls._registry)

    @abstractmethod
    def initialize(self, x0: RiemannField) -> Sample:
        """Load the initial state and return the observation at t = 0."""

    @abstractmethod
    def step(self, t: float) -> Sample:
        """Advance from t to t + dt and return the observation at t + dt."""

    @abstractmethod
    def state(self) -> RiemannField:
        """The current Riemann state on the model grid."""


# ---------------------------------------------------------------------- #
# FIRST-ORDER UPWIND
# ---------------------------------------------------------------------- #
@scheme("upwind")
class UpwindScheme(Scheme):
    """
    Explicit first-order upwind on the model grid. x- travels towards z = 0 and
    is differenced forward, x+ travels towards z = 1 and is differenced backward;
    A(z) x enters as an explicit source.
    """

    def __init__(self, model: BeamModel, kernel: TriangularKernel, dt: float, source: InputSource):
        super().__init__(model, kernel, dt, source)
        cfl = self.dt * float(np.max(model.transport.lambda1)) / model.dz
        if cfl > 1.0 + 1e-12:
            raise CflViolation(f"dt * max(lambda1) / dz = {cfl:.6g} > 1")
        self._ratio = (self.dt / model.dz) * np.stack([model.transport.lambda1, model.transport.lambda2], axis=-1)
        self._x: Optional[np.ndarray] = None
        self._u = np.zeros(2)

    def initialize(self, x0: RiemannField) -> Sample:
        check_grid(self.model, x0.z)
        self._x = x0.stack().copy()
        self._u = np.asarray(self.source.physical(self.model, self.kernel, x0, 0.0), dtype=float)
        return self._sample()

    def step(self, t: float) -> Sample:
        model, x, r = self.model, self._x, self._ratio
        new = x + self.dt * np.einsum("nij,nj->ni", model.A, x)
        new[:-1, :2] += r[:-1] * (x[1:, :2] - x[:-1, :2])
        new[1:, 2:] -= r[1:] * (x[1:, 2:] - x[:-1, 2:])

        new[0, 2:] = -new[0, :2]
        new[-1, :2] = new[-1, 2:] + model.B @ self._u
        u = np.asarray(self.source.physical(model, self.kernel, RiemannField.from_array(model.z, new), t + self.dt),
                       dtype=float)
        new[-1, :2] = new[-1, 2:] + model.B @ u

        self._x, self._u = new, u
        return self._sample()

    def state(self) -> RiemannField:
        return RiemannField.from_array(self.model.z, self._x)

    def _sample(self) -> Sample:
        x = self.state()
        return Sample(y=flat_output(self.model, self.kernel, x), u=self._u.copy(),
                      u_bar=target_input(self.model, self.kernel, x, self._u))


# ---------------------------------------------------------------------- #
# DELAY LINE IN HCF COORDINATES
# ---------------------------------------------------------------------- #
def delay_line_step(model: BeamModel, dt_max: float, max_denominator: int = 64) -> float:
    """
    Largest dt <= dt_max with 2 tau1 / dt and 2 tau2 / dt both integers. Raises
    SchemeUnsupported when tau2 / tau1 is not a ratio of small integers.
    """
    ratio = Fraction(model.tau2 / model.tau1).limit_denominator(max_denominator)
    if abs(float(ratio) - model.tau2 / model.tau1) > 1e-9:
        raise SchemeUnsupported(f"tau2 / tau1 = {model.tau2 / model.tau1:.12g} has no common delay grid")
    base = 2.0 * model.tau1 / ratio.denominator
    return base / math.ceil(base / dt_max - 1e-9)


@scheme("delay-line")
class DelayLineScheme(Scheme):
    """
    Exact evolution of the HCF transport equations for constant coefficients:
    each eta_i is a delay buffer on the grid k dt, k = 0 .. 2 tau_i / dt, shifted
    by one sample per step and refilled at tau = 2 tau_i from the boundary relations.
    The Riemann state is recovered through the inverse HCF and Volterra maps.
    """

    def __init__(self, model: BeamModel, kernel: TriangularKernel, dt: float, source: InputSource):
        super().__init__(model, kernel, dt, source)
        if not model.is_constant:
            raise SchemeUnsupported("The delay-line scheme needs constant beam coefficients")
        lengths = []
        for span in (2.0 * model.tau1, 2.0 * model.tau2):
            ratio = span / self.dt
            if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
                raise SchemeUnsupported(f"2 tau = {span:.12g} is not a multiple of dt = {self.dt:.12g}")
            lengths.append(int(round(ratio)))
        self._tau1 = np.linspace(0.0, 2.0 * model.tau1, lengths[0] + 1)
        self._tau2 = np.linspace(0.0, 2.0 * model.tau2, lengths[1] + 1)
        self._eta1 = np.zeros_like(self._tau1)
        self._eta2 = np.zeros_like(self._tau2)
        self._u_bar = np.zeros(2)
        self._inputs: Optional[InputHistory] = None
        self._x: Optional[RiemannField] = None

    def hcf(self) -> HcfState:
        return HcfState(self._tau1, self._eta1.copy(), self._tau2, self._eta2.copy())

    def initialize(self, x0: RiemannField) -> Sample:
        model, kernel = self.model, self.kernel
        xbar = apply_volterra(kernel, x0, "forward")
        inputs = self.source.predictions(model, kernel, eta1_profile(model, xbar), 0.0)
        eta = xbar_to_hcf(model, kernel, xbar, inputs)
        self._eta1, self._eta2 = eta.eta1_at(self._tau1), eta.eta2_at(self._tau2)
        eta = self.hcf()
        self._u_bar = np.asarray(self.source.target(model, kernel, eta, 0.0), dtype=float)
        self._inputs = self.source.predictions(model, kernel, eta.profile(1), 0.0)
        return self._sample()

    def step(self, t: float) -> Sample:
        model, kernel, source = self.model, self.kernel, self.source
        t_new = t + self.dt
        e1 = np.append(self._eta1[1:], self._eta1[-1])
        e2 = np.append(self._eta2[1:], self._eta2[-1])

        # u1 depends on eta(0) only; u2 on the whole eta1 profile
        u_bar = source.target(model, kernel, HcfState(self._tau1, e1, self._tau2, e2), t_new)
        e1[-1] = -float(u_bar[0])
        eta = HcfState(self._tau1, e1, self._tau2, e2)
        u_bar = np.asarray(source.target(model, kernel, eta, t_new), dtype=float)
        inputs = source.predictions(model, kernel, eta.profile(1), t_new)
        e2[-1] = hcf_boundary(model, kernel, eta, u_bar, inputs)[1]

        self._eta1, self._eta2, self._u_bar, self._inputs = e1, e2, u_bar, inputs
        return self._sample()

    def state(self) -> RiemannField:
        return self._x

    def _sample(self) -> Sample:
        model, kernel = self.model, self.kernel
        eta = self.hcf()
        self._x = apply_volterra(kernel, hcf_to_xbar(model, kernel, eta, self._inputs), "inverse")
        return Sample(y=eta.flat_output, u=backstepping_input(model, kernel, self._x, self._u_bar),
                      u_bar=self._u_bar.copy())
