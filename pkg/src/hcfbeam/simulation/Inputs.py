from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import ClassVar, Optional, Type

import numpy as np

from ..backstepping import TriangularKernel
from ..control import ControllerConfig, control_law, hcf_law, predicted_inputs
from ..flatness import ReferenceTrajectory, feedforward_physical, parametrize_input
from ..hcf import HcfState, InputHistory, Profile
from ..model import BeamModel, RiemannField
from .exceptions import AlreadyRegisteredException, NotRegisteredException, SchemeUnsupported


def input_source(identifier: str):
    def decorator(cls: Type[InputSource]):
        cls.id = identifier
        InputSource._register_source(cls)
        return cls
    return decorator


@dataclass(frozen=True)
class InputSource(ABC):
    """
    Where the boundary input comes from. Schemes working on the original state
    ask for the physical input u(t); schemes working in HCF coordinates ask for
    the target-system input ū(t) and its predictions ū1(t + tau).
    """
    id: ClassVar[str]
    _registry: ClassVar[dict[str, Type[InputSource]]] = {}

    @classmethod
    def _register_source(cls, source: Type[InputSource]):
        if source.id in cls._registry: raise AlreadyRegisteredException(source.id)
        cls._registry[source.id] = source

    @classmethod
    def is_registered(cls, identifier: str) -> bool:
        return identifier in cls._registry

    @classmethod
    def get_registered(cls, identifier: str) -> Type[InputSource]:
        if not cls.is_registered(identifier):
            raise NotRegisteredException(f"Unknown input source {identifier!r}, expected one of {sorted(cls._registry)}")
        return cls._registry[identifier]

    @property
    def reference(self) -> Optional[ReferenceTrajectory]:
        return None

    @abstractmethod
    def physical(self, model: BeamModel, kernel: TriangularKernel, x: RiemannField, t: float) -> np.ndarray: ...

    @abstractmethod
    def target(self, model: BeamModel, kernel: TriangularKernel, eta: HcfState, t: float) -> np.ndarray: ...

    @abstractmethod
    def predictions(self, model: BeamModel, kernel: TriangularKernel, eta1: Profile, t: float) -> InputHistory: ...


@input_source("zero")
@dataclass(frozen=True)
class ZeroInput(InputSource):
    """u = 0. In HCF coordinates this needs a vanishing kernel, where ū = x+(1) = eta(0)."""

    def physical(self, model, kernel, x, t) -> np.ndarray:
        return np.zeros(2)

    def _check(self, kernel: TriangularKernel) -> None:
        if np.any(kernel.K):
            raise SchemeUnsupported("A zero physical input has no HCF form unless the kernel vanishes")

    def target(self, model, kernel, eta, t) -> np.ndarray:
        self._check(kernel)
        return eta.flat_output

    def predictions(self, model, kernel, eta1, t) -> InputHistory:
        self._check(kernel)
        return InputHistory.zero(model.delta_tau + model.tau2)


@input_source("feedforward")
@dataclass(frozen=True)
class FeedforwardInput(InputSource):
    ref: ReferenceTrajectory

    @property
    def reference(self) -> ReferenceTrajectory:
        return self.ref

    def physical(self, model, kernel, x, t) -> np.ndarray:
        return feedforward_physical(model, kernel, self.ref, t)

    def target(self, model, kernel, eta, t) -> np.ndarray:
        return parametrize_input(model, kernel, self.ref, t)

    def predictions(self, model, kernel, eta1, t) -> InputHistory:
        shift = t + 2.0 * model.tau1
        return InputHistory(lambda tau: -self.ref.y(1, shift + np.asarray(tau)), model.delta_tau + model.tau2)


@input_source("closed-loop")
@dataclass(frozen=True)
class ClosedLoopInput(InputSource):
    controller: ControllerConfig

    @property
    def reference(self) -> ReferenceTrajectory:
        return self.controller.ref

    def physical(self, model, kernel, x, t) -> np.ndarray:
        return control_law(x, self.controller, model, kernel, t)

    def target(self, model, kernel, eta, t) -> np.ndarray:
        return hcf_law(eta, self.controller, model, kernel, t)[0]

    def predictions(self, model, kernel, eta1, t) -> InputHistory:
        return predicted_inputs(eta1, self.controller, t, model.delta_tau + model.tau2)


def make_input(kind: str, ref: Optional[ReferenceTrajectory] = None,
               controller: Optional[ControllerConfig] = None) -> InputSource:
    cls = InputSource.get_registered(kind)
    if cls is FeedforwardInput:
        assert ref is not None, "A feedforward input needs a reference trajectory."
        return cls(ref)
    if cls is ClosedLoopInput:
        assert controller is not None, "A closed-loop input needs a controller configuration."
        return cls(controller)
    return cls()
