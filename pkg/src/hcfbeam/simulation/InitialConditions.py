from __future__ import annotations

from typing import Callable

import numpy as np

from ..model import BeamModel, Coefficient, PhysicalField, RiemannField, to_riemann
from .exceptions import AlreadyRegisteredException, NotRegisteredException

InitialCondition = Callable[..., RiemannField]

_registry: dict[str, InitialCondition] = {}


def initial_condition(identifier: str):
    def decorator(fn: InitialCondition) -> InitialCondition:
        if identifier in _registry: raise AlreadyRegisteredException(identifier)
        _registry[identifier] = fn
        return fn
    return decorator


def registered_initial_conditions() -> list[str]:
    return sorted(_registry)


def initial_conditions(kind: str, model: BeamModel, **params) -> RiemannField:
    """Riemann state at t = 0 from the initializer registered as ``kind``."""
    if kind not in _registry:
        raise NotRegisteredException(f"Unknown initial condition {kind!r}, expected one of {registered_initial_conditions()}")
    return _registry[kind](model, **params)


@initial_condition("zero")
def zero_state(model: BeamModel, **_) -> RiemannField:
    return RiemannField.zeros(model.z)


@initial_condition("sin2")
def sin2_state(model: BeamModel, amplitude: float = 0.2, **_) -> RiemannField:
    """x_i-(z) = A sin^2(2 pi i z), x_i+(z) = -A sin^2(2 pi i z)."""
    z = model.z
    s1 = amplitude * np.sin(2.0 * np.pi * z) ** 2
    s2 = amplitude * np.sin(4.0 * np.pi * z) ** 2
    return RiemannField(z=z, xm1=s1, xm2=s2, xp1=-s1, xp2=-s2)


@initial_condition("physical")
def physical_state(model: BeamModel, w0: str = "0", phi0: str = "0", w1: str = "0", phi1: str = "0",
                   **_) -> RiemannField:
    """Initial displacement, rotation and their velocities as expressions in ``z``."""
    z = model.z
    w, phi = Coefficient.expression("w0", str(w0)), Coefficient.expression("phi0", str(phi0))
    dw, dphi = Coefficient.expression("w1", str(w1)), Coefficient.expression("phi1", str(phi1))
    field = PhysicalField(z=z, w=w(z), phi=phi(z), dz_w=w.derivative(z), dz_phi=phi.derivative(z),
                          dt_w=dw(z), dt_phi=dphi(z))
    return to_riemann(model, field)
