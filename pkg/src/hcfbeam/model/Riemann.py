from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .BeamModel import BeamModel
from .exceptions import ClampedBoundaryWarning, GridMismatch


@dataclass(frozen=True)
class PhysicalField:
    """Beam variables at a fixed time, sampled on the model grid."""
    z: np.ndarray
    w: np.ndarray
    phi: np.ndarray
    dz_w: np.ndarray
    dz_phi: np.ndarray
    dt_w: np.ndarray
    dt_phi: np.ndarray

    @property
    def shear(self) -> np.ndarray:
        return self.dz_w - self.phi

    def is_clamped(self, tol: float = 1e-12) -> bool:
        return all(abs(v[0]) <= tol for v in (self.w, self.phi, self.dt_w, self.dt_phi))

    @classmethod
    def zeros(cls, z: np.ndarray) -> PhysicalField:
        zero = np.zeros_like(z)
        return cls(z, zero, zero, zero, zero, zero, zero)


@dataclass(frozen=True)
class RiemannField:
    """The four Riemann components x = (x1-, x2-, x1+, x2+) on a spatial grid."""
    z: np.ndarray
    xm1: np.ndarray
    xm2: np.ndarray
    xp1: np.ndarray
    xp2: np.ndarray

    @classmethod
    def from_array(cls, z: np.ndarray, x: np.ndarray) -> RiemannField:
        assert x.shape == (z.size, 4), f"Expected shape {(z.size, 4)}, got {x.shape}."
        return cls(z, x[:, 0].copy(), x[:, 1].copy(), x[:, 2].copy(), x[:, 3].copy())

    @classmethod
    def zeros(cls, z: np.ndarray) -> RiemannField:
        return cls.from_array(z, np.zeros((z.size, 4)))

    def stack(self) -> np.ndarray:
        return np.stack([self.xm1, self.xm2, self.xp1, self.xp2], axis=-1)

    @property
    def minus(self) -> np.ndarray:
        return np.stack([self.xm1, self.xm2], axis=-1)

    @property
    def plus(self) -> np.ndarray:
        return np.stack([self.xp1, self.xp2], axis=-1)

    def clamped_residual(self) -> float:
        return float(np.max(np.abs(self.plus[0] + self.minus[0])))

    def __add__(self, other: RiemannField) -> RiemannField:
        return RiemannField.from_array(self.z, self.stack() + other.stack())

    def __sub__(self, other: RiemannField) -> RiemannField:
        return RiemannField.from_array(self.z, self.stack() - other.stack())

    def __mul__(self, scale: float) -> RiemannField:
        return RiemannField.from_array(self.z, scale * self.stack())

    __rmul__ = __mul__


def check_grid(model: BeamModel, z: np.ndarray) -> None:
    if z.shape != model.z.shape or not np.allclose(z, model.z, rtol=0.0, atol=1e-12):
        raise GridMismatch(f"Field grid ({z.size} points) does not match the model grid ({model.n} points)")


def to_riemann(model: BeamModel, field: PhysicalField) -> RiemannField:
    """x = H^-1 V^-1 (dz w - phi, dz phi, dt w, dt phi), with V^-1 = 1/2 [[L, I], [-L, I]]."""
    check_grid(model, field.z)
    if not field.is_clamped(tol=1e-9):
        warnings.warn("Physical field is not clamped at z = 0.", ClampedBoundaryWarning)
    t = model.transport
    strain = np.stack([field.shear * t.lambda1, field.dz_phi * t.lambda2], axis=-1)
    velocity = np.stack([field.dt_w, field.dt_phi], axis=-1)
    x = 0.5 * np.concatenate([strain + velocity, velocity - strain], axis=-1) / t.h
    return RiemannField.from_array(model.z, x)


def strain_velocity(model: BeamModel, x: RiemannField) -> np.ndarray:
    """Columns (dz w - phi, dz phi, dt w, dt phi) = V H x."""
    check_grid(model, x.z)
    t = model.transport
    y = x.stack() * t.h
    diff = y[:, :2] - y[:, 2:]
    return np.stack([diff[:, 0] / t.lambda1, diff[:, 1] / t.lambda2,
                     y[:, 0] + y[:, 2], y[:, 1] + y[:, 3]], axis=-1)


def from_riemann(model: BeamModel, x: RiemannField) -> PhysicalField:
    """Inverse of :func:`to_riemann`; w and phi are integrated from the clamped end."""
    sv = strain_velocity(model, x)
    phi = cumulative_trapezoid(sv[:, 1], model.z, initial=0.0)
    w = cumulative_trapezoid(sv[:, 0] + phi, model.z, initial=0.0)
    return PhysicalField(z=model.z, w=w, phi=phi, dz_w=sv[:, 0] + phi, dz_phi=sv[:, 1],
                         dt_w=sv[:, 2], dt_phi=sv[:, 3])


def reconstruct_displacement(model: BeamModel, x: RiemannField) -> tuple[np.ndarray, np.ndarray]:
    field = from_riemann(model, x)
    return field.w, field.phi
