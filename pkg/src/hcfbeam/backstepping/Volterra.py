from __future__ import annotations

from typing import Literal

import numpy as np

from ..model import BeamModel, RiemannField
from ..model.Riemann import check_grid
from .Kernel import TriangularKernel

Direction = Literal["forward", "inverse"]


def trapezoid_weights(z: np.ndarray) -> np.ndarray:
    """W[m, l]: composite trapezoid weights of int_0^{z_m} f(zeta) d zeta on the nodes zeta_l <= z_m."""
    n = z.size
    dz = np.diff(z)
    W = np.zeros((n, n))
    for m in range(1, n):
        W[m, :m] += 0.5 * dz[:m]
        W[m, 1:m + 1] += 0.5 * dz[:m]
    return W


def _weighted_kernel(z: np.ndarray, kernel: TriangularKernel, inverse: bool = False) -> np.ndarray:
    key = ("weighted", z.size, float(z[0]), float(z[-1]), inverse)
    return kernel.cached(key, lambda: trapezoid_weights(z)[:, :, None, None] * kernel.sample(z, inverse=inverse))


def apply_volterra(kernel: TriangularKernel, x: RiemannField, direction: Direction = "forward",
                   method: Literal["solve", "kernel"] = "solve") -> RiemannField:
    """
    forward: xbar(z) = x(z) - int_0^z K(z, zeta) x(zeta) d zeta.
    inverse: x = xbar + int_0^z K x, solved by forward substitution (``method="solve"``,
    the exact inverse of the discrete forward map) or evaluated with the inverse
    kernel, x = xbar + int_0^z K_I xbar (``method="kernel"``).
    """
    z = x.z
    xs = x.stack()
    if direction == "forward":
        WK = _weighted_kernel(z, kernel)
        return RiemannField.from_array(z, xs - np.einsum("mlab,lb->ma", WK, xs))

    if method == "kernel":
        WKI = _weighted_kernel(z, kernel, inverse=True)
        return RiemannField.from_array(z, xs + np.einsum("mlab,lb->ma", WKI, xs))

    WK = _weighted_kernel(z, kernel)
    out = np.zeros_like(xs)
    eye = np.eye(4)
    for m in range(z.size):
        rhs = xs[m] + np.einsum("lab,lb->a", WK[m, :m], out[:m])
        out[m] = np.linalg.solve(eye - WK[m, m], rhs)
    return RiemannField.from_array(z, out)


def boundary_integrals(kernel: TriangularKernel, x: RiemannField) -> np.ndarray:
    """int_0^1 K(1, zeta) x(zeta) d zeta, a 4-vector."""
    WK = _weighted_kernel(x.z, kernel)
    return np.einsum("lab,lb->a", WK[-1], x.stack())


def backstepping_input(model: BeamModel, kernel: TriangularKernel, x: RiemannField, u_bar) -> np.ndarray:
    """u = B^-1 (u_bar - x+(1) + int_0^1 K--(1, .) x- + K-+(1, .) x+)."""
    check_grid(model, x.z)
    integral = boundary_integrals(kernel, x)[:2]
    return np.linalg.solve(model.B, np.asarray(u_bar, dtype=float) - x.plus[-1] + integral)


def flat_output(model: BeamModel, kernel: TriangularKernel, x: RiemannField) -> np.ndarray:
    """y = x+(1) - int_0^1 K+-(1, .) x- + K++(1, .) x+, the flat output read off the original state."""
    check_grid(model, x.z)
    return x.plus[-1] - boundary_integrals(kernel, x)[2:]


def target_input(model: BeamModel, kernel: TriangularKernel, x: RiemannField, u) -> np.ndarray:
    """ū = B u + x+(1) - int_0^1 K--(1, .) x- + K-+(1, .) x+, the inverse of :func:`backstepping_input`."""
    check_grid(model, x.z)
    integral = boundary_integrals(kernel, x)[:2]
    return model.B @ np.asarray(u, dtype=float) + x.plus[-1] - integral
