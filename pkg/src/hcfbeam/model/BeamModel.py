from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ..log import info_log
from .Coefficient import Coefficient
from .exceptions import GridTooCoarse, NonPositiveParameter, SpeedOrderingViolation

MIN_GRID: int = 16

# Component order of the Riemann state: (x1-, x2-, x1+, x2+).
MINUS = (0, 1)
PLUS = (2, 3)


@dataclass(frozen=True)
class BeamParameters:
    """
    Physical coefficients of the clamped Timoshenko beam on the normalized
    domain z in [0, 1]. ``kappa`` is the shear stiffness k_s G S, ``J`` the rotary
    inertia rho I and ``EI`` the bending stiffness; E and I follow from them.
    """
    rho: Coefficient
    S: Coefficient
    kappa: Coefficient
    J: Coefficient
    EI: Coefficient

    @classmethod
    def from_values(cls, **coefficients) -> BeamParameters:
        """Accept numbers, sympy expression strings in ``z`` or ``{z, values}`` samples."""
        missing = {"rho", "S", "kappa", "J", "EI"} - set(coefficients)
        assert not missing, f"Missing beam coefficients: {sorted(missing)}"
        return cls(**{name: Coefficient.parse(name, spec) for name, spec in coefficients.items()})

    @classmethod
    def nominal(cls) -> BeamParameters:
        return cls.from_values(rho=0.8, S=1.0, kappa=1.25, J=0.98, EI=0.5)

    def I(self, z) -> np.ndarray:
        return self.J(z) / self.rho(z)

    def E(self, z) -> np.ndarray:
        return self.EI(z) / self.I(z)

    def coefficients(self) -> dict[str, Coefficient]:
        return {"rho": self.rho, "S": self.S, "kappa": self.kappa, "J": self.J, "EI": self.EI}

    @property
    def is_constant(self) -> bool:
        return all(c.is_constant for c in self.coefficients().values())


@dataclass(frozen=True)
class TransportData:
    lambda1: np.ndarray
    lambda2: np.ndarray
    dlambda1: np.ndarray
    dlambda2: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    tau1: float
    tau2: float
    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    alpha1: np.ndarray
    alpha2: np.ndarray
    A: np.ndarray          # (n, 4, 4)
    B: np.ndarray          # (2, 2)
    h: np.ndarray          # (n, 4), diagonal of H(z)


@dataclass(frozen=True)
class BeamModel:
    params: BeamParameters
    z: np.ndarray
    transport: TransportData = field(repr=False)

    # ------------------------------------------------------------------ #
    # SHORTHANDS
    # ------------------------------------------------------------------ #
    @property
    def n(self) -> int: return self.z.size

    @property
    def dz(self) -> float: return float(self.z[1] - self.z[0])

    @property
    def tau1(self) -> float: return self.transport.tau1

    @property
    def tau2(self) -> float: return self.transport.tau2

    @property
    def delta_tau(self) -> float: return self.tau2 - self.tau1

    @property
    def A(self) -> np.ndarray: return self.transport.A

    @property
    def B(self) -> np.ndarray: return self.transport.B

    @property
    def is_constant(self) -> bool: return self.params.is_constant

    def speeds(self) -> np.ndarray:
        """Signed speeds (lambda1, lambda2, -lambda1, -lambda2) per grid point, shape (n, 4)."""
        t = self.transport
        return np.stack([t.lambda1, t.lambda2, -t.lambda1, -t.lambda2], axis=-1)

    def lam(self, i: int, z) -> np.ndarray:
        return np.interp(z, self.z, self.transport.lambda1 if i == 1 else self.transport.lambda2)

    def phi(self, i: int, z) -> np.ndarray:
        return np.interp(z, self.z, self.transport.phi1 if i == 1 else self.transport.phi2)

    def psi(self, i: int, tau) -> np.ndarray:
        """Inverse of phi_i; monotone inverse interpolation."""
        return np.interp(tau, self.transport.phi1 if i == 1 else self.transport.phi2, self.z)

    def A_at(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        flat = self.A.reshape(self.n, 16)
        out = np.stack([np.interp(z, self.z, flat[:, k]) for k in range(16)], axis=-1)
        return out.reshape(z.shape + (4, 4))

    def V(self) -> np.ndarray:
        """Eigenvector matrices V(z) = [[L^-1, -L^-1], [I, I]], shape (n, 4, 4)."""
        t = self.transport
        V = np.zeros((self.n, 4, 4))
        V[:, 0, 0], V[:, 1, 1] = 1.0 / t.lambda1, 1.0 / t.lambda2
        V[:, 0, 2], V[:, 1, 3] = -1.0 / t.lambda1, -1.0 / t.lambda2
        V[:, 2, 0] = V[:, 2, 2] = V[:, 3, 1] = V[:, 3, 3] = 1.0
        return V

    def H(self) -> np.ndarray:
        return np.einsum("ni,ij->nij", self.transport.h, np.eye(4))

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        for arr in (self.z, self.transport.lambda1, self.transport.lambda2, self.A, self.B):
            digest.update(np.ascontiguousarray(arr).tobytes())
        return digest.hexdigest()


# ---------------------------------------------------------------------- #
# CONSTRUCTION
# ---------------------------------------------------------------------- #
def _check_positive(params: BeamParameters, z: np.ndarray) -> None:
    for name, coef in params.coefficients().items():
        values = coef(z)
        if not np.all(np.isfinite(values)) or np.min(values) <= 0.0:
            raise NonPositiveParameter(f"{name}(z) must be strictly positive on [0, 1], min = {np.min(values):.6g}")
        coef.check_smooth(z)


def coupling_matrix(lambda1, a1, a2, a3, h) -> np.ndarray:
    """A = H^-1 Omega H for every grid point; zero diagonal by construction."""
    n = lambda1.size
    omega = np.zeros((n, 4, 4))
    omega[:, 0, 1], omega[:, 0, 2], omega[:, 0, 3] = -lambda1, a1, -lambda1
    omega[:, 1, 0], omega[:, 1, 2], omega[:, 1, 3] = a3, -a3, a2
    omega[:, 2, 0], omega[:, 2, 1], omega[:, 2, 3] = -a1, lambda1, lambda1
    omega[:, 3, 0], omega[:, 3, 1], omega[:, 3, 2] = a3, -a2, -a3
    omega *= 0.5
    return omega * h[:, None, :] / h[:, :, None]


def build_model(params: BeamParameters, n_grid: int) -> BeamModel:
    if n_grid < MIN_GRID:
        raise GridTooCoarse(f"n_grid = {n_grid} < {MIN_GRID}")
    z = np.linspace(0.0, 1.0, n_grid)
    _check_positive(params, z)

    rho, S, kappa, J, EI = (params.rho(z), params.S(z), params.kappa(z), params.J(z), params.EI(z))
    drho, dS, dkappa, dJ, dEI = (params.rho.derivative(z), params.S.derivative(z), params.kappa.derivative(z),
                                 params.J.derivative(z), params.EI.derivative(z))

    mu1 = np.sqrt(kappa / (rho * S))
    mu2 = np.sqrt(EI / J)               # = sqrt(E / rho) since J = rho I
    if np.any(mu1 <= mu2):
        k = int(np.argmin(mu1 - mu2))
        raise SpeedOrderingViolation(f"mu1 <= mu2 at z = {z[k]:.4g} ({mu1[k]:.6g} <= {mu2[k]:.6g})")

    dmu1 = 0.5 * mu1 * (dkappa / kappa - drho / rho - dS / S)
    dmu2 = 0.5 * mu2 * (dEI / EI - dJ / J)

    a1 = dmu1 - dkappa / (mu1 * S * rho)
    a2 = dmu2 - dEI / (mu2 * J)
    a3 = kappa / (J * mu1)

    alpha1 = cumulative_trapezoid(a1 / (2.0 * mu1), z, initial=0.0)
    alpha2 = cumulative_trapezoid(a2 / (2.0 * mu2), z, initial=0.0)
    h = np.exp(np.stack([alpha1, alpha2, alpha1, alpha2], axis=-1))

    phi1 = cumulative_trapezoid(1.0 / mu1, z, initial=0.0)
    phi2 = cumulative_trapezoid(1.0 / mu2, z, initial=0.0)
    if params.is_constant:
        # exact for constant speeds
        phi1, phi2 = z / mu1[0], z / mu2[0]

    B = np.diag([
        np.exp(alpha1[-1]) / np.sqrt(rho[-1] * S[-1] * kappa[-1]),
        np.exp(alpha2[-1]) / np.sqrt(J[-1] * EI[-1]),
    ])

    transport = TransportData(
        lambda1=mu1, lambda2=mu2, dlambda1=dmu1, dlambda2=dmu2,
        phi1=phi1, phi2=phi2, tau1=float(phi1[-1]), tau2=float(phi2[-1]),
        a1=a1, a2=a2, a3=a3, alpha1=alpha1, alpha2=alpha2,
        A=coupling_matrix(mu1, a1, a2, a3, h), B=B, h=h,
    )
    assert transport.tau2 > transport.tau1 > 0.0, "Transport times must satisfy tau2 > tau1 > 0."
    for arr in (z, mu1, mu2, phi1, phi2, transport.A, B, h):
        arr.setflags(write=False)

    info_log(f"Built beam model on {n_grid} points: lambda1 in [{mu1.min():.6g}, {mu1.max():.6g}], "
             f"lambda2 in [{mu2.min():.6g}, {mu2.max():.6g}], tau = ({transport.tau1:.6g}, {transport.tau2:.6g})")
    return BeamModel(params=params, z=z, transport=transport)


def transport_times(model: BeamModel) -> tuple[float, float]:
    return model.tau1, model.tau2


def with_coupling(model: BeamModel, A: Optional[np.ndarray]) -> BeamModel:
    """Copy of ``model`` with the coupling matrix replaced (synthetic test systems)."""
    A = np.zeros_like(model.A) if A is None else np.broadcast_to(np.asarray(A, dtype=float), model.A.shape).copy()
    A.setflags(write=False)
    t = model.transport
    transport = TransportData(**{**{f: getattr(t, f) for f in t.__dataclass_fields__}, "A": A})
    return BeamModel(params=model.params, z=model.z, transport=transport)
