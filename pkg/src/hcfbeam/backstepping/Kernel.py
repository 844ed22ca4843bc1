from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Hashable, Literal, Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ..log import debug_log, info_log
from ..model import BeamModel
from ..model.exceptions import GridTooCoarse
from .exceptions import NoConvergence

MAX_ITER: int = 200
TOL: float = 1e-10
MIN_CELLS: int = 16

EntryKind = Literal["diag", "edge", "split", "forward"]


@dataclass(frozen=True)
class TriangularKernel:
    """
    Backstepping kernel K(z, zeta) sampled on the uniform mesh of the triangle
    0 <= zeta <= z <= 1. ``K[m, k]`` holds the 4x4 block at (z_m, zeta_k); entries
    above the diagonal repeat the diagonal value so that bilinear interpolation is
    well defined up to the edge. ``a0_minus``/``a0_plus`` are the couplings of the
    target system, ``KI`` the inverse kernel once :func:`invert_kernel` ran.
    """
    mesh: np.ndarray
    K: np.ndarray
    a0_minus: np.ndarray
    a0_plus: np.ndarray
    iterations: int = 0
    KI: Optional[np.ndarray] = None
    _samples: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.RLock = field(default_factory=threading.RLock, repr=False, compare=False)

    @property
    def h(self) -> float:
        return float(self.mesh[1] - self.mesh[0])

    @property
    def M(self) -> int:
        return self.mesh.size - 1

    def a0(self, sign: Literal["-", "+"], z) -> np.ndarray:
        return np.interp(z, self.mesh, self.a0_minus if sign == "-" else self.a0_plus)

    def cached(self, key: Hashable, build: Callable[[], np.ndarray]) -> np.ndarray:
        """Memoized derived array; safe to call from several threads."""
        with self._lock:
            if key not in self._samples:
                self._samples[key] = build()
            return self._samples[key]

    def sample(self, z: np.ndarray, inverse: bool = False) -> np.ndarray:
        """Kernel blocks on the square grid ``z x z`` (bilinear off the mesh), shape (n, n, 4, 4)."""
        data = self.KI if inverse else self.K
        assert data is not None, "Inverse kernel requested before invert_kernel(...)."

        def build() -> np.ndarray:
            if z.size == self.mesh.size and np.allclose(z, self.mesh, rtol=0.0, atol=1e-13):
                return data
            interp = RegularGridInterpolator((self.mesh, self.mesh), data.reshape(self.M + 1, self.M + 1, 16))
            zz, ss = np.meshgrid(z, z, indexing="ij")
            return interp(np.stack([zz, ss], axis=-1)).reshape(z.size, z.size, 4, 4)

        return self.cached(("sample", z.size, float(z[0]), float(z[-1]), inverse), build)

    def at(self, z: float, zeta) -> np.ndarray:
        interp = RegularGridInterpolator((self.mesh, self.mesh), self.K.reshape(self.M + 1, self.M + 1, 16))
        zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
        pts = np.stack([np.full_like(zeta, z), zeta], axis=-1)
        return interp(pts).reshape(zeta.shape + (4, 4))


# ---------------------------------------------------------------------- #
# LOW-LEVEL UTILITIES
# ---------------------------------------------------------------------- #
def _mesh_data(model: BeamModel, mesh: np.ndarray):
    l1, l2 = model.lam(1, mesh), model.lam(2, mesh)
    d1 = np.interp(mesh, model.z, model.transport.dlambda1)
    d2 = np.interp(mesh, model.z, model.transport.dlambda2)
    speeds = np.stack([l1, l2, -l1, -l2], axis=-1)
    dspeeds = np.stack([d1, d2, -d1, -d2], axis=-1)
    A = model.A_at(mesh)
    gap = speeds[:, None, :] - speeds[:, :, None]            # gap[m, i, j] = l_j - l_i
    safe = np.where(gap == 0.0, 1.0, gap)
    diagonal = np.where(gap == 0.0, 0.0, A / safe)
    return speeds, dspeeds, A, diagonal


def entry_kind(i: int, j: int) -> EntryKind:
    """Where the characteristic of entry (i, j) picks up its boundary data."""
    if i == j: return "edge"
    if (i < 2) != (j < 2): return "diag"
    return "split" if (j % 2) > (i % 2) else "forward"


def _corner_characteristic(i: int, j: int, mesh: np.ndarray, speeds: np.ndarray) -> np.ndarray:
    """
    zeta(z_m) along the characteristic of entry (i, j) through the corner (0, 0),
    stepped with the same foot rule as :func:`_sweep`, so a node lies on the line
    exactly when its foot does.
    """
    h = mesh[1] - mesh[0]
    line = np.zeros_like(mesh)
    for m in range(1, mesh.size):
        nxt = line[m - 1] + h * speeds[m - 1, j] / speeds[m, i]
        for _ in range(4):
            nxt = line[m - 1] + h * np.interp(nxt, mesh, speeds[:, j]) / speeds[m, i]
        line[m] = nxt
    return line


def _side_interp(x: np.ndarray, lower: np.ndarray, xp: np.ndarray, fp: np.ndarray, cut: float) -> np.ndarray:
    """
    Piecewise linear interpolation of (xp, fp) at x that only combines nodes on
    the same side of ``cut`` as the point (``lower``: below it). Points past the
    last node of their side are extrapolated from the closest interval.
    """
    out = np.empty_like(x)
    for below in (True, False):
        pts = lower if below else ~lower
        if not pts.any(): continue
        keep = xp < cut if below else xp >= cut
        xs, fs = xp[keep], fp[keep]
        if xs.size < 2:
            out[pts] = fs[0] if xs.size else np.interp(x[pts], xp, fp)
            continue
        idx = np.clip(np.searchsorted(xs, x[pts]) - 1, 0, xs.size - 2)
        w = (x[pts] - xs[idx]) / (xs[idx + 1] - xs[idx])
        out[pts] = fs[idx] + w * (fs[idx + 1] - fs[idx])
    return out


def _fill_upper(K: np.ndarray) -> None:
    M1 = K.shape[0]
    for m in range(M1 - 1):
        K[m, m + 1:] = K[m, m]


def _sweep(i: int, j: int, kind: EntryKind, K: np.ndarray, R: np.ndarray, mesh: np.ndarray, speeds: np.ndarray,
           diagonal: np.ndarray, line: Optional[np.ndarray] = None) -> None:
    """
    One characteristic sweep of entry (i, j) with the right-hand side R frozen.
    With ``line`` given the entry jumps across it, and the foot value is
    interpolated from nodes on the side of the line the node belongs to.
    """
    M = mesh.size - 1
    h = mesh[1] - mesh[0]
    lam_i, lam_j = speeds[:, i], speeds[:, j]
    Rij = R[:, :, i, j]
    r_diag = np.diagonal(Rij) / lam_i
    r_edge = Rij[:, 0] / lam_i
    d_val = diagonal[:, i, j]
    partner = (j + 2) % 4
    out = K[:, :, i, j]
    forward = kind == "forward"

    for m in (range(M, -1, -1) if forward else range(M + 1)):
        z = mesh[m]
        if forward and m == M:
            out[M, :] = d_val[M]
            continue
        if not forward and m == 0:
            out[0, 0] = -K[0, 0, i, partner] if kind == "edge" else d_val[0]
            continue

        zeta = mesh[:m + 1]
        s = lam_j[:m + 1] / lam_i[m]
        step = h if forward else -h
        z_foot = np.full(m + 1, z + step)
        zeta_foot = zeta + s * step
        hit_edge = zeta_foot < 0.0
        hit_diag = (zeta_foot > z_foot) & ~hit_edge
        inside = ~(hit_edge | hit_diag)

        val = np.empty(m + 1)
        r_foot = np.empty(m + 1)
        prev = m + 1 if forward else m - 1
        if line is None:
            val[inside] = np.interp(zeta_foot[inside], mesh[:prev + 1], out[prev, :prev + 1])
        else:
            lower = zeta[inside] < line[m]
            val[inside] = _side_interp(zeta_foot[inside], lower, mesh[:prev + 1], out[prev, :prev + 1], line[prev])
        r_foot[inside] = np.interp(zeta_foot[inside], mesh[:prev + 1], Rij[prev, :prev + 1]) / lam_i[prev]

        if hit_edge.any():
            zf = z - zeta[hit_edge] / s[hit_edge]
            z_foot[hit_edge] = zf
            val[hit_edge] = -np.interp(zf, mesh, K[:, 0, i, partner])
            r_foot[hit_edge] = np.interp(zf, mesh, r_edge)
        if hit_diag.any():
            sd = s[hit_diag]
            zf = (zeta[hit_diag] - sd * z) / (1.0 - sd)
            z_foot[hit_diag] = zf
            val[hit_diag] = np.interp(zf, mesh, d_val)
            r_foot[hit_diag] = np.interp(zf, mesh, r_diag)

        out[m, :m + 1] = val + (z - z_foot) * 0.5 * (r_foot + Rij[m, :m + 1] / lam_i[m])


# ---------------------------------------------------------------------- #
# PUBLIC API
# ---------------------------------------------------------------------- #
def solve_kernel(model: BeamModel, h: float, tol: float = TOL, max_iter: int = MAX_ITER) -> TriangularKernel:
    """
    Successive approximation of the kernel equations. Each iteration freezes
    the coupling term K A and integrates every entry along its characteristic
    from the boundary where its data lives (diagonal, zeta = 0 or z = 1).
    Entries fed from both the diagonal and zeta = 0 keep their jump across the
    characteristic through the corner.
    """
    M = int(round(1.0 / h))
    if M < MIN_CELLS:
        raise GridTooCoarse(f"Kernel mesh size h = {h} exceeds 1/{MIN_CELLS}")
    assert abs(M * h - 1.0) < 1e-9, f"1/h must be an integer, got h = {h}."
    mesh = np.linspace(0.0, 1.0, M + 1)
    speeds, dspeeds, A, diagonal = _mesh_data(model, mesh)

    kinds = {(i, j): entry_kind(i, j) for i in range(4) for j in range(4)}
    # entries with data on zeta = 0 read their partner, so they go last
    order = sorted(kinds, key=lambda ij: kinds[ij] in ("edge", "split"))
    lines = {ij: _corner_characteristic(*ij, mesh, speeds) for ij in kinds if kinds[ij] == "split"}
    tril = np.tril(np.ones((M + 1, M + 1), dtype=bool))

    K = np.zeros((M + 1, M + 1, 4, 4))
    delta = np.inf
    for n_iter in range(1, max_iter + 1):
        R = np.einsum("mkab,kbc->mkac", K, A) - K * dspeeds[None, :, None, :]
        K_new = np.zeros_like(K)
        for ij in order:
            _sweep(*ij, kinds[ij], K_new, R, mesh, speeds, diagonal, lines.get(ij))
        delta = float(np.max(np.abs(K_new - K)[tril]))
        K = K_new
        debug_log(f"Kernel iteration {n_iter}: update {delta:.3e}")
        if delta < tol: break
    else:
        raise NoConvergence(f"Kernel iteration stalled at update {delta:.3e} after {max_iter} iterations (h = {h})")

    lam0 = speeds[0, 0]
    a0_minus = lam0 * (K[:, 0, 1, 0] + K[:, 0, 1, 2])
    a0_plus = -lam0 * (K[:, 0, 3, 0] + K[:, 0, 3, 2])
    _fill_upper(K)
    for arr in (mesh, K, a0_minus, a0_plus):
        arr.setflags(write=False)
    info_log(f"Solved kernel on h = 1/{M} in {n_iter} iterations (last update {delta:.2e})")
    return TriangularKernel(mesh=mesh, K=K, a0_minus=a0_minus, a0_plus=a0_plus, iterations=n_iter)


def invert_kernel(kernel: TriangularKernel) -> TriangularKernel:
    """
    K_I(z, zeta) = K(z, zeta) + int_zeta^z K(z, s) K_I(s, zeta) ds, marched in z
    with the trapezoid rule; the s = z node is treated implicitly.
    """
    M, h, K = kernel.M, kernel.h, kernel.K
    KI = np.zeros_like(K)
    eye = np.eye(4)
    for m in range(M + 1):
        KI[m, m] = K[m, m]
        if m == 0: continue
        weights = np.tril(np.full((m, m), h), k=-1)       # weights[l, k] for k < l < m
        weights[np.arange(m), np.arange(m)] = 0.5 * h
        acc = np.einsum("lk,lab,lkbc->kac", weights, K[m, :m], KI[:m, :m])
        lhs = eye - 0.5 * h * K[m, m]
        if abs(np.linalg.det(lhs)) < 1e-12:
            raise NoConvergence(f"Inverse-kernel march is singular at z = {kernel.mesh[m]:.4g}")
        KI[m, :m] = np.einsum("ab,kbc->kac", np.linalg.inv(lhs), K[m, :m] + acc)
    _fill_upper(KI)
    KI.setflags(write=False)
    return TriangularKernel(mesh=kernel.mesh, K=K, a0_minus=kernel.a0_minus, a0_plus=kernel.a0_plus,
                            iterations=kernel.iterations, KI=KI)


def kernel_residuals(model: BeamModel, kernel: TriangularKernel) -> dict[str, float]:
    """
    Discrete residuals of the kernel equations: mean absolute PDE residual on
    interior nodes and the largest violation of each boundary condition. Entries
    with data on both zeta = 0 and the diagonal jump across the characteristic
    through the corner; nodes next to it are left out of the PDE residual.
    """
    mesh, K, h = kernel.mesh, kernel.K, kernel.h
    speeds, dspeeds, A, diagonal = _mesh_data(model, mesh)
    M = kernel.M

    dK_dz = (K[2:, 1:-1] - K[:-2, 1:-1]) / (2.0 * h)
    dK_dzeta = (K[1:-1, 2:] - K[1:-1, :-2]) / (2.0 * h)
    Kc = K[1:-1, 1:-1]
    li = speeds[1:-1, None, :, None]
    lj = speeds[None, 1:-1, None, :]
    pde = li * dK_dz + lj * dK_dzeta + Kc * dspeeds[None, 1:-1, None, :] - np.einsum("mkab,kbc->mkac", Kc, A[1:-1])
    m_idx, k_idx = np.meshgrid(np.arange(1, M), np.arange(1, M), indexing="ij")
    interior = k_idx + 1 < m_idx                              # stencil strictly inside the triangle
    mask = np.broadcast_to(interior[:, :, None, None], pde.shape).copy()
    for i, j in ((i, j) for i in range(4) for j in range(4) if entry_kind(i, j) == "split"):
        line = _corner_characteristic(i, j, mesh, speeds)
        mask[:, :, i, j] &= np.abs(mesh[None, 1:-1] - line[1:-1, None]) > 2.0 * h
    pde_res = float(np.mean(np.abs(pde[mask])))

    diag_blocks = K[np.arange(M + 1), np.arange(M + 1)]
    lam_t = np.einsum("mi,ij->mij", speeds, np.eye(4))
    comm = diag_blocks @ lam_t - lam_t @ diag_blocks - A
    diag_res = float(np.max(np.abs(comm)))

    # the corner (0, 0) also carries diagonal data and is left out
    edge = K[1:, 0]
    lam0 = np.diag(speeds[0, :2])
    minus = (edge[:, :2, :2] + edge[:, :2, 2:]) @ lam0
    plus = -(edge[:, 2:, :2] + edge[:, 2:, 2:]) @ lam0
    minus[:, 1, 0] -= kernel.a0_minus[1:]
    plus[:, 1, 0] -= kernel.a0_plus[1:]
    return {
        "pde": pde_res,
        "diagonal": diag_res,
        "edge_minus": float(np.max(np.abs(minus))),
        "edge_plus": float(np.max(np.abs(plus))),
    }
