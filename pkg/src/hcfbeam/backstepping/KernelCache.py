from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional

import numpy as np

from ..log import info_log
from ..model import BeamModel
from .exceptions import KernelCacheError
from .Kernel import TriangularKernel, _fill_upper, solve_kernel

HEADER = ["z", "zeta"] + [f"k{i}{j}" for i in range(1, 5) for j in range(1, 5)]
KEY_PREFIX = "# key="
ITERATIONS_TAG = " iterations="


def cache_key(model: BeamModel, h: float) -> str:
    return f"{model.fingerprint()};h={h!r}"


def write_kernel(path: str | Path, model: BeamModel, kernel: TriangularKernel) -> None:
    """Dump the lower-triangle samples, one mesh node per row, row-major in (z, zeta)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mesh = kernel.mesh
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"{KEY_PREFIX}{cache_key(model, kernel.h)}{ITERATIONS_TAG}{kernel.iterations}\n")
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        for m in range(mesh.size):
            for k in range(m + 1):
                writer.writerow([repr(float(mesh[m])), repr(float(mesh[k]))]
                                + [repr(float(v)) for v in kernel.K[m, k].ravel()])


def read_kernel(path: str | Path, model: BeamModel, h: float) -> Optional[TriangularKernel]:
    """Load a cached kernel; ``None`` when the file belongs to another model or mesh."""
    path = Path(path)
    if not path.is_file(): return None
    with path.open(encoding="utf-8") as fh:
        first = fh.readline().strip()
        if not first.startswith(KEY_PREFIX):
            raise KernelCacheError(f"{path} has no cache key line")
        key, _, iterations = first[len(KEY_PREFIX):].rpartition(ITERATIONS_TAG)
        if key != cache_key(model, h):
            return None
        if not iterations.isdigit():
            raise KernelCacheError(f"{path} has no iteration count on its key line")
        reader = csv.reader(fh)
        if next(reader, None) != HEADER:
            raise KernelCacheError(f"{path} has an unexpected header")
        rows = [list(map(float, row)) for row in reader if row]

    M = int(round(1.0 / h))
    if len(rows) != (M + 1) * (M + 2) // 2:
        raise KernelCacheError(f"{path} holds {len(rows)} nodes, expected {(M + 1) * (M + 2) // 2}")
    mesh = np.linspace(0.0, 1.0, M + 1)
    K = np.zeros((M + 1, M + 1, 4, 4))
    idx = 0
    for m in range(M + 1):
        for k in range(m + 1):
            K[m, k] = np.asarray(rows[idx][2:]).reshape(4, 4)
            idx += 1
    lam0 = float(model.lam(1, 0.0))
    a0_minus = lam0 * (K[:, 0, 1, 0] + K[:, 0, 1, 2])
    a0_plus = -lam0 * (K[:, 0, 3, 0] + K[:, 0, 3, 2])
    _fill_upper(K)
    return TriangularKernel(mesh=mesh, K=K, a0_minus=a0_minus, a0_plus=a0_plus, iterations=int(iterations))


def cached_kernel(model: BeamModel, h: float, path: Optional[str | Path] = None) -> TriangularKernel:
    if path is not None:
        kernel = read_kernel(path, model, h)
        if kernel is not None:
            info_log(f"Kernel cache hit: {path}")
            return kernel
        info_log(f"Kernel cache miss: {path}")
    kernel = solve_kernel(model, h)
    if path is not None:
        write_kernel(path, model, kernel)
    return kernel
