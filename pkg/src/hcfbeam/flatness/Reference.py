from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import DegenerateWindow


@dataclass(frozen=True)
class ReferenceTrajectory:
    """
    Piecewise flat-output reference: y0 before t0, yT after tT and the cubic
    with zero end slopes in between. Evaluable for any real t.
    """
    y0: tuple[float, float]
    yT: tuple[float, float]
    t0: float
    tT: float

    @property
    def T(self) -> float:
        return self.tT - self.t0

    def p(self, i: int, t) -> np.ndarray:
        """Transition polynomial of channel ``i`` (1 or 2), valid on [t0, tT]."""
        s = (np.asarray(t, dtype=float) - self.t0) / self.T
        return self.y0[i - 1] + (self.yT[i - 1] - self.y0[i - 1]) * s * s * (3.0 - 2.0 * s)

    def y(self, i: int, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = self.p(i, np.clip(t, self.t0, self.tT))
        return np.where(t < self.t0, self.y0[i - 1], np.where(t > self.tT, self.yT[i - 1], out))

    def __call__(self, t) -> np.ndarray:
        return np.stack([self.y(1, t), self.y(2, t)], axis=-1)

    def recording(self) -> RecordingReference:
        return RecordingReference(self.y0, self.yT, self.t0, self.tT)


@dataclass(frozen=True)
class RecordingReference(ReferenceTrajectory):
    """Reference that remembers the range of times it was evaluated at, per channel."""
    seen: dict = field(default_factory=lambda: {1: [np.inf, -np.inf], 2: [np.inf, -np.inf]}, compare=False)

    def y(self, i: int, t) -> np.ndarray:
        t_arr = np.asarray(t, dtype=float)
        if t_arr.size:
            lo, hi = self.seen[i]
            self.seen[i] = [min(lo, float(t_arr.min())), max(hi, float(t_arr.max()))]
        return super().y(i, t_arr)

    def window(self, i: int) -> tuple[float, float]:
        return tuple(self.seen[i])


def make_reference(y0: Sequence[float], yT: Sequence[float], t0: float, tT: float) -> ReferenceTrajectory:
    if not tT > t0:
        raise DegenerateWindow(f"tT = {tT} must exceed t0 = {t0}")
    assert len(y0) == 2 and len(yT) == 2, "Flat-output values are 2-vectors."
    return ReferenceTrajectory(tuple(map(float, y0)), tuple(map(float, yT)), float(t0), float(tT))


def constant_reference(y: Sequence[float]) -> ReferenceTrajectory:
    return make_reference(y, y, 0.0, 1.0)
