from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import sympy as sp

from .exceptions import CoefficientExpressionError, NonSmoothCoefficient

ArrayLike = Union[float, np.ndarray]

# Finite-difference derivatives above this are treated as a jump.
MAX_SLOPE: float = 1e6

_z = sp.Symbol("z", real=True)

@dataclass(frozen=True)
class Coefficient:
    """A scalar beam coefficient as a function of the normalized position z."""
    name: str
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    dfn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    source: str = "constant"
    expr: Optional[str] = None

    # ------------------------------------------------------------------ #
    # CONSTRUCTION
    # ------------------------------------------------------------------ #
    @classmethod
    def constant(cls, name: str, value: float) -> Coefficient:
        value = float(value)
        return cls(
            name=name,
            fn=lambda z: np.full(np.shape(z), value, dtype=float),
            dfn=lambda z: np.zeros(np.shape(z), dtype=float),
            source="constant",
            expr=repr(value),
        )

    @classmethod
    def expression(cls, name: str, expr: str) -> Coefficient:
        """Closed form in ``z``; the derivative is taken symbolically."""
        try:
            sym = sp.sympify(expr, locals={"z": _z})
        except (sp.SympifyError, TypeError) as exc:
            raise CoefficientExpressionError(f"Cannot parse {name} = {expr!r}") from exc
        extra = sym.free_symbols - {_z}
        if extra:
            raise CoefficientExpressionError(f"{name} = {expr!r} depends on {sorted(map(str, extra))}, expected z only")
        if not sym.free_symbols:
            return cls.constant(name, float(sym))

        f = sp.lambdify(_z, sym, modules="numpy")
        df = sp.lambdify(_z, sp.diff(sym, _z), modules="numpy")
        return cls(
            name=name,
            fn=lambda z: np.broadcast_to(np.asarray(f(np.asarray(z, dtype=float)), dtype=float), np.shape(z)).copy(),
            dfn=lambda z: np.broadcast_to(np.asarray(df(np.asarray(z, dtype=float)), dtype=float), np.shape(z)).copy(),
            source="expression",
            expr=str(sym),
        )

    @classmethod
    def sampled(cls, name: str, z: np.ndarray, values: np.ndarray) -> Coefficient:
        """Tabulated samples, linearly interpolated; central differences for the slope."""
        z = np.asarray(z, dtype=float)
        values = np.asarray(values, dtype=float)
        assert z.ndim == 1 and z.shape == values.shape, f"{name}: samples must be 1-D and of equal length."
        assert np.all(np.diff(z) > 0), f"{name}: sample positions must be strictly increasing."
        slope = np.gradient(values, z)
        return cls(
            name=name,
            fn=lambda q: np.interp(q, z, values),
            dfn=lambda q: np.interp(q, z, slope),
            source="sampled",
        )

    @classmethod
    def parse(cls, name: str, spec) -> Coefficient:
        """Build from a number, an expression string or a ``{z, values}`` mapping."""
        if isinstance(spec, Coefficient): return spec
        if isinstance(spec, (int, float)): return cls.constant(name, spec)
        if isinstance(spec, str): return cls.expression(name, spec)
        if isinstance(spec, dict) and {"z", "values"} <= set(spec):
            return cls.sampled(name, np.asarray(spec["z"]), np.asarray(spec["values"]))
        raise CoefficientExpressionError(f"Unsupported coefficient specification for {name}: {spec!r}")

    # ------------------------------------------------------------------ #
    # EVALUATION
    # ------------------------------------------------------------------ #
    def __call__(self, z: ArrayLike) -> np.ndarray:
        return self.fn(np.asarray(z, dtype=float))

    def derivative(self, z: ArrayLike) -> np.ndarray:
        return self.dfn(np.asarray(z, dtype=float))

    @property
    def is_constant(self) -> bool:
        return self.source == "constant"

    def check_smooth(self, z: np.ndarray) -> None:
        slope = self.derivative(z)
        if not np.all(np.isfinite(slope)) or np.max(np.abs(slope)) > MAX_SLOPE:
            raise NonSmoothCoefficient(f"{self.name} has an unbounded derivative on [0, 1]")
