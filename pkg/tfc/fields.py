"""Analytic scalar fields backed by sympy expressions.

Used for multivariate constraint right-hand sides, forcing terms and exact
solutions. Derivatives are exact: each requested multi-index is differentiated
symbolically once and compiled with ``lambdify``.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import sympy

from .errors import InvalidArgumentError


@lru_cache(maxsize=512)
def _compiled(expr: sympy.Expr, symbols: tuple, d: tuple) -> Callable:
    target = expr
    for sym, order in zip(symbols, d):
        if order:
            target = sympy.diff(target, sym, order)
    return sympy.lambdify(symbols, target, modules="numpy")


def broadcast_column(value, size: int) -> np.ndarray:
    """Turn a lambdified result (scalar or array) into a float vector of length size."""
    arr = np.asarray(value, dtype=float)
    if arr.shape == (size,):
        return arr
    return np.broadcast_to(arr, (size,)).astype(float)


@dataclass(frozen=True)
class AnalyticField:
    """A scalar function of all problem variables with exact mixed partials.

    Calling ``field(points, d)`` evaluates the partial derivative with
    multi-index ``d`` at every row of ``points`` (shape (P, n)).
    """

    expr: sympy.Expr
    symbols: tuple

    @classmethod
    def from_expr(cls, expr, symbols: Sequence[sympy.Symbol]) -> "AnalyticField":
        return cls(sympy.sympify(expr), tuple(symbols))

    @property
    def n_dims(self) -> int:
        return len(self.symbols)

    def __call__(self, points, d: Sequence[int] | None = None) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.n_dims:
            raise InvalidArgumentError(
                f"field over {self.n_dims} variables evaluated on {pts.shape[1]}-column points"
            )
        d = tuple(int(k) for k in (d if d is not None else (0,) * self.n_dims))
        if len(d) != self.n_dims or min(d) < 0:
            raise InvalidArgumentError(f"bad derivative multi-index {d}")
        fn = _compiled(self.expr, self.symbols, d)
        return broadcast_column(fn(*pts.T), pts.shape[0])

    def __str__(self) -> str:
        return str(self.expr)
