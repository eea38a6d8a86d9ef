"""Univariate and multivariate constrained expressions.

A constrained expression u(x, g) satisfies its constraints exactly for any free
function g. The free function enters as an *oracle*: a callable
``oracle(points, d)`` returning the partial derivative of g with multi-index
``d`` at each row of ``points`` (shape (P, n)). The result may be a vector of
length P or a (P, F) matrix when the oracle returns one feature per column;
every operation here is linear in the oracle, so both work.

Two evaluators are provided. ``TensorExpression`` implements
u = g + sum_i M_i(x, g) * prod_k Phi_k[i_k](x_k), with the M entries stored as
recipes of constraint operators. ``RecursiveExpression`` applies the univariate
construction one axis at a time, feeding each result into the next axis as its
free function.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from itertools import product
from typing import Callable, Optional, Sequence

import numpy as np

from .constraints import Constraint, SupportBasis, SwitchingSet, default_supports, kappa_values, solve_switching
from .errors import CapabilityError, InvalidArgumentError


# beyond the orders the constraints themselves take
MAX_DERIVATIVE_ORDER = 4

Oracle = Callable[[np.ndarray, tuple], np.ndarray]


@dataclass(frozen=True, eq=False)
class AxisConstraintSet:
    """The constraints acting on one axis and their switching functions."""

    axis: int
    constraints: tuple[Constraint, ...]
    switching: Optional[SwitchingSet]

    @classmethod
    def build(
        cls, axis: int, constraints: Sequence[Constraint], support: Optional[SupportBasis] = None
    ) -> "AxisConstraintSet":
        constraints = tuple(constraints)
        if not constraints:
            return cls(axis, (), None)
        sb = support if support is not None else default_supports(constraints)
        return cls(axis, constraints, solve_switching(constraints, sb))

    def __len__(self) -> int:
        return len(self.constraints)

    @property
    def support_degree(self) -> int:
        """Highest support degree, -1 for an unconstrained axis."""
        return self.switching.support.degree if self.switching is not None else -1


@dataclass(frozen=True, eq=False)
class PhiVector:
    """{1, phi_1, ..., phi_l} for one axis."""

    axis: int
    switching: Optional[SwitchingSet]

    def __len__(self) -> int:
        return 1 + (len(self.switching) if self.switching is not None else 0)

    def entry(self, i: int, x, d: int = 0) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if i == 0:
            return np.ones_like(x) if d == 0 else np.zeros_like(x)
        return self.switching.phi_values(i - 1, x, d)

    def values(self, x, d: int = 0) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.column_stack([self.entry(i, x, d) for i in range(len(self))])


@dataclass(frozen=True)
class MEntry:
    """One non-zero element of the M tensor.

    ``operators`` lists (axis, constraint) pairs from outermost to innermost.
    The value is sign * (C_outer[kappa_inner] - C_all[g]).
    """

    index: tuple[int, ...]
    operators: tuple[tuple[int, Constraint], ...]
    sign: float

    @property
    def order(self) -> int:
        return len(self.operators)

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(axis for axis, _ in self.operators)

    @property
    def inner(self) -> tuple[int, Constraint]:
        return self.operators[-1]

    def permuted(self, order: Sequence[int]) -> "MEntry":
        """Same entry with the operators applied in another order."""
        if sorted(order) != list(range(self.order)):
            raise InvalidArgumentError(f"{order} is not a permutation of {self.order} operators")
        return replace(self, operators=tuple(self.operators[i] for i in order))


@dataclass(frozen=True)
class MTensorRecipe:
    """Shape (l_1+1, ..., l_n+1); the all-zero index is the literal 0."""

    shape: tuple[int, ...]
    entries: tuple[MEntry, ...]

    def entry(self, index: Sequence[int]) -> Optional[MEntry]:
        index = tuple(index)
        for e in self.entries:
            if e.index == index:
                return e
        return None


def build_recipe(axes: Sequence[AxisConstraintSet]) -> MTensorRecipe:
    shape = tuple(len(a) + 1 for a in axes)
    entries = []
    for index in np.ndindex(*shape):
        active = [k for k, i in enumerate(index) if i]
        if not active:
            continue
        # innermost operator is the lowest axis
        operators = tuple((k, axes[k].constraints[index[k] - 1]) for k in sorted(active, reverse=True))
        sign = (-1.0) ** (len(active) + 1)
        entries.append(MEntry(tuple(int(i) for i in index), operators, sign))
    return MTensorRecipe(shape, tuple(entries))


def _as_points(points, n_dims: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None] if n_dims == 1 else pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != n_dims:
        raise InvalidArgumentError(f"expected points of shape (P, {n_dims}), got {np.shape(points)}")
    return pts


def _check_order(d, n_dims: int, cap: int = MAX_DERIVATIVE_ORDER) -> tuple[int, ...]:
    if d is None:
        return (0,) * n_dims
    if np.isscalar(d):
        d = (d,)
    d = tuple(int(k) for k in d)
    if len(d) != n_dims or min(d) < 0:
        raise InvalidArgumentError(f"derivative multi-index {d} does not fit {n_dims} dimension(s)")
    if sum(d) > cap:
        raise CapabilityError(f"derivatives of total order {sum(d)} are not supported (max {cap})")
    return d


def _scale(rows: np.ndarray, values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        return rows[:, None] * values
    return rows * values


def _add(values, column) -> np.ndarray:
    column = np.asarray(column, dtype=float)
    if np.ndim(values) == 2 and column.ndim == 1:
        column = column[:, None]
    return values + column


def _slice(points: np.ndarray, subs: tuple[tuple[int, float], ...]) -> np.ndarray:
    out = points.copy()
    for axis, loc in subs:
        out[:, axis] = loc
    return out


def _call(oracle: Oracle, points: np.ndarray, d: tuple) -> np.ndarray:
    out = np.asarray(oracle(points, d), dtype=float)
    if out.ndim == 0:
        out = np.full(points.shape[0], float(out))
    return out


def _operator_terms(operators, d_m: tuple):
    """Expand nested constraint operators into (coefficient, substitutions, order) triples."""
    for terms in product(*(c.terms for _, c in operators)):
        coeff = 1.0
        order = list(d_m)
        subs = []
        for (axis, _), t in zip(operators, terms):
            coeff *= t.coeff
            order[axis] = t.deriv_order
            subs.append((axis, t.location))
        yield coeff, tuple(subs), tuple(order)


class _SliceCache:
    """Memoises oracle calls on constraint slices within one evaluate() call."""

    def __init__(self, oracle: Oracle, points: np.ndarray):
        self.oracle = oracle
        self.points = points
        self._store: dict = {}

    def __call__(self, subs: tuple, d: tuple) -> np.ndarray:
        key = (subs, d)
        if key not in self._store:
            self._store[key] = _call(self.oracle, _slice(self.points, subs), d)
        return self._store[key]


class ConstrainedExpression(ABC):
    """Evaluable u(x, g) for a fixed set of per-axis constraints."""

    def __init__(self, axes: Sequence[AxisConstraintSet]):
        axes = sorted(axes, key=lambda a: a.axis)
        if [a.axis for a in axes] != list(range(len(axes))):
            raise InvalidArgumentError("axis constraint sets must cover axes 0..n-1 exactly once")
        self.axes: tuple[AxisConstraintSet, ...] = tuple(axes)

    @property
    def n_dims(self) -> int:
        return len(self.axes)

    @property
    def max_order(self) -> int:
        """Highest total derivative order ``evaluate`` accepts.

        Substituting a constraint operator replaces the order along its axis,
        so an expression fed back through ``as_oracle`` is asked for up to
        the constraint orders on top of the caller's request.
        """
        return MAX_DERIVATIVE_ORDER + sum(max((c.max_order for c in a.constraints), default=0) for a in self.axes)

    @abstractmethod
    def evaluate(self, oracle: Oracle, points, d=None, include_kappa: bool = True) -> np.ndarray:
        """Partial derivative d of u at points.

        With include_kappa=False the right-hand sides are dropped, leaving the
        part of u that is linear in g.
        """

    def constraint_residual(self, oracle: Oracle, axis: int, j: int, points) -> np.ndarray:
        """C_j[u] - kappa_j along ``axis``, with the other coordinates taken from points."""
        pts = _as_points(points, self.n_dims)
        c = self.axes[axis].constraints[j]
        zero = (0,) * self.n_dims
        total = 0.0
        for t in c.terms:
            order = tuple(t.deriv_order if k == axis else 0 for k in range(self.n_dims))
            total = total + t.coeff * self.evaluate(oracle, _slice(pts, ((axis, t.location),)), order)
        return _add(total, -np.asarray(kappa_values(c, pts, zero), dtype=float))


class TensorExpression(ConstrainedExpression):
    """u = g + sum over non-zero indices of M_i * prod_k Phi_k[i_k]."""

    def __init__(self, axes: Sequence[AxisConstraintSet]):
        super().__init__(axes)
        self.recipe = build_recipe(self.axes)
        self.phis = tuple(PhiVector(a.axis, a.switching) for a in self.axes)

    def _g_part(self, entry: MEntry, cache: _SliceCache, d_m: tuple) -> np.ndarray:
        total = 0.0
        for coeff, subs, order in _operator_terms(entry.operators, d_m):
            total = total + coeff * cache(subs, order)
        return total

    def _kappa_part(self, entry: MEntry, points: np.ndarray, d_m: tuple) -> np.ndarray:
        _, inner = entry.inner
        total = 0.0
        for coeff, subs, order in _operator_terms(entry.operators[:-1], d_m):
            total = total + coeff * np.asarray(kappa_values(inner, _slice(points, subs), order))
        return total

    def _entry_value(self, entry: MEntry, cache: _SliceCache, d_m: tuple, include_kappa: bool):
        value = -self._g_part(entry, cache, d_m)
        if include_kappa:
            value = _add(value, self._kappa_part(entry, cache.points, d_m))
        return entry.sign * value

    def m_entry_value(self, entry, oracle: Oracle, points, d=None, include_kappa: bool = True) -> np.ndarray:
        """Value of one M element (given as MEntry or index) at points."""
        if not isinstance(entry, MEntry):
            found = self.recipe.entry(entry)
            if found is None:
                return np.zeros(_as_points(points, self.n_dims).shape[0])
            entry = found
        pts = _as_points(points, self.n_dims)
        d = _check_order(d, self.n_dims, self.max_order)
        d_m = tuple(0 if k in entry.axes else d[k] for k in range(self.n_dims))
        return self._entry_value(entry, _SliceCache(oracle, pts), d_m, include_kappa)

    def evaluate(self, oracle: Oracle, points, d=None, include_kappa: bool = True) -> np.ndarray:
        pts = _as_points(points, self.n_dims)
        d = _check_order(d, self.n_dims, self.max_order)
        cache = _SliceCache(oracle, pts)
        total = np.array(_call(oracle, pts, d), dtype=float)
        for entry in self.recipe.entries:
            active = entry.axes
            weight = np.ones(pts.shape[0])
            for k in active:
                weight = weight * self.phis[k].entry(entry.index[k], pts[:, k], d[k])
            if not np.any(weight):
                continue
            # M is constant along its own axes, so their derivatives land on Phi
            d_m = tuple(0 if k in active else d[k] for k in range(self.n_dims))
            total = total + _scale(weight, self._entry_value(entry, cache, d_m, include_kappa))
        return total


class _AxisStep:
    """One univariate application along ``acs.axis`` with ``prev`` as free function."""

    def __init__(self, prev: Oracle, acs: AxisConstraintSet, include_kappa: bool):
        self.prev = prev
        self.acs = acs
        self.include_kappa = include_kappa

    def __call__(self, points: np.ndarray, d: tuple) -> np.ndarray:
        a = self.acs.axis
        total = np.array(_call(self.prev, points, d), dtype=float)
        phi = self.acs.switching.phi_matrix(points[:, a], d[a])
        d_rho = tuple(0 if k == a else d[k] for k in range(len(d)))
        for j, c in enumerate(self.acs.constraints):
            if not np.any(phi[:, j]):
                continue
            rho = 0.0
            for t in c.terms:
                order = tuple(t.deriv_order if k == a else d_rho[k] for k in range(len(d)))
                rho = rho - t.coeff * _call(self.prev, _slice(points, ((a, t.location),)), order)
            if self.include_kappa:
                rho = _add(rho, kappa_values(c, points, d_rho))
            total = total + _scale(phi[:, j], rho)
        return total


class RecursiveExpression(ConstrainedExpression):
    """Axis-by-axis composition of univariate constrained expressions."""

    def __init__(self, axes: Sequence[AxisConstraintSet], order: Optional[Sequence[int]] = None):
        super().__init__(axes)
        order = tuple(range(self.n_dims)) if order is None else tuple(int(k) for k in order)
        if sorted(order) != list(range(self.n_dims)):
            raise InvalidArgumentError(f"axis order {order} is not a permutation of 0..{self.n_dims - 1}")
        self.order = order

    def evaluate(self, oracle: Oracle, points, d=None, include_kappa: bool = True) -> np.ndarray:
        pts = _as_points(points, self.n_dims)
        d = _check_order(d, self.n_dims, self.max_order)
        current = oracle
        for axis in self.order:
            acs = self.axes[axis]
            if len(acs):
                current = _AxisStep(current, acs, include_kappa)
        return np.array(_call(current, pts, d), dtype=float)


def build_univariate(acs: AxisConstraintSet) -> TensorExpression:
    """g(x) + sum_j phi_j(x) rho_j(g) for a single axis."""
    if acs.axis != 0:
        acs = replace(acs, axis=0)
    return TensorExpression((acs,))


def build_multivariate_recursive(
    axes: Sequence[AxisConstraintSet], order: Optional[Sequence[int]] = None
) -> RecursiveExpression:
    return RecursiveExpression(axes, order)


def build_tensor_form(axes: Sequence[AxisConstraintSet]) -> TensorExpression:
    return TensorExpression(axes)


def eval(ce: ConstrainedExpression, g: Oracle, x, d=None):
    """u (or its partial derivative d) at a single point or a batch of points."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 0 or (pts.ndim == 1 and ce.n_dims > 1)
    out = ce.evaluate(g, np.atleast_1d(pts), d)
    if single:
        return float(out[0]) if out.ndim == 1 else out[0]
    return out


def as_oracle(ce: ConstrainedExpression, g: Oracle, include_kappa: bool = True) -> Oracle:
    """Wrap u(., g) so it can serve as the free function of another expression."""

    def oracle(points, d):
        return ce.evaluate(g, points, d, include_kappa)

    return oracle
