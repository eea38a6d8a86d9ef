"""Linear constraints along one axis, support matrices and switching functions."""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numpy.polynomial import Polynomial

from .errors import (
    CapabilityError,
    InvalidArgumentError,
    NoValidSupportError,
    SingularSupportError,
)
from .fields import AnalyticField


SINGULAR_TOLERANCE = 1e-12
MAX_SUPPORT_CONDITION = 1e12
SUPPORT_DEGREE_SLACK = 4

Kappa = Union[float, AnalyticField]
# A univariate function with derivatives: a Polynomial, a one-variable
# AnalyticField, or a callable f(x, order).
Differentiable = Union[Polynomial, AnalyticField, Callable]


@dataclass(frozen=True)
class ConstraintTerm:
    """coeff * (d^deriv_order f / dx^deriv_order)(location)."""

    coeff: float
    deriv_order: int
    location: float

    def __post_init__(self):
        if self.coeff == 0:
            raise InvalidArgumentError("constraint term coefficient must be non-zero")
        if self.deriv_order < 0:
            raise InvalidArgumentError(f"derivative order must be >= 0, got {self.deriv_order}")


@dataclass(frozen=True)
class Constraint:
    """Sum of terms equal to kappa.

    kappa is a constant for univariate problems and an AnalyticField over all
    variables (independent of the constrained one) otherwise.
    """

    terms: tuple[ConstraintTerm, ...]
    kappa: Kappa = 0.0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise InvalidArgumentError("a constraint needs at least one term")

    @classmethod
    def point(cls, location: float, kappa: Kappa = 0.0, order: int = 0, label: str = "") -> "Constraint":
        return cls((ConstraintTerm(1.0, order, location),), kappa, label)

    @property
    def max_order(self) -> int:
        return max(t.deriv_order for t in self.terms)

    def __str__(self) -> str:
        if self.label:
            return self.label
        parts = []
        for t in self.terms:
            mark = "'" * t.deriv_order if t.deriv_order <= 3 else f"^({t.deriv_order})"
            parts.append(f"{t.coeff:g}*u{mark}({t.location:g})")
        return " + ".join(parts) + f" = {self.kappa}"


def _derivative(f: Differentiable, order: int, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(f, Polynomial):
        return (f.deriv(order) if order else f)(x)
    if isinstance(f, AnalyticField):
        if f.n_dims != 1:
            raise InvalidArgumentError("constraint operators act on univariate functions")
        return f(x[:, None], (order,))
    max_order = getattr(f, "max_order", None)
    if max_order is not None and order > max_order:
        raise CapabilityError(f"function supplies derivatives up to order {max_order}, not {order}")
    try:
        out = f(x, order)
    except NotImplementedError as e:
        raise CapabilityError(f"derivative of order {order} unavailable: {e}") from e
    if out is None:
        raise CapabilityError(f"derivative of order {order} unavailable")
    return np.broadcast_to(np.asarray(out, dtype=float), x.shape)


def apply_constraint_operator(c: Constraint, f: Differentiable) -> float:
    """Sum over terms of coeff * f^(order)(location)."""
    return float(sum(t.coeff * _derivative(f, t.deriv_order, t.location)[0] for t in c.terms))


def kappa_values(c: Constraint, points=None, d: Optional[Sequence[int]] = None):
    """Right-hand side (or its partial derivative d) at points of shape (P, n)."""
    if isinstance(c.kappa, AnalyticField):
        if points is None:
            raise InvalidArgumentError("a field-valued kappa needs evaluation points")
        return c.kappa(points, d)
    if points is None:
        return float(c.kappa) if not d or not any(d) else 0.0
    size = np.atleast_2d(points).shape[0]
    if d is not None and any(d):
        return np.zeros(size)
    return np.full(size, float(c.kappa))


def projection_functional(c: Constraint, g: Differentiable, at=None):
    """kappa - C[g]; ``at`` gives the remaining variables when kappa is a field."""
    return kappa_values(c, at) - apply_constraint_operator(c, g)


@dataclass(frozen=True)
class SupportBasis:
    """Support functions s_j stored as monomial-basis polynomials."""

    functions: tuple[Polynomial, ...]
    exponents: Optional[tuple[int, ...]] = None

    @classmethod
    def monomials(cls, exponents: Sequence[int]) -> "SupportBasis":
        funcs = []
        for e in exponents:
            coef = np.zeros(e + 1)
            coef[e] = 1.0
            funcs.append(Polynomial(coef))
        return cls(tuple(funcs), tuple(exponents))

    def __len__(self) -> int:
        return len(self.functions)

    @property
    def degree(self) -> int:
        return max((f.degree() for f in self.functions), default=-1)

    def describe(self) -> str:
        if self.exponents is not None:
            names = ["1" if e == 0 else "x" if e == 1 else f"x^{e}" for e in self.exponents]
        else:
            names = [str(f) for f in self.functions]
        return "{" + ", ".join(names) + "}"


def _padded_coefficients(polys: Sequence[Polynomial]) -> np.ndarray:
    width = max(len(p.coef) for p in polys)
    out = np.zeros((len(polys), width))
    for i, p in enumerate(polys):
        out[i, : len(p.coef)] = p.coef
    return out


@dataclass(frozen=True, eq=False)
class SwitchingSet:
    """Support functions, support matrix S, alpha = S^-1 and switching functions."""

    support: SupportBasis
    S: np.ndarray
    alpha: np.ndarray
    phis: tuple[Polynomial, ...] = field(default=())

    def __post_init__(self):
        if not self.phis:
            object.__setattr__(self, "phis", _switching_functions(self.support, self.alpha))

    def __len__(self) -> int:
        return len(self.phis)

    def phi_values(self, j: int, x, d: int = 0) -> np.ndarray:
        """d-th derivative of phi_j at x."""
        return _derivative(self.phis[j], d, x)

    def phi_matrix(self, x, d: int = 0) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.column_stack([self.phi_values(j, x, d) for j in range(len(self))])

    def with_alpha(self, alpha: np.ndarray) -> "SwitchingSet":
        """Copy with a replacement coefficient matrix; phis are rebuilt from it."""
        return SwitchingSet(self.support, self.S, np.array(alpha, dtype=float))

    def delta_residual(self, cs: Sequence[Constraint]) -> float:
        """max |C_i[phi_j] - delta_ij|."""
        n = len(self)
        table = np.array([[apply_constraint_operator(c, phi) for phi in self.phis] for c in cs])
        return float(np.max(np.abs(table - np.eye(n)))) if n else 0.0


def _switching_functions(support: SupportBasis, alpha: np.ndarray) -> tuple[Polynomial, ...]:
    # phi_i = sum_k s_k alpha_ki
    coef = alpha.T @ _padded_coefficients(support.functions)
    return tuple(Polynomial(row) for row in coef)


def build_support_matrix(cs: Sequence[Constraint], sb: SupportBasis) -> np.ndarray:
    """S_ij = C_i[s_j]."""
    if len(cs) != len(sb):
        raise InvalidArgumentError(
            f"{len(cs)} constraints but {len(sb)} support functions; the system must be square"
        )
    return np.array([[apply_constraint_operator(c, s) for s in sb.functions] for c in cs], dtype=float)


def solve_switching(
    cs: Sequence[Constraint], sb: SupportBasis, tol: float = SINGULAR_TOLERANCE
) -> SwitchingSet:
    """Invert the support matrix and form the switching functions.

    Raises SingularSupportError when sigma_min/sigma_max of S is below tol.
    """
    S = build_support_matrix(cs, sb)
    sv = np.linalg.svd(S, compute_uv=False)
    ratio = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
    if ratio < tol:
        raise SingularSupportError(sb.describe(), ratio)
    alpha = np.linalg.inv(S)
    return SwitchingSet(support=sb, S=S, alpha=alpha)


def candidate_exponents(count: int, cap: int):
    """Exponent subsets of size count drawn from 0..cap, by total degree then lexicographic."""
    subsets = combinations(range(cap + 1), count)
    return sorted(subsets, key=lambda e: (sum(e), e))


def default_supports(cs: Sequence[Constraint]) -> SupportBasis:
    """Lowest-degree monomial support set with a well conditioned support matrix."""
    count = len(cs)
    if count < 1:
        raise InvalidArgumentError("default_supports needs at least one constraint")
    cap = count + SUPPORT_DEGREE_SLACK
    for exps in candidate_exponents(count, cap):
        sb = SupportBasis.monomials(exps)
        try:
            sw = solve_switching(cs, sb)
        except SingularSupportError:
            continue
        if np.linalg.cond(sw.S) <= MAX_SUPPORT_CONDITION:
            return sb
    raise NoValidSupportError(
        f"no monomial support set of degree <= {cap} gives a usable support matrix "
        f"for {count} constraint(s)"
    )
