"""Collocation least-squares PDE solving through constrained expressions.

The free function g = h(x)^T xi is expanded in tensor products of Chebyshev or
Legendre polynomials. Because every constraint operator is linear, each partial
derivative of the constrained expression is affine in xi:

    u_d(x) = A_d(x) xi + b_d(x)

where A_d is the expression evaluated with the feature matrix as oracle and the
right-hand sides dropped, and b_d is the expression evaluated with g = 0. The
PDE residual F(x; u_d) is then assembled row by row on a CGL grid.
"""

import time
from dataclasses import dataclass, field, replace
from functools import cached_property
from itertools import product
from typing import Callable, Optional, Sequence

import numpy as np
import sympy
from sympy.core.function import AppliedUndef

from .constrained_expression import (
    AxisConstraintSet,
    ConstrainedExpression,
    build_multivariate_recursive,
    build_tensor_form,
)
from .constraints import Constraint, SupportBasis
from .errors import CapabilityError, InvalidArgumentError, NumericalError, WrongSolverError
from .fields import AnalyticField, broadcast_column
from .poly_basis import BasisKind, DomainMap, cgl_nodes, eval_basis, make_map


MAX_FEATURE_DERIVATIVE = 4
PINV_RCOND = 1e-14
TEST_POINTS_PER_AXIS = 100
STALL_GRADIENT = 1e-6
STALL_REDUCTION = 1e-8


# ============================================================================
# Free function
# ============================================================================


@dataclass(frozen=True, eq=False)
class FreeFunction:
    """g(x) = h(x)^T xi over a total-degree multi-index set."""

    kind: BasisKind
    degree: int
    multi_indices: tuple[tuple[int, ...], ...]
    excluded: frozenset
    maps: tuple[DomainMap, ...]
    xi: Optional[np.ndarray] = None

    @property
    def n_dims(self) -> int:
        return len(self.maps)

    @property
    def num_features(self) -> int:
        return len(self.multi_indices)

    def with_xi(self, xi) -> "FreeFunction":
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.num_features,):
            raise InvalidArgumentError(f"xi has shape {xi.shape}, expected ({self.num_features},)")
        return replace(self, xi=xi)

    def features(self, points, d: Sequence[int]) -> np.ndarray:
        """Feature rows h^(d)(x), shape (P, F), including the c_k^{d_k} scaling."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = tuple(int(k) for k in d)
        if sum(d) > MAX_FEATURE_DERIVATIVE:
            raise CapabilityError(
                f"free function supplies derivatives up to total order {MAX_FEATURE_DERIVATIVE}, not {sum(d)}"
            )
        idx = np.array(self.multi_indices, dtype=int).reshape(-1, self.n_dims)
        rows = np.ones((pts.shape[0], idx.shape[0]))
        for k, dmap in enumerate(self.maps):
            basis = eval_basis(self.kind, self.degree, d[k], dmap.to_z(pts[:, k])).values
            if d[k]:
                basis = basis * dmap.c ** d[k]
            rows *= basis[:, idx[:, k]]
        return rows

    def value(self, points, d: Sequence[int]) -> np.ndarray:
        if self.xi is None:
            raise InvalidArgumentError("free function has no coefficients yet")
        return self.features(points, d) @ self.xi


def build_feature_set(m: int, n_dims: int, axes: Sequence[AxisConstraintSet]) -> list[tuple[int, ...]]:
    """Total-degree <= m multi-indices, minus those reproduced by the supports.

    A tuple is dropped when on every axis its degree is within the highest
    support degree of that axis (an unconstrained axis keeps everything).
    """
    if m < 1:
        raise InvalidArgumentError(f"basis degree m must be >= 1, got {m}")
    limits = [a.support_degree for a in axes] if axes else [-1] * n_dims
    if len(limits) != n_dims:
        raise InvalidArgumentError(f"{len(limits)} axis sets for {n_dims} dimensions")
    kept = []
    for idx in product(range(m + 1), repeat=n_dims):
        if sum(idx) > m:
            continue
        if all(i <= lim for i, lim in zip(idx, limits)):
            continue
        kept.append(idx)
    if not kept:
        raise InvalidArgumentError(f"every basis term of degree <= {m} is absorbed by the constraints")
    return sorted(kept, key=lambda t: (sum(t), t))


def make_free_function(
    kind: BasisKind, m: int, maps: Sequence[DomainMap], axes: Sequence[AxisConstraintSet]
) -> FreeFunction:
    kind = BasisKind.parse(kind)
    kept = build_feature_set(m, len(maps), axes)
    full = {idx for idx in product(range(m + 1), repeat=len(maps)) if sum(idx) <= m}
    return FreeFunction(kind, m, tuple(kept), frozenset(full - set(kept)), tuple(maps))


def oracle_from_free_function(ff: FreeFunction, symbolic: bool = False) -> Callable:
    """Oracle for a free function; symbolic mode returns feature rows instead of values."""
    if symbolic:
        return ff.features
    if ff.xi is None:
        raise InvalidArgumentError("free function has no coefficients; use symbolic=True for assembly")
    return ff.value


def zero_oracle(points, d) -> np.ndarray:
    return np.zeros(np.atleast_2d(points).shape[0])


# ============================================================================
# Collocation grid
# ============================================================================


@dataclass(frozen=True, eq=False)
class CollocationGrid:
    """Tensor product of mapped CGL nodes."""

    nodes: tuple[np.ndarray, ...]
    maps: tuple[DomainMap, ...]

    @property
    def c(self) -> tuple[float, ...]:
        return tuple(m.c for m in self.maps)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(n) for n in self.nodes)

    @cached_property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.nodes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    def __len__(self) -> int:
        return int(np.prod(self.shape))


def make_grid(domains: Sequence[tuple[float, float]], N) -> CollocationGrid:
    """CGL grid with N[k] + 1 nodes on axis k."""
    counts = [N] * len(domains) if np.isscalar(N) else list(N)
    if len(counts) != len(domains):
        raise InvalidArgumentError(f"{len(counts)} node counts for {len(domains)} axes")
    maps, nodes = [], []
    for (lo, hi), n in zip(domains, counts):
        dmap = make_map(lo, hi)
        x = dmap.to_x(cgl_nodes(int(n)))
        x[0], x[-1] = dmap.x_lo, dmap.x_hi
        maps.append(dmap)
        nodes.append(x)
    return CollocationGrid(tuple(nodes), tuple(maps))


def uniform_points(domains: Sequence[tuple[float, float]], per_axis: int = TEST_POINTS_PER_AXIS) -> np.ndarray:
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in domains]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


# ============================================================================
# Problem definition
# ============================================================================


@dataclass(frozen=True)
class CompiledResidual:
    """F(x; u_d ...) with exact partials dF/du_d, compiled from sympy."""

    orders: tuple[tuple[int, ...], ...]
    linear: bool
    residual_fn: Callable
    partial_fns: tuple[Callable, ...]

    def residual(self, points: np.ndarray, u: Sequence[np.ndarray]) -> np.ndarray:
        return broadcast_column(self.residual_fn(*points.T, *u), points.shape[0])

    def partials(self, points: np.ndarray, u: Sequence[np.ndarray]) -> list[np.ndarray]:
        return [broadcast_column(fn(*points.T, *u), points.shape[0]) for fn in self.partial_fns]


def compile_residual(equation: sympy.Expr, variables: Sequence[sympy.Symbol], unknown: str = "u") -> CompiledResidual:
    """Replace u and its derivatives by plain symbols and lambdify F and dF/du_d."""
    variables = tuple(variables)
    u = sympy.Function(unknown)(*variables)
    zero = (0,) * len(variables)
    derivatives = {}
    for atom in equation.atoms(sympy.Derivative):
        if atom.expr != u:
            raise InvalidArgumentError(f"unsupported derivative {atom} in the equation")
        counts = dict(atom.variable_count)
        derivatives[atom] = tuple(int(counts.get(v, 0)) for v in variables)
    names = {d: sympy.Dummy("u_" + "".join(map(str, d))) for d in set(derivatives.values())}
    replaced = equation.xreplace({atom: names[d] for atom, d in derivatives.items()})
    if replaced.has(u):
        names[zero] = sympy.Dummy("u_" + "".join(map(str, zero)))
        replaced = replaced.xreplace({u: names[zero]})
    ranked = sorted(names, key=lambda d: (sum(d), d))
    if replaced.atoms(AppliedUndef):
        raise InvalidArgumentError(f"equation still contains unknown functions: {replaced.atoms(AppliedUndef)}")

    unknowns = [names[d] for d in ranked]
    poly = replaced.as_poly(*unknowns) if unknowns else None
    linear = poly is not None and poly.total_degree() <= 1
    args = (*variables, *unknowns)
    return CompiledResidual(
        orders=tuple(ranked),
        linear=linear,
        residual_fn=sympy.lambdify(args, replaced, modules="numpy"),
        partial_fns=tuple(sympy.lambdify(args, sympy.diff(replaced, s), modules="numpy") for s in unknowns),
    )


@dataclass(frozen=True, eq=False)
class PdeProblem:
    """F(x; u, partials of u) = 0 on a box, with per-axis linear constraints.

    ``equation`` is written in terms of ``sympy.Function(unknown)(*variables)``.
    """

    name: str
    variables: tuple[sympy.Symbol, ...]
    domains: tuple[tuple[float, float], ...]
    constraints: tuple[tuple[Constraint, ...], ...]
    equation: sympy.Expr
    true_solution: Optional[sympy.Expr] = None
    supports: Optional[tuple[Optional[SupportBasis], ...]] = None
    description: str = ""
    unknown: str = "u"

    @property
    def n_dims(self) -> int:
        return len(self.variables)

    @cached_property
    def compiled(self) -> CompiledResidual:
        return compile_residual(self.equation, self.variables, self.unknown)

    @property
    def linear(self) -> bool:
        return self.compiled.linear

    @property
    def maps(self) -> tuple[DomainMap, ...]:
        return tuple(make_map(lo, hi) for lo, hi in self.domains)

    @cached_property
    def true_field(self) -> Optional[AnalyticField]:
        if self.true_solution is None:
            return None
        return AnalyticField.from_expr(self.true_solution, self.variables)

    def axes(self) -> tuple[AxisConstraintSet, ...]:
        supports = self.supports or (None,) * self.n_dims
        return tuple(AxisConstraintSet.build(k, cs, supports[k]) for k, cs in enumerate(self.constraints))

    def expression(self, form: str = "tensor") -> ConstrainedExpression:
        if form == "recursive":
            return build_multivariate_recursive(self.axes())
        return build_tensor_form(self.axes())


# ============================================================================
# Assembly and solvers
# ============================================================================


@dataclass(frozen=True, eq=False)
class AffineParts:
    """u_d = A[d] xi + b[d] on a point set, one entry per derivative order."""

    points: np.ndarray
    A: dict
    b: dict

    def u_values(self, xi: np.ndarray, orders) -> list[np.ndarray]:
        return [self.A[d] @ xi + self.b[d] for d in orders]


def affine_parts(p: PdeProblem, ce: ConstrainedExpression, ff: FreeFunction, points) -> AffineParts:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    features = oracle_from_free_function(ff, symbolic=True)
    A, b = {}, {}
    for d in p.compiled.orders:
        A[d] = ce.evaluate(features, pts, d, include_kappa=False)
        b[d] = ce.evaluate(zero_oracle, pts, d, include_kappa=True)
    return AffineParts(pts, A, b)


def _jacobian(p: PdeProblem, parts: AffineParts, u: Sequence[np.ndarray]) -> np.ndarray:
    weights = p.compiled.partials(parts.points, u)
    J = np.zeros_like(parts.A[p.compiled.orders[0]])
    for d, w in zip(p.compiled.orders, weights):
        J += w[:, None] * parts.A[d]
    return J


def assemble_linear_system(
    p: PdeProblem, ce: ConstrainedExpression, ff: FreeFunction, grid: CollocationGrid, parts: Optional[AffineParts] = None
) -> tuple[np.ndarray, np.ndarray]:
    """A, b with F(xi) = A xi - b at every grid point."""
    if not p.linear:
        raise WrongSolverError(f"{p.name} is nonlinear in u; use gauss_newton")
    parts = parts or affine_parts(p, ce, ff, grid.points)
    u0 = [parts.b[d] for d in p.compiled.orders]
    A = _jacobian(p, parts, u0)
    b = -p.compiled.residual(parts.points, u0)
    return A, b


@dataclass
class LeastSquaresResult:
    xi: np.ndarray
    rank: int
    cond: float
    singular_values: np.ndarray
    rank_deficient: bool


def least_squares(A, b, rcond: float = PINV_RCOND) -> LeastSquaresResult:
    """Minimum-norm solution through an SVD pseudo-inverse with relative cutoff rcond."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return LeastSquaresResult(np.zeros(A.shape[1]), 0, float("inf"), s, A.shape[1] > 0)
    keep = s > rcond * s[0]
    r = int(np.count_nonzero(keep))
    xi = Vt[:r].T @ ((U[:, :r].T @ b) / s[:r])
    return LeastSquaresResult(
        xi=xi,
        rank=r,
        cond=float(s[0] / s[r - 1]),
        singular_values=s,
        rank_deficient=r < A.shape[1],
    )


@dataclass
class GaussNewtonOptions:
    max_iter: int = 30
    step_tol: float = 1e-14
    res_tol: float = 1e-14
    ftol: float = 1e-10
    max_backtracks: int = 10


@dataclass
class GaussNewtonResult:
    xi: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool
    diverged: bool
    stalled: bool = False
    history: list[float] = field(default_factory=list)
    rank: int = 0
    cond: float = float("nan")
    rank_deficient: bool = False


def _checked_residual(p: PdeProblem, parts: AffineParts, xi: np.ndarray, iteration: int):
    u = parts.u_values(xi, p.compiled.orders)
    r = p.compiled.residual(parts.points, u)
    if not np.all(np.isfinite(r)):
        raise NumericalError(f"non-finite residual in {p.name} at iteration {iteration}", iteration)
    return r, u


def gauss_newton(
    p: PdeProblem,
    ce: ConstrainedExpression,
    ff: FreeFunction,
    grid: CollocationGrid,
    opts: Optional[GaussNewtonOptions] = None,
    parts: Optional[AffineParts] = None,
) -> GaussNewtonResult:
    """Gauss-Newton from xi = 0 with halving backtracking.

    Steps that fail to lower the residual are rejected and not counted. The
    best iterate by residual norm is returned.
    """
    opts = opts or GaussNewtonOptions()
    parts = parts or affine_parts(p, ce, ff, grid.points)
    xi = np.zeros(ff.num_features)
    r, u = _checked_residual(p, parts, xi, 0)
    rn = float(np.linalg.norm(r))
    history = [rn]
    converged = False
    stalled = False
    iterations = 0
    last = None

    while iterations < opts.max_iter:
        if rn < opts.res_tol:
            converged = True
            break
        J = _jacobian(p, parts, u)
        last = least_squares(J, -r)
        step = last.xi
        if np.max(np.abs(step), initial=0.0) < opts.step_tol:
            converged = True
            break

        t = 1.0
        trial = xi + step
        r_new, u_new = _checked_residual(p, parts, trial, iterations + 1)
        rn_new = float(np.linalg.norm(r_new))
        for _ in range(opts.max_backtracks):
            if rn_new <= rn:
                break
            t *= 0.5
            trial = xi + t * step
            r_new, u_new = _checked_residual(p, parts, trial, iterations + 1)
            rn_new = float(np.linalg.norm(r_new))

        if rn_new > rn * (1.0 - opts.ftol):
            # no further descent: accept if stationary or already at the rounding floor
            stalled = True
            gradient = np.linalg.norm(J.T @ r) / max(np.linalg.norm(J) * rn, np.finfo(float).tiny)
            converged = bool(gradient <= STALL_GRADIENT or rn <= STALL_REDUCTION * history[0])
            break
        xi, r, u, rn = trial, r_new, u_new, rn_new
        iterations += 1
        history.append(rn)
        if p.linear and t == 1.0:
            # a full step on an affine residual lands on the least-squares minimiser
            converged = True
            break

    return GaussNewtonResult(
        xi=xi,
        iterations=iterations,
        residual_norm=rn,
        converged=converged,
        diverged=not converged and not stalled,
        stalled=stalled,
        history=history,
        rank=last.rank if last else 0,
        cond=last.cond if last else float("nan"),
        rank_deficient=last.rank_deficient if last else False,
    )


# ============================================================================
# Reporting
# ============================================================================


@dataclass
class SolveReport:
    problem: str
    basis: str
    n: int
    m: int
    num_features: int
    xi: np.ndarray
    residual_norm: float
    max_train_error: Optional[float]
    max_test_error: Optional[float]
    constraint_residual: float
    assembly_time_s: float = 0.0
    ls_time_s: float = 0.0
    total_time_s: float = 0.0
    iterations: int = 0
    converged: bool = True
    diverged: bool = False
    rank: int = 0
    cond: float = float("nan")
    rank_deficient: bool = False
    multi_indices: tuple = ()


def constraint_residual(
    ce: ConstrainedExpression, oracle: Callable, domains: Sequence[tuple[float, float]], per_axis: int = TEST_POINTS_PER_AXIS
) -> float:
    """max |C[u] - kappa| over every constraint, sampled on the uniform test grid."""
    worst = 0.0
    for axis, acs in enumerate(ce.axes):
        if not len(acs):
            continue
        # residuals do not depend on the constrained coordinate
        lines = [np.linspace(lo, hi, per_axis) if k != axis else np.array([lo]) for k, (lo, hi) in enumerate(domains)]
        mesh = np.meshgrid(*lines, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        for j in range(len(acs)):
            worst = max(worst, float(np.max(np.abs(ce.constraint_residual(oracle, axis, j, pts)))))
    return worst


def evaluate_errors(
    p: PdeProblem,
    ce: ConstrainedExpression,
    ff: FreeFunction,
    grid: CollocationGrid,
    per_axis: int = TEST_POINTS_PER_AXIS,
    residual_norm: float = float("nan"),
) -> SolveReport:
    """Training (CGL grid) and test (uniform grid) errors plus constraint residuals."""
    oracle = oracle_from_free_function(ff)
    train_err = test_err = None
    truth = p.true_field
    if truth is not None:
        u_train = ce.evaluate(oracle, grid.points)
        train_err = float(np.max(np.abs(u_train - truth(grid.points))))
        test_pts = uniform_points(p.domains, per_axis)
        u_test = ce.evaluate(oracle, test_pts)
        test_err = float(np.max(np.abs(u_test - truth(test_pts))))
    return SolveReport(
        problem=p.name,
        basis=ff.kind.value,
        n=grid.shape[0],
        m=ff.degree,
        num_features=ff.num_features,
        xi=ff.xi,
        residual_norm=residual_norm,
        max_train_error=train_err,
        max_test_error=test_err,
        constraint_residual=constraint_residual(ce, oracle, p.domains, per_axis),
        multi_indices=ff.multi_indices,
    )


def solve(
    p: PdeProblem,
    basis,
    n: int,
    m: int,
    opts: Optional[GaussNewtonOptions] = None,
    per_axis: int = TEST_POINTS_PER_AXIS,
) -> SolveReport:
    """Full pipeline: n CGL nodes per axis, basis degree m."""
    if n < 2:
        raise InvalidArgumentError(f"need at least 2 nodes per axis, got n={n}")
    start = time.perf_counter()
    ce = p.expression()
    ff = make_free_function(basis, m, p.maps, ce.axes)
    grid = make_grid(p.domains, n - 1)

    t0 = time.perf_counter()
    parts = affine_parts(p, ce, ff, grid.points)
    if p.linear:
        A, b = assemble_linear_system(p, ce, ff, grid, parts)
        t1 = time.perf_counter()
        ls = least_squares(A, b)
        t2 = time.perf_counter()
        xi = ls.xi
        rn = float(np.linalg.norm(A @ xi - b))
        iterations, converged, diverged = 0, True, False
        rank, cond, deficient = ls.rank, ls.cond, ls.rank_deficient
    else:
        t1 = time.perf_counter()
        gn = gauss_newton(p, ce, ff, grid, opts, parts)
        t2 = time.perf_counter()
        xi, rn = gn.xi, gn.residual_norm
        iterations, converged, diverged = gn.iterations, gn.converged, gn.diverged
        rank, cond, deficient = gn.rank, gn.cond, gn.rank_deficient

    report = evaluate_errors(p, ce, ff.with_xi(xi), grid, per_axis, rn)
    report.assembly_time_s = t1 - t0
    report.ls_time_s = t2 - t1
    report.iterations = iterations
    report.converged = converged
    report.diverged = diverged
    report.rank = rank
    report.cond = cond
    report.rank_deficient = deficient
    report.total_time_s = time.perf_counter() - start
    return report
