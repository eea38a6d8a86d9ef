"""Executable property checks for constrained expressions.

Runs the worked examples and a batch of seeded random constraint sets through
the identities every constrained expression must satisfy: switching functions
act as a Kronecker delta under the constraint operators, constraints hold for
any free function, the expression is a projection, support-spanned terms of g
are annihilated, recursive and tensor constructions agree, and nested operators
commute.
"""

from dataclasses import dataclass, replace
from itertools import permutations
from typing import Callable, Optional, Sequence

import numpy as np
import sympy

from .constrained_expression import (
    AxisConstraintSet,
    ConstrainedExpression,
    as_oracle,
    build_multivariate_recursive,
    build_tensor_form,
)
from .constraints import Constraint, ConstraintTerm, SupportBasis, solve_switching
from .errors import NoValidSupportError, SingularSupportError
from .fields import AnalyticField
from .problems import EXAMPLES, ExampleCase, uni1


TOLERANCE = 1e-10
RANDOM_ORACLES = 20
CORRUPTION = 1e-3
RANDOM_MAX_CONDITION = 1e4


@dataclass
class CheckResult:
    case: str
    check: str
    passed: bool
    error: float = 0.0
    detail: str = ""


@dataclass(eq=False)
class _Case:
    name: str
    variables: tuple
    domains: tuple
    axes: tuple[AxisConstraintSet, ...]
    fields: list[AnalyticField]

    @property
    def n_dims(self) -> int:
        return len(self.variables)


def random_field(rng: np.random.Generator, variables: Sequence[sympy.Symbol]) -> AnalyticField:
    """Cubic polynomial plus a trigonometric term with seeded coefficients."""
    expr = sympy.Integer(0)
    for powers in np.ndindex(*([4] * len(variables))):
        if sum(powers) > 3:
            continue
        term = sympy.Float(rng.normal(), 15)
        for v, p in zip(variables, powers):
            term *= v ** int(p)
        expr += term
    phase = sum(sympy.Float(rng.uniform(-2, 2), 15) * v for v in variables)
    expr += sympy.Float(rng.normal(), 15) * sympy.sin(phase + sympy.Float(rng.uniform(0, 3), 15))
    return AnalyticField.from_expr(expr, variables)


def _sample_points(rng: np.random.Generator, domains, count: int) -> np.ndarray:
    lo = np.array([d[0] for d in domains])
    hi = np.array([d[1] for d in domains])
    return lo + (hi - lo) * rng.random((count, len(domains)))


def _grid_points(domains, per_axis: int) -> np.ndarray:
    lines = [np.linspace(lo, hi, per_axis) for lo, hi in domains]
    mesh = np.meshgrid(*lines, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _scale(values: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(values))))


def _corrupt(axes: Sequence[AxisConstraintSet]) -> tuple[AxisConstraintSet, ...]:
    out = []
    for acs in axes:
        if acs.switching is not None:
            acs = replace(acs, switching=acs.switching.with_alpha(acs.switching.alpha + CORRUPTION))
        out.append(acs)
    return tuple(out)


# ============================================================================
# Individual checks
# ============================================================================


def check_switching(case: _Case) -> CheckResult:
    worst = 0.0
    for acs in case.axes:
        if acs.switching is not None:
            worst = max(worst, acs.switching.delta_residual(acs.constraints))
    return CheckResult(case.name, "switching-delta", worst < TOLERANCE, worst)


def check_constraints(case: _Case, ce: ConstrainedExpression, rng: np.random.Generator) -> CheckResult:
    pts = _sample_points(rng, case.domains, 40)
    worst = 0.0
    for g in case.fields:
        for axis, acs in enumerate(case.axes):
            for j in range(len(acs)):
                res = ce.constraint_residual(g, axis, j, pts)
                worst = max(worst, float(np.max(np.abs(res))))
    return CheckResult(case.name, "constraint-satisfaction", worst < TOLERANCE, worst)


def check_idempotence(case: _Case, ce: ConstrainedExpression) -> CheckResult:
    pts = _grid_points(case.domains, 20 if case.n_dims <= 2 else 6)
    worst = 0.0
    for g in case.fields[:3]:
        once = ce.evaluate(g, pts)
        twice = ce.evaluate(as_oracle(ce, g), pts)
        worst = max(worst, float(np.max(np.abs(twice - once))) / _scale(once))
    return CheckResult(case.name, "projection-idempotence", worst < TOLERANCE, worst)


def check_surjectivity(case: _Case, ce: ConstrainedExpression, rng: np.random.Generator) -> CheckResult:
    """Adding beta * s_j(x_k) * h(other variables) to g must not change u."""
    pts = _sample_points(rng, case.domains, 40)
    g = case.fields[0]
    base = ce.evaluate(g, pts)
    worst = 0.0
    for axis, acs in enumerate(case.axes):
        if acs.switching is None:
            continue
        var = case.variables[axis]
        others = [v for k, v in enumerate(case.variables) if k != axis]
        h = sympy.cos(sum(others) + sympy.Float(rng.uniform(0, 1), 15)) if others else sympy.Integer(1)
        extra = sum(
            sympy.Float(rng.normal(), 15) * sum(sympy.Float(float(c), 17) * var**k for k, c in enumerate(s.coef))
            for s in acs.switching.support.functions
        )
        shifted = AnalyticField.from_expr(g.expr + extra * h, case.variables)
        diff = ce.evaluate(shifted, pts) - base
        worst = max(worst, float(np.max(np.abs(diff))) / _scale(base))
    return CheckResult(case.name, "surjectivity-witness", worst < TOLERANCE, worst)


def check_order_independence(case: _Case, rng: np.random.Generator) -> CheckResult:
    pts = _sample_points(rng, case.domains, 30)
    g = case.fields[0]
    reference = None
    worst = 0.0
    for order in permutations(range(case.n_dims)):
        values = build_multivariate_recursive(case.axes, order).evaluate(g, pts)
        if reference is None:
            reference = values
            continue
        worst = max(worst, float(np.max(np.abs(values - reference))) / _scale(reference))
    return CheckResult(case.name, "order-independence", worst < TOLERANCE, worst)


def check_recursive_tensor(case: _Case, rng: np.random.Generator) -> CheckResult:
    pts = _sample_points(rng, case.domains, 30)
    tensor = build_tensor_form(case.axes)
    recursive = build_multivariate_recursive(case.axes)
    orders = [(0,) * case.n_dims] + [tuple(int(k == a) for k in range(case.n_dims)) for a in range(case.n_dims)]
    worst = 0.0
    for g in case.fields[:3]:
        for d in orders:
            t = tensor.evaluate(g, pts, d)
            r = recursive.evaluate(g, pts, d)
            worst = max(worst, float(np.max(np.abs(t - r))) / _scale(t))
    return CheckResult(case.name, "recursive-tensor", worst < TOLERANCE, worst)


def check_permutation(case: _Case, ce, rng: np.random.Generator) -> CheckResult:
    pts = _sample_points(rng, case.domains, 20)
    g = case.fields[0]
    worst = 0.0
    for entry in ce.recipe.entries:
        if entry.order != 2:
            continue
        a = ce.m_entry_value(entry, g, pts)
        b = ce.m_entry_value(entry.permuted((1, 0)), g, pts)
        worst = max(worst, float(np.max(np.abs(a - b))) / _scale(a))
    return CheckResult(case.name, "operator-permutation", worst < TOLERANCE, worst)


def run_case(case: _Case, rng: np.random.Generator) -> list[CheckResult]:
    ce = build_tensor_form(case.axes)
    results = [
        check_switching(case),
        check_constraints(case, ce, rng),
        check_idempotence(case, ce),
        check_surjectivity(case, ce, rng),
    ]
    if case.n_dims > 1:
        results.append(check_order_independence(case, rng))
        results.append(check_recursive_tensor(case, rng))
        results.append(check_permutation(case, ce, rng))
    return results


# ============================================================================
# Worked-example values
# ============================================================================


def _close(a, b, tol: float = 1e-12) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    width = max(a.shape[-1], b.shape[-1])
    pad = lambda m: np.pad(m, [(0, 0)] * (m.ndim - 1) + [(0, width - m.shape[-1])])
    return float(np.max(np.abs(pad(a) - pad(b))))


def worked_values(corrupt: bool = False) -> list[CheckResult]:
    """Regression values for the worked examples."""
    results = []

    axes = EXAMPLES["uni1"]().axes()
    axes = _corrupt(axes) if corrupt else axes
    phis = np.array([np.pad(p.coef, (0, 4 - len(p.coef))) for p in axes[0].switching.phis])
    expected = [[1, 0, 0.75, -0.5], [0, 0, 2, -1], [0, 0, -0.75, 0.5]]
    err = _close(phis, expected)
    results.append(CheckResult("uni1", "switching-coefficients", err < 1e-12, err))

    axes = EXAMPLES["uni2"]().axes()
    axes = _corrupt(axes) if corrupt else axes
    err = _close(axes[0].switching.alpha, [[-2.0, 0.5], [1.0, 0.0]])
    results.append(CheckResult("uni2", "alpha", err < 1e-12, err))

    results.append(expected_singular())

    ex = EXAMPLES["multi1"]()
    ce = build_tensor_form(_corrupt(ex.axes()) if corrupt else ex.axes())
    g = ex.sample_field()
    pts = np.array([[0.3, 0.7], [0.9, 0.1]])
    m22 = ce.m_entry_value((1, 1), g, pts)
    err = float(np.max(np.abs(m22 - g(np.array([[0.0, 0.0]]))[0])))
    results.append(CheckResult("multi1", "M22", err < TOLERANCE, err))

    ex = EXAMPLES["multi2"]()
    axes = _corrupt(ex.axes()) if corrupt else ex.axes()
    ce = build_tensor_form(axes)
    g = ex.sample_field()
    corners = g(np.array([[1.0, 0.0], [1.0, 1.0], [2.0, 0.0], [2.0, 1.0]]))
    m33 = ce.m_entry_value((2, 2), g, pts)
    err = float(np.max(np.abs(m33 - (corners[0] - corners[1] + corners[2] - corners[3]))))
    results.append(CheckResult("multi2", "M33", err < TOLERANCE, err))

    phi_x = [p.coef for p in axes[0].switching.phis]
    phi_y = [p.coef for p in axes[1].switching.phis]
    err = max(
        _close(np.array([np.pad(c, (0, 3 - len(c))) for c in phi_x]), [[1, -2 / 3, 0], [0, 1 / 3, 0]]),
        _close(np.array([np.pad(c, (0, 3 - len(c))) for c in phi_y]), [[0, 1, -1], [0, 0, -1]]),
    )
    results.append(CheckResult("multi2", "phi-vectors", err < 1e-12, err))
    return results


def expected_singular() -> CheckResult:
    constraints = uni1().constraints[0]
    try:
        solve_switching(constraints, SupportBasis.monomials((0, 1, 2)))
    except SingularSupportError as e:
        return CheckResult("uni1", "expected-singular", True, e.ratio, "{1, x, x^2} rejected")
    return CheckResult("uni1", "expected-singular", False, detail="{1, x, x^2} was accepted")


# ============================================================================
# Random constraint sets
# ============================================================================


def _random_constraints(rng: np.random.Generator, homogeneous: bool) -> tuple[Constraint, ...]:
    count = int(rng.integers(1, 4))
    out = []
    for _ in range(count):
        terms = []
        for _ in range(int(rng.integers(1, 3))):
            coeff = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0))
            terms.append(ConstraintTerm(coeff, int(rng.integers(0, 3)), float(np.round(rng.uniform(0.0, 1.0), 3))))
        kappa = 0.0 if homogeneous else float(rng.normal())
        out.append(Constraint(tuple(terms), kappa))
    return tuple(out)


def _random_axis(rng: np.random.Generator, axis: int, homogeneous: bool) -> AxisConstraintSet:
    while True:
        try:
            acs = AxisConstraintSet.build(axis, _random_constraints(rng, homogeneous))
        except NoValidSupportError:
            continue
        # nearly coincident constraints leave too little precision for the checks
        if np.linalg.cond(acs.switching.S) <= RANDOM_MAX_CONDITION:
            return acs


def random_cases(rng: np.random.Generator, count: int) -> list[_Case]:
    """Mostly univariate sets; every fifth is 2-D and every tenth 3-D (homogeneous)."""
    symbols = sympy.symbols("x y z", real=True)
    cases = []
    for i in range(count):
        dims = 3 if i % 10 == 9 else 2 if i % 5 == 4 else 1
        variables = symbols[:dims]
        homogeneous = dims > 1
        axes = tuple(_random_axis(rng, k, homogeneous) for k in range(dims))
        fields = [random_field(rng, variables) for _ in range(3)]
        cases.append(_Case(f"random-{i:02d}", variables, ((0.0, 1.0),) * dims, axes, fields))
    return cases


def example_case(ex: ExampleCase, rng: np.random.Generator, oracles: int = RANDOM_ORACLES) -> _Case:
    fields = [ex.sample_field()] + [random_field(rng, ex.variables) for _ in range(oracles - 1)]
    return _Case(ex.name, ex.variables, ex.domains, ex.axes(), fields)


def run_checks(
    seed: int = 0,
    random_count: int = 50,
    corrupt_alpha: bool = False,
    on_result: Optional[Callable[[CheckResult], None]] = None,
) -> list[CheckResult]:
    """Run the full suite; ``corrupt_alpha`` perturbs every alpha matrix."""
    rng = np.random.default_rng(seed)
    cases = [example_case(factory(), rng) for factory in EXAMPLES.values()]
    cases += random_cases(rng, random_count)

    results = []

    def record(r: CheckResult) -> None:
        results.append(r)
        if on_result:
            on_result(r)

    for r in worked_values(corrupt_alpha):
        record(r)
    for case in cases:
        if corrupt_alpha:
            case = replace(case, axes=_corrupt(case.axes))
        for r in run_case(case, rng):
            record(r)
    return results
