"""Built-in problem registry.

PDE problems are what ``tfc run`` sweeps; worked examples are small constraint
sets with known switching functions and M entries, exercised by ``tfc check``.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import sympy
from sympy import cos, exp, pi, sin

from .constrained_expression import AxisConstraintSet, build_multivariate_recursive, build_tensor_form
from .constraints import Constraint, ConstraintTerm, SupportBasis
from .errors import UnknownProblemError
from .fields import AnalyticField
from .pde_solver import PdeProblem


x, y = sympy.symbols("x y", real=True)
XY = (x, y)
u = sympy.Function("u")(x, y)
TWO_PI = 2 * float(pi)


def _field(expr) -> AnalyticField:
    return AnalyticField.from_expr(expr, XY)


@dataclass(frozen=True, eq=False)
class ExampleCase:
    """A constraint set with a sample free function, no PDE attached."""

    name: str
    description: str
    variables: tuple
    domains: tuple[tuple[float, float], ...]
    constraints: tuple[tuple[Constraint, ...], ...]
    supports: Optional[tuple[Optional[SupportBasis], ...]] = None
    sample_g: Optional[sympy.Expr] = None

    @property
    def n_dims(self) -> int:
        return len(self.variables)

    def axes(self) -> tuple[AxisConstraintSet, ...]:
        supports = self.supports or (None,) * self.n_dims
        return tuple(AxisConstraintSet.build(k, cs, supports[k]) for k, cs in enumerate(self.constraints))

    def tensor(self):
        return build_tensor_form(self.axes())

    def recursive(self, order=None):
        return build_multivariate_recursive(self.axes(), order)

    def sample_field(self) -> AnalyticField:
        expr = self.sample_g if self.sample_g is not None else sympy.Integer(0)
        return AnalyticField.from_expr(expr, self.variables)


# ============================================================================
# PDE problems
# ============================================================================


def problem1() -> PdeProblem:
    """Poisson equation on the unit square with Dirichlet data on all sides."""
    return PdeProblem(
        name="problem1",
        variables=XY,
        domains=((0.0, 1.0), (0.0, 1.0)),
        constraints=(
            (
                Constraint.point(0.0, _field(y**3), label="u(0,y) = y^3"),
                Constraint.point(1.0, _field((1 + y**3) * exp(-1)), label="u(1,y) = (1+y^3)/e"),
            ),
            (
                Constraint.point(0.0, _field(x * exp(-x)), label="u(x,0) = x e^-x"),
                Constraint.point(1.0, _field(exp(-x) * (x + 1)), label="u(x,1) = e^-x (x+1)"),
            ),
        ),
        equation=u.diff(x, 2) + u.diff(y, 2) - exp(-x) * (x - 2 + y**3 + 6 * y),
        true_solution=exp(-x) * (x + y**3),
        description="u_xx + u_yy = e^-x (x - 2 + y^3 + 6y) on [0,1]^2",
    )


def problem2() -> PdeProblem:
    """Nonlinear equation with a periodic (relative) constraint in y."""
    return PdeProblem(
        name="problem2",
        variables=XY,
        domains=((0.0, 1.0), (0.0, TWO_PI)),
        constraints=(
            (
                Constraint.point(0.0, 0.0, label="u(0,y) = 0"),
                Constraint.point(1.0, _field(cos(y)), label="u(1,y) = cos y"),
            ),
            (
                Constraint(
                    (ConstraintTerm(1.0, 0, 0.0), ConstraintTerm(-1.0, 0, TWO_PI)),
                    0.0,
                    label="u(x,0) = u(x,2pi)",
                ),
            ),
        ),
        equation=u.diff(x, 2) + u.diff(x) * u.diff(y) - (2 * cos(y) - 2 * x**3 * sin(y) * cos(y)),
        true_solution=x**2 * cos(y),
        description="u_xx + u_x u_y = 2 cos y - 2 x^3 sin y cos y on [0,1]x[0,2pi]",
    )


# ============================================================================
# Worked examples
# ============================================================================


def uni1() -> ExampleCase:
    """Point and derivative constraints y(0)=1, y'(1)=2, y(2)=3."""
    return ExampleCase(
        name="uni1",
        description="y(0) = 1, y_x(1) = 2, y(2) = 3 with supports {1, x^2, x^3}",
        variables=(x,),
        domains=((0.0, 2.0),),
        constraints=(
            (
                Constraint.point(0.0, 1.0),
                Constraint.point(1.0, 2.0, order=1),
                Constraint.point(2.0, 3.0),
            ),
        ),
        supports=(SupportBasis.monomials((0, 2, 3)),),
        sample_g=sympy.sin(3 * x) + x**4,
    )


def uni2() -> ExampleCase:
    """Relative constraint y(0)=y(1) and linear constraint 2y(2) + pi y_xx(0) = 3."""
    return ExampleCase(
        name="uni2",
        description="y(1) - y(0) = 0, 2 y(2) + pi y_xx(0) = 3 with supports {1, x}",
        variables=(x,),
        domains=((0.0, 2.0),),
        constraints=(
            (
                Constraint((ConstraintTerm(1.0, 0, 1.0), ConstraintTerm(-1.0, 0, 0.0)), 0.0),
                Constraint((ConstraintTerm(2.0, 0, 2.0), ConstraintTerm(float(pi), 2, 0.0)), 3.0),
            ),
        ),
        supports=(SupportBasis.monomials((0, 1)),),
        sample_g=x**3,
    )


def multi1() -> ExampleCase:
    return ExampleCase(
        name="multi1",
        description="u(0,y) = sin 2pi y, u_x(0,y) = 0, u(x,0) = x^2, u(x,1) = cos x - 1",
        variables=XY,
        domains=((0.0, 1.0), (0.0, 1.0)),
        constraints=(
            (
                Constraint.point(0.0, _field(sin(2 * pi * y))),
                Constraint.point(0.0, 0.0, order=1),
            ),
            (
                Constraint.point(0.0, _field(x**2)),
                Constraint.point(1.0, _field(cos(x) - 1)),
            ),
        ),
        sample_g=x**2 * cos(y) + 4,
    )


def multi2() -> ExampleCase:
    return ExampleCase(
        name="multi2",
        description="u(0,y) = y^2 sin pi y, u(1,y) + u(2,y) = y sin pi y, u_y(x,0) = 0, u(x,0) = u(x,1)",
        variables=XY,
        domains=((0.0, 2.0), (0.0, 1.0)),
        constraints=(
            (
                Constraint.point(0.0, _field(y**2 * sin(pi * y))),
                Constraint((ConstraintTerm(1.0, 0, 1.0), ConstraintTerm(1.0, 0, 2.0)), _field(y * sin(pi * y))),
            ),
            (
                Constraint.point(0.0, 0.0, order=1),
                Constraint((ConstraintTerm(1.0, 0, 0.0), ConstraintTerm(-1.0, 0, 1.0)), 0.0),
            ),
        ),
        sample_g=x**2 * cos(y) + sin(2 * x),
    )


PROBLEMS: dict[str, Callable[[], PdeProblem]] = {
    "problem1": problem1,
    "problem2": problem2,
}

EXAMPLES: dict[str, Callable[[], ExampleCase]] = {
    "uni1": uni1,
    "uni2": uni2,
    "multi1": multi1,
    "multi2": multi2,
}


def get_problem(name: str) -> PdeProblem:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise UnknownProblemError(f"unknown problem '{name}' (choose from {', '.join(PROBLEMS)})") from None


def get_example(name: str) -> ExampleCase:
    try:
        return EXAMPLES[name]()
    except KeyError:
        raise UnknownProblemError(f"unknown example '{name}' (choose from {', '.join(EXAMPLES)})") from None
