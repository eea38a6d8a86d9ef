import numpy as np
import pytest
from numpy.polynomial import Polynomial
from numpy.testing import assert_allclose

from tfc.constraints import (
    Constraint,
    ConstraintTerm,
    SupportBasis,
    apply_constraint_operator,
    build_support_matrix,
    default_supports,
    projection_functional,
    solve_switching,
)
from tfc.errors import CapabilityError, InvalidArgumentError, NoValidSupportError, SingularSupportError


POINT_DERIVATIVE = (
    Constraint.point(0.0, 1.0),
    Constraint.point(1.0, 2.0, order=1),
    Constraint.point(2.0, 3.0),
)
RELATIVE_LINEAR = (
    Constraint((ConstraintTerm(1.0, 0, 1.0), ConstraintTerm(-1.0, 0, 0.0)), 0.0),
    Constraint((ConstraintTerm(2.0, 0, 2.0), ConstraintTerm(np.pi, 2, 0.0)), 3.0),
)


class TestConstraintOperator:
    def test_linear_constraint_on_square(self):
        c = RELATIVE_LINEAR[1]
        assert apply_constraint_operator(c, Polynomial([0, 0, 1])) == pytest.approx(8 + 2 * np.pi)

    def test_relative_constraint_on_constant(self):
        c = Constraint((ConstraintTerm(1.0, 0, 0.0), ConstraintTerm(-1.0, 0, 1.0)))
        assert apply_constraint_operator(c, Polynomial([5.0])) == 0.0

    def test_linearity(self, rng):
        c = RELATIVE_LINEAR[1]
        f = Polynomial(rng.normal(size=5))
        g = Polynomial(rng.normal(size=4))
        a = rng.normal()
        lhs = apply_constraint_operator(c, a * f + g)
        rhs = a * apply_constraint_operator(c, f) + apply_constraint_operator(c, g)
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_callable_without_derivative(self):
        def f(x, order):
            if order > 1:
                raise NotImplementedError("only first derivatives")
            return x if order == 0 else np.ones_like(x)

        assert apply_constraint_operator(Constraint.point(2.0, order=1), f) == 1.0
        with pytest.raises(CapabilityError):
            apply_constraint_operator(Constraint.point(0.0, order=2), f)

    def test_term_validation(self):
        with pytest.raises(InvalidArgumentError):
            ConstraintTerm(0.0, 0, 1.0)
        with pytest.raises(InvalidArgumentError):
            ConstraintTerm(1.0, -1, 1.0)
        with pytest.raises(InvalidArgumentError):
            Constraint(())


class TestSupportMatrix:
    def test_point_derivative_constraints(self):
        S = build_support_matrix(POINT_DERIVATIVE, SupportBasis.monomials((0, 2, 3)))
        assert_allclose(S, [[1, 0, 0], [0, 2, 3], [1, 4, 8]])

    def test_singular_choice(self):
        S = build_support_matrix(POINT_DERIVATIVE, SupportBasis.monomials((0, 1, 2)))
        assert_allclose(S, [[1, 0, 0], [0, 1, 2], [1, 2, 4]])

    def test_relative_linear_constraints(self):
        S = build_support_matrix(RELATIVE_LINEAR, SupportBasis.monomials((0, 1)))
        assert_allclose(S, [[0, 1], [2, 4]])

    def test_must_be_square(self):
        with pytest.raises(InvalidArgumentError):
            build_support_matrix(RELATIVE_LINEAR, SupportBasis.monomials((0,)))


class TestSolveSwitching:
    def test_point_derivative_alpha_and_phis(self):
        sw = solve_switching(POINT_DERIVATIVE, SupportBasis.monomials((0, 2, 3)))
        assert_allclose(sw.alpha, [[1, 0, 0], [0.75, 2, -0.75], [-0.5, -1, 0.5]], atol=1e-12)
        assert_allclose(sw.phis[0].coef, [1, 0, 0.75, -0.5], atol=1e-12)
        assert_allclose(sw.phis[1].coef, [0, 0, 2, -1], atol=1e-12)
        assert_allclose(sw.phis[2].coef, [0, 0, -0.75, 0.5], atol=1e-12)
        assert_allclose(sw.S @ sw.alpha, np.eye(3), atol=1e-10)
        assert sw.delta_residual(POINT_DERIVATIVE) < 1e-10

    def test_relative_linear(self):
        sw = solve_switching(RELATIVE_LINEAR, SupportBasis.monomials((0, 1)))
        assert_allclose(sw.alpha, [[-2, 0.5], [1, 0]], atol=1e-12)
        assert_allclose(sw.phi_values(0, [0.0, 3.0]), [-2.0, 1.0])
        assert_allclose(sw.phi_values(1, [0.0, 3.0]), [0.5, 0.5])

    def test_singular_support_names_the_set(self):
        with pytest.raises(SingularSupportError) as info:
            solve_switching(POINT_DERIVATIVE, SupportBasis.monomials((0, 1, 2)))
        assert "{1, x, x^2}" in str(info.value)
        assert info.value.ratio < 1e-12

    def test_phi_matrix_derivatives(self):
        sw = solve_switching(POINT_DERIVATIVE, SupportBasis.monomials((0, 2, 3)))
        x = np.array([0.0, 1.0, 2.0])
        # phi_1' = 1.5x - 1.5x^2
        assert_allclose(sw.phi_matrix(x, 1)[:, 0], [0.0, 0.0, -3.0])

    def test_corrupted_alpha_breaks_delta(self):
        sw = solve_switching(RELATIVE_LINEAR, SupportBasis.monomials((0, 1)))
        bad = sw.with_alpha(sw.alpha + 1e-3)
        assert bad.delta_residual(RELATIVE_LINEAR) > 1e-4


class TestProjectionFunctional:
    def test_linear_constraint(self, rng):
        g = Polynomial(rng.normal(size=4))
        rho = projection_functional(RELATIVE_LINEAR[1], g)
        assert rho == pytest.approx(3 - 2 * g(2.0) - np.pi * g.deriv(2)(0.0))

    def test_vanishes_when_satisfied(self):
        # g(1) = g(0) for g = x^2 - x
        assert projection_functional(RELATIVE_LINEAR[0], Polynomial([0, -1, 1])) == pytest.approx(0, abs=1e-12)
        assert projection_functional(Constraint.point(0.0, 1.0), Polynomial([1.0])) == 0.0


class TestDefaultSupports:
    def test_relative_linear_takes_lowest(self):
        assert default_supports(RELATIVE_LINEAR).exponents == (0, 1)

    def test_skips_singular_set(self):
        sb = default_supports(POINT_DERIVATIVE)
        assert sb.exponents != (0, 1, 2)
        sw = solve_switching(POINT_DERIVATIVE, sb)
        assert np.linalg.cond(sw.S) <= 1e12
        assert sw.delta_residual(POINT_DERIVATIVE) < 1e-10

    def test_single_point(self):
        assert default_supports([Constraint.point(0.0, 1.0)]).exponents == (0,)

    def test_derivative_only_skips_constant(self):
        assert default_supports([Constraint.point(0.3, order=1)]).exponents == (1,)

    def test_contradictory_constraints(self):
        cs = [Constraint.point(0.5, 1.0), Constraint.point(0.5, 2.0)]
        with pytest.raises(NoValidSupportError):
            default_supports(cs)
