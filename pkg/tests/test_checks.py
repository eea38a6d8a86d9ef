import numpy as np
import pytest

from tfc.checks import expected_singular, random_cases, run_checks, worked_values
from tfc.errors import UnknownProblemError
from tfc.problems import EXAMPLES, PROBLEMS, get_example, get_problem


class TestRegistry:
    def test_names(self):
        assert set(PROBLEMS) == {"problem1", "problem2"}
        assert set(EXAMPLES) == {"uni1", "uni2", "multi1", "multi2"}

    def test_unknown(self):
        with pytest.raises(UnknownProblemError, match="unknown problem 'nope'"):
            get_problem("nope")
        with pytest.raises(KeyError):
            get_example("nope")

    def test_problem_solutions_satisfy_constraints(self):
        p = get_problem("problem1")
        truth = p.true_field
        assert truth(np.array([[0.0, 0.0]]))[0] == 0.0
        assert truth(np.array([[1.0, 1.0]]))[0] == pytest.approx(2 / np.e)
        assert get_problem("problem2").true_field(np.array([[1.0, 0.0]]))[0] == pytest.approx(1.0)


class TestWorkedValues:
    def test_all_pass(self):
        results = worked_values()
        assert [r.check for r in results if not r.passed] == []

    def test_corruption_detected(self):
        failed = {r.check for r in worked_values(corrupt=True) if not r.passed}
        assert {"switching-coefficients", "alpha", "phi-vectors"} <= failed

    def test_singular_support_is_expected(self):
        result = expected_singular()
        assert result.passed
        assert result.error < 1e-12


class TestRandomCases:
    def test_deterministic_and_mixed_dimensions(self):
        a = random_cases(np.random.default_rng(7), 10)
        b = random_cases(np.random.default_rng(7), 10)
        assert [c.n_dims for c in a] == [1, 1, 1, 1, 2, 1, 1, 1, 1, 3]
        assert [len(ax) for c in a for ax in c.axes] == [len(ax) for c in b for ax in c.axes]


class TestRunChecks:
    def test_small_suite_passes(self):
        results = run_checks(seed=3, random_count=10)
        failed = [(r.case, r.check, r.error) for r in results if not r.passed]
        assert failed == []
        checks = {r.check for r in results}
        assert {
            "switching-delta",
            "constraint-satisfaction",
            "projection-idempotence",
            "surjectivity-witness",
            "order-independence",
            "recursive-tensor",
            "operator-permutation",
        } <= checks

    def test_corrupt_alpha_fails_delta(self):
        seen = []
        results = run_checks(seed=0, random_count=2, corrupt_alpha=True, on_result=seen.append)
        assert seen == results
        delta = [r for r in results if r.check == "switching-delta"]
        assert delta and not any(r.passed for r in delta)

    @pytest.mark.slow
    def test_full_suite(self):
        results = run_checks()
        assert all(r.passed for r in results)
        assert len({r.case for r in results}) == 54
