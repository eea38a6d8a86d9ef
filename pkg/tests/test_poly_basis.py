import numpy as np
import pytest
from numpy.testing import assert_allclose

from tfc.errors import DomainError, InvalidArgumentError
from tfc.poly_basis import BasisKind, cgl_nodes, eval_basis, make_map, orthogonality_check


class TestEvalBasis:
    @pytest.mark.parametrize(
        "kind, degree, d, expected",
        [
            (BasisKind.CHEBYSHEV, 3, 0, [1.0, 0.5, -0.5, -1.0]),
            (BasisKind.CHEBYSHEV, 2, 1, [0.0, 1.0, 2.0]),
            (BasisKind.LEGENDRE, 2, 0, [1.0, 0.5, -0.125]),
        ],
    )
    def test_known_rows(self, kind, degree, d, expected):
        m = eval_basis(kind, degree, d, [0.5])
        assert m.values.shape == (1, degree + 1)
        assert m.derivative_order == d
        assert_allclose(m.values[0], expected, atol=1e-15)

    @pytest.mark.parametrize("kind", list(BasisKind))
    def test_low_columns_vanish_under_differentiation(self, kind):
        z = np.linspace(-1, 1, 7)
        first = eval_basis(kind, 6, 1, z).values
        second = eval_basis(kind, 6, 2, z).values
        assert np.all(first[:, 0] == 0)
        assert np.all(second[:, :2] == 0)

    def test_matches_closed_form_chebyshev(self, rng):
        z = rng.uniform(-1, 1, 50)
        values = eval_basis(BasisKind.CHEBYSHEV, 10, 0, z).values
        k = np.arange(11)
        assert_allclose(values, np.cos(k[None, :] * np.arccos(z)[:, None]), atol=1e-12)

    @pytest.mark.parametrize("kind", list(BasisKind))
    @pytest.mark.parametrize("d", [1, 2])
    def test_derivative_matches_finite_difference(self, kind, d, rng):
        z = rng.uniform(-0.9, 0.9, 20)
        h = 1e-6
        lower_plus = eval_basis(kind, 8, d - 1, z + h).values
        lower_minus = eval_basis(kind, 8, d - 1, z - h).values
        fd = (lower_plus - lower_minus) / (2 * h)
        exact = eval_basis(kind, 8, d, z).values
        scale = np.maximum(np.abs(exact), 1.0)
        assert np.max(np.abs(fd - exact) / scale) < 1e-5

    def test_outside_domain_raises(self):
        with pytest.raises(DomainError):
            eval_basis(BasisKind.LEGENDRE, 3, 0, [1.1])

    def test_rounding_slack_is_clipped(self):
        m = eval_basis(BasisKind.CHEBYSHEV, 2, 0, [1.0 + 1e-14])
        assert_allclose(m.values[0], [1.0, 1.0, 1.0])

    def test_kind_parsed_from_string(self):
        assert eval_basis("legendre", 1, 0, [0.0]).kind is BasisKind.LEGENDRE
        with pytest.raises(InvalidArgumentError):
            BasisKind.parse("hermite")


class TestCglNodes:
    def test_small_sets(self):
        assert_allclose(cgl_nodes(2), [-1.0, 0.0, 1.0], atol=1e-16)
        s = np.sqrt(2) / 2
        assert_allclose(cgl_nodes(4), [-1.0, -s, 0.0, s, 1.0], atol=1e-15)

    @pytest.mark.parametrize("N", [1, 3, 7, 24, 29])
    def test_endpoints_and_symmetry(self, N):
        z = cgl_nodes(N)
        assert len(z) == N + 1
        assert z[0] == -1.0 and z[-1] == 1.0
        assert np.all(np.diff(z) > 0)
        assert np.array_equal(z, -z[::-1])

    def test_zero_rejected(self):
        with pytest.raises(InvalidArgumentError):
            cgl_nodes(0)


class TestDomainMap:
    def test_scale(self):
        assert make_map(0, 1).c == pytest.approx(2.0)
        assert make_map(0, 2 * np.pi).c == pytest.approx(1 / np.pi)

    def test_endpoints_and_round_trip(self, rng):
        dmap = make_map(-0.5, 3.0)
        assert dmap.to_z(-0.5) == pytest.approx(-1.0)
        assert dmap.to_z(3.0) == pytest.approx(1.0)
        x = rng.uniform(-0.5, 3.0, 100)
        assert_allclose(dmap.to_x(dmap.to_z(x)), x, atol=1e-14)

    @pytest.mark.parametrize("lo, hi", [(1.0, 1.0), (2.0, 1.0)])
    def test_degenerate_interval(self, lo, hi):
        with pytest.raises(InvalidArgumentError):
            make_map(lo, hi)


class TestOrthogonality:
    def test_legendre(self):
        assert abs(orthogonality_check(BasisKind.LEGENDRE, 1, 2)) < 1e-10
        assert orthogonality_check(BasisKind.LEGENDRE, 2, 2) == pytest.approx(0.4, abs=1e-8)

    def test_chebyshev(self):
        assert orthogonality_check(BasisKind.CHEBYSHEV, 0, 0) == pytest.approx(np.pi, abs=1e-6)
        assert orthogonality_check(BasisKind.CHEBYSHEV, 3, 3) == pytest.approx(np.pi / 2, abs=1e-6)
        assert abs(orthogonality_check(BasisKind.CHEBYSHEV, 2, 5)) < 1e-8
