"""Chebyshev and Legendre bases, CGL nodes and affine domain maps."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, InvalidArgumentError


DOMAIN_TOLERANCE = 1e-12


class BasisKind(str, Enum):
    """Orthogonal polynomial families, both defined on [-1, +1]."""

    CHEBYSHEV = "chebyshev"
    LEGENDRE = "legendre"

    @classmethod
    def parse(cls, value: "str | BasisKind") -> "BasisKind":
        if isinstance(value, BasisKind):
            return value
        try:
            return cls(value.lower())
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise InvalidArgumentError(f"unknown basis '{value}' (choose from {choices})")


@dataclass(frozen=True)
class DomainMap:
    """Affine map between a problem interval [x_lo, x_hi] and [z_lo, z_hi]."""

    x_lo: float
    x_hi: float
    z_lo: float = -1.0
    z_hi: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.x_lo) or not np.isfinite(self.x_hi):
            raise InvalidArgumentError("domain endpoints must be finite")
        if not self.x_hi > self.x_lo:
            raise InvalidArgumentError(
                f"degenerate interval [{self.x_lo}, {self.x_hi}]: x_hi must exceed x_lo"
            )

    @property
    def c(self) -> float:
        """Derivative scale dz/dx."""
        return (self.z_hi - self.z_lo) / (self.x_hi - self.x_lo)

    def to_z(self, x):
        x = np.asarray(x, dtype=float)
        return (x - self.x_lo) / (self.x_hi - self.x_lo) * (self.z_hi - self.z_lo) + self.z_lo

    def to_x(self, z):
        z = np.asarray(z, dtype=float)
        return (z - self.z_lo) / (self.z_hi - self.z_lo) * (self.x_hi - self.x_lo) + self.x_lo


@dataclass(frozen=True)
class EvalMatrix:
    """Values (or d-th derivatives) of P_0..P_max at a set of points.

    ``values`` has shape (num_points, max_degree + 1); column k is P_k.
    """

    values: np.ndarray
    derivative_order: int
    kind: BasisKind

    @property
    def max_degree(self) -> int:
        return self.values.shape[1] - 1


def make_map(x_lo: float, x_hi: float) -> DomainMap:
    """Linear map from [x_lo, x_hi] onto [-1, +1]."""
    return DomainMap(float(x_lo), float(x_hi))


def cgl_nodes(N: int) -> np.ndarray:
    """Chebyshev-Gauss-Lobatto nodes z_j = -cos(j*pi/N), j = 0..N.

    Endpoints are exactly -1 and +1 and the set is exactly antisymmetric.
    """
    if N < 1:
        raise InvalidArgumentError(f"CGL node count needs N >= 1, got {N}")
    z = -np.cos(np.arange(N + 1) * np.pi / N)
    # Averaging against the reversed copy makes z_j == -z_{N-j} bit for bit.
    z = 0.5 * (z - z[::-1])
    z[0] = -1.0
    z[-1] = 1.0
    return z


def _recurrence(kind: BasisKind, k: int) -> tuple[float, float]:
    # P_{k+1} = a z P_k - b P_{k-1}
    if kind is BasisKind.CHEBYSHEV:
        return 2.0, 1.0
    return (2 * k + 1) / (k + 1), k / (k + 1)


def eval_basis(kind: BasisKind, max_degree: int, d: int, z) -> EvalMatrix:
    """Evaluate the d-th derivative of P_0..P_max_degree at points z.

    Derivatives come from differentiating the three-term recursion:
    D^q P_{k+1} = a (q D^{q-1} P_k + z D^q P_k) - b D^q P_{k-1}.
    """
    kind = BasisKind.parse(kind)
    if max_degree < 0:
        raise InvalidArgumentError(f"max_degree must be >= 0, got {max_degree}")
    if d < 0:
        raise InvalidArgumentError(f"derivative order must be >= 0, got {d}")

    z = np.atleast_1d(np.asarray(z, dtype=float)).ravel()
    if z.size and np.max(np.abs(z)) > 1.0 + DOMAIN_TOLERANCE:
        bad = z[np.argmax(np.abs(z))]
        raise DomainError(f"basis evaluated outside [-1, 1] at z = {bad!r}")
    z = np.clip(z, -1.0, 1.0)

    P = z.size
    width = max_degree + 1
    prev = None
    for q in range(d + 1):
        cur = np.zeros((P, width))
        if q == 0:
            cur[:, 0] = 1.0
        if width > 1:
            if q == 0:
                cur[:, 1] = z
            elif q == 1:
                cur[:, 1] = 1.0
        for k in range(1, max_degree):
            a, b = _recurrence(kind, k)
            lower = q * prev[:, k] if q > 0 else 0.0
            cur[:, k + 1] = a * (lower + z * cur[:, k]) - b * cur[:, k - 1]
        prev = cur

    return EvalMatrix(values=prev, derivative_order=d, kind=kind)


def _chebyshev_inner(i: int, j: int, nodes: int) -> float:
    # With z = cos(theta) the weight 1/sqrt(1 - z^2) cancels: integrate over theta.
    theta = np.linspace(0.0, np.pi, nodes)
    z = np.cos(theta)
    top = max(i, j)
    vals = eval_basis(BasisKind.CHEBYSHEV, top, 0, z).values
    f = vals[:, i] * vals[:, j]
    h = theta[1] - theta[0]
    w = np.full(nodes, h)
    w[0] = w[-1] = h / 2
    return float(w @ f)


def _legendre_inner(i: int, j: int, nodes: int) -> float:
    if nodes % 2 == 0:
        nodes += 1
    z = np.linspace(-1.0, 1.0, nodes)
    top = max(i, j)
    vals = eval_basis(BasisKind.LEGENDRE, top, 0, z).values
    f = vals[:, i] * vals[:, j]
    h = z[1] - z[0]
    w = np.ones(nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(h / 3.0 * (w @ f))


def orthogonality_check(kind: BasisKind, i: int, j: int, nodes: int = 4001) -> float:
    """Inner product <P_i, P_j> under the family's weight, by composite quadrature."""
    kind = BasisKind.parse(kind)
    if i < 0 or j < 0:
        raise InvalidArgumentError("polynomial indices must be non-negative")
    nodes = max(int(nodes), 2001)
    if kind is BasisKind.CHEBYSHEV:
        return _chebyshev_inner(i, j, nodes)
    return _legendre_inner(i, j, nodes)
