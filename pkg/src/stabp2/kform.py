"""Rank-3 integer lattice with its antisymmetric pairing and twist automorphisms.

The lattice is the numerical Grothendieck group of the three simple objects
living on the total space of O(-3) over the projective plane, written in the
fixed basis (e0, e1, e2) of those simples.  The pairing is the antisymmetrized
Euler pairing: each quiver edge carries three arrows, so the Gram matrix is
3 times the cyclic incidence form and its kernel is spanned by the point
class (1, 1, 1).

Everything here is exact integer arithmetic (Python ints, no floats), so the
helpers double as a tiny unimodular 3x3 matrix toolkit used by the rest of
the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

Vec = tuple[int, int, int]
Mat = tuple[Vec, Vec, Vec]

#: Gram matrix of the pairing in the simple basis.  Antisymmetric; kernel
#: spanned by the point class (1, 1, 1); every entry a multiple of 3.
GRAM: Mat = (
    (0, -3, 3),
    (3, 0, -3),
    (-3, 3, 0),
)

#: Class of a skyscraper sheaf: the sum of the three simples.
POINT_CLASS: Vec = (1, 1, 1)

IDENTITY: Mat = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


class InvariantError(ValueError):
    """Raised when exact structural invariants fail."""


def _coords(x) -> Vec:
    if isinstance(x, KClass):
        return x.coords
    t = tuple(x)
    if len(t) != 3 or not all(isinstance(c, int) for c in t):
        raise InvariantError(f"not an integer 3-vector: {x!r}")
    return t  # type: ignore[return-value]


@dataclass(frozen=True)
class KClass:
    """An integer class in the rank-3 lattice."""

    coords: Vec

    def __post_init__(self):
        _coords(self.coords)

    @staticmethod
    def basis(i: int) -> "KClass":
        return KClass(tuple(1 if j == i else 0 for j in range(3)))  # type: ignore[arg-type]

    def __add__(self, other: "KClass") -> "KClass":
        a, b = self.coords, _coords(other)
        return KClass((a[0] + b[0], a[1] + b[1], a[2] + b[2]))

    def __sub__(self, other: "KClass") -> "KClass":
        a, b = self.coords, _coords(other)
        return KClass((a[0] - b[0], a[1] - b[1], a[2] - b[2]))

    def __neg__(self) -> "KClass":
        a = self.coords
        return KClass((-a[0], -a[1], -a[2]))

    def __rmul__(self, n: int) -> "KClass":
        a = self.coords
        return KClass((n * a[0], n * a[1], n * a[2]))

    def __iter__(self):
        return iter(self.coords)


def chi(x, y) -> int:
    """Antisymmetrized Euler pairing chi(x, y) = x^T . GRAM . y."""
    a, b = _coords(x), _coords(y)
    # GRAM = 3 * cyclic form; expanded for speed (this sits in hot loops).
    return 3 * (a[1] * b[0] - a[0] * b[1] + a[2] * b[1] - a[1] * b[2] + a[0] * b[2] - a[2] * b[0])


def twist_matrix(t) -> Mat:
    """Matrix (in the fixed basis) of the twist x -> x - chi(t, x) t.

    The twist along a spherical class t is unipotent: determinant 1,
    (P - 1)^2 = 0, it fixes the point class, and it preserves the pairing.
    It depends on t only up to sign.
    """
    tt = _coords(t)
    # Row vector chi(t, e_b) for b = 0, 1, 2.
    r = tuple(chi(tt, e) for e in IDENTITY)
    return tuple(
        tuple((1 if a == b else 0) - tt[a] * r[b] for b in range(3)) for a in range(3)
    )  # type: ignore[return-value]


@dataclass(frozen=True)
class EulerForm:
    """The pairing as a value object, for callers that want it reified."""

    gram: Mat = GRAM

    def chi(self, x, y) -> int:
        a, b = _coords(x), _coords(y)
        g = self.gram
        return sum(a[i] * g[i][j] * b[j] for i in range(3) for j in range(3))

    def validate(self) -> None:
        g = self.gram
        for i in range(3):
            for j in range(3):
                if g[i][j] != -g[j][i]:
                    raise InvariantError("pairing is not antisymmetric")
                if g[i][j] % 3:
                    raise InvariantError("pairing entries must be multiples of 3")
        if any(sum(row) for row in g):
            raise InvariantError("point class (1,1,1) must span the kernel")


EULER_FORM = EulerForm()


# ---------------------------------------------------------------------------
# Exact 3x3 integer matrix helpers.

def mat_mul(a: Mat, b: Mat) -> Mat:
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3)) for i in range(3)
    )  # type: ignore[return-value]


def mat_vec(a: Mat, v) -> Vec:
    x = _coords(v)
    return tuple(sum(a[i][k] * x[k] for k in range(3)) for i in range(3))  # type: ignore[return-value]


def mat_transpose(a: Mat) -> Mat:
    return tuple(tuple(a[j][i] for j in range(3)) for i in range(3))  # type: ignore[return-value]


def mat_det(a: Mat) -> int:
    return (
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    )


def mat_adjugate(a: Mat) -> Mat:
    c = [[0] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != i]
            s = [k for k in range(3) if k != j]
            minor = a[r[0]][s[0]] * a[r[1]][s[1]] - a[r[0]][s[1]] * a[r[1]][s[0]]
            c[j][i] = (-1) ** (i + j) * minor
    return tuple(tuple(row) for row in c)  # type: ignore[return-value]


def mat_inv_unimodular(a: Mat) -> Mat:
    """Exact inverse of an integer matrix with determinant +-1."""
    d = mat_det(a)
    if d not in (1, -1):
        raise InvariantError(f"matrix is not unimodular (det={d})")
    adj = mat_adjugate(a)
    if d == 1:
        return adj
    return tuple(tuple(-x for x in row) for row in adj)  # type: ignore[return-value]


def solve_unimodular(a: Mat, v) -> Vec:
    """Exact solution x of a @ x = v for unimodular a."""
    return mat_vec(mat_inv_unimodular(a), v)


def columns(*cols: Iterable[int]) -> Mat:
    """Matrix with the given columns."""
    c = [_coords(c_) for c_ in cols]
    return tuple(tuple(c[j][i] for j in range(3)) for i in range(3))  # type: ignore[return-value]
