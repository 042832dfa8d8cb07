"""Genus-zero invariants of the plane and the quantum product's jets.

The degree-k counts n_k of rational plane curves through 3k-1 general points
obey the classical recursion obtained from the associativity (WDVV) identity;
everything here is exact integer / rational arithmetic up to the final
complex evaluation.

The potential is
    Phi = (t0^2 t2 + t0 t1^2)/2 + sum_k rho_k t2^(3k-1) e^(k t1),
with rho_k = n_k / (3k-1)!.  Only third partials ever enter: the module
exposes them as an exact-at-t2=0, guarded-elsewhere jet.  The Euler field
E = t0 d0 + 3 d1 - t2 d2 rescales the potential by E(Phi) = Phi + 3 t0 t1
(the inhomogeneous quadratic is in the kernel of the third partials), and
acts on the structure tensor with weight a+b+c-2.
"""

from __future__ import annotations

import json
import math
import os
import pathlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .kform import InvariantError

KMAX_CAP = 30

# Frozen seed values (through-points counts for plane rational curves).
GW_FROZEN = {1: 1, 2: 1, 3: 12, 4: 620, 5: 87304}


class TruncationError(InvariantError):
    """Requested jet cannot be certified at the requested accuracy."""


# ---------------------------------------------------------------------------
# Degree-k counts and their factorial normalization.

def _cache_file() -> pathlib.Path | None:
    root = os.environ.get("STABP2_CACHE")
    if not root:
        return None
    p = pathlib.Path(root)
    p.mkdir(parents=True, exist_ok=True)
    return p / "gw_numbers.json"


def _compute_gw(kmax: int) -> list[int]:
    n = [0] * (kmax + 1)
    n[1] = 1
    for k in range(2, kmax + 1):
        total = 0
        for i in range(1, k):
            j = k - i
            total += n[i] * n[j] * (
                i * i * j * j * math.comb(3 * k - 4, 3 * i - 2)
                - i ** 3 * j * math.comb(3 * k - 4, 3 * i - 1)
            )
        n[k] = total
    return n[1:]


def gw_numbers(kmax: int) -> list[int]:
    """Counts [n_1, ..., n_kmax]; cached as decimal strings when STABP2_CACHE is set."""
    if not 1 <= kmax <= KMAX_CAP:
        raise InvariantError(f"kmax must be between 1 and {KMAX_CAP}, got {kmax}")
    path = _cache_file()
    store: dict = {}
    if path is not None and path.exists():
        store = json.loads(path.read_text())
        if str(kmax) in store:
            return [int(s) for s in store[str(kmax)]]
    values = _compute_gw(kmax)
    if path is not None:
        store[str(kmax)] = [str(v) for v in values]
        path.write_text(json.dumps(store))
    return values


def rho_coefficients(kmax: int) -> list[Fraction]:
    """[rho_1, ..., rho_kmax] with rho_k = n_k / (3k-1)!, exact."""
    return [
        Fraction(nk, math.factorial(3 * k - 1))
        for k, nk in enumerate(gw_numbers(kmax), start=1)
    ]


# Conservative growth constant: rho_k^(1/k) is maximized at k=1 (value 1/2),
# padded by 20%.  Recomputed lazily if a larger table is requested.
def _growth_constant(kmax: int) -> float:
    rhos = rho_coefficients(min(kmax, 12))
    return 1.2 * max(float(r) ** (1.0 / k) for k, r in enumerate(rhos, start=1))


# ---------------------------------------------------------------------------
# Frobenius-point jets.

@dataclass(frozen=True)
class FrobeniusPoint:
    """A point t = (t0, t1, t2) with a truncation order for the quantum tail."""

    t: tuple[complex, complex, complex]
    kmax: int = 16
    tail_tol: float = 1e-12

    @staticmethod
    def make(t: Sequence[complex], kmax: int = 16, tail_tol: float = 1e-12) -> "FrobeniusPoint":
        tt = tuple(complex(v) for v in t)
        if len(tt) != 3:
            raise InvariantError("a point has exactly three coordinates")
        return FrobeniusPoint(tt, kmax, tail_tol)  # type: ignore[arg-type]

    @property
    def q(self) -> complex:
        import cmath

        return cmath.exp(self.t[1])

    def guard(self) -> float:
        """Certified bound on the dropped tail of any third partial.

        Exactly zero when t2 = 0 (every dropped term carries a positive
        power of t2).  Otherwise requires the growth ratio to stay below
        0.7 and bounds the tail by 200 explicit terms plus a geometric
        remainder; raises TruncationError when the bound misses tail_tol.
        """
        t2 = self.t[2]
        if t2 == 0:
            return 0.0
        c = _growth_constant(self.kmax)
        a2 = abs(t2)
        eq = math.exp(self.t[1].real if isinstance(self.t[1], complex) else float(self.t[1]))
        r = c * a2 ** 3 * eq
        if r >= 0.7:
            raise TruncationError(
                f"quantum tail ratio {r:.3g} >= 0.7 at t2={t2}, t1={self.t[1]}; "
                "move closer to the small locus or raise kmax"
            )
        total = 0.0
        k = self.kmax + 1
        term = 0.0
        for k in range(self.kmax + 1, self.kmax + 201):
            term = (3 * k) ** 3 * (c ** k) * a2 ** (3 * k - 4) * eq ** k
            total += term
        ratio = r * (1 + 1 / k) ** 3
        total += term * ratio / (1 - ratio)
        if total > self.tail_tol:
            raise TruncationError(
                f"quantum tail bound {total:.3g} exceeds {self.tail_tol} "
                f"(kmax={self.kmax}, t={self.t})"
            )
        return total


def _quantum_sums(pt: FrobeniusPoint) -> tuple[complex, complex, complex, complex]:
    """(c111, c112, c122, c222) quantum parts, exact at t2 = 0."""
    t2 = pt.t[2]
    q = pt.q
    if t2 == 0:
        return (0j, 0j, q, 0j)
    pt.guard()
    rhos = rho_coefficients(pt.kmax)
    s0 = s1 = s2 = s3 = 0j
    qk = 1 + 0j
    for k, rho in enumerate(rhos, start=1):
        qk *= q
        r = float(rho)
        base = t2 ** (3 * k - 4) * qk * r
        # powers: c111 ~ t2^(3k-1), c112 ~ t2^(3k-2), c122 ~ t2^(3k-3), c222 ~ t2^(3k-4)
        s0 += k ** 3 * base * t2 ** 3
        s1 += k * k * (3 * k - 1) * base * t2 ** 2
        s2 += k * (3 * k - 1) * (3 * k - 2) * base * t2
        if k > 1:  # the k=1 coefficient (3k-3) vanishes; skip its negative power
            s3 += (3 * k - 1) * (3 * k - 2) * (3 * k - 3) * base
    return (s0, s1, s2, s3)


def third_partials(pt: FrobeniusPoint) -> np.ndarray:
    """Symmetric tensor c[a,b,c] = d_a d_b d_c Phi at the point."""
    c111, c112, c122, c222 = _quantum_sums(pt)
    c = np.zeros((3, 3, 3), dtype=complex)

    def put(a: int, b: int, d: int, val: complex) -> None:
        for idx in {(a, b, d), (a, d, b), (b, a, d), (b, d, a), (d, a, b), (d, b, a)}:
            c[idx] = val

    put(0, 0, 2, 1.0)
    put(0, 1, 1, 1.0)
    put(1, 1, 1, c111)
    put(1, 1, 2, c112)
    put(1, 2, 2, c122)
    put(2, 2, 2, c222)
    return c


METRIC = np.array([[0, 0, 1], [0, 1, 0], [1, 0, 0]], dtype=complex)
METRIC_INV = METRIC  # antidiagonal identity is its own inverse


def product_matrix(pt: FrobeniusPoint, a: int) -> np.ndarray:
    """Matrix of multiplication by the basis vector d_a: (C_a)^e_b = c_{ab}^e."""
    c = third_partials(pt)
    # raise the last index with the antidiagonal metric: c_{ab}^e = c_{ab(2-e)}
    return np.array([[c[a, b, 2 - e] for b in range(3)] for e in range(3)], dtype=complex)


def multiply(pt: FrobeniusPoint, x: Sequence[complex], y: Sequence[complex]) -> np.ndarray:
    """Quantum product of two tangent vectors in the flat frame."""
    xv = np.asarray(x, dtype=complex)
    yv = np.asarray(y, dtype=complex)
    out = np.zeros(3, dtype=complex)
    for a in range(3):
        if xv[a] != 0:
            out = out + xv[a] * (product_matrix(pt, a) @ yv)
    return out


def euler_vector(t: Sequence[complex]) -> np.ndarray:
    """E = t0 d0 + 3 d1 - t2 d2 in the flat frame."""
    return np.array([t[0], 3.0, -t[2]], dtype=complex)


def euler_gradient() -> np.ndarray:
    """The (constant, diagonal) covariant derivative of E in the flat frame."""
    return np.diag([1.0, 0.0, -1.0]).astype(complex)


def u_operator(pt: FrobeniusPoint) -> np.ndarray:
    """Multiplication by the Euler field."""
    e = euler_vector(pt.t)
    u = np.zeros((3, 3), dtype=complex)
    for b in range(3):
        if e[b] != 0:
            u = u + e[b] * product_matrix(pt, b)
    return u


def u_eigenvalues(pt: FrobeniusPoint) -> np.ndarray:
    """Eigenvalues of the Euler multiplication, sorted by (Re, Im)."""
    vals = np.linalg.eigvals(u_operator(pt))
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]


def solve_base_point(kmax: int = 16) -> FrobeniusPoint:
    """The calibration point where the canonical values are the cube roots of 1.

    On the t2 = 0 slice the Euler multiplication is t0 + 3 C1(q), with
    canonical values t0 + 3 q^(1/3) zeta^i; the choice t0 = 0, q = 1/27
    therefore puts them exactly on the unit circle.
    """
    pt = FrobeniusPoint.make((0.0, -3.0 * math.log(3.0), 0.0), kmax=kmax)
    vals = u_eigenvalues(pt)
    expect = sorted(
        [np.exp(2j * np.pi * k / 3) for k in range(3)],
        key=lambda v: (v.real, v.imag),
    )
    err = max(abs(a - b) for a, b in zip(vals, expect))
    if err > 1e-10:
        raise InvariantError(f"base-point canonical values off by {err:.3g}")
    return pt


def wdvv_residual(pt: FrobeniusPoint) -> float:
    """Max associator entry over flat basis triples (zero iff WDVV holds)."""
    mats = [product_matrix(pt, a) for a in range(3)]
    worst = 0.0
    for a in range(3):
        for b in range(3):
            comm = mats[a] @ mats[b] - mats[b] @ mats[a]
            worst = max(worst, float(np.max(np.abs(comm))))
    return worst


# ---------------------------------------------------------------------------
# Euler rescaling, checked two independent ways.

def euler_scaling_check(kmax: int = 12, sample: FrobeniusPoint | None = None) -> dict:
    """Verify E(Phi) = Phi + 3 t0 t1 and E(c_abc) = (a+b+c-2) c_abc.

    The potential identity is established exactly, term by term: every
    quantum monomial rho_k t2^(3k-1) e^(k t1) has Euler weight
    3k - (3k-1) = 1, and the classical cubic contributes the quadratic
    correction 3 t0 t1.  The tensor identity is checked the same way on
    exponents and then numerically by a central finite difference along E.
    """
    # --- exact, term-wise -------------------------------------------------
    potential_exact = True
    for k in range(1, kmax + 1):
        weight = Fraction(3 * k) - Fraction(3 * k - 1)
        if weight != 1:
            potential_exact = False
    # classical part: E acts on {t0^2 t2 / 2, t0 t1^2 / 2}
    # E(t0^a t1^b t2^c) = (a - c) monomial + 3b * (monomial with b-1)
    # t0^2 t2 / 2 -> weight (2 - 1) = 1: matches Phi; no quadratic piece.
    # t0 t1^2 / 2 -> weight 1 from t0, plus 3 * 2 * (t0 t1 / 2) = 3 t0 t1.
    classical_quadratic = (Fraction(3) * 2 * Fraction(1, 2), (1, 1, 0))
    if classical_quadratic[0] != 3:
        potential_exact = False

    tensor_exact = True
    # exponent table for each distinct third partial: (t2-power offset from 3k)
    exponent_checks = {
        (1, 1, 1): 1,  # t2^(3k-1): weight 3k-(3k-1) = 1 = a+b+c-2
        (1, 1, 2): 2,
        (1, 2, 2): 3,
        (2, 2, 2): 4,
    }
    for (a, b, c), offset in exponent_checks.items():
        for k in range(1, kmax + 1):
            weight = Fraction(3 * k) - Fraction(3 * k - offset)
            if weight != a + b + c - 2:
                tensor_exact = False
    # classical: c002 and c011 are constants, weights 0 = a+b+c-2.
    for (a, b, c) in [(0, 0, 2), (0, 1, 1)]:
        if a + b + c - 2 != 0:
            tensor_exact = False

    # --- numeric spot check ----------------------------------------------
    pt = sample if sample is not None else FrobeniusPoint.make(
        (0.05, -3.0, 0.2), kmax=kmax
    )
    pt.guard()
    h = 1e-6
    e = euler_vector(pt.t)
    t = np.asarray(pt.t, dtype=complex)
    cp = third_partials(FrobeniusPoint.make(t + h * e, kmax=kmax))
    cm = third_partials(FrobeniusPoint.make(t - h * e, kmax=kmax))
    dc = (cp - cm) / (2 * h)
    c0 = third_partials(pt)
    worst = 0.0
    for a in range(3):
        for b in range(3):
            for d in range(3):
                expect = (a + b + d - 2) * c0[a, b, d]
                worst = max(worst, abs(dc[a, b, d] - expect))
    return {
        "potential_exact": potential_exact,
        "tensor_exact": tensor_exact,
        "numeric_max_err": worst,
    }
