"""Curve counts, jets, and Frobenius structure: frozen values and identities.

n_1..n_5 = 1, 1, 12, 620, 87304 are the classical counts of rational plane
curves through 3k-1 points; they were frozen here before the recursion was
implemented and double-checked by hand for k <= 3.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from stabp2.kform import InvariantError
from stabp2.qh import (
    METRIC,
    METRIC_INV,
    FrobeniusPoint,
    TruncationError,
    euler_gradient,
    euler_scaling_check,
    euler_vector,
    gw_numbers,
    multiply,
    product_matrix,
    rho_coefficients,
    solve_base_point,
    third_partials,
    u_eigenvalues,
    u_operator,
    wdvv_residual,
)

GW5 = [1, 1, 12, 620, 87304]


def test_gw_numbers_frozen():
    assert gw_numbers(5) == GW5
    # hand-expanded degree 3: only the (2,1) split contributes 4*5 - 8 = 12
    assert gw_numbers(3)[-1] == 12


def test_gw_numbers_all_positive_integers():
    values = gw_numbers(12)
    assert all(isinstance(v, int) and v > 0 for v in values)
    # growth sanity: n_k increases rapidly from degree 3 on
    assert all(b > a for a, b in zip(values[2:], values[3:]))


def test_gw_numbers_validation():
    with pytest.raises(InvariantError):
        gw_numbers(0)
    with pytest.raises(InvariantError):
        gw_numbers(31)


def test_gw_cache_roundtrip(tmp_path, monkeypatch):
    monkeypatch.setenv("STABP2_CACHE", str(tmp_path))
    first = gw_numbers(6)
    cache = tmp_path / "gw_numbers.json"
    assert cache.exists()
    text = cache.read_text()
    assert '"6"' in text and '"87304"' in text  # decimal strings, keyed by kmax
    # second call is served from the file
    assert gw_numbers(6) == first


def test_rho_exact_fractions():
    rhos = rho_coefficients(3)
    assert rhos[0] == Fraction(1, 2)
    assert rhos[1] == Fraction(1, 120)
    assert rhos[2] == Fraction(12, math.factorial(8))


def test_third_partials_exact_on_slice():
    pt = FrobeniusPoint.make((0.3, -1.0, 0.0))
    c = third_partials(pt)
    q = math.exp(-1.0)
    # classical block
    assert c[0, 0, 2] == 1 and c[0, 2, 0] == 1 and c[2, 0, 0] == 1
    assert c[0, 1, 1] == 1 and c[1, 0, 1] == 1 and c[1, 1, 0] == 1
    assert c[0, 0, 0] == 0 and c[0, 0, 1] == 0 and c[0, 2, 2] == 0
    # quantum block collapses exactly on t2 = 0
    assert c[1, 2, 2] == q  # no truncation error at all
    assert c[1, 1, 1] == 0 and c[1, 1, 2] == 0 and c[2, 2, 2] == 0


def test_multiplication_table_on_slice():
    pt = FrobeniusPoint.make((0.0, -1.0, 0.0))
    q = math.exp(-1.0)
    d0, d1, d2 = np.eye(3, dtype=complex)
    # unit
    assert np.allclose(multiply(pt, d0, d1), d1)
    assert np.allclose(multiply(pt, d0, d2), d2)
    # d1 * d1 = d2, d1 * d2 = q d0, d2 * d2 = q d1
    assert np.allclose(multiply(pt, d1, d1), d2)
    assert np.allclose(multiply(pt, d1, d2), q * d0)
    assert np.allclose(multiply(pt, d2, d2), q * d1)
    c1 = product_matrix(pt, 1)
    assert np.allclose(c1, [[0, 0, q], [1, 0, 0], [0, 1, 0]])
    assert np.allclose(product_matrix(pt, 2), c1 @ c1)
    assert np.allclose(product_matrix(pt, 0), np.eye(3))


def test_metric_self_inverse():
    assert np.allclose(METRIC @ METRIC_INV, np.eye(3))
    # metric compatibility: g(x*y, z) totally symmetric = third partials
    pt = FrobeniusPoint.make((0.1, -2.0, 0.0))
    c = third_partials(pt)
    for a in range(3):
        for b in range(3):
            ca = product_matrix(pt, a)
            val = (METRIC @ ca)[:, b]
            for e in range(3):
                assert val[e] == pytest.approx(c[a, b, e])


def test_euler_vector_and_gradient():
    assert np.allclose(euler_vector((2.0, 5.0, 7.0)), [2.0, 3.0, -7.0])
    assert np.allclose(euler_gradient(), np.diag([1, 0, -1]))


def test_u_operator_on_slice():
    pt = FrobeniusPoint.make((0.5, -1.0, 0.0))
    u = u_operator(pt)
    c1 = product_matrix(pt, 1)
    assert np.allclose(u, 0.5 * np.eye(3) + 3 * c1)


def test_base_point_canonical_values():
    bp = solve_base_point()
    assert bp.t[0] == 0 and bp.t[2] == 0
    assert bp.t[1] == pytest.approx(-3 * math.log(3))
    vals = u_eigenvalues(bp)
    expect = sorted(
        [np.exp(2j * np.pi * k / 3) for k in range(3)],
        key=lambda v: (v.real, v.imag),
    )
    assert max(abs(a - b) for a, b in zip(vals, expect)) < 1e-10


def test_eigenvalue_sort_is_lexicographic():
    vals = u_eigenvalues(solve_base_point())
    pairs = [(v.real, v.imag) for v in vals]
    assert pairs == sorted(pairs)


def test_guard_exact_zero_on_slice():
    assert FrobeniusPoint.make((9.0, 4.0, 0.0)).guard() == 0.0


def test_guard_rejects_large_t2():
    with pytest.raises(TruncationError):
        FrobeniusPoint.make((0.0, 0.0, 1.2)).guard()


def test_guard_rejects_uncertifiable_tail():
    # ratio below 0.7 but the 200-term bound is nowhere near 1e-12
    with pytest.raises(TruncationError):
        FrobeniusPoint.make((0.0, 0.0, 0.9), kmax=16).guard()


def test_guard_passes_near_slice():
    bound = FrobeniusPoint.make((0.0, -3.0, 0.2), kmax=12).guard()
    assert 0 < bound < 1e-12


def test_wdvv_residual():
    assert wdvv_residual(FrobeniusPoint.make((0.1, -1.0, 0.0))) == 0.0
    for t in [(0.05, -3.0, 0.2), (-0.3, -2.5, 0.1), (0.2, -4.0, 0.3)]:
        pt = FrobeniusPoint.make(t, kmax=12)
        assert wdvv_residual(pt) < 1e-8


def test_euler_scaling_check():
    res = euler_scaling_check(kmax=12)
    assert res["potential_exact"] is True
    assert res["tensor_exact"] is True
    assert res["numeric_max_err"] < 1e-8


def test_point_validation():
    with pytest.raises(InvariantError):
        FrobeniusPoint.make((1.0, 2.0))
