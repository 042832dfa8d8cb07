"""Pole monodromy and period maps of the deformed Euler connection.

At a fixed chart point the Euler multiplication ``U`` turns the quantum
product into a meromorphic connection on the auxiliary z-line,

    Y'(z) = -V (U - z)^(-1) Y(z),      V = grad(E) + c,  c = s + 1/2,

with simple poles at the canonical values (eigenvalues of ``U``) and the
weight ``V`` fixed by a half-integer parameter ``s``.  This module computes,
for the projective-plane chart:

* fundamental-solution monodromy around each finite pole at the calibration
  point (`loop_monodromy`), together with the rank-two triple of solutions
  that intertwines those monodromies with the integer reflection matrices of
  the wall geometry, and the best-effort change of basis built from it;
* flat transport over the chart at z = 0 (`transport_base`), including the
  q-rotation loop t1 -> t1 + 2*pi*i whose holonomy has the exact closed form
  exp(2*pi*i*V/3);
* the normalized period triple on the one-parameter mirror locus
  (`period_map_small_locus`, `locus_samples`) and a finite-difference
  certificate that it satisfies the expected third-order operator in
  theta = z d/dz (`pf_residual`);
* the exactly solvable projective-line analogue (`p1_period`,
  `p1_continue`, `p1_monodromy`).

Conventions frozen here (validated by the tests):

* Canonical values are ordered by (Re, Im).  ``standard_loops()[i]`` is the
  ray-circle-ray loop based at z = 0 that winds once counterclockwise around
  the canonical value of index ``(i+1) % 3``; this is the labeling for which
  monodromy ``i`` intertwines reflection ``i``.  Any other choice differing
  by a relabeling is reported in `MonodromyResult.notes`.
* Concatenating loops (first a, then b) multiplies monodromies as M_b M_a.
* Period transport runs at the dual weight (``s = -1/2``, i.e. V = grad(E)):
  that is the unique member of the adjoint pair for which the period
  differentials close and the mirror operator annihilates the result; the
  tangent-weight alternative fails both checks by many orders.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .kform import IDENTITY, InvariantError, twist_matrix
from .qh import (
    FrobeniusPoint,
    METRIC,
    euler_gradient,
    euler_vector,
    product_matrix,
    solve_base_point,
    u_eigenvalues,
    u_operator,
)

__all__ = [
    "ConnectionConfig",
    "Loop",
    "MonodromyResult",
    "PeriodSample",
    "PFReport",
    "ContinuationError",
    "reflection_matrices",
    "ode_field",
    "residue_matrices",
    "standard_loops",
    "circle_loop",
    "concatenate_loops",
    "loop_monodromy",
    "transport_base",
    "q_rotation",
    "q_loop_frame",
    "seed_triple",
    "pattern_triple",
    "transport_periods",
    "period_map_small_locus",
    "locus_samples",
    "stencil_samples",
    "pf_residual",
    "mirror_series",
    "sum_rule_defect",
    "jacobian_det",
    "euler_pairing",
    "p1_period",
    "p1_period_derivative",
    "p1_continue",
    "p1_monodromy",
    "p1_covering_probe",
]

_I3 = np.eye(3, dtype=complex)
_ONES = np.ones(3, dtype=complex)
_ZETA = cmath.exp(2j * math.pi / 3)


class ContinuationError(RuntimeError):
    """Numerical continuation could not proceed (pole or discriminant hit)."""


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConnectionConfig:
    """Weight parameter and integration tolerances.

    ``s`` is the half-integer weight; the derived constant is c = s + 1/2
    (one less than the ambient dimension enters through the 1/2).  The
    projective-plane monodromy runs use s = 1/2, hence c = 1 and
    V = diag(2, 1, 0); the period transport uses the dual s = -1/2.
    """

    s: Fraction = Fraction(1, 2)
    rtol: float = 1e-10
    atol: float = 1e-12
    loop_radius: float = 0.3
    pole_guard: float = 1e-8
    base_guard: float = 1e-6

    @property
    def c(self) -> Fraction:
        return self.s + Fraction(1, 2)

    @property
    def v_matrix(self) -> np.ndarray:
        return euler_gradient() + float(self.c) * _I3


DEFAULT_CONFIG = ConnectionConfig()
_DUAL = Fraction(-1, 2)


def reflection_matrices() -> list[np.ndarray]:
    """The three integer reflections (basis-class twists) as complex arrays."""
    return [np.array(twist_matrix(e), dtype=complex) for e in IDENTITY]


# --------------------------------------------------------------------------
# embedded Runge-Kutta (Dormand-Prince 5(4)) on complex vector states
# --------------------------------------------------------------------------

_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)


def _integrate(fun, s0: float, s1: float, y0: np.ndarray, *, rtol: float,
               atol: float, step_guard=None, max_steps: int = 200_000) -> np.ndarray:
    """Adaptive DP45 from s0 to s1 (s1 > s0) on a flat complex state."""
    y = np.array(y0, dtype=complex)
    s = s0
    span = s1 - s0
    h = span / 64.0
    steps = 0
    while (s1 - s) > 1e-15 * abs(span):
        h = min(h, s1 - s)
        if step_guard is not None:
            h = min(h, step_guard(s, y))
        if h < 1e-13 * abs(span):
            raise ContinuationError("step-size collapse during continuation")
        ks = []
        for i in range(7):
            yi = y
            for j, a in enumerate(_DP_A[i]):
                if a:
                    yi = yi + (h * a) * ks[j]
            ks.append(fun(s + _DP_C[i] * h, yi))
        y5 = y
        y4 = y
        for i in range(7):
            if _DP_B5[i]:
                y5 = y5 + (h * _DP_B5[i]) * ks[i]
            if _DP_B4[i]:
                y4 = y4 + (h * _DP_B4[i]) * ks[i]
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        err = math.sqrt(float(np.mean((np.abs(y5 - y4) / scale) ** 2)))
        if err <= 1.0:
            s += h
            y = y5
        factor = 0.9 * max(err, 1e-10) ** -0.2
        h = h * min(5.0, max(0.2, factor))
        steps += 1
        if steps > max_steps:
            raise ContinuationError("integration exceeded the step budget")
    return y


# --------------------------------------------------------------------------
# the z-line connection at a fixed chart point
# --------------------------------------------------------------------------


def ode_field(point: FrobeniusPoint, cfg: ConnectionConfig, z: complex) -> np.ndarray:
    """Coefficient A(z) = -V (U - z)^(-1) of the flat-frame system Y' = A Y."""
    u = u_operator(point)
    vals = u_eigenvalues(point)
    gaps = np.abs(vals - z)
    k = int(np.argmin(gaps))
    if gaps[k] < cfg.pole_guard:
        raise InvariantError(
            f"z = {z} is within {cfg.pole_guard} of the canonical value "
            f"u_{k} = {vals[k]}"
        )
    return -cfg.v_matrix @ np.linalg.inv(u - z * _I3)


def residue_matrices(point: FrobeniusPoint, cfg: ConnectionConfig = DEFAULT_CONFIG
                     ) -> list[np.ndarray]:
    """Residues V*Pi_i of the field at each canonical value (spectral order)."""
    u = u_operator(point)
    vals = u_eigenvalues(point)
    v = cfg.v_matrix
    out = []
    for i in range(3):
        proj = _I3.copy()
        for j in range(3):
            if j != i:
                proj = proj @ (u - vals[j] * _I3) / (vals[i] - vals[j])
        out.append(v @ proj)
    return out


@dataclass(frozen=True)
class Loop:
    """Closed path in the punctured z-plane, based at z = 0."""

    label: int
    center: complex
    z: Callable[[float], complex]
    dz: Callable[[float], complex]
    orientation: int = 1


def circle_loop(center: complex, radius: float, label: int = -1,
                orientation: int = 1) -> Loop:
    """Ray from 0 to the circle of given radius around ``center``, once
    around (counterclockwise for orientation +1), and back."""
    unit = center / abs(center) if center != 0 else 1.0 + 0j
    gate = center - radius * unit

    def zf(t: float) -> complex:
        if t <= 1 / 3:
            return 3 * t * gate
        if t <= 2 / 3:
            return center - radius * unit * cmath.exp(
                1j * orientation * 2 * math.pi * (3 * t - 1))
        return 3 * (1 - t) * gate

    def dzf(t: float) -> complex:
        if t <= 1 / 3:
            return 3 * gate
        if t <= 2 / 3:
            return (-radius * unit * 6j * math.pi * orientation
                    * cmath.exp(1j * orientation * 2 * math.pi * (3 * t - 1)))
        return -3 * gate

    return Loop(label=label, center=center, z=zf, dz=dzf, orientation=orientation)


def standard_loops(point: FrobeniusPoint, cfg: ConnectionConfig = DEFAULT_CONFIG
                   ) -> list[Loop]:
    """The frozen loop triple: loop i encircles canonical value (i+1) mod 3."""
    vals = u_eigenvalues(point)
    return [circle_loop(vals[(i + 1) % 3], cfg.loop_radius, label=i) for i in range(3)]


def concatenate_loops(first: Loop, second: Loop) -> Loop:
    """The composite path running ``first`` and then ``second``."""

    def zf(t: float) -> complex:
        return first.z(2 * t) if t <= 0.5 else second.z(2 * t - 1)

    def dzf(t: float) -> complex:
        return 2 * first.dz(2 * t) if t <= 0.5 else 2 * second.dz(2 * t - 1)

    return Loop(label=-1, center=first.center, z=zf, dz=dzf,
                orientation=first.orientation)


def _loop_fundamental(u: np.ndarray, vals: np.ndarray, v: np.ndarray, loop: Loop,
                      cfg: ConnectionConfig) -> tuple[np.ndarray, float]:
    """Fundamental solution around ``loop`` plus the Wronskian defect."""

    def guard(t: float, _y: np.ndarray) -> float:
        dist = min(abs(loop.z(t) - p) for p in vals)
        speed = abs(loop.dz(t))
        if dist < 10 * cfg.pole_guard:
            raise ContinuationError(raise_msg)
        return max(dist / (10 * max(speed, 1e-12)), 1e-6)

    raise_msg = f"loop {loop.label} passes within the pole guard of a canonical value"

    def fun(t: float, y: np.ndarray) -> np.ndarray:
        a = -v @ np.linalg.inv(u - loop.z(t) * _I3) * loop.dz(t)
        out = np.empty(10, dtype=complex)
        out[:9] = (a @ y[:9].reshape(3, 3)).reshape(-1)
        out[9] = np.trace(a)
        return out

    y0 = np.concatenate([_I3.reshape(-1), [0.0 + 0j]])
    y = _integrate(fun, 0.0, 1.0, y0, rtol=cfg.rtol, atol=cfg.atol, step_guard=guard)
    m = y[:9].reshape(3, 3)
    wronskian_defect = abs(np.linalg.det(m) - cmath.exp(y[9]))
    return m, wronskian_defect


def _gauge(f: np.ndarray) -> np.ndarray:
    """Deterministic scale and phase: Frobenius norm sqrt(2), and the first
    entry (row-major) within a factor 2 of the largest modulus made real
    positive."""
    f = f * (math.sqrt(2) / np.linalg.norm(f))
    mags = np.abs(f).reshape(-1)
    top = float(mags.max())
    pivot = next(v for v, mag in zip(f.reshape(-1), mags) if mag >= 0.5 * top)
    return f * (abs(pivot) / pivot)


def _pattern_solve(monos: Sequence[np.ndarray], targets: Sequence[np.ndarray]
                   ) -> tuple[np.ndarray, float, float]:
    """Solve M_i F = F T_i for the (unique up to scale) joint intertwiner.

    Returns the gauged solution together with the smallest and second
    smallest singular values of the stacked linear system; the ratio is the
    uniqueness margin.
    """
    rows = [np.kron(m, _I3) - np.kron(_I3, t.T) for m, t in zip(monos, targets)]
    stacked = np.vstack(rows)
    _, sv, vh = np.linalg.svd(stacked)
    vec = vh[-1].conj()  # right singular vector of A = U S V^H
    if np.linalg.norm(stacked @ vec) > max(10 * sv[-1], 1e-7):
        raise InvariantError("intertwiner extraction lost the null direction")
    f = _gauge(vec.reshape(3, 3))
    # the solution space is transverse to the relation vector: remove the
    # tiny column-sum defect so downstream constructions hold exactly
    f = f - np.outer(f @ _ONES, _ONES) / 3.0
    return f, float(sv[-1]), float(sv[-2])


@dataclass
class MonodromyResult:
    """Monodromies of the standard loops and their match to the reflections."""

    matrices: list[np.ndarray]
    poles: np.ndarray
    conjugator: np.ndarray
    residual: float                    # max |C^-1 M_i C - P_i|
    intertwiner: np.ndarray            # rank-two F with M_i F = F P_i, F 1 = 0
    triple_residual: float             # max |M_i F - F P_i|
    uniqueness_margin: float           # sv gap of the intertwiner system
    unipotency_defect: float
    wronskian_defect: float
    fixed_vector: np.ndarray
    fixed_vector_defect: float
    image_match_defect: float          # smallest sv of the stacked (M_i - I) images
    notes: list[str] = field(default_factory=list)


def loop_monodromy(point: FrobeniusPoint, cfg: ConnectionConfig = DEFAULT_CONFIG,
                   loops: Sequence[Loop] | None = None) -> MonodromyResult:
    """Integrate the standard loops and match the result to the reflections.

    The change of basis is assembled from the joint intertwiner: its columns
    sum to zero, so adding the common fixed vector spread over the constant
    direction makes it invertible while preserving C (1,1,1)^T = fixed
    vector.  The literal conjugation residual is reported as defined; the
    structural floor for it is sqrt(6) (see notes), while the rank-two
    triple match holds to integration accuracy.
    """
    if loops is None:
        loops = standard_loops(point, cfg)
    u = u_operator(point)
    vals = u_eigenvalues(point)
    v = cfg.v_matrix
    monos = []
    wdef = 0.0
    for lp in loops:
        m, wd = _loop_fundamental(u, vals, v, lp, cfg)
        monos.append(m)
        wdef = max(wdef, wd)

    targets = reflection_matrices()
    f, s_min, s_next = _pattern_solve(monos, targets)
    triple_res = max(float(np.linalg.norm(m @ f - f @ t))
                     for m, t in zip(monos, targets))

    # common fixed vector: U e1 spans the joint kernel of (M_i - I)
    vstar = u @ np.array([0.0, 1.0, 0.0], dtype=complex)
    fixed_defect = max(float(np.linalg.norm(m @ vstar - vstar)) for m in monos)

    conj = f + np.outer(vstar, _ONES) / 3.0
    cinv = np.linalg.inv(conj)
    residual = max(float(np.linalg.norm(cinv @ m @ conj - t))
                   for m, t in zip(monos, targets))

    # the literal basis-matching data: the (M_i - I) images are confined to a
    # common plane while the (P_i - I) images span everything, so the matrix
    # of matched image vectors is singular -- record its defect
    images = []
    for m in monos:
        _, _, vh = np.linalg.svd(m - _I3)
        left = (m - _I3) @ vh[0].conj()
        images.append(left / np.linalg.norm(left))
    image_defect = float(np.linalg.svd(np.array(images).T, compute_uv=False)[-1])

    unip = max(float(np.linalg.norm((m - _I3) @ (m - _I3))) for m in monos)

    notes = [
        "loop i encircles canonical value (i+1) mod 3, counterclockwise; "
        "relabeled or reversed conventions conjugate the reported triple",
        "composite paths compose as M(first then second) = M(second) M(first)",
        f"literal conjugation residual has structural floor sqrt(6) ~ 2.4495: "
        f"the monodromies fix the covector (0,0,1) exactly (last row of the "
        f"weight is zero) while the reflections fix no covector; measured "
        f"{residual:.9f}",
        "the rank-two triple match (columns of the intertwiner) is the "
        "faithful form of the correspondence and holds to integration error",
    ]
    return MonodromyResult(
        matrices=monos,
        poles=vals,
        conjugator=conj,
        residual=residual,
        intertwiner=f,
        triple_residual=triple_res,
        uniqueness_margin=s_min / s_next if s_next else 0.0,
        unipotency_defect=unip,
        wronskian_defect=wdef,
        fixed_vector=vstar,
        fixed_vector_defect=fixed_defect,
        image_match_defect=image_defect,
        notes=notes,
    )


# --------------------------------------------------------------------------
# flat transport over the chart at z = 0
# --------------------------------------------------------------------------


def _chart_frame(t: Sequence[complex]) -> tuple[np.ndarray, list[np.ndarray]]:
    pt = FrobeniusPoint.make((complex(t[0]), complex(t[1]), complex(t[2])))
    mats = [np.array(product_matrix(pt, a), dtype=complex) for a in range(3)]
    u = sum((euler_vector(pt.t)[a] * mats[a] for a in range(3)), np.zeros((3, 3), complex))
    return u, mats


def _guarded_inverse(u: np.ndarray, cfg: ConnectionConfig) -> np.ndarray:
    det = np.linalg.det(u)
    if abs(det) < cfg.base_guard:
        raise ContinuationError(
            f"chart path within {cfg.base_guard} of the discriminant (det U = {det:.3g})")
    vals = np.linalg.eigvals(u)
    gaps = [abs(vals[i] - vals[j]) for i in range(3) for j in range(i + 1, 3)]
    if min(gaps) < cfg.base_guard:
        raise ContinuationError("canonical values collide along the chart path")
    return np.linalg.inv(u)


def transport_base(t_path: Callable[[float], Sequence[complex]],
                   dt_path: Callable[[float], Sequence[complex]],
                   cfg: ConnectionConfig,
                   sections: np.ndarray,
                   s0: float = 0.0, s1: float = 1.0) -> np.ndarray:
    """Parallel transport of z = 0 frame columns along a chart path.

    ``sections`` is a (3,) vector or (3, k) stack of column sections obeying
    dY = V U^(-1) (X o Y) dt along the path; the inverse path returns the
    input (tested to 1e-8), and a contractible loop is the identity.
    """
    y0 = np.asarray(sections, dtype=complex)
    shape = y0.shape
    v = cfg.v_matrix

    def fun(s: float, y: np.ndarray) -> np.ndarray:
        t = t_path(s)
        dt = np.asarray(dt_path(s), dtype=complex)
        u, mats = _chart_frame(t)
        uinv = _guarded_inverse(u, cfg)
        cx = dt[0] * mats[0] + dt[1] * mats[1] + dt[2] * mats[2]
        return (v @ uinv @ cx @ y.reshape(shape)).reshape(-1)

    out = _integrate(fun, s0, s1, y0.reshape(-1), rtol=cfg.rtol, atol=cfg.atol)
    return out.reshape(shape)


def q_rotation(cfg: ConnectionConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Closed-form holonomy of the loop t1 -> t1 + 2 pi i on frame columns.

    On the axis t0 = t2 = 0 the Euler multiplication is exactly three times
    the q-direction product, so the transport coefficient is the constant
    V/3 and the holonomy is exp(2 pi i V / 3)."""
    return np.diag(np.exp(2j * math.pi * np.diag(cfg.v_matrix) / 3.0))


def q_loop_frame(cfg: ConnectionConfig = DEFAULT_CONFIG,
                 base_t1: float | None = None) -> np.ndarray:
    """Integrated holonomy of the q-loop (compare with `q_rotation`)."""
    t1 = -3.0 * math.log(3.0) if base_t1 is None else base_t1

    def path(s: float) -> tuple[complex, complex, complex]:
        return (0.0, t1 + 2j * math.pi * s, 0.0)

    def dpath(s: float) -> tuple[complex, complex, complex]:
        return (0.0, 2j * math.pi, 0.0)

    return transport_base(path, dpath, cfg, _I3.copy())


# --------------------------------------------------------------------------
# the period triple on the mirror locus
# --------------------------------------------------------------------------

# Scale of the seed triple at the calibration point, fixed (up to the single
# overall scalar, gauged as in `_gauge`) by requiring the dual-weight pole
# monodromies to act on the triple by the integer reflections; recomputed by
# `pattern_triple` and regression-tested.  Rows of the seed are
#   xi_b = (X * zeta^(b+1), 0, Y * conj(zeta)^b),   zeta = exp(2 pi i/3),
# which annihilate the Euler vector (0, 3, 0) and sum to zero exactly.
PATTERN_X = 0.8157410695485925
PATTERN_Y = -0.03511658700775445

_BASE_T1 = -3.0 * math.log(3.0)
_Z_REF = 0.5


def seed_triple() -> tuple[np.ndarray, np.ndarray]:
    """Covector triple and period values at the calibration point."""
    xi = np.zeros((3, 3), dtype=complex)
    for b in range(3):
        xi[b, 0] = PATTERN_X * _ZETA ** (b + 1)
        xi[b, 2] = PATTERN_Y * _ZETA.conjugate() ** b
    w = np.array([1j / 3, 1j / 3, 1j / 3])
    return xi, w


def pattern_triple(cfg: ConnectionConfig | None = None) -> tuple[np.ndarray, dict]:
    """Recompute the seed triple from the dual-weight pole monodromies.

    Slow path: integrates the three standard loops at weight s = -1/2,
    solves the joint intertwiner against the reflections, and converts the
    column triple to metric-paired rows.  Returns the rows plus diagnostics
    (pattern residual, uniqueness margin, distance to `seed_triple`).
    """
    if cfg is None:
        cfg = ConnectionConfig(s=_DUAL, rtol=1e-11, atol=1e-13)
    elif cfg.s != _DUAL:
        cfg = replace(cfg, s=_DUAL)
    point = solve_base_point()
    u = u_operator(point)
    vals = u_eigenvalues(point)
    monos = []
    for lp in standard_loops(point, cfg):
        m, _ = _loop_fundamental(u, vals, cfg.v_matrix, lp, cfg)
        monos.append(m)
    f, s_min, s_next = _pattern_solve(monos, reflection_matrices())
    xi = (np.asarray(METRIC) @ f).T
    xi = xi - xi.sum(axis=0) / 3.0
    # the triple is defined up to one unit scalar: align its phase with the
    # frozen seed before comparing
    seed, _ = seed_triple()
    overlap = complex(np.vdot(xi, seed))
    xi = xi * (overlap / abs(overlap))
    info = {
        "triple_residual": max(float(np.linalg.norm(m @ f - f @ t))
                               for m, t in zip(monos, reflection_matrices())),
        "uniqueness_margin": s_min / s_next,
        "seed_distance": float(np.linalg.norm(xi - seed)),
    }
    return xi, info


def transport_periods(t_path: Callable[[float], Sequence[complex]],
                      dt_path: Callable[[float], Sequence[complex]],
                      xi: np.ndarray, w: np.ndarray,
                      rtol: float = 1e-11, atol: float = 1e-13,
                      s0: float = 0.0, s1: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Transport covector rows and accumulate period increments dW = xi(dt).

    Rows obey d xi = -xi (V0 U^(-1) (X o .)) dt at the dual weight
    V0 = grad(E); the pairing xi(E) is exactly conserved, which is what
    makes the accumulated W single-valued on contractible paths.
    """
    cfg = ConnectionConfig(s=_DUAL, rtol=rtol, atol=atol)
    v0 = cfg.v_matrix
    n = xi.shape[0]
    y0 = np.concatenate([np.asarray(xi, complex).reshape(-1), np.asarray(w, complex)])

    def fun(s: float, y: np.ndarray) -> np.ndarray:
        rows = y[:3 * n].reshape(n, 3)
        t = t_path(s)
        dt = np.asarray(dt_path(s), dtype=complex)
        u, mats = _chart_frame(t)
        uinv = _guarded_inverse(u, cfg)
        cx = dt[0] * mats[0] + dt[1] * mats[1] + dt[2] * mats[2]
        out = np.empty_like(y)
        out[:3 * n] = (-rows @ (v0 @ uinv @ cx)).reshape(-1)
        out[3 * n:] = rows @ dt
        return out

    y = _integrate(fun, s0, s1, y0, rtol=rtol, atol=atol)
    return y[:3 * n].reshape(n, 3), y[3 * n:]


def _locus_t1(z: float) -> float:
    return math.log(z / 27.0)


@lru_cache(maxsize=8)
def _anchor_state(z_ref: float, rtol: float) -> tuple[bytes, bytes]:
    """Transport the seed to the locus point t = (-1, log(z_ref/27), 0).

    Phase one sweeps t1 at t0 = 0 (real axis, far from the discriminant);
    phase two moves t0 from 0 to -1 along a small imaginary bump, which
    keeps |det U| > 0.4 throughout.
    """
    xi, w = seed_triple()
    x_ref = math.log(z_ref)
    xi, w = transport_periods(
        lambda s: (0.0, _BASE_T1 + s * x_ref, 0.0),
        lambda s: (0.0, x_ref, 0.0), xi, w, rtol=rtol)
    t1 = _BASE_T1 + x_ref

    def bump(s: float) -> tuple[complex, complex, complex]:
        return (-s + 2j * s * (1 - s), t1, 0.0)

    def dbump(s: float) -> tuple[complex, complex, complex]:
        return (-1 + 2j * (1 - 2 * s), 0.0, 0.0)

    xi, w = transport_periods(bump, dbump, xi, w, rtol=rtol)
    return xi.tobytes(), w.tobytes()


def _anchor(z_ref: float = _Z_REF, rtol: float = 1e-11) -> tuple[np.ndarray, np.ndarray]:
    xb, wb = _anchor_state(z_ref, rtol)
    return (np.frombuffer(xb, dtype=complex).reshape(3, 3).copy(),
            np.frombuffer(wb, dtype=complex).copy())


@dataclass(frozen=True)
class PeriodSample:
    """Period triple at one locus point, with first-derivative data."""

    z: float
    w: np.ndarray          # the three periods
    theta_w: np.ndarray    # z dW/dz = the t1-component of each covector row
    xi: np.ndarray         # full covector rows (3 x 3)


def _sweep(xi: np.ndarray, w: np.ndarray, x_from: float, x_to: float,
           rtol: float) -> tuple[np.ndarray, np.ndarray]:
    if x_to == x_from:
        return xi, w
    return transport_periods(
        lambda s: (-1.0, x_from + s * (x_to - x_from) - math.log(27.0), 0.0),
        lambda s: (0.0, x_to - x_from, 0.0), xi, w, rtol=rtol)


def locus_samples(zs: Sequence[float], rtol: float = 1e-11,
                  z_ref: float = _Z_REF) -> list[PeriodSample]:
    """Period samples on the locus, one continuous sweep from the anchor.

    The locus is parametrized t(z) = (-1, log(z/27), 0); samples must have
    0 < z < 1 to stay clear of the z = 1 singular point.
    """
    for z in zs:
        if not 0.0 < z < 1.0:
            raise InvariantError(f"locus parameter z = {z} outside (0, 1)")
    xi0, w0 = _anchor(z_ref, rtol)
    out: dict[float, PeriodSample] = {}
    ups = sorted([z for z in zs if z >= z_ref])
    downs = sorted([z for z in zs if z < z_ref], reverse=True)
    for group in (ups, downs):
        xi, w = xi0.copy(), w0.copy()
        x_cur = math.log(z_ref)
        for z in group:
            xi, w = _sweep(xi, w, x_cur, math.log(z), rtol)
            x_cur = math.log(z)
            out[z] = PeriodSample(z=z, w=w.copy(), theta_w=xi[:, 1].copy(),
                                  xi=xi.copy())
    return [out[z] for z in zs]


def period_map_small_locus(z: float, rtol: float = 1e-11) -> PeriodSample:
    """The normalized period triple at one locus point (sum = i)."""
    return locus_samples([z], rtol=rtol)[0]


def sum_rule_defect(sample: PeriodSample) -> float:
    """|W0 + W1 + W2 - i| (the normalization is exact in exact arithmetic)."""
    return abs(complex(sample.w.sum()) - 1j)


def jacobian_det(sample: PeriodSample) -> complex:
    """det of d(W0, W1) by the two transverse chart directions (t1, t2)."""
    j = np.array([[sample.xi[0, 1], sample.xi[0, 2]],
                  [sample.xi[1, 1], sample.xi[1, 2]]])
    return complex(np.linalg.det(j))


def euler_pairing(sample: PeriodSample) -> float:
    """max_b |xi_b(E)| at the sample point: the directional derivative of
    each period along the Euler flow, conserved (and zero) by construction."""
    e = euler_vector((-1.0, _locus_t1(sample.z), 0.0))
    return float(np.abs(sample.xi @ e).max())


def mirror_series(z: complex, nmax: int = 220) -> tuple[complex, complex]:
    """Frobenius basis at z = 0 of the third-order theta-operator.

    Returns (f1, f2): the holomorphic solution sum (3n)!/(n!)^3 (z/27)^n and
    the single-log partner f1 log z + correction; the operator's exponents
    at z = 0 are {0, 0, 0}."""
    a = 1.0
    f1 = 0.0 + 0j
    f2c = 0.0 + 0j
    bsum = 0.0
    zc = complex(z)
    for n in range(nmax):
        if n:
            k = n - 1
            bsum += 1 / (1 / 3 + k) + 1 / (2 / 3 + k) - 2 / (1 + k)
        term = a * zc ** n
        f1 += term
        f2c += term * bsum
        a *= (1 / 3 + n) * (2 / 3 + n) / (1 + n) ** 2
    return f1, f1 * cmath.log(zc) + f2c


_D1 = (-0.5, 0.0, 0.5)
_D2 = (1.0, -2.0, 1.0)
_D3 = (-0.5, 1.0, 0.0, -1.0, 0.5)


def _theta_operator_residual(wvals: Sequence[complex], z: float, h: float) -> complex:
    """Centered evaluation of theta^3 - z(theta + 1/3)(theta + 2/3)theta on a
    5-point window in x = log z: expanded, (1 - z) W''' - z W'' - (2/9) z W'."""
    d1 = sum(c * w for c, w in zip(_D1, wvals[1:4])) / h
    d2 = sum(c * w for c, w in zip(_D2, wvals[1:4])) / h ** 2
    d3 = sum(c * w for c, w in zip(_D3, wvals)) / h ** 3
    return (1 - z) * d3 - z * d2 - (2.0 / 9.0) * z * d1


def stencil_samples(z_center: float, h: float, npts: int = 9,
                    rtol: float = 1e-12) -> list[PeriodSample]:
    """Uniform log-z stencil of samples centered at ``z_center``."""
    half = npts // 2
    x0 = math.log(z_center)
    zs = [math.exp(x0 + k * h) for k in range(-half, half + 1)]
    return locus_samples(zs, rtol=rtol)


@dataclass(frozen=True)
class PFReport:
    """Finite-difference certificate for the third-order locus operator."""

    z_center: float
    h: float
    residual: float            # max over the three periods, fine window
    coarse_residual: float     # same at doubled spacing (nan if unavailable)
    extrapolated: float        # Richardson h^2-extrapolation (nan if unavailable)
    per_family: tuple[float, ...]


def pf_residual(samples: Sequence[PeriodSample]) -> PFReport:
    """Evaluate the locus operator on a uniform log-z stencil of samples.

    Requires >= 7 points with uniform spacing h <= 0.01 in log z.  The
    operator is evaluated on the centered 5-point window; with >= 9 points a
    doubled-spacing window at the same center gives the h^2-extrapolation.
    """
    n = len(samples)
    if n < 7:
        raise InvariantError("stencil too coarse: need at least 7 samples")
    xs = [math.log(s.z) for s in samples]
    hs = np.diff(xs)
    h = float(hs[0])
    if abs(h) > 0.01 or not np.allclose(hs, h, rtol=0, atol=1e-9 * abs(h) + 1e-14):
        raise InvariantError("stencil too coarse: spacing must be uniform and <= 0.01")
    mid = n // 2
    if n % 2 == 0:
        mid -= 1
    center = samples[mid]
    fine = []
    coarse = []
    for b in range(3):
        wfine = [samples[mid + k].w[b] for k in (-2, -1, 0, 1, 2)]
        fine.append(_theta_operator_residual(wfine, center.z, abs(h)))
        if mid >= 4 and mid + 4 < n:
            wc = [samples[mid + 2 * k].w[b] for k in (-2, -1, 0, 1, 2)]
            coarse.append(_theta_operator_residual(wc, center.z, 2 * abs(h)))
    if coarse:
        rich = max(abs((4 * fr - cr) / 3) for fr, cr in zip(fine, coarse))
        coarse_max = max(abs(c) for c in coarse)
    else:
        rich = float("nan")
        coarse_max = float("nan")
    return PFReport(
        z_center=center.z,
        h=abs(h),
        residual=max(abs(r) for r in fine),
        coarse_residual=coarse_max,
        extrapolated=rich,
        per_family=tuple(abs(r) for r in fine),
    )


# --------------------------------------------------------------------------
# the projective-line analogue (weight s = 0): closed-form period map
# --------------------------------------------------------------------------


def _p1_ratio(lam: complex) -> complex:
    if lam == 1:
        raise InvariantError("lambda = 1 is a pole of the period map")
    return (1 + lam) / (1 - lam)


def p1_period(lam: complex) -> complex:
    """Principal branch of (1/pi) arccos((1 + lam)/(1 - lam)).

    Branch data: p1_period(-1) = 1/2 exactly; p1_period(1/2) =
    -(i/pi) arccosh(3) ~ -0.56110j (the identity cos(pi W) = ratio is
    branch-free and is the tested oracle)."""
    if lam == 0:
        raise InvariantError("lambda = 0 is a branch point of the period map")
    return cmath.acos(_p1_ratio(lam)) / math.pi


def p1_period_derivative(lam: complex) -> complex:
    """dW/dlam on the same branch as `p1_period`.

    Written as -R'(lam) / (pi sin(pi W)) so the square-root branch is
    inherited from the arccos branch instead of being chosen again."""
    w = p1_period(lam)
    s = cmath.sin(math.pi * w)
    if abs(s) < 1e-12:
        raise ContinuationError("derivative undefined: period at an integer")
    return -(2 / (1 - lam) ** 2) / (math.pi * s)


def p1_continue(path: Callable[[float], complex],
                dpath: Callable[[float], complex],
                w0: complex | None = None,
                steps: int = 4000) -> tuple[complex, float, float]:
    """Continue the period along a path avoiding {0, 1}.

    Fixed-step RK4 on dW = -R'(lam) dlam / (pi sin(pi W)) with a Newton
    polish of cos(pi W) = R after every step (the defining identity is the
    continuation invariant).  Returns (final W, minimum distance of W from
    the integers along the path, final identity defect)."""
    w = p1_period(path(0.0)) if w0 is None else w0
    min_dist = abs(w - round(w.real))

    def slope(s: float, wk: complex) -> complex:
        lam = path(s)
        if abs(lam) < 0.05 or abs(lam - 1) < 0.05:
            raise ContinuationError(
                f"path point {lam:.4f} too close to a branch point")
        sin_w = cmath.sin(math.pi * wk)
        if abs(sin_w) < 1e-12:
            raise ContinuationError("branch tracking failed: period hit an integer")
        return -(2 / (1 - lam) ** 2) * dpath(s) / (math.pi * sin_w)

    h = 1.0 / steps
    for k in range(steps):
        s = k * h
        k1 = slope(s, w)
        k2 = slope(s + h / 2, w + h * k1 / 2)
        k3 = slope(s + h / 2, w + h * k2 / 2)
        k4 = slope(s + h, w + h * k3)
        w = w + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        r = _p1_ratio(path(s + h))
        for _ in range(2):
            grad = -math.pi * cmath.sin(math.pi * w)
            if abs(grad) > 1e-9:
                w = w - (cmath.cos(math.pi * w) - r) / grad
        min_dist = min(min_dist, abs(w - round(w.real)))
    defect = abs(cmath.cos(math.pi * w) - _p1_ratio(path(1.0)))
    return w, min_dist, defect


@dataclass(frozen=True)
class P1Monodromy:
    """The affine map W -> eps W + 2 k induced by a closed path."""

    eps: int
    k: int
    defect: float
    w_start: complex
    w_end: complex


def p1_monodromy(path: Callable[[float], complex],
                 dpath: Callable[[float], complex],
                 steps: int = 4000) -> P1Monodromy:
    """Continue around a closed path and fit the induced affine map."""
    w0 = p1_period(path(0.0))
    w1, _, _ = p1_continue(path, dpath, w0=w0, steps=steps)
    best: tuple[int, int, float] | None = None
    for eps in (1, -1):
        half = (w1 - eps * w0) / 2
        k = round(half.real)
        defect = abs(half - k)
        if best is None or defect < best[2]:
            best = (eps, k, defect)
    eps, k, defect = best
    return P1Monodromy(eps=eps, k=k, defect=defect, w_start=w0, w_end=w1)


def p1_covering_probe(n_paths: int = 50, seed: int = 0,
                      steps: int = 1500) -> dict:
    """Random-path probe of the covering property.

    Draws random smooth paths from lambda = -1 (rejecting any that come
    within 0.15 of a branch point), continues the period along each, and
    reports the minimum distance of the continued values from the integers;
    the target space omits the integers, so the distance must stay positive.
    """
    rng = np.random.default_rng(seed)
    kept = 0
    min_dist = math.inf
    distances: list[float] = []
    attempts = 0
    while kept < n_paths and attempts < 20 * n_paths:
        attempts += 1
        coef = rng.normal(size=4) * 0.3 + 1j * rng.normal(size=4) * 0.3

        def path(s: float, c=coef) -> complex:
            val = -1.0 + 0j
            for m, cm in enumerate(c, start=1):
                val += cm * cmath.sin(math.pi * m * s)
            return val

        def dpath(s: float, c=coef) -> complex:
            val = 0j
            for m, cm in enumerate(c, start=1):
                val += cm * math.pi * m * cmath.cos(math.pi * m * s)
            return val

        probe = [path(s) for s in np.linspace(0.0, 1.0, 400)]
        if min(abs(p) for p in probe) < 0.15 or min(abs(p - 1) for p in probe) < 0.15:
            continue
        kept += 1
        _, dist, _ = p1_continue(path, dpath, steps=steps)
        distances.append(float(dist))
        min_dist = min(min_dist, dist)
    if kept < n_paths:
        raise ContinuationError("path sampler failed to produce enough admissible paths")
    return {"paths": kept, "min_integer_distance": float(min_dist),
            "distances": distances, "seed": seed}
