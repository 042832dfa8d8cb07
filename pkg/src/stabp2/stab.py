"""Stability charts over region words: membership, wall crossing, continuation.

A chart is a region word together with the central charges (z0, z1, z2) of
the three simples of that region's heart.  Charges live in the half-plane
H = {Im z > 0} ∪ R_{<0}; the chart is interior when all three are strictly
above the real axis, and sits on wall i when z_i has dropped onto the
negative real ray while the others stay interior.

Crossing wall i downward tilts the heart by tau_i; the new simples are
integer combinations of the old ones, so the new charges are the matching
complex combinations of the old charges — the central charge function on the
lattice is unchanged, only its preferred basis moves.  Crossing "up" is the
exact inverse move, entered from the limit state where z_{i-1} reaches the
positive real ray.

`continue_path` drags a chart along a piecewise-linear path of basis charge
vectors (values of Z on the fixed lattice basis), emitting a WallEvent per
crossing; `adjacency_check` audits that the face structure produced by wall
crossings agrees with the Cayley edges of the region graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .kform import InvariantError, Vec, chi, mat_vec, solve_unimodular
from .tilt import (
    BraidWord,
    RegionGraph,
    SphericalTripleK,
    apply_word,
    parse_word,
    region_bfs,
    reduce_word,
)

Charge = tuple[complex, complex, complex]


def _as_word(word: BraidWord | str) -> BraidWord:
    return BraidWord.parse(word) if isinstance(word, str) else word


@dataclass(frozen=True)
class StabilityChart:
    """Region word plus central charges of the region's three simples."""

    word: BraidWord
    z: Charge

    @staticmethod
    def make(word: BraidWord | str, z: Sequence[complex]) -> "StabilityChart":
        zt = tuple(complex(v) for v in z)
        if len(zt) != 3:
            raise InvariantError("chart needs exactly three charges")
        return StabilityChart(_as_word(word), zt)  # type: ignore[arg-type]

    @property
    def triple(self) -> SphericalTripleK:
        return apply_word(self.word)

    def charge_of(self, x: Vec) -> complex:
        """Central charge of an arbitrary lattice class (exact basis change)."""
        n = solve_unimodular(self.triple.basis_matrix(), x)
        return n[0] * self.z[0] + n[1] * self.z[1] + n[2] * self.z[2]

    def skyscraper_charge(self) -> complex:
        return self.charge_of((1, 1, 1))

    def to_dict(self) -> dict:
        return {
            "word": str(self.word),
            "z": [[v.real, v.imag] for v in self.z],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @staticmethod
    def from_dict(data: dict) -> "StabilityChart":
        z = tuple(complex(re, im) for re, im in data["z"])
        return StabilityChart.make(data["word"], z)

    @staticmethod
    def from_json(text: str) -> "StabilityChart":
        return StabilityChart.from_dict(json.loads(text))


def membership(chart: StabilityChart, *, im_tol: float = 0.0) -> tuple[str, int | None]:
    """Classify the chart: ("interior", None), ("boundary", i), or ("invalid", None)."""
    real = [abs(v.imag) <= im_tol for v in chart.z]
    interior = [v.imag > im_tol for v in chart.z]
    if all(interior):
        return ("interior", None)
    walls = [i for i in range(3) if real[i] and chart.z[i].real < 0]
    if len(walls) == 1:
        i = walls[0]
        if all(interior[j] for j in range(3) if j != i):
            return ("boundary", i)
    return ("invalid", None)


@dataclass(frozen=True)
class WallEvent:
    """One crossing: the group letter applied and where/when it happened.

    `index` is the letter index (new word differs from the old by tau_index
    on the left, sign by `direction`); `slot` is the simple whose charge hit
    the real axis (equal to index going down, index-1 mod 3 coming up).
    """

    index: int
    slot: int
    direction: str
    time: float
    new_word: str


def cross_wall(
    chart: StabilityChart,
    index: int,
    direction: str,
    *,
    im_tol: float = 1e-9,
) -> StabilityChart:
    """Cross wall `index` of the current region ("down") or its inverse ("up")."""
    if index not in (0, 1, 2):
        raise InvariantError(f"wall index must be 0, 1 or 2, got {index}")
    t = chart.triple.classes
    prev, nxt = (index - 1) % 3, (index + 1) % 3
    z = chart.z
    x = chi(t[prev], t[index])
    zn = list(z)
    if direction == "down":
        kind, sign = str(index), 1
        state, wall = membership(chart, im_tol=im_tol)
        if state != "boundary" or wall != index:
            raise InvariantError(
                f"downward crossing needs the chart on wall {index}; membership is {(state, wall)}"
            )
        zi = complex(z[index].real, 0.0)
        zn[prev] = -zi
        zn[index] = z[prev] - x * zi
        zn[nxt] = z[nxt]
    elif direction == "up":
        kind, sign = str(index), -1
        zp = z[prev]
        ok = (
            abs(zp.imag) <= im_tol
            and zp.real > 0
            and z[index].imag > im_tol
            and z[nxt].imag > im_tol
        )
        if not ok:
            raise InvariantError(
                f"upward crossing at {index} needs z[{prev}] on the positive real ray "
                "with the other charges interior"
            )
        zp = complex(zp.real, 0.0)
        zn[index] = -zp
        zn[prev] = z[index] - x * zp
        zn[nxt] = z[nxt]
    else:
        raise InvariantError(f"direction must be 'down' or 'up', got {direction!r}")
    new_word = BraidWord(reduce_word(((kind, sign),) + chart.word.letters))
    return StabilityChart(new_word, tuple(zn))  # type: ignore[arg-type]


@dataclass(frozen=True)
class NormalizedPoint:
    """Chart whose central charge sends the skyscraper class to +i."""

    chart: StabilityChart

    TOL = 1e-9

    def __post_init__(self) -> None:
        zo = self.chart.skyscraper_charge()
        if abs(zo - 1j) > self.TOL:
            raise InvariantError(f"skyscraper charge {zo} is not normalized to i")

    @staticmethod
    def normalize(chart: StabilityChart) -> "NormalizedPoint":
        zo = chart.skyscraper_charge()
        if zo == 0:
            raise InvariantError("skyscraper charge vanishes; cannot normalize")
        scale = 1j / zo
        scaled = StabilityChart(chart.word, tuple(scale * v for v in chart.z))  # type: ignore[arg-type]
        state, _ = membership(scaled, im_tol=1e-12)
        if state == "invalid":
            raise InvariantError("normalization rotated the chart out of the half-plane")
        return NormalizedPoint(scaled)


# ---------------------------------------------------------------------------
# Continuation along a path of basis charge vectors.

@dataclass
class ContinuationResult:
    final: StabilityChart
    events: list[WallEvent]


def _chart_charges(triple: SphericalTripleK, v: Sequence[complex]) -> Charge:
    return tuple(
        cls[0] * v[0] + cls[1] * v[1] + cls[2] * v[2] for cls in triple.classes
    )  # type: ignore[return-value]


def continue_path(
    start: StabilityChart,
    waypoints: Sequence[Sequence[complex]],
    *,
    wall_merge_tol: float = 1e-9,
    re_tol: float = 1e-9,
    sync_tol: float = 1e-9,
) -> ContinuationResult:
    """Drag `start` along the piecewise-linear basis-charge path `waypoints`.

    Each waypoint is (Z(e0), Z(e1), Z(e2)) on the fixed lattice basis; the
    chart charges are the integer-row combinations given by the region's
    triple.  Whenever a chart charge descends onto the real axis the path
    crosses a wall: negative real part tilts down at that slot, positive
    real part tilts up (letter index one above the slot).  A charge heading
    for the origin, or two walls closer than `wall_merge_tol` in parameter,
    aborts with an error naming the offenders.
    """
    vs = [tuple(complex(c) for c in w) for w in waypoints]
    if len(vs) < 2:
        raise InvariantError("path needs at least two waypoints")
    if any(len(v) != 3 for v in vs):
        raise InvariantError("waypoints are triples of basis charges")

    word = start.word
    triple = apply_word(word)
    z0 = _chart_charges(triple, vs[0])
    if max(abs(a - b) for a, b in zip(z0, start.z)) > sync_tol:
        raise InvariantError("start chart charges do not match the first waypoint")
    state, _ = membership(start, im_tol=0.0)
    if state != "interior":
        raise InvariantError(f"continuation must start from an interior chart, got {state}")

    events: list[WallEvent] = []
    for seg in range(len(vs) - 1):
        va, vb = vs[seg], vs[seg + 1]
        dv = tuple(b - a for a, b in zip(va, vb))
        s = 0.0
        guard = 0
        while True:
            guard += 1
            if guard > 512:
                raise InvariantError("too many wall crossings in one segment")
            # Current chart charges are linear in s: z_j(s) = p_j + s*q_j.
            rows = triple.classes
            p = [r[0] * va[0] + r[1] * va[1] + r[2] * va[2] for r in rows]
            q = [r[0] * dv[0] + r[1] * dv[1] + r[2] * dv[2] for r in rows]
            hits: list[tuple[float, int]] = []
            for j in range(3):
                bj = q[j].imag
                if bj >= 0.0:
                    continue  # not descending; cannot exit upward half-plane
                sj = -(p[j].imag) / bj
                if s < sj <= 1.0 + 1e-15:
                    hits.append((sj, j))
            if not hits:
                break
            hits.sort()
            s_star, slot = hits[0]
            close = [j for (sj, j) in hits if sj - s_star <= wall_merge_tol]
            if len(close) > 1:
                raise InvariantError(
                    f"walls {sorted(close)} collide within {wall_merge_tol} at "
                    f"segment {seg}, parameter {s_star:.12f}"
                )
            v_star = tuple(a + s_star * d for a, d in zip(va, dv))
            z_star = list(_chart_charges(triple, v_star))
            re_hit = z_star[slot].real
            if abs(re_hit) <= re_tol:
                raise InvariantError(
                    f"charge of slot {slot} heads into the origin at segment {seg}, "
                    f"parameter {s_star:.12f}"
                )
            z_star[slot] = complex(re_hit, 0.0)
            chart = StabilityChart(word, tuple(z_star))  # type: ignore[arg-type]
            if re_hit < 0:
                index, direction = slot, "down"
            else:
                index, direction = (slot + 1) % 3, "up"
            crossed = cross_wall(chart, index, direction, im_tol=1e-12)
            word = crossed.word
            triple = apply_word(word)
            resync = _chart_charges(triple, v_star)
            drift = max(abs(a - b) for a, b in zip(resync, crossed.z))
            if drift > sync_tol:
                raise InvariantError(f"crossing desynchronized from the path by {drift}")
            events.append(
                WallEvent(
                    index=index,
                    slot=slot,
                    direction=direction,
                    time=seg + s_star,
                    new_word=str(word),
                )
            )
            s = s_star
    final = StabilityChart(word, _chart_charges(triple, vs[-1]))
    return ContinuationResult(final=final, events=events)


# ---------------------------------------------------------------------------
# Face adjacency audit against the region graph.

_INTERIOR_FILL = (0.7 + 0.5j, 0.2 + 0.9j)


def _synthetic_wall_chart(word: str, index: int, direction: str) -> StabilityChart:
    z: list[complex] = [0j, 0j, 0j]
    if direction == "down":
        hot = index
        z[hot] = -1.0 + 0j
    else:
        hot = (index - 1) % 3
        z[hot] = 1.0 + 0j
    others = [j for j in range(3) if j != hot]
    for fill, j in zip(_INTERIOR_FILL, others):
        z[j] = fill
    return StabilityChart(BraidWord.parse(word), tuple(z))  # type: ignore[arg-type]


def adjacency_check(depth: int, *, graph: RegionGraph | None = None) -> dict:
    """Cross all six faces of every region in the ball; compare to Cayley edges.

    Returns a report with `ok` true when every crossing lands on the region
    the group action predicts, nothing is self-adjacent, and the face pairs
    agree with the BFS edge set (edges between two outermost-shell nodes are
    exempt, since the BFS never expands that shell).
    """
    g = graph if graph is not None else region_bfs(depth)
    edge_set = {(src, dst, sym) for src, dst, sym in g.edges}
    for src, dst, sym in list(edge_set):
        k, sgn = parse_word(sym)[0]
        inv = k + ("" if sgn < 0 else "'")
        edge_set.add((dst, src, inv))

    report = {
        "nodes": len(g.nodes),
        "faces": 0,
        "self_adjacent": 0,
        "wrong_neighbor": 0,
        "missing_edges": 0,
    }
    for key, node in g.nodes.items():
        for index in range(3):
            for direction in ("down", "up"):
                chart = _synthetic_wall_chart(node.word, index, direction)
                crossed = cross_wall(chart, index, direction)
                nkey = crossed.triple.key()
                report["faces"] += 1
                if nkey == key:
                    report["self_adjacent"] += 1
                    continue
                # The group action route to the same neighbor.
                sym = str(index) + ("" if direction == "down" else "'")
                expect = apply_word(sym + " " + node.word if node.word else sym)
                if expect.key() != nkey:
                    report["wrong_neighbor"] += 1
                    continue
                other = g.nodes.get(nkey)
                if other is None:
                    continue  # neighbor outside the ball: nothing to compare
                if node.depth >= depth and other.depth >= depth:
                    continue  # outermost shell pair, BFS never recorded it
                if (key, nkey, sym) not in edge_set:
                    report["missing_edges"] += 1
    report["ok"] = (
        report["self_adjacent"] == 0
        and report["wrong_neighbor"] == 0
        and report["missing_edges"] == 0
    )
    return report
