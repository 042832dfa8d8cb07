"""Braid letters acting on spherical triples at lattice level, and the region graph.

The annular braid group on three strings is generated by tau_0, tau_1, tau_2
(braid relations between every pair) together with a rotation r cycling the
indices.  The subgroup G generated by the tau's indexes the chambers of the
normalized stability space; each group element g carries an ordered triple of
lattice classes (the simples of its heart) and the associated triple of twist
matrices P_i(g).

Words use the CLI-facing syntax "0 1' 2 r" (or compact "01'2r"): a digit is a
tau generator, a trailing apostrophe inverts, "r" is the rotation.  A word is
a *product* of group elements, so the rightmost letter acts first on the base
triple; prepending a letter on the left composes it after everything else,
matching how wall crossings extend region words.

Sign convention for the twist slot: the tilted simple gains +|chi| copies of
the twisting simple (universal extension), which keeps the Markov invariant
a^2 + b^2 + c^2 = abc intact at every node.  The induced transformation law
for the twist matrices is then P_i(tau_i g) = P_i(g)^{-1} P_{i-1}(g) P_i(g),
i.e. conjugation by the *inverse* — see the matrix laws in transform_matrices.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .kform import (
    GRAM,
    IDENTITY,
    InvariantError,
    KClass,
    Mat,
    Vec,
    chi,
    columns,
    mat_det,
    mat_inv_unimodular,
    mat_mul,
    twist_matrix,
)

# A letter is (kind, sign): kind in "012r", sign +1 or -1.
Letter = tuple[str, int]

_GEN_KINDS = "012r"


def parse_word(text: str) -> tuple[Letter, ...]:
    """Parse a word string like "0 1' 2 r" or "01'2r" into letters."""
    letters: list[Letter] = []
    for ch in text:
        if ch in _GEN_KINDS:
            letters.append((ch, 1))
        elif ch == "'":
            if not letters:
                raise InvariantError(f"dangling inverse mark in word {text!r}")
            kind, sign = letters[-1]
            if sign != 1:
                raise InvariantError(f"doubled inverse mark in word {text!r}")
            letters[-1] = (kind, -1)
        elif ch in " \t,":
            continue
        else:
            raise InvariantError(f"bad character {ch!r} in word {text!r}")
    return tuple(letters)


def word_str(letters: Iterable[Letter]) -> str:
    return " ".join(k + ("'" if s < 0 else "") for k, s in letters)


def reduce_word(letters: Iterable[Letter]) -> tuple[Letter, ...]:
    """Free reduction: cancel adjacent inverse pairs."""
    out: list[Letter] = []
    for let in letters:
        if out and out[-1][0] == let[0] and out[-1][1] == -let[1]:
            out.pop()
        else:
            out.append(let)
    return tuple(out)


@dataclass(frozen=True)
class BraidWord:
    """A word in the annular braid group (letters over {0,1,2,r} with signs)."""

    letters: tuple[Letter, ...]

    @staticmethod
    def parse(text: str) -> "BraidWord":
        return BraidWord(parse_word(text))

    def __str__(self) -> str:
        return word_str(self.letters)

    @property
    def is_g_word(self) -> bool:
        return all(k != "r" for k, _ in self.letters)

    def reduced(self) -> "BraidWord":
        return BraidWord(reduce_word(self.letters))

    def inverse(self) -> "BraidWord":
        return BraidWord(tuple((k, -s) for k, s in reversed(self.letters)))

    def __mul__(self, other: "BraidWord") -> "BraidWord":
        return BraidWord(self.letters + other.letters)


# ---------------------------------------------------------------------------
# Triple of spherical classes attached to a group element.

def _triple_markov(t: tuple[Vec, Vec, Vec]) -> tuple[int, int, int]:
    return (abs(chi(t[0], t[1])), abs(chi(t[1], t[2])), abs(chi(t[2], t[0])))


@dataclass(frozen=True)
class SphericalTripleK:
    """Ordered triple of lattice classes (t0, t1, t2) attached to g in G."""

    classes: tuple[Vec, Vec, Vec]

    @staticmethod
    def identity() -> "SphericalTripleK":
        return SphericalTripleK(IDENTITY)

    @property
    def markov(self) -> tuple[int, int, int]:
        """Pairwise |chi| multiplicities ( |x(t0,t1)|, |x(t1,t2)|, |x(t2,t0)| )."""
        return _triple_markov(self.classes)

    @property
    def orientation(self) -> tuple[int, int, int]:
        t = self.classes
        sgn = lambda n: (n > 0) - (n < 0)
        return (sgn(chi(t[0], t[1])), sgn(chi(t[1], t[2])), sgn(chi(t[2], t[0])))

    @property
    def ox_coords(self) -> Vec:
        """Coordinates of the skyscraper class (1,1,1) in the triple basis."""
        basis = columns(*self.classes)
        inv = mat_inv_unimodular(basis)
        return tuple(sum(inv[i][k] for k in range(3)) for i in range(3))  # type: ignore[return-value]

    def basis_matrix(self) -> Mat:
        """Matrix whose columns are the triple classes (fixed-basis coords)."""
        return columns(*self.classes)

    def key(self) -> tuple[int, ...]:
        a, b, c = self.classes
        return a + b + c

    def validate(self) -> None:
        det = mat_det(self.basis_matrix())
        if det not in (1, -1):
            raise InvariantError(f"triple is not a lattice basis (det={det})")
        a, b, c = self.markov
        if a * a + b * b + c * c != a * b * c:
            raise InvariantError(f"Markov identity fails for multiplicities {(a, b, c)}")
        for m in (a, b, c):
            if m <= 0 or m % 3:
                raise InvariantError(f"multiplicity {m} not a positive multiple of 3")
        if self.orientation != (-1, -1, -1):
            raise InvariantError(f"orientation pattern {self.orientation} is not cyclic")
        if any(n < 0 for n in self.ox_coords):
            raise InvariantError(f"skyscraper coordinates {self.ox_coords} not effective")

    def twist_matrices(self) -> tuple[Mat, Mat, Mat]:
        a, b, c = self.classes
        return (twist_matrix(a), twist_matrix(b), twist_matrix(c))


def _apply_letter_raw(t: tuple[Vec, Vec, Vec], letter: Letter) -> tuple[Vec, Vec, Vec]:
    """Apply one generator to a class triple.  Pure tuples, no validation."""
    kind, sign = letter
    if kind == "r":
        t0, t1, t2 = t
        return (t2, t0, t1) if sign > 0 else (t1, t2, t0)
    i = ord(kind) - 48  # '0' -> 0
    prev, cur = (i - 1) % 3, i
    tp, tc = t[prev], t[cur]
    x = chi(tp, tc)
    out = list(t)
    if sign > 0:
        # tau_i: slot i-1 <- -t_i (shift), slot i <- t_{i-1} - chi(t_{i-1},t_i) t_i.
        out[prev] = tuple(-v for v in tc)
        out[cur] = tuple(tp[k] - x * tc[k] for k in range(3))
    else:
        # tau_i^{-1}: exact inverse of the above.
        out[cur] = tuple(-v for v in tp)
        out[prev] = tuple(tc[k] - x * tp[k] for k in range(3))
    return tuple(out)  # type: ignore[return-value]


def apply_generator(s: SphericalTripleK, letter: Letter, *, check: bool = True) -> SphericalTripleK:
    """One-letter action on a spherical triple (defensively validated)."""
    if check:
        s.validate()
    out = SphericalTripleK(_apply_letter_raw(s.classes, letter))
    if check:
        out.validate()
    return out


def apply_word(word: BraidWord | str) -> SphericalTripleK:
    """Triple attached to a word: rightmost letter acts first on the identity."""
    if isinstance(word, str):
        word = BraidWord.parse(word)
    t = IDENTITY
    for letter in reversed(word.letters):
        t = _apply_letter_raw(t, letter)
    out = SphericalTripleK(t)
    out.validate()
    return out


# ---------------------------------------------------------------------------
# Twist matrices of a region and their one-letter transformation laws.

def braid_matrices(word: BraidWord | str) -> tuple[Mat, Mat, Mat]:
    """(P0, P1, P2) at the region of `word`, computed from the class triple."""
    return apply_word(word).twist_matrices()


def transform_matrices(letter: Letter, ps: tuple[Mat, Mat, Mat]) -> tuple[Mat, Mat, Mat]:
    """One-letter transformation law for the matrix triple: P(l.g) from P(g).

    Derived by conjugation equivariance from the triple action:
      P_{i-1}(tau_i g) = P_i(g)
      P_i(tau_i g)     = P_i(g)^{-1} P_{i-1}(g) P_i(g)
      P_{i+1}(tau_i g) = P_{i+1}(g)
    and the inverse letter mirrors it; r cycles (P0,P1,P2) -> (P2,P0,P1).
    """
    kind, sign = letter
    if kind == "r":
        p0, p1, p2 = ps
        return (p2, p0, p1) if sign > 0 else (p1, p2, p0)
    i = ord(kind) - 48
    prev = (i - 1) % 3
    out = list(ps)
    if sign > 0:
        pi_inv = mat_inv_unimodular(ps[i])
        out[prev] = ps[i]
        out[i] = mat_mul(pi_inv, mat_mul(ps[prev], ps[i]))
    else:
        pprev_inv = mat_inv_unimodular(ps[prev])
        out[i] = ps[prev]
        out[prev] = mat_mul(ps[prev], mat_mul(ps[i], pprev_inv))
    return tuple(out)  # type: ignore[return-value]


def matrices_by_laws(word: BraidWord | str) -> tuple[Mat, Mat, Mat]:
    """(P0, P1, P2) computed purely by the transformation laws (second route)."""
    if isinstance(word, str):
        word = BraidWord.parse(word)
    ps = SphericalTripleK.identity().twist_matrices()
    for letter in reversed(word.letters):
        ps = transform_matrices(letter, ps)
    return ps


# ---------------------------------------------------------------------------
# Region graph: BFS over the G-generators from the identity triple.

DEPTH_CAP = 8

_G_LETTERS: tuple[Letter, ...] = (
    ("0", 1), ("0", -1), ("1", 1), ("1", -1), ("2", 1), ("2", -1),
)
_INVERSE_INDEX = {0: 1, 1: 0, 2: 3, 3: 2, 4: 5, 5: 4}


@dataclass
class RegionNode:
    key: tuple[int, ...]
    word: str
    depth: int
    markov: tuple[int, int, int]
    ox: Vec


@dataclass
class RegionGraph:
    depth: int
    nodes: dict[tuple[int, ...], RegionNode]
    edges: list[tuple[tuple[int, ...], tuple[int, ...], str]]
    collisions: list[tuple[str, str]] = field(default_factory=list)

    @property
    def root_key(self) -> tuple[int, ...]:
        return (1, 0, 0, 0, 1, 0, 0, 0, 1)

    def node_words(self) -> Iterator[str]:
        return (n.word for n in self.nodes.values())


def region_bfs(depth: int, *, cap: int = DEPTH_CAP, max_collisions: int = 200) -> RegionGraph:
    """Breadth-first enumeration of regions within `depth` generator steps.

    Nodes are deduplicated by the ordered class triple; each node stores a
    shortest word (first-found in BFS order).  Edges are recorded between
    in-ball nodes with the generator letter that realizes them.  Pairs of
    distinct shortest words hitting one triple are kept for the word-problem
    soundness probe (capped).
    """
    if depth < 0:
        raise InvariantError("depth must be nonnegative")
    if depth > cap:
        raise InvariantError(f"depth {depth} exceeds cap {cap}")

    # Letters as raw data for the hot loop, word fragments for labels.
    letter_syms = ["0", "0'", "1", "1'", "2", "2'"]
    root = (1, 0, 0, 0, 1, 0, 0, 0, 1)
    root_node = RegionNode(root, "", 0, (3, 3, 3), (1, 1, 1))
    nodes: dict[tuple[int, ...], RegionNode] = {root: root_node}
    edges: list[tuple[tuple[int, ...], tuple[int, ...], str]] = []
    collisions: list[tuple[str, str]] = []
    frontier: list[tuple[tuple[int, ...], str, int]] = [(root, "", -1)]

    for level in range(1, depth + 1):
        next_frontier: list[tuple[tuple[int, ...], str, int]] = []
        for key, word, via in frontier:
            t = ((key[0], key[1], key[2]), (key[3], key[4], key[5]), (key[6], key[7], key[8]))
            for li, letter in enumerate(_G_LETTERS):
                if via >= 0 and li == _INVERSE_INDEX[via]:
                    continue  # immediate backtrack reproduces the parent
                nt = _apply_letter_raw(t, letter)
                nkey = nt[0] + nt[1] + nt[2]
                sym = letter_syms[li]
                new_word = sym if not word else sym + " " + word
                known = nodes.get(nkey)
                if known is None:
                    trip = SphericalTripleK(nt)
                    nodes[nkey] = RegionNode(nkey, new_word, level, trip.markov, trip.ox_coords)
                    next_frontier.append((nkey, new_word, li))
                    edges.append((key, nkey, sym))
                else:
                    edges.append((key, nkey, sym))
                    if known.word != new_word and len(collisions) < max_collisions:
                        collisions.append((known.word, new_word))
        frontier = next_frontier
    return RegionGraph(depth, nodes, edges, collisions)


# ---------------------------------------------------------------------------
# Bounded word-problem probe for dedupe soundness.

# Encoded letters for the probe: (index, sign) with index in {0,1,2}.
_PLetter = tuple[int, int]


def _probe_parse(word: str) -> tuple[_PLetter, ...]:
    return tuple((ord(k) - 48, s) for k, s in parse_word(word))


def _free_reduce(w: tuple[_PLetter, ...]) -> tuple[_PLetter, ...]:
    out: list[_PLetter] = []
    for let in w:
        if out and out[-1][0] == let[0] and out[-1][1] == -let[1]:
            out.pop()
        else:
            out.append(let)
    return tuple(out)


def _braid_rewrites(w: tuple[_PLetter, ...]) -> Iterator[tuple[_PLetter, ...]]:
    """All single-application braid-relation rewrites of w (length-preserving)."""
    n = len(w)
    for p in range(n - 2):
        (i, si), (j, sj), (k, sk) = w[p], w[p + 1], w[p + 2]
        repl: Optional[tuple[_PLetter, _PLetter, _PLetter]] = None
        if i == k and i != j:
            if si == sj == sk:
                # i^e j^e i^e <-> j^e i^e j^e
                repl = ((j, sj), (i, si), (j, sj))
            elif si == sj and sk == -si:
                # i+ j+ i-  <->  j- i+ j+   (and the all-flipped variant)
                repl = ((j, -sj), (i, si), (j, sj))
            elif sj == sk and si == -sj:
                # i- j+ i+  <->  j+ i+ j-
                repl = ((j, sj), (i, sj), (j, -sj))
            elif si == -sj and sk == -sj:
                # i+ j- i-  <->  j- i- j+   (conjugate form)
                repl = ((j, sj), (i, si), (j, -sj))
        if repl is not None:
            yield w[:p] + repl + w[p + 3:]


def word_problem_probe(
    word_a: str,
    word_b: str,
    *,
    max_states: int = 200_000,
    slack: int = 2,
) -> dict:
    """Try to certify word_a == word_b in G by bounded braid rewriting.

    BFS over freely-reduced words reachable from a·b^{-1} via braid-relation
    rewrites and bounded-length canceling-pair insertions, looking for the
    empty word.  Exponent-sum mismatch is an immediate certificate of
    inequality in the abelianization quotient Z (all braid generators are
    conjugate, so only the total exponent survives).
    """
    a, b = _probe_parse(word_a), _probe_parse(word_b)
    start = _free_reduce(a + tuple((k, -s) for k, s in reversed(b)))
    if not start:
        return {"equal": True, "states": 0, "certificate": "free reduction"}
    if sum(s for _, s in start):
        return {"equal": False, "states": 0, "certificate": "exponent sum"}

    max_len = len(start) + 2 * slack
    seen = {start}
    queue = deque([start])
    states = 0
    while queue and states < max_states:
        w = queue.popleft()
        states += 1
        candidates: list[tuple[_PLetter, ...]] = list(_braid_rewrites(w))
        if len(w) + 2 <= max_len:
            for p in range(len(w) + 1):
                for idx in range(3):
                    for sgn in (1, -1):
                        candidates.append(w[:p] + ((idx, sgn), (idx, -sgn)) + w[p:])
        for cand in candidates:
            red = _free_reduce(cand)
            if not red:
                return {"equal": True, "states": states, "certificate": "rewriting"}
            if len(red) <= max_len and red not in seen:
                seen.add(red)
                queue.append(red)
    return {"equal": None, "states": states, "certificate": "budget exhausted"}


def dedupe_soundness(graph: RegionGraph, *, max_pairs: int = 50, **probe_kw) -> dict:
    """Run the word-problem probe over recorded BFS collisions."""
    results = {"checked": 0, "equal": 0, "unresolved": 0, "mismatch": []}
    for wa, wb in graph.collisions[:max_pairs]:
        verdict = word_problem_probe(wa, wb, **probe_kw)
        results["checked"] += 1
        if verdict["equal"] is True:
            results["equal"] += 1
        elif verdict["equal"] is None:
            results["unresolved"] += 1
        else:
            results["mismatch"].append((wa, wb))
    return results
