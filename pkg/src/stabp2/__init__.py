"""Stability regions, quantum product, and period data for local P^2.

Layers:
  kform  — exact rank-3 lattice with the antisymmetrized Euler pairing
  tilt   — braid letters on spherical triples, region graph, Markov data
  stab   — stability charts, wall crossing, path continuation
  qh     — genus-zero invariants, quantum product jets, Euler/WDVV checks
  ssc    — flat pencil connection: monodromy, q-loop, periods, mirror ODE
  cli    — subcommand driver emitting delimited reports and figures
"""

from .kform import EULER_FORM, GRAM, KClass, chi, twist_matrix
from .tilt import BraidWord, SphericalTripleK, apply_word, braid_matrices, region_bfs

__version__ = "0.1.0"

__all__ = [
    "EULER_FORM",
    "GRAM",
    "KClass",
    "chi",
    "twist_matrix",
    "BraidWord",
    "SphericalTripleK",
    "apply_word",
    "braid_matrices",
    "region_bfs",
    "__version__",
]
