"""Relation-code tables and pure string-level operations on 4-letter codes.

A code's four letters classify, in order: B's start against A, B's end
against A, A's start against B, A's end against B.  Letters come from the
seven point classes ``l r s e b i f``.
"""

from __future__ import annotations

LETTERS = "lrsebif"

#: letter mapping induced by flipping a dipole's orientation
SIGMA = {"l": "r", "r": "l", "s": "e", "e": "s", "b": "f", "f": "b", "i": "i"}

#: letter mapping induced by reflecting the plane
MIRROR = {"l": "r", "r": "l", "s": "s", "e": "e", "b": "b", "i": "i", "f": "f"}

#: codes that no planar configuration realizes
FORBIDDEN = frozenset({"rlrl", "lrlr"})

GENERAL_TIER = "general14"
COARSE_TIER = "coarse24"
FINE_TIER = "fine72"

#: every realizable code, derived by exhaustive small-grid enumeration and
#: re-checked at test time against the enumeration module
CANONICAL_FINE72 = (
    "bbbb", "bbff", "beie", "bfii", "biif", "blrr", "brll", "bsef",
    "ebis", "efbs", "eifs", "ells", "errs", "eses",
    "fbii", "fefe", "ffbb", "ffff", "fifi", "flll", "frrr", "fsei",
    "ibib", "iebe", "ifbi", "iibf", "iifb", "illr", "irrl", "iseb",
    "lbll", "lere", "lfrr", "lirl", "llbr", "llfl", "lllb", "llll",
    "lllr", "llrf", "llrl", "llrr", "lril", "lrll", "lrri", "lrrl",
    "lrrr", "lsel",
    "rbrr", "rele", "rfll", "rilr", "rlir", "rlli", "rlll", "rllr",
    "rlrr", "rrbl", "rrfr", "rrlf", "rrll", "rrlr", "rrrb", "rrrl",
    "rrrr", "rser",
    "sbsb", "sese", "sfsi", "sisf", "slsr", "srsl",
)

FINE72 = frozenset(CANONICAL_FINE72)
GENERAL14 = frozenset(c for c in FINE72 if set(c) <= set("lr"))
COARSE24 = frozenset(c for c in FINE72 if set(c) <= set("lrse"))


def converse_code(code: str) -> str:
    """Swap the code's letter halves: the relation from B back to A."""
    return code[2:] + code[:2]


def flip_first_code(code: str) -> str:
    """Letter transform matching a reversal of the first dipole."""
    return SIGMA[code[0]] + SIGMA[code[1]] + code[3] + code[2]


def flip_second_code(code: str) -> str:
    """Letter transform matching a reversal of the second dipole."""
    return code[1] + code[0] + SIGMA[code[2]] + SIGMA[code[3]]


def mirror_code(code: str) -> str:
    """Letter transform matching a reflection of the plane."""
    return "".join(MIRROR[c] for c in code)


def tier_of(code: str) -> str:
    """Smallest tier containing the code (assumes the code is realizable)."""
    letters = set(code)
    if letters <= set("lr"):
        return GENERAL_TIER
    if letters <= set("lrse"):
        return COARSE_TIER
    return FINE_TIER
