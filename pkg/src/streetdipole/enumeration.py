"""Derive the realizable relation tiers by brute-force geometric sampling.

Random real-valued sampling alone has probability zero of hitting collinear
or endpoint-sharing configurations, so the enumeration combines random
integer-coordinate pairs with an exhaustive sweep of all dipole pairs on a
small integer grid, which systematically covers shared endpoints, collinear
overlaps, containments, and touchings.  Geometry is the ground truth here:
the resulting set is cross-checked against the published 72-entry table,
which contains a known duplicate.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import _kernels
from .codes import COARSE_TIER, FINE_TIER, GENERAL_TIER, tier_of
from .errors import InvalidParameterError

DEFAULT_SEED = 1729
MIN_SAMPLE_BUDGET = 10**6
GRID_EXTENT = 4  # systematic families use every dipole pair on [0..4] x [0..4]
RANDOM_COORD_RANGE = 1000  # keeps float64 cross products exact
_CHUNK = 250_000


@dataclass(frozen=True)
class RelationSet:
    """A named tier together with its realizable 4-letter codes."""

    name: str
    codes: frozenset[str]


@dataclass(frozen=True)
class PublishedDiff:
    """Differences between an enumerated set and the published table."""

    found_not_printed: frozenset[str]
    printed_not_found: frozenset[str]
    duplicated_in_printed: frozenset[str]

    def lines(self) -> list[str]:
        out = ["# diff against published table"]
        out.append("found-not-printed: " + (", ".join(sorted(self.found_not_printed)) or "-"))
        out.append("printed-not-found: " + (", ".join(sorted(self.printed_not_found)) or "-"))
        out.append(
            "duplicated-in-printed: " + (", ".join(sorted(self.duplicated_in_printed)) or "-")
        )
        return out


def systematic_degenerate_codes() -> set[str]:
    """Codes of every ordered dipole pair over the small integer grid."""
    pts = [(float(x), float(y)) for x in range(GRID_EXTENT + 1) for y in range(GRID_EXTENT + 1)]
    dip = np.array(
        [(px, py, qx, qy) for (px, py) in pts for (qx, qy) in pts if (px, py) != (qx, qy)],
        dtype=np.float64,
    )
    n = dip.shape[0]
    a = dip[np.repeat(np.arange(n), n)]
    b = dip[np.tile(np.arange(n), n)]
    found: set[str] = set()
    for lo in range(0, a.shape[0], _CHUNK * 4):
        hi = lo + _CHUNK * 4
        found |= _kernels.codes_to_strings(_kernels.relate_batch(a[lo:hi], b[lo:hi], tol=0.0))
    return found


def random_sample_codes(budget: int, seed: int) -> set[str]:
    """Codes from ``budget`` random integer-coordinate dipole pairs."""
    rng = np.random.default_rng(seed)
    found: set[str] = set()
    remaining = budget
    while remaining > 0:
        n = min(_CHUNK, remaining)
        coords = rng.integers(
            -RANDOM_COORD_RANGE, RANDOM_COORD_RANGE + 1, size=(n, 8)
        ).astype(np.float64)
        a, b = coords[:, :4], coords[:, 4:]
        ok = ((a[:, 0] != a[:, 2]) | (a[:, 1] != a[:, 3])) & (
            (b[:, 0] != b[:, 2]) | (b[:, 1] != b[:, 3])
        )
        found |= _kernels.codes_to_strings(_kernels.relate_batch(a[ok], b[ok], tol=0.0))
        remaining -= n
    return found


def enumerate_relations(sample_budget: int = MIN_SAMPLE_BUDGET, seed: int = DEFAULT_SEED) -> RelationSet:
    """Enumerate the fine tier from random sampling plus degenerate families.

    Deterministic given ``seed``; the systematic grid sweep alone already
    produces every realizable code, so the result is seed-independent.
    """
    if sample_budget < MIN_SAMPLE_BUDGET:
        raise InvalidParameterError(
            f"sample_budget must be >= {MIN_SAMPLE_BUDGET}, got {sample_budget}"
        )
    codes = systematic_degenerate_codes()
    codes |= random_sample_codes(sample_budget, seed)
    return RelationSet(FINE_TIER, frozenset(codes))


def general_subset(fine: RelationSet) -> RelationSet:
    return RelationSet(GENERAL_TIER, frozenset(c for c in fine.codes if tier_of(c) == GENERAL_TIER))


def coarse_subset(fine: RelationSet) -> RelationSet:
    return RelationSet(
        COARSE_TIER, frozenset(c for c in fine.codes if tier_of(c) != FINE_TIER)
    )


def load_published_list() -> list[str]:
    """The 72-entry published relation table, in printed order (duplicate kept)."""
    text = resources.files("streetdipole.data").joinpath("published_fine_relations.txt").read_text()
    return [line.strip() for line in text.splitlines() if line.strip()]


def diff_against_published(found: RelationSet, printed: list[str]) -> PublishedDiff:
    """Compare an enumerated set against a printed code list."""
    printed_set = set(printed)
    dupes = {c for c in printed_set if printed.count(c) > 1}
    return PublishedDiff(
        found_not_printed=frozenset(found.codes - printed_set),
        printed_not_found=frozenset(printed_set - found.codes),
        duplicated_in_printed=frozenset(dupes),
    )
