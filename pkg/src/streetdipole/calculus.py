"""Point-vs-dipole classification and the 4-letter relation between oriented segments.

All operations are pure functions on immutable values.  Orientation tests use
exact integer arithmetic whenever every coordinate is integral (the common
case after ingestion snapping); otherwise a relative epsilon guards the
collinearity decision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .codes import FINE72, SIGMA, converse_code, tier_of
from .errors import DegenerateDipoleError, InvalidInputError, InvalidRelationError

#: relative tolerance for the collinear decision on non-integral coordinates
COLLINEAR_EPS = 1e-9


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Dipole:
    """Oriented straight segment from ``start`` to ``end`` (distinct points)."""

    start: Point
    end: Point

    def __post_init__(self):
        start = Point(*self.start)
        end = Point(*self.end)
        _require_finite(start.x, start.y, end.x, end.y)
        if start == end:
            raise DegenerateDipoleError(f"dipole start equals end: {start}")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "end", end)


def _require_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidInputError(f"non-finite coordinate: {v!r}")


def _all_integral(values: Iterable[float]) -> bool:
    return all(float(v).is_integer() for v in values)


def orientation(p: Point, q: Point, r: Point) -> int:
    """Sign of the turn p->q->r: +1 left, -1 right, 0 collinear.

    Exact for integral coordinates; otherwise collinearity is decided against
    a relative epsilon scaled by the operand magnitudes.
    """
    px, py = p
    qx, qy = q
    rx, ry = r
    _require_finite(px, py, qx, qy, rx, ry)
    if _all_integral((px, py, qx, qy, rx, ry)):
        cross = (int(qx) - int(px)) * (int(ry) - int(py)) - (int(qy) - int(py)) * (
            int(rx) - int(px)
        )
        return (cross > 0) - (cross < 0)
    dx, dy = qx - px, qy - py
    ex, ey = rx - px, ry - py
    cross = dx * ey - dy * ex
    thresh = COLLINEAR_EPS * (abs(dx) + abs(dy)) * (abs(ex) + abs(ey))
    if cross > thresh:
        return 1
    if cross < -thresh:
        return -1
    return 0


def point_class(d: Dipole, p: Point) -> str:
    """Classify ``p`` against ``d``: one of ``l r s e b i f``.

    Off-line points are ``l``/``r``.  On-line points subdivide by position
    along the carrier: at the start (``s``), at the end (``e``), before the
    start (``b``), strictly between (``i``), beyond the end (``f``).
    Endpoint matches are exact coordinate equality.
    """
    p = Point(*p)
    _require_finite(p.x, p.y)
    side = orientation(d.start, d.end, p)
    if side > 0:
        return "l"
    if side < 0:
        return "r"
    if p == d.start:
        return "s"
    if p == d.end:
        return "e"
    dx, dy = d.end.x - d.start.x, d.end.y - d.start.y
    if dx * (p.x - d.start.x) + dy * (p.y - d.start.y) < 0:
        return "b"
    if dx * (p.x - d.end.x) + dy * (p.y - d.end.y) > 0:
        return "f"
    return "i"


def relate(a: Dipole, b: Dipole) -> str:
    """4-letter relation code between two dipoles.

    Letter order: b.start vs a, b.end vs a, a.start vs b, a.end vs b.
    """
    return (
        point_class(a, b.start)
        + point_class(a, b.end)
        + point_class(b, a.start)
        + point_class(b, a.end)
    )


def converse(code: str) -> str:
    """Relation from B back to A: the code's letter halves swapped."""
    return converse_code(code)


def reverse(d: Dipole) -> Dipole:
    """The same segment with flipped orientation."""
    return Dipole(d.end, d.start)


def sigma(letter: str) -> str:
    """Point-class image under a dipole reversal (l<->r, s<->e, b<->f, i fixed)."""
    return SIGMA[letter]


def classify_tier(code: str) -> str:
    """Smallest relation tier containing the code.

    Raises InvalidRelationError for codes outside the 72 realizable ones.
    """
    if code not in FINE72:
        raise InvalidRelationError(f"not a realizable relation code: {code!r}")
    return tier_of(code)
