"""Render the knowledge graph as natural-language street descriptions.

One section per street, walking its segments in order.  The opening line
names the streets met at the start; each later crossing yields one line per
branching street and side.  Only two sentence patterns exist, so the
document parses back into (street, neighbor, side) triples losslessly.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .calculus import point_class
from .errors import DegenerateDipoleError, EmptyDatasetError, NotFoundError, ParseError
from .graph import SpatialGraph, walk_stops

logger = logging.getLogger(__name__)

SIDE_LEFT = "left"
SIDE_RIGHT = "right"
SIDE_STRAIGHT = "straight ahead"
_SIDE_ORDER = {SIDE_LEFT: 0, SIDE_RIGHT: 1, SIDE_STRAIGHT: 2}

BEGINS_LINE = re.compile(r"^(?P<street>.+) begins at the intersection with (?P<names>.+)\.$")
BRANCH_LINE = re.compile(
    r"^(?P<street>.+) then branches off to the (?P<side>left|right|straight ahead)\.$"
)
HEADER_LINE = re.compile(r"^=== (?P<street>.+) ===$")


@dataclass(frozen=True)
class VerbalizationDocument:
    sections: tuple[tuple[str, tuple[str, ...]], ...]
    rendered: str


def _branch_side(current_seg, location, other_seg) -> str:
    """Side on which ``other_seg`` leaves ``location``, seen from ``current_seg``.

    Classifies the branching segment's far endpoint against the current
    dipole; collinear positions verbalize as "straight ahead".
    """
    if other_seg.start == location:
        far = other_seg.end
    elif other_seg.end == location:
        far = other_seg.start
    else:
        far = other_seg.end
    try:
        letter = point_class(current_seg.dipole, far)
    except DegenerateDipoleError:
        logger.debug("degenerate viewpoint segment %s", current_seg.id)
        return SIDE_STRAIGHT
    if letter == "l":
        return SIDE_LEFT
    if letter == "r":
        return SIDE_RIGHT
    if letter != "f":
        logger.debug(
            "degenerate branch of %s at %s: point class %r", other_seg.id, location, letter
        )
    return SIDE_STRAIGHT


def verbalize_street(graph: SpatialGraph, street_name: str) -> list[str]:
    """Description lines for one street (empty when it crosses nothing)."""
    if street_name not in graph.street_index:
        raise NotFoundError(f"unknown street: {street_name!r}")
    stops = [
        (loc, inter, seg) for loc, inter, seg in walk_stops(graph, street_name) if inter is not None
    ]
    if not stops:
        return []
    lines: list[str] = []
    begin_loc, begin_inter, _ = stops[0]
    begin_names = sorted(
        {graph.segments[sid].street_name for sid in begin_inter.segment_ids()} - {street_name}
    )
    lines.append(
        f"{street_name} begins at the intersection with {', '.join(begin_names)}."
    )
    for location, inter, seg in stops[1:]:
        branches: dict[str, set[str]] = {}
        for sid in inter.segment_ids():
            other = graph.segments[sid]
            if other.street_name == street_name:
                continue
            branches.setdefault(other.street_name, set()).add(
                _branch_side(seg, location, other)
            )
        for name in sorted(branches):
            for side in sorted(branches[name], key=_SIDE_ORDER.get):
                lines.append(f"{name} then branches off to the {side}.")
    return lines


def _render(sections) -> str:
    blocks = [
        "=== {} ===".format(name) + ("\n" + "\n".join(lines) if lines else "")
        for name, lines in sections
    ]
    return "\n\n".join(blocks) + "\n"


def verbalize_area(graph: SpatialGraph, streets=None) -> VerbalizationDocument:
    """Verbalize every street (or the given subset), sorted by name."""
    if not graph.street_index:
        raise EmptyDatasetError("graph has no streets")
    names = sorted(graph.street_index if streets is None else streets)
    if not names:
        raise EmptyDatasetError("no streets selected")
    sections = tuple(
        (name, tuple(verbalize_street(graph, name))) for name in names
    )
    return VerbalizationDocument(sections=sections, rendered=_render(sections))


def parse_document(text: str):
    """Recover (street, neighbor, side-or-None) triples from a rendered document.

    Raises ParseError on any line outside the sanctioned patterns.
    """
    triples = []
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        header = HEADER_LINE.match(line)
        if header:
            current = header.group("street")
            continue
        begins = BEGINS_LINE.match(line)
        if begins:
            if begins.group("street") != current:
                raise ParseError(f"line {lineno}: begins-line outside its section")
            for name in begins.group("names").split(", "):
                triples.append((current, name, None))
            continue
        branch = BRANCH_LINE.match(line)
        if branch:
            triples.append((current, branch.group("street"), branch.group("side")))
            continue
        raise ParseError(f"line {lineno}: unrecognized sentence {line!r}")
    return triples
