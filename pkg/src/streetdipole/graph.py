"""The qualitative knowledge graph over street segments.

Nodes are segments; edges carry the 4-letter relation between the segment
dipoles.  Segments meeting at a crossing get one canonical edge per
unordered pair (lexicographically smaller id first); consecutive segments of
one street get a chain edge, which by construction carries the
forward-continuation code "efbs" (street segments may bend at a joint, the
chain label states the along-street continuation, not the straight-line
geometry; on straight geometry the computed relation agrees).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from itertools import combinations

from .calculus import Point, converse, relate
from .errors import (
    DatasetError,
    DegenerateDipoleError,
    NotFoundError,
    ParseError,
    SchemaVersionError,
)
from .ingest import SEGMENT_INTERIOR, Intersection, StreetSegment

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CHAIN_RELATION = "efbs"
CROSSING = "crossing"
CHAIN = "chain"


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    relation: str
    location: Point
    kind: str  # crossing | chain


@dataclass
class SpatialGraph:
    segments: dict[str, StreetSegment]
    intersections: list[Intersection]
    edges: list[Edge]
    street_index: dict[str, list[str]]
    origin: tuple[float, float] | None = None

    def street_names(self) -> list[str]:
        return sorted(self.street_index)

    def segments_of(self, street_name: str) -> list[StreetSegment]:
        if street_name not in self.street_index:
            raise NotFoundError(f"unknown street: {street_name!r}")
        return [self.segments[sid] for sid in self.street_index[street_name]]


def build_graph(
    segments: list[StreetSegment],
    intersections: list[Intersection],
    origin: tuple[float, float] | None = None,
) -> SpatialGraph:
    """Assemble the knowledge graph from ingestion output."""
    seg_map = {seg.id: seg for seg in segments}
    street_index: dict[str, list[str]] = {}
    for seg in segments:
        street_index.setdefault(seg.street_name, []).append(seg.id)
    for name, ids in street_index.items():
        ids.sort(key=lambda sid: seg_map[sid].index)

    def dipole_of(sid: str):
        try:
            return seg_map[sid].dipole
        except DegenerateDipoleError as exc:
            raise DatasetError(f"segment {sid} has a zero-length dipole") from exc

    edges: list[Edge] = []
    chain_pairs: set[frozenset[str]] = set()
    for ids in street_index.values():
        for cur, nxt in zip(ids, ids[1:]):
            a, b = seg_map[cur], seg_map[nxt]
            if a.end == b.start:
                chain_pairs.add(frozenset((cur, nxt)))
                edges.append(Edge(cur, nxt, CHAIN_RELATION, a.end, CHAIN))

    seen: set[tuple[str, str, Point]] = set()
    for inter in intersections:
        incident = sorted(
            {sid for sid, marker in inter.incident if marker != SEGMENT_INTERIOR}
        )
        for a, b in combinations(incident, 2):
            if frozenset((a, b)) in chain_pairs:
                continue
            key = (a, b, inter.location)
            if key in seen:
                continue
            seen.add(key)
            edges.append(Edge(a, b, relate(dipole_of(a), dipole_of(b)), inter.location, CROSSING))

    edges.sort(key=lambda e: (e.a, e.b, e.location, e.kind))
    graph = SpatialGraph(
        segments={sid: seg_map[sid] for sid in sorted(seg_map)},
        intersections=sorted(intersections, key=lambda i: i.location),
        edges=edges,
        street_index={name: street_index[name] for name in sorted(street_index)},
        origin=origin,
    )
    _warn_if_disconnected(graph)
    return graph


def _warn_if_disconnected(graph: SpatialGraph) -> None:
    parent = {sid: sid for sid in graph.segments}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in graph.edges:
        ra, rb = find(e.a), find(e.b)
        if ra != rb:
            parent[ra] = rb
    roots = {find(sid) for sid in graph.segments}
    if len(roots) > 1:
        logger.warning(
            "graph has %d disconnected components (representatives: %s)",
            len(roots),
            ", ".join(sorted(roots)[:5]),
        )


def edge_converse(edge: Edge) -> Edge:
    """The stored edge seen from its second endpoint."""
    return Edge(edge.b, edge.a, converse(edge.relation), edge.location, edge.kind)


def street_adjacency(graph: SpatialGraph) -> dict[str, set[str]]:
    """Street-level view: names sharing at least one intersection."""
    adj: dict[str, set[str]] = {name: set() for name in graph.street_index}
    for inter in graph.intersections:
        names = sorted({graph.segments[sid].street_name for sid in inter.segment_ids()})
        for a, b in combinations(names, 2):
            adj[a].add(b)
            adj[b].add(a)
    return adj


def walk_stops(graph: SpatialGraph, street_name: str):
    """Ordered stops along a street: (location, intersection or None, viewpoint segment).

    The viewpoint segment is the one traveled when reaching the stop (the
    segment itself for a stop at its start).
    """
    inter_at = {i.location: i for i in graph.intersections}
    stops = []
    prev_end = None
    for seg in graph.segments_of(street_name):
        if prev_end is None or seg.start != prev_end:
            stops.append((seg.start, inter_at.get(seg.start), seg))
        stops.append((seg.end, inter_at.get(seg.end), seg))
        prev_end = seg.end
    return stops


def neighbors(graph: SpatialGraph, street_name: str) -> list[tuple[str, Point]]:
    """Streets crossing the named one, in along-street order.

    A street met at several intersections appears once per intersection.
    """
    result: list[tuple[str, Point]] = []
    for location, inter, _seg in walk_stops(graph, street_name):
        if inter is None:
            continue
        names = sorted(
            {graph.segments[sid].street_name for sid in inter.segment_ids()} - {street_name}
        )
        result.extend((name, location) for name in names)
    return result


def _point_to_json(p: Point) -> list[float]:
    return [p.x, p.y]


def save_graph(graph: SpatialGraph) -> bytes:
    """Serialize to canonical JSON bytes (byte-deterministic for equal graphs)."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "origin": list(graph.origin) if graph.origin is not None else None,
        "segments": [
            {
                "id": seg.id,
                "street_name": seg.street_name,
                "index": seg.index,
                "polyline": [_point_to_json(p) for p in seg.polyline],
            }
            for seg in graph.segments.values()
        ],
        "intersections": [
            {
                "location": _point_to_json(i.location),
                "incident": [list(entry) for entry in i.incident],
            }
            for i in graph.intersections
        ],
        "edges": [
            {
                "a": e.a,
                "b": e.b,
                "relation": e.relation,
                "location": _point_to_json(e.location),
                "kind": e.kind,
            }
            for e in graph.edges
        ],
        "street_index": graph.street_index,
    }
    return json.dumps(doc, ensure_ascii=False, sort_keys=True, separators=(",", ":")).encode()


def load_graph(data: bytes | str) -> SpatialGraph:
    """Inverse of :func:`save_graph`."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid graph file: {exc}") from exc
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise ParseError("graph file has no schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"unsupported graph schema version {doc['schema_version']} (expected {SCHEMA_VERSION})"
        )
    try:
        segments = {
            s["id"]: StreetSegment(
                id=s["id"],
                street_name=s["street_name"],
                index=s["index"],
                polyline=tuple(Point(x, y) for x, y in s["polyline"]),
            )
            for s in doc["segments"]
        }
        intersections = [
            Intersection(
                Point(*i["location"]),
                tuple((sid, marker) for sid, marker in i["incident"]),
            )
            for i in doc["intersections"]
        ]
        edges = [
            Edge(e["a"], e["b"], e["relation"], Point(*e["location"]), e["kind"])
            for e in doc["edges"]
        ]
        origin = tuple(doc["origin"]) if doc.get("origin") is not None else None
        return SpatialGraph(
            segments=segments,
            intersections=intersections,
            edges=edges,
            street_index={k: list(v) for k, v in doc["street_index"].items()},
            origin=origin,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"graph file structure invalid: {exc}") from exc
