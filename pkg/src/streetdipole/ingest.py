"""Street-network ingestion: GeoJSON loading, projection, snapping, segmentation.

Streets are named polylines.  Snapping merges nearby vertices to one exact
location, then every street is split at locations it shares with another
street, producing oriented segments whose endpoint coordinates match exactly
at crossings.  All fuzziness lives here; downstream geometry is exact.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

from .calculus import Point
from .errors import (
    EmptyDatasetError,
    InvalidInputError,
    InvalidParameterError,
    ParseError,
)

logger = logging.getLogger(__name__)

METERS_PER_DEGREE = 111320.0
DEFAULT_SNAP_TOLERANCE = 1.0  # meters; absorbs digitization noise without
                              # merging parallel carriageways

SEGMENT_AT_START = "start"
SEGMENT_AT_END = "end"
SEGMENT_INTERIOR = "interior-split"


@dataclass
class RawStreet:
    """A named polyline as loaded from source data (one connected run)."""

    name: str
    polyline: list[Point]
    source_id: str = ""


@dataclass(frozen=True)
class StreetSegment:
    """One crossing-free run of a street, oriented along digitization order."""

    id: str
    street_name: str
    index: int  # 1-based position within the street
    polyline: tuple[Point, ...]

    @property
    def dipole(self):
        from .calculus import Dipole

        return Dipole(self.polyline[0], self.polyline[-1])

    @property
    def start(self) -> Point:
        return self.polyline[0]

    @property
    def end(self) -> Point:
        return self.polyline[-1]


@dataclass(frozen=True)
class Intersection:
    """A shared location and the segments touching it."""

    location: Point
    incident: tuple[tuple[str, str], ...]  # (segment id, start/end/interior-split)

    def segment_ids(self) -> list[str]:
        return sorted({sid for sid, _ in self.incident})


def _canonical_name(raw) -> str:
    """Street name as text; multi-name entries are joined with ' / '."""
    if isinstance(raw, (list, tuple)):
        return " / ".join(str(part) for part in raw)
    return str(raw)


def _dedupe(points: list[Point]) -> list[Point]:
    out = [points[0]]
    for p in points[1:]:
        if p != out[-1]:
            out.append(p)
    return out


def _merge_pieces(pieces: list[list[Point]]) -> list[list[Point]]:
    """Chain polyline pieces whose endpoints coincide exactly.

    The first piece of each chain keeps its digitization direction; attached
    pieces are flipped when needed to continue the chain.
    """
    chains = [list(p) for p in pieces]
    merged = True
    while merged and len(chains) > 1:
        merged = False
        for i in range(len(chains)):
            for j in range(i + 1, len(chains)):
                a, b = chains[i], chains[j]
                if a[-1] == b[0]:
                    chains[i] = a + b[1:]
                elif a[-1] == b[-1]:
                    chains[i] = a + b[-2::-1]
                elif a[0] == b[-1]:
                    chains[i] = b + a[1:]
                elif a[0] == b[0]:
                    chains[i] = b[::-1] + a[1:]
                else:
                    continue
                del chains[j]
                merged = True
                break
            if merged:
                break
    return chains


def load_geojson(document: bytes | str) -> list[RawStreet]:
    """Parse a GeoJSON FeatureCollection of named line features.

    Features sharing a name are merged end-to-end where their endpoints
    coincide; unnamed or non-line features are dropped (counted in a
    warning).  Raises ParseError for malformed documents and
    EmptyDatasetError when nothing named survives.
    """
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}") from exc
    if not isinstance(data, dict) or data.get("type") != "FeatureCollection":
        raise ParseError("document is not a GeoJSON FeatureCollection")
    features = data.get("features")
    if not isinstance(features, list):
        raise ParseError("FeatureCollection has no features list")

    pieces: dict[str, list[list[Point]]] = {}
    order: list[str] = []
    source_ids: dict[str, str] = {}
    dropped_unnamed = 0
    dropped_other = 0
    for idx, feat in enumerate(features):
        if not isinstance(feat, dict) or "geometry" not in feat:
            raise ParseError(f"feature {idx}: missing geometry")
        geom = feat.get("geometry") or {}
        props = feat.get("properties") or {}
        gtype = geom.get("type")
        if gtype == "LineString":
            lines = [geom.get("coordinates")]
        elif gtype == "MultiLineString":
            lines = geom.get("coordinates") or []
        else:
            dropped_other += 1
            continue
        name = props.get("name")
        if name is None or name == "" or name == []:
            dropped_unnamed += 1
            continue
        name = _canonical_name(name)
        for line in lines:
            try:
                pts = _dedupe([Point(float(x), float(y)) for x, y in line])
            except (TypeError, ValueError) as exc:
                raise ParseError(f"feature {idx}: bad coordinates ({exc})") from exc
            if len(pts) < 2:
                dropped_other += 1
                continue
            if name not in pieces:
                pieces[name] = []
                order.append(name)
                source_ids[name] = str(feat.get("id", f"feature/{idx}"))
            pieces[name].append(pts)

    if dropped_unnamed or dropped_other:
        logger.warning(
            "dropped %d unnamed and %d unusable features", dropped_unnamed, dropped_other
        )
    streets: list[RawStreet] = []
    for name in order:
        chains = _merge_pieces(pieces[name])
        for k, chain in enumerate(chains):
            suffix = "" if len(chains) == 1 else f"#{k + 1}"
            streets.append(RawStreet(name, chain, source_ids[name] + suffix))
    if not streets:
        raise EmptyDatasetError("no named line features in document")
    return streets


def dataset_origin(streets: list[RawStreet]) -> tuple[float, float]:
    """Centroid (lon, lat) of all polyline vertices; the projection origin."""
    xs = [p.x for s in streets for p in s.polyline]
    ys = [p.y for s in streets for p in s.polyline]
    return (sum(xs) / len(xs), sum(ys) / len(ys))


def project(points, origin: tuple[float, float]) -> list[Point]:
    """Equirectangular lon/lat -> planar meters about ``origin``."""
    lon0, lat0 = origin
    if abs(lat0) > 85.0:
        raise InvalidInputError(f"origin latitude out of range: {lat0}")
    kx = METERS_PER_DEGREE * math.cos(math.radians(lat0))
    out = []
    for lon, lat in points:
        if abs(lat) > 85.0:
            raise InvalidInputError(f"latitude out of range: {lat}")
        out.append(Point((lon - lon0) * kx, (lat - lat0) * METERS_PER_DEGREE))
    return out


def unproject(points, origin: tuple[float, float]) -> list[tuple[float, float]]:
    """Inverse of :func:`project`."""
    lon0, lat0 = origin
    kx = METERS_PER_DEGREE * math.cos(math.radians(lat0))
    return [(x / kx + lon0, y / METERS_PER_DEGREE + lat0) for x, y in points]


def project_streets(streets: list[RawStreet], origin=None):
    """Project all streets about ``origin`` (default: dataset centroid)."""
    if origin is None:
        origin = dataset_origin(streets)
    projected = [
        RawStreet(s.name, project(s.polyline, origin), s.source_id) for s in streets
    ]
    return projected, origin


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def _snap_vertices(streets: list[RawStreet], tolerance: float) -> list[list[Point]]:
    """Merge vertices within ``tolerance`` to one exact canonical location."""
    flat: list[Point] = []
    offsets: list[tuple[int, int]] = []
    for si, street in enumerate(streets):
        for vi, p in enumerate(street.polyline):
            offsets.append((si, vi))
            flat.append(p)
    uf = _UnionFind(len(flat))
    buckets: dict[tuple[int, int], list[int]] = {}
    for i, p in enumerate(flat):
        buckets.setdefault((math.floor(p.x / tolerance), math.floor(p.y / tolerance)), []).append(i)
    tol2 = tolerance * tolerance
    for (cx, cy), members in buckets.items():
        neighbors: list[int] = []
        for ox in (-1, 0, 1):
            for oy in (-1, 0, 1):
                neighbors.extend(buckets.get((cx + ox, cy + oy), []))
        for i in members:
            pi = flat[i]
            for j in neighbors:
                if j <= i:
                    continue
                pj = flat[j]
                if (pi.x - pj.x) ** 2 + (pi.y - pj.y) ** 2 <= tol2:
                    uf.union(i, j)
    canonical: dict[int, Point] = {}
    for i in range(len(flat)):
        root = uf.find(i)
        cur = canonical.get(root)
        if cur is None or flat[i] < cur:
            canonical[root] = flat[i]
    snapped: list[list[Point]] = [list(s.polyline) for s in streets]
    for i, (si, vi) in enumerate(offsets):
        snapped[si][vi] = canonical[uf.find(i)]
    return snapped


def snap_and_segment(
    streets: list[RawStreet], tolerance: float = DEFAULT_SNAP_TOLERANCE
) -> tuple[list[StreetSegment], list[Intersection]]:
    """Snap shared locations and split streets into segments at crossings.

    Coordinates must already be planar meters.  Returns the segments (indexed
    1..n per street name, oriented along digitization order) and the
    intersections (locations where at least two distinct street names meet).
    """
    if tolerance <= 0:
        raise InvalidParameterError(f"tolerance must be > 0, got {tolerance}")
    snapped = _snap_vertices(streets, tolerance)

    polylines: list[list[Point]] = []
    for street, pts in zip(streets, snapped):
        pts = _dedupe(pts)
        if len(pts) < 2:
            logger.warning("street %r collapsed by snapping; dropped", street.name)
            polylines.append([])
        else:
            polylines.append(pts)

    names_at: dict[Point, set[str]] = {}
    for street, pts in zip(streets, polylines):
        for p in pts:
            names_at.setdefault(p, set()).add(street.name)
    split_locs = {p for p, names in names_at.items() if len(names) >= 2}

    segments: list[StreetSegment] = []
    counters: dict[str, int] = {}
    for street, pts in zip(streets, polylines):
        if not pts:
            continue
        cut = [0]
        for i in range(1, len(pts) - 1):
            if pts[i] in split_locs:
                cut.append(i)
        cut.append(len(pts) - 1)
        for a, b in zip(cut, cut[1:]):
            idx = counters.get(street.name, 0) + 1
            counters[street.name] = idx
            segments.append(
                StreetSegment(
                    id=f"{street.name}:{idx}",
                    street_name=street.name,
                    index=idx,
                    polyline=tuple(pts[a : b + 1]),
                )
            )

    incident_at: dict[Point, set[tuple[str, str]]] = {loc: set() for loc in split_locs}
    for seg in segments:
        for loc, marker in ((seg.start, SEGMENT_AT_START), (seg.end, SEGMENT_AT_END)):
            if loc in incident_at:
                incident_at[loc].add((seg.id, marker))
        for p in seg.polyline[1:-1]:
            if p in incident_at:
                incident_at[p].add((seg.id, SEGMENT_INTERIOR))

    intersections = [
        Intersection(loc, tuple(sorted(incident_at[loc]))) for loc in sorted(split_locs)
    ]
    return segments, intersections
