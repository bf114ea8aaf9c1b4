"""Shared fixtures: reference layouts, a synthetic grid city, task sets."""

from __future__ import annotations

import json

import pytest

from streetdipole.calculus import Point
from streetdipole.graph import build_graph
from streetdipole.ingest import RawStreet, snap_and_segment
from streetdipole.rag import NavigationTask

# Segment coordinates realizing the twelve published crossing relations:
# one junction star around A, one around H.
TWO_STAR_COORDS = {
    "A": [(0, 0), (100, 0)],
    "B": [(-100, 0), (0, 0)],
    "C": [(0, -100), (0, 0)],
    "D": [(100, -100), (100, 0)],
    "E": [(100, 0), (200, 0)],
    "F": [(100, 0), (100, 100)],
    "G": [(0, 0), (0, 100)],
    "H": [(1000, 0), (1100, 0)],
    "I": [(1000, 0), (900, 0)],
    "J": [(1000, 0), (1000, -100)],
    "K": [(1100, 0), (1100, -100)],
    "L": [(1200, 0), (1100, 0)],
    "M": [(1100, 100), (1100, 0)],
    "N": [(1000, 100), (1000, 0)],
}

TWO_STAR_RELATIONS = {
    ("A:1", "B:1"): "bsef",
    ("A:1", "C:1"): "rser",
    ("A:1", "D:1"): "rele",
    ("A:1", "E:1"): "efbs",
    ("A:1", "F:1"): "ells",
    ("A:1", "G:1"): "slsr",
    ("H:1", "I:1"): "sbsb",
    ("H:1", "J:1"): "srsl",
    ("H:1", "K:1"): "errs",
    ("H:1", "L:1"): "fefe",
    ("H:1", "M:1"): "lere",
    ("H:1", "N:1"): "lsel",
}


def make_streets(coords: dict) -> list[RawStreet]:
    return [RawStreet(name, [Point(*p) for p in pts]) for name, pts in coords.items()]


@pytest.fixture
def two_star_graph():
    segments, intersections = snap_and_segment(make_streets(TWO_STAR_COORDS), 1.0)
    return build_graph(segments, intersections)


# Hand-built corner of the published sample verbalization: Ansorgestraße with
# its golden begins/branch lines, Holmbrook with a single begins line.
SAMPLE_AREA_COORDS = {
    "Ansorgestraße": [(0, 0), (100, 0), (200, 0)],
    "Emkendorfstraße": [(-50, 40), (0, 0)],
    "Liebermannstraße": [(-50, -40), (0, 0)],
    "Roosens Weg": [(100, 0), (100, -80)],
    "Holmbrook": [(1000, 1000), (1100, 1000)],
    "Agathe-Lasch-Weg": [(1000, 900), (1000, 1000)],
    "Paul-Ehrlich-Straße": [(900, 1000), (1000, 1000)],
}

GOLDEN_ANSORGE = (
    "=== Ansorgestraße ===\n"
    "Ansorgestraße begins at the intersection with Emkendorfstraße, Liebermannstraße.\n"
    "Roosens Weg then branches off to the right."
)

GOLDEN_HOLMBROOK = (
    "=== Holmbrook ===\n"
    "Holmbrook begins at the intersection with Agathe-Lasch-Weg, Paul-Ehrlich-Straße."
)


@pytest.fixture
def sample_area_graph():
    segments, intersections = snap_and_segment(make_streets(SAMPLE_AREA_COORDS), 1.0)
    return build_graph(segments, intersections)


def grid_city_geojson(n_ew: int, n_ns: int, lon0=9.9, lat0=53.55, step=0.002) -> bytes:
    """GeoJSON for a full grid of n_ew east-west and n_ns north-south streets.

    Crossing streets share exact vertices, so snapping is trivially exact.
    """
    features = []
    for i in range(n_ew):
        coords = [[lon0 + j * step, lat0 + i * step] for j in range(n_ns)]
        features.append(
            {
                "type": "Feature",
                "id": f"ew/{i}",
                "properties": {"name": f"Querweg {i + 1}"},
                "geometry": {"type": "LineString", "coordinates": coords},
            }
        )
    for j in range(n_ns):
        coords = [[lon0 + j * step, lat0 + i * step] for i in range(n_ew)]
        features.append(
            {
                "type": "Feature",
                "id": f"ns/{j}",
                "properties": {"name": f"Langgasse {j + 1}"},
                "geometry": {"type": "LineString", "coordinates": coords},
            }
        )
    return json.dumps({"type": "FeatureCollection", "features": features}).encode()


def grid_city_graph(n_ew: int, n_ns: int):
    from streetdipole.graph import build_graph as _build
    from streetdipole.ingest import load_geojson, project_streets, snap_and_segment as _snap

    streets = load_geojson(grid_city_geojson(n_ew, n_ns))
    projected, origin = project_streets(streets)
    segments, intersections = _snap(projected, 1.0)
    return _build(segments, intersections, origin=origin)


@pytest.fixture(scope="session")
def small_grid_graph():
    return grid_city_graph(4, 4)


def grid_tasks(n: int, n_ew: int = 4, n_ns: int = 4) -> list[NavigationTask]:
    """Tasks across a grid city with planted valid routes (one crossing each)."""
    tasks = []
    k = 0
    while len(tasks) < n:
        i = k % n_ew
        j = k // n_ew % n_ns
        origin = f"Querweg {i + 1}"
        destination = f"Langgasse {j + 1}"
        tasks.append(
            NavigationTask(
                id=f"task-{len(tasks) + 1:03d}",
                city="Hamburg" if len(tasks) % 2 == 0 else "Münster",
                origin=origin,
                destination=destination,
                planted_route=(origin, destination),
            )
        )
        k += 1
    return tasks
