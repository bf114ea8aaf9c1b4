"""Bounding-box fetch of named highways from an Overpass endpoint.

Responses are converted to the GeoJSON form :func:`ingest.load_geojson`
accepts and cached on disk keyed by the bbox, so repeating a fetch costs no
network calls.  Malformed payloads are never written to the cache.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import EmptyDatasetError, InvalidParameterError, NetworkError, ParseError

logger = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://overpass-api.de/api/interpreter"
ENDPOINT_ENV = "STREETDIPOLE_OVERPASS_URL"
CACHE_DIR_ENV = "STREETDIPOLE_CACHE_DIR"
MAX_ATTEMPTS = 3
BACKOFF_BASE_S = 0.5

_sleep = time.sleep  # patched in tests


@dataclass(frozen=True)
class BBox:
    """Lon/lat rectangle (west, south, east, north)."""

    min_lon: float
    min_lat: float
    max_lon: float
    max_lat: float

    def __post_init__(self):
        if not (self.min_lon < self.max_lon and self.min_lat < self.max_lat):
            raise InvalidParameterError(f"empty bbox: {self}")

    def key(self) -> str:
        raw = f"{self.min_lon!r},{self.min_lat!r},{self.max_lon!r},{self.max_lat!r}"
        return hashlib.sha256(raw.encode()).hexdigest()[:16]


def _query(bbox: BBox) -> str:
    box = f"{bbox.min_lat},{bbox.min_lon},{bbox.max_lat},{bbox.max_lon}"
    return f'[out:json][timeout:60];way["highway"]["name"]({box});out geom;'


def _to_geojson(payload: dict) -> bytes:
    elements = payload.get("elements")
    if elements is None:
        raise ParseError("overpass payload has no elements")
    features = []
    for el in elements:
        if el.get("type") != "way":
            continue
        name = (el.get("tags") or {}).get("name")
        geometry = el.get("geometry")
        if not name or not geometry:
            continue
        try:
            coords = [[float(n["lon"]), float(n["lat"])] for n in geometry]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"way {el.get('id')}: bad geometry ({exc})") from exc
        features.append(
            {
                "type": "Feature",
                "id": f"way/{el.get('id')}",
                "properties": {"name": name},
                "geometry": {"type": "LineString", "coordinates": coords},
            }
        )
    if not features:
        raise EmptyDatasetError("overpass returned no named highways for bbox")
    doc = {"type": "FeatureCollection", "features": features}
    return json.dumps(doc, ensure_ascii=False, sort_keys=True).encode()


def fetch_overpass(
    bbox: BBox,
    endpoint_url: str | None = None,
    cache_dir: str | Path | None = None,
) -> bytes:
    """Fetch named highways in ``bbox`` as GeoJSON bytes (cached on disk)."""
    endpoint = endpoint_url or os.environ.get(ENDPOINT_ENV) or DEFAULT_ENDPOINT
    cache_root = Path(
        cache_dir
        or os.environ.get(CACHE_DIR_ENV)
        or Path.home() / ".cache" / "streetdipole"
    )
    cache_file = cache_root / f"overpass-{bbox.key()}.geojson"
    if cache_file.exists():
        logger.debug("overpass cache hit: %s", cache_file)
        return cache_file.read_bytes()

    last_error = None
    for attempt in range(MAX_ATTEMPTS):
        if attempt:
            _sleep(BACKOFF_BASE_S * 2 ** (attempt - 1))
        try:
            response = requests.post(endpoint, data={"data": _query(bbox)}, timeout=120)
        except requests.RequestException as exc:
            last_error = f"request failed: {exc}"
            logger.warning("overpass attempt %d failed: %s", attempt + 1, exc)
            continue
        if response.status_code == 429 or response.status_code >= 500:
            last_error = f"HTTP {response.status_code}"
            logger.warning("overpass attempt %d got %s", attempt + 1, last_error)
            continue
        if response.status_code != 200:
            raise NetworkError(f"overpass returned HTTP {response.status_code}")
        try:
            payload = response.json()
        except ValueError as exc:
            raise ParseError(f"overpass response is not JSON: {exc}") from exc
        data = _to_geojson(payload)
        cache_root.mkdir(parents=True, exist_ok=True)
        cache_file.write_bytes(data)
        return data
    raise NetworkError(f"overpass fetch failed after {MAX_ATTEMPTS} attempts: {last_error}")
