"""Qualitative relations between oriented street segments.

Core calculus (point classification, 4-letter relation codes), relation-set
enumeration, street-network ingestion, a segment-level knowledge graph, its
natural-language verbalization, prompt assembly with a pluggable
language-model gateway, and an experiment harness.
"""

from .calculus import (
    Dipole,
    Point,
    classify_tier,
    converse,
    orientation,
    point_class,
    relate,
    reverse,
)
from .codes import COARSE24, FINE72, FORBIDDEN, GENERAL14
from .enumeration import RelationSet, diff_against_published, enumerate_relations
from .graph import SpatialGraph, build_graph, load_graph, neighbors, save_graph
from .ingest import (
    Intersection,
    RawStreet,
    StreetSegment,
    load_geojson,
    project,
    snap_and_segment,
)
from .rag import NavigationTask, PromptBundle, ProviderConfig, assemble_prompt, build_context, generate
from .verbalize import VerbalizationDocument, verbalize_area, verbalize_street
from .experiment import TrialRecord, parse_route, run_experiment, summarize, validate_route

__version__ = "0.1.0"

__all__ = [
    "COARSE24",
    "Dipole",
    "FINE72",
    "FORBIDDEN",
    "GENERAL14",
    "Intersection",
    "NavigationTask",
    "Point",
    "PromptBundle",
    "ProviderConfig",
    "RawStreet",
    "RelationSet",
    "SpatialGraph",
    "StreetSegment",
    "TrialRecord",
    "VerbalizationDocument",
    "assemble_prompt",
    "build_context",
    "build_graph",
    "classify_tier",
    "converse",
    "diff_against_published",
    "enumerate_relations",
    "generate",
    "load_geojson",
    "load_graph",
    "neighbors",
    "orientation",
    "parse_route",
    "point_class",
    "project",
    "relate",
    "reverse",
    "run_experiment",
    "save_graph",
    "snap_and_segment",
    "summarize",
    "validate_route",
    "verbalize_area",
    "verbalize_street",
]
