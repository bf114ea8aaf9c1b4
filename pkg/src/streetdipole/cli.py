"""Command-line entry point wiring ingestion, verbalization, enumeration,
single questions, and full experiment runs.

Exit codes: 0 success, 1 dataset/config error, 2 provider failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import enumeration
from .errors import (
    NetworkError,
    ProviderError,
    StreetDipoleError,
)
from .graph import build_graph, load_graph, save_graph
from .ingest import DEFAULT_SNAP_TOLERANCE, load_geojson, project_streets, snap_and_segment
from .rag import (
    CONTROL,
    assemble_prompt,
    build_context,
    generate,
    load_provider_configs,
    resolve_provider,
)
from .experiment import (
    load_overrides,
    load_tasks,
    parse_route,
    run_experiment,
    summarize,
    validate_route,
)

logger = logging.getLogger(__name__)

DEFAULT_SEED = enumeration.DEFAULT_SEED


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's 2
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="streetdipole", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("ingest", help="build a graph file from GeoJSON or an Overpass fetch")
    p.add_argument("--geojson", type=Path, help="GeoJSON FeatureCollection of named streets")
    p.add_argument("--overpass", action="store_true", help="fetch from an Overpass endpoint")
    p.add_argument("--bbox", help="minlon,minlat,maxlon,maxlat (with --overpass)")
    p.add_argument("--endpoint", help="Overpass endpoint URL override")
    p.add_argument("--cache-dir", type=Path, help="Overpass response cache directory")
    p.add_argument("--tolerance", type=float, default=DEFAULT_SNAP_TOLERANCE)
    p.add_argument("--out", type=Path, required=True, help="graph JSON output path")

    p = sub.add_parser("verbalize", help="render a graph as street descriptions")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--out", type=Path, help="write to file instead of stdout")

    p = sub.add_parser("enumerate-relations", help="derive the relation tiers and diff the published table")
    p.add_argument("--budget", type=int, default=enumeration.MIN_SAMPLE_BUDGET)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = sub.add_parser("ask", help="run one navigation question against one provider")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--from", dest="origin", required=True)
    p.add_argument("--to", dest="destination", required=True)
    p.add_argument("--city", default="")
    p.add_argument("--provider", required=True)
    p.add_argument("--providers", type=Path, help="provider config file (for non-mock providers)")
    p.add_argument("--group", choices=["control", "test"], default="test")
    p.add_argument("--scope", default="whole-area")

    p = sub.add_parser("experiment", help="run the full task x provider x group matrix")
    p.add_argument("--tasks", type=Path, required=True)
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--providers", help="config file path, or comma-separated mock names")
    p.add_argument("--groups", default="control,test")
    p.add_argument("--scope", default="whole-area")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--overrides", type=Path, help="manual label override file")
    p.add_argument("--out", type=Path, required=True, help="run directory")
    return parser


def _cmd_ingest(args) -> int:
    if args.overpass:
        from .overpass import BBox, fetch_overpass

        if not args.bbox:
            raise _UsageError("--overpass requires --bbox")
        try:
            parts = [float(v) for v in args.bbox.split(",")]
            bbox = BBox(*parts)
        except (TypeError, ValueError) as exc:
            raise _UsageError(f"bad --bbox: {exc}")
        document = fetch_overpass(bbox, args.endpoint, args.cache_dir)
    elif args.geojson:
        document = args.geojson.read_bytes()
    else:
        raise _UsageError("ingest needs --geojson or --overpass")
    streets = load_geojson(document)
    projected, origin = project_streets(streets)
    segments, intersections = snap_and_segment(projected, args.tolerance)
    graph = build_graph(segments, intersections, origin=origin)
    args.out.write_bytes(save_graph(graph))
    print(
        f"ingested {len(streets)} streets -> {len(segments)} segments, "
        f"{len(intersections)} intersections, {len(graph.edges)} edges -> {args.out}"
    )
    return 0


def _cmd_verbalize(args) -> int:
    from .verbalize import verbalize_area

    graph = load_graph(args.graph.read_bytes())
    document = verbalize_area(graph)
    if args.out:
        args.out.write_text(document.rendered, encoding="utf-8")
    else:
        sys.stdout.write(document.rendered)
    return 0


def _cmd_enumerate(args) -> int:
    fine = enumeration.enumerate_relations(args.budget, args.seed)
    general = enumeration.general_subset(fine)
    coarse = enumeration.coarse_subset(fine)
    for tier in (general, coarse, fine):
        print(f"# {tier.name} ({len(tier.codes)})")
        for code in sorted(tier.codes):
            print(code)
    diff = enumeration.diff_against_published(fine, enumeration.load_published_list())
    for line in diff.lines():
        print(line)
    return 0


def _cmd_ask(args) -> int:
    graph = load_graph(args.graph.read_bytes())
    configs = load_provider_configs(args.providers) if args.providers else None
    provider = resolve_provider(args.provider, configs)
    from .rag import NavigationTask

    task = NavigationTask(
        id="ask", city=args.city, origin=args.origin, destination=args.destination
    )
    context = build_context(graph, task, args.scope) if args.group != CONTROL else None
    bundle = assemble_prompt(task, context)
    print(f"--- system ---\n{bundle.system_text}")
    print(f"--- user ---\n{bundle.user_text}")
    completion = generate(bundle, provider)
    print(f"--- completion ({provider.name}) ---\n{completion.text}")
    steps = parse_route(completion.text, graph.street_index)
    label, reasons = validate_route(graph, steps, task)
    print(f"--- validation ---\n{label}" + (f" ({'; '.join(reasons)})" if reasons else ""))
    return 0


def _cmd_experiment(args) -> int:
    graph = load_graph(args.graph.read_bytes())
    tasks = load_tasks(args.tasks)
    if args.providers and Path(args.providers).exists():
        providers = load_provider_configs(Path(args.providers))
    elif args.providers:
        providers = [resolve_provider(name.strip()) for name in args.providers.split(",")]
    else:
        raise _UsageError("experiment needs --providers")
    groups = [g.strip() for g in args.groups.split(",") if g.strip()]
    overrides = load_overrides(args.overrides) if args.overrides else None
    records = run_experiment(
        tasks,
        providers,
        groups,
        graph,
        run_dir=args.out,
        scope=args.scope,
        overrides=overrides,
    )
    blocks = [summarize(records, ("group",)).render_text()]
    test_records = [r for r in records if r.group != CONTROL]
    if test_records:
        blocks.append(summarize(test_records, ("group", "city")).render_text())
        blocks.append(summarize(test_records, ("group", "provider")).render_text())
    summary_text = "\n".join(blocks)
    (args.out / "summary.txt").write_text(summary_text, encoding="utf-8")
    (args.out / "summary.csv").write_text(
        summarize(records, ("group", "city", "provider")).render_csv(), encoding="utf-8"
    )
    print(summary_text, end="")
    print(f"{len(records)} records -> {args.out / 'records.jsonl'}")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "verbalize": _cmd_verbalize,
    "enumerate-relations": _cmd_enumerate,
    "ask": _cmd_ask,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise _UsageError("a command is required")
        logging.basicConfig(
            level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING
        )
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ProviderError, NetworkError) as exc:
        print(f"provider failure: {exc}", file=sys.stderr)
        return 2
    except (StreetDipoleError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
