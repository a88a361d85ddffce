"""Command-line entry point: ``siterecover reconstruct|eval|testbed|simulate``.

Exit codes: 0 done, 2 bad configuration or inputs, 3 suspended on a query
limit (a checkpoint was written), 4 partial run after a transport or disk error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from .budget import DAY, DEFAULT_POLICIES, QueryBudget, RespectPolicy, SystemClock, VirtualClock
from .extractor import DEFAULT_IMAGE_EXTENSIONS, InvalidURL, ScopeMode
from .reconstructor import CheckpointError, Reconstructor, RecoveryPolicy, VersionPreference
from .repo import ArchiveAdapter, FixtureError, load_fixture
from .store import SiteStore

EXIT_OK, EXIT_CONFIG, EXIT_SUSPENDED, EXIT_PARTIAL = 0, 2, 3, 4
ENV_PREFIX = "SITERECOVER_"
CHECKPOINT_NAME = ".checkpoint.json"

log = logging.getLogger("siterecover")


class ConfigError(Exception):
    pass


def _env(name: str, default=None):
    return os.environ.get(ENV_PREFIX + name, default)


def _emit(doc: dict) -> None:
    json.dump(doc, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


# ---- reconstruct ----

def _parse_limit(spec: str) -> tuple[str, int, float]:
    """``REPO=N`` or ``REPO=N/SECONDS``."""
    try:
        repo, _, rest = spec.partition("=")
        limit, _, period = rest.partition("/")
        return repo, int(limit), float(period) if period else DAY
    except ValueError:
        raise ConfigError(f"bad --limit {spec!r}; expected REPO=N or REPO=N/SECONDS") from None


def _build_repos(args) -> list:
    repos = []
    for path in args.fixture:
        repos.append(load_fixture(path))
    archive_url = args.archive_url or _env("ARCHIVE_URL")
    if archive_url:
        repos.append(ArchiveAdapter(archive_url))
    if not repos:
        raise ConfigError("no repositories: give --fixture and/or --archive-url")
    return repos


def _build_budget(args, repos) -> QueryBudget:
    policies = {}
    overrides = {repo: (limit, period) for repo, limit, period in map(_parse_limit, args.limit)}
    for repo in repos:
        rid = repo.descriptor.id
        base = DEFAULT_POLICIES.get(rid, RespectPolicy(1000))
        limit, period = overrides.pop(rid, (base.limit, base.period))
        if args.no_delay:
            policies[rid] = RespectPolicy(limit, period, 0.0, 0.0)
        else:
            policies[rid] = RespectPolicy(limit, period, base.delay_min, base.delay_max)
    if overrides:
        raise ConfigError(f"--limit names unknown repositories: {sorted(overrides)}")
    return QueryBudget(policies)


def _build_policy(args, start_url: str) -> RecoveryPolicy:
    types = frozenset(t.strip() for t in args.types.split(",") if t.strip())
    exts = DEFAULT_IMAGE_EXTENSIONS
    if args.image_exts:
        exts = frozenset(e.strip().lower().lstrip(".") for e in args.image_exts.split(",") if e.strip())
    return RecoveryPolicy.for_start(
        start_url,
        ScopeMode(args.scope),
        version_preference=VersionPreference.MOST_RECENT if args.most_recent else VersionPreference.CANONICAL_FIRST,
        max_resources=args.max_resources,
        allowed_types=types,
        image_extensions=exts,
        on_limit=args.on_limit,
    )


def cmd_reconstruct(args) -> int:
    out = args.out or _env("OUT")
    if not out:
        raise ConfigError("--out is required")
    checkpoint = Path(args.checkpoint) if args.checkpoint else Path(out) / CHECKPOINT_NAME
    repos = _build_repos(args)
    start_url = args.url
    saved = None
    if args.resume:
        if not checkpoint.exists():
            raise ConfigError(f"no checkpoint at {checkpoint}")
        saved = json.loads(checkpoint.read_text())
        start_url = start_url or saved["start_url"]
    if not start_url:
        raise ConfigError("a start URL is required")
    policy = _build_policy(args, start_url)
    budget = _build_budget(args, repos)
    store = SiteStore(out, rename_converted_html=args.rename_converted, relativize_links=args.relativize)
    clock = VirtualClock() if args.no_delay else SystemClock()
    if saved is not None:
        rec = Reconstructor.from_checkpoint(saved, repos, policy, budget, store, clock)
        if isinstance(clock, VirtualClock) and saved.get("paused_until"):
            # virtual time: the wait that suspended the run has now passed
            clock.advance_to(saved["paused_until"])
    else:
        rec = Reconstructor(start_url, repos, policy, budget, store, clock, seed=args.seed)
    result = rec.run()
    summary = {
        "status": result.status,
        "start_url": rec.start_url,
        "recovered": len(result.recovered),
        "missing": len(result.missing),
        "queries": dict(sorted(result.query_ledger.items())),
        "out": str(out),
    }
    if result.status == "suspended":
        rec.write_checkpoint(checkpoint)
        summary["paused_until"] = result.paused_until
        summary["checkpoint"] = str(checkpoint)
    elif checkpoint.exists() and args.resume:
        checkpoint.unlink()
    if result.error:
        summary["error"] = result.error
    _emit(summary)
    return {"complete": EXIT_OK, "suspended": EXIT_SUSPENDED}.get(result.status, EXIT_PARTIAL)


# ---- eval ----

def _parse_converters(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items:
        mime, sep, cmd = item.partition("=")
        if not sep or not mime or not cmd:
            raise ConfigError(f"bad --converter {item!r}; expected MIME=COMMAND")
        out[mime.strip().lower()] = cmd
    return out


def cmd_eval(args) -> int:
    from .evaluator import evaluate

    for label, path in (("original", args.original), ("recon", args.recon)):
        if not Path(path).is_dir():
            raise ConfigError(f"--{label} directory {path} does not exist")
    try:
        report = evaluate(args.original, args.recon, use_log=not args.ignore_log,
                          converters=_parse_converters(args.converter), threshold=args.threshold,
                          w=args.shingle_size, denominator=args.denominator, diagram=args.diagram)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    _emit(report)
    v = report["vector"]
    print(f"changed {v['rendered'][0]}  missing {v['rendered'][1]}  added {v['rendered'][2]}", file=sys.stderr)
    return EXIT_OK


# ---- testbed ----

def cmd_testbed_gen(args) -> int:
    from .testbed import CollectionSpec, collection_counts, generate_collection

    try:
        spec = CollectionSpec(args.bins, args.terminal, args.image_bin, args.words_per_page, args.seed,
                              args.name, args.host)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    schedule = generate_collection(spec, args.out)
    _emit({
        "files": len(schedule.alive(0)),
        "expected_total": collection_counts(spec, 0).total,
        "collection_id": schedule.collection_id,
        "root_url": schedule.root_url,
        "site": str(Path(args.out) / "site"),
        "schedule": str(Path(args.out) / "schedule.json"),
    })
    return EXIT_OK


def _behavior(args):
    from .testbed import RepoBehavior

    data = {}
    if args.behavior:
        data = json.loads(Path(args.behavior).read_text())
    for key in ("crawl_interval", "cache_lag", "purge_lag", "availability_prob", "first_crawl"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.seed is not None:
        data["seed"] = args.seed
    try:
        return RepoBehavior(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad behaviour: {exc}") from exc


def cmd_simulate(args) -> int:
    from .testbed import ResourceSchedule, lifecycle_metrics, simulate_cache

    schedule = ResourceSchedule.load(args.schedule)
    behavior = _behavior(args)
    try:
        timeline = simulate_cache(schedule, behavior, args.horizon)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    timeline.save(out / "timeline.json")
    metrics = lifecycle_metrics(timeline)
    fields = ["uid", "url", "t0", "t_r", "t_ca", "t_cr", "ttl_ws", "ttl_c", "tur", "p_r", "class"]
    classes: dict[str, int] = {}
    with open(out / "metrics.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for uid, m in metrics.items():
            t = timeline.resources[uid]
            writer.writerow([uid, t.url, t.t0, t.t_r, t.t_ca, t.t_cr, m.ttl_ws, m.ttl_c, m.tur,
                             None if m.p_r is None else round(m.p_r, 6), m.cls])
            classes[m.cls] = classes.get(m.cls, 0) + 1
    _emit({
        "resources": len(metrics),
        "classes": dict(sorted(classes.items())),
        "crawl_days": timeline.crawl_days,
        "timeline": str(out / "timeline.json"),
        "metrics": str(out / "metrics.csv"),
    })
    return EXIT_OK


def cmd_testbed_fixture(args) -> int:
    from .testbed import CacheTimeline, ResourceSchedule, timeline_to_fixture

    schedule = ResourceSchedule.load(args.schedule)
    timeline = CacheTimeline.load(args.timeline)
    try:
        manifest = timeline_to_fixture(schedule, timeline, args.as_of, args.profile, args.id)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    Path(args.out).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    _emit({"entries": len(manifest["entries"]), "id": manifest["id"], "manifest": str(args.out)})
    return EXIT_OK


def cmd_testbed_snapshot(args) -> int:
    from .testbed import ResourceSchedule, write_snapshot

    schedule = ResourceSchedule.load(args.schedule)
    n = write_snapshot(schedule, args.day, args.out)
    _emit({"files": n, "day": args.day, "out": str(args.out)})
    return EXIT_OK


def cmd_testbed_lose(args) -> int:
    from .testbed import ResourceSchedule, lose_site

    schedule = lose_site(ResourceSchedule.load(args.schedule), args.day)
    schedule.save(args.out)
    _emit({"lost_on_day": args.day, "schedule": str(args.out)})
    return EXIT_OK


# ---- parser ----

def _add_simulate_args(p: argparse.ArgumentParser) -> argparse.ArgumentParser:
    p.add_argument("--schedule", required=True, help="schedule.json written by 'testbed gen'")
    p.add_argument("--behavior", help="JSON file with RepoBehavior fields")
    p.add_argument("--crawl-interval", type=int)
    p.add_argument("--cache-lag", type=int)
    p.add_argument("--purge-lag", type=int)
    p.add_argument("--availability-prob", type=float)
    p.add_argument("--first-crawl", type=int)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--horizon", type=int, default=120)
    p.add_argument("--out", default=".", help="directory for timeline.json and metrics.csv")
    p.set_defaults(func=cmd_simulate)
    return p


def build_parser() -> argparse.ArgumentParser:
    leaves: list[argparse.ArgumentParser] = []
    parser = argparse.ArgumentParser(prog="siterecover", description="Recover lost websites from web repositories.")
    parser.add_argument("--config", help="JSON file whose keys provide defaults for the subcommand's options")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reconstruct", help="recover a website from repositories")
    p.add_argument("url", nargs="?", help="start URL (taken from the checkpoint with --resume)")
    p.add_argument("--fixture", action="append",
                   default=[f for f in (_env("FIXTURES") or "").split(os.pathsep) if f],
                   help="fixture manifest (repeatable)")
    p.add_argument("--archive-url", help="base URL of a CDX-style archive")
    p.add_argument("--out", help="site directory")
    p.add_argument("--most-recent", action="store_true", help="prefer the newest copy over a canonical one")
    p.add_argument("--scope", choices=[m.value for m in ScopeMode], default="host")
    p.add_argument("--max-resources", type=int)
    p.add_argument("--types", default="html,images,other")
    p.add_argument("--image-exts", help="comma-separated extensions treated as images")
    p.add_argument("--rename-converted", action="store_true", help="save HTML conversions with a .html suffix")
    p.add_argument("--relativize", action="store_true", help="rewrite links to recovered files as relative paths")
    p.add_argument("--no-delay", action="store_true", help="virtual clock and no pause between rounds")
    p.add_argument("--seed", type=int, default=int(_env("SEED", "0")))
    p.add_argument("--checkpoint", help=f"checkpoint file (default OUT/{CHECKPOINT_NAME})")
    p.add_argument("--resume", action="store_true")
    p.add_argument("--on-limit", choices=["suspend", "sleep"], default=_env("ON_LIMIT", "suspend"))
    p.add_argument("--limit", action="append", default=[], help="REPO=N or REPO=N/SECONDS query limit")
    p.set_defaults(func=cmd_reconstruct)
    leaves.append(p)

    p = sub.add_parser("eval", help="compare a reconstruction with the original")
    p.add_argument("--original", required=True)
    p.add_argument("--recon", required=True)
    p.add_argument("--report", help="also write the JSON report here")
    p.add_argument("--diagram", help="write an SVG reconstruction diagram here")
    p.add_argument("--ignore-log", action="store_true",
                   help="treat every absent original file as missing, ignoring reconstruction.log")
    p.add_argument("--converter", action="append", default=[], help="MIME=COMMAND text converter (stdin to stdout)")
    p.add_argument("--threshold", type=float, default=0.75)
    p.add_argument("--shingle-size", type=int, default=10)
    p.add_argument("--denominator", choices=["jaccard", "containment-a", "containment-b"], default="jaccard")
    p.set_defaults(func=cmd_eval)
    leaves.append(p)

    tb = sub.add_parser("testbed", help="synthetic collections and cache simulation")
    tsub = tb.add_subparsers(dest="testbed_command", required=True)
    p = tsub.add_parser("gen", help="generate a decaying collection")
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--terminal", type=int, default=90)
    p.add_argument("--image-bin", type=int, default=2)
    p.add_argument("--words-per-page", type=int, default=200)
    p.add_argument("--name", default="mln")
    p.add_argument("--host", default="collection.test")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_testbed_gen)
    leaves.append(p)
    leaves.append(_add_simulate_args(tsub.add_parser("simulate", help="simulate a repository cache")))
    p = tsub.add_parser("fixture", help="turn a simulated cache into a fixture manifest")
    p.add_argument("--schedule", required=True)
    p.add_argument("--timeline", required=True)
    p.add_argument("--as-of", type=int, required=True)
    p.add_argument("--profile", default="google", help="archive, google, msn or yahoo")
    p.add_argument("--id", help="repository id (defaults to the profile name)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_testbed_fixture)
    leaves.append(p)
    p = tsub.add_parser("snapshot", help="write the collection as served on a day")
    p.add_argument("--schedule", required=True)
    p.add_argument("--day", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_testbed_snapshot)
    leaves.append(p)
    p = tsub.add_parser("lose", help="schedule the whole site's loss on a day")
    p.add_argument("--schedule", required=True)
    p.add_argument("--day", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_testbed_lose)
    leaves.append(p)

    leaves.append(_add_simulate_args(sub.add_parser("simulate", help="alias for 'testbed simulate'")))
    parser.leaf_parsers = leaves
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str] | None) -> argparse.Namespace:
    args = parser.parse_args(argv)
    config = args.config or _env("CONFIG")
    if not config:
        return args
    try:
        defaults = json.loads(Path(config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config {config}: {exc}") from exc
    # defaults apply to whichever subcommand runs; explicit flags still win
    defaults = {k.replace("-", "_"): v for k, v in defaults.items()}
    for leaf in parser.leaf_parsers:
        leaf.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except ConfigError as exc:
        print(f"siterecover: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FixtureError, CheckpointError, InvalidURL, FileNotFoundError) as exc:
        print(f"siterecover: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"siterecover: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
