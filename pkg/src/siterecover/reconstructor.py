"""Frontier-driven website recovery from several web repositories.

Each URL is looked up once. Images go to the archive first and then to the
image-capable caches one at a time until one answers. Other resources go to the
archive first; a non-HTML archive hit is kept as-is (the caches only hold HTML
conversions of such files), otherwise every cache is asked and the most recently
dated copy wins. Recovered HTML is stripped of repository markup and scanned for
further in-scope links until the frontier is empty.
"""

from __future__ import annotations

import base64
import datetime as dt
import enum
import hashlib
import json
import logging
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .budget import Clock, Pause, QueryBudget, SystemClock, VirtualClock
from .extractor import (
    DEFAULT_IMAGE_EXTENSIONS,
    ResourceClass,
    ScopeMode,
    ScopeRule,
    canonicalize,
    classify_url,
    extract_links,
    in_scope,
    looks_like_html,
    type_group,
)
from .repo.models import (
    Repository,
    StoredForm,
    StoredResource,
    TransportError,
    max_lookup_cost,
    strip_repository_markup,
)
from .store import LogEntry, SiteStore, StoreError

log = logging.getLogger(__name__)

ALL_TYPES = frozenset({"html", "images", "other"})
CHECKPOINT_VERSION = 1


class VersionPreference(enum.Enum):
    CANONICAL_FIRST = "canonical-first"
    MOST_RECENT = "most-recent"


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class RecoveryPolicy:
    scope: ScopeRule
    version_preference: VersionPreference = VersionPreference.CANONICAL_FIRST
    repo_order_nonimage: tuple[str, ...] | None = None
    repo_order_image: tuple[str, ...] | None = None
    max_resources: int | None = None
    allowed_types: frozenset[str] = ALL_TYPES
    image_extensions: frozenset[str] = DEFAULT_IMAGE_EXTENSIONS
    on_limit: str = "sleep"  # or "suspend"
    transport_retries: int = 2

    def __post_init__(self):
        if self.max_resources is not None and self.max_resources < 1:
            raise ValueError("max_resources must be positive")
        if not self.allowed_types <= ALL_TYPES:
            raise ValueError(f"unknown types {sorted(self.allowed_types - ALL_TYPES)}")
        if self.on_limit not in ("sleep", "suspend"):
            raise ValueError("on_limit must be 'sleep' or 'suspend'")

    @classmethod
    def for_start(cls, start_url: str, scope: ScopeMode = ScopeMode.HOST_ONLY, **kw) -> "RecoveryPolicy":
        return cls(scope=ScopeRule.for_start(start_url, scope), **kw)

    def to_dict(self) -> dict:
        return {
            "scope": [self.scope.mode.value, self.scope.root],
            "version_preference": self.version_preference.value,
            "repo_order_nonimage": list(self.repo_order_nonimage) if self.repo_order_nonimage else None,
            "repo_order_image": list(self.repo_order_image) if self.repo_order_image else None,
            "max_resources": self.max_resources,
            "allowed_types": sorted(self.allowed_types),
            "image_extensions": sorted(self.image_extensions),
        }

    def digest(self) -> str:
        # on_limit / retries do not change what a run recovers, so they stay out
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


@dataclass(frozen=True)
class RecoveredResource:
    url: str
    content: bytes
    mime: str
    source_repo: str
    source_date: dt.date | None
    form: StoredForm

    def __post_init__(self):
        if self.form is StoredForm.INDEXED_ONLY:
            raise ValueError("indexed-only holdings carry no content")

    def to_dict(self) -> dict:
        return {
            "url": self.url,
            "content": base64.b64encode(self.content).decode("ascii"),
            "mime": self.mime,
            "source_repo": self.source_repo,
            "source_date": self.source_date.isoformat() if self.source_date else None,
            "form": self.form.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RecoveredResource":
        return cls(
            url=d["url"],
            content=base64.b64decode(d["content"]),
            mime=d["mime"],
            source_repo=d["source_repo"],
            source_date=dt.date.fromisoformat(d["source_date"]) if d["source_date"] else None,
            form=StoredForm(d["form"]),
        )


@dataclass
class ReconstructionResult:
    recovered: dict[str, RecoveredResource] = field(default_factory=dict)
    missing: set[str] = field(default_factory=set)
    query_ledger: dict[str, int] = field(default_factory=dict)
    discovery_edges: list[tuple[str, str]] = field(default_factory=list)
    status: str = "complete"  # complete | suspended | partial
    paused_until: float | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "recovered": [self.recovered[u].to_dict() for u in sorted(self.recovered)],
            "missing": sorted(self.missing),
            "query_ledger": dict(sorted(self.query_ledger.items())),
            "discovery_edges": [list(e) for e in self.discovery_edges],
        }

    def to_json(self) -> bytes:
        """Canonical serialization of the outcome (status fields excluded)."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()

    @classmethod
    def from_dict(cls, d: dict) -> "ReconstructionResult":
        recovered = {r["url"]: RecoveredResource.from_dict(r) for r in d["recovered"]}
        return cls(
            recovered=recovered,
            missing=set(d["missing"]),
            query_ledger=dict(d["query_ledger"]),
            discovery_edges=[tuple(e) for e in d["discovery_edges"]],
        )


def default_orders(repos: Sequence[Repository]) -> tuple[tuple[str, ...], tuple[str, ...]]:
    canonical = [r.descriptor.id for r in repos if r.descriptor.is_canonical_store]
    others = [r.descriptor.id for r in repos if not r.descriptor.is_canonical_store]
    image_others = [r.descriptor.id for r in repos
                    if not r.descriptor.is_canonical_store and r.descriptor.supports_image_query]
    return tuple(canonical + others), tuple(
        [i for i in canonical if _by_id(repos)[i].descriptor.supports_image_query] + image_others
    )


def _by_id(repos: Iterable[Repository]) -> dict[str, Repository]:
    return {r.descriptor.id: r for r in repos}


def _recovered(stored: StoredResource, repo_id: str) -> RecoveredResource:
    if looks_like_html(stored.url, stored.mime):
        stored = strip_repository_markup(stored)
    return RecoveredResource(
        url=stored.url,
        content=stored.content,
        mime=stored.mime,
        source_repo=repo_id,
        source_date=stored.cache_date,
        form=stored.form,
    )


def _freshest(candidates: list[tuple[int, str, StoredResource]]) -> tuple[str, StoredResource]:
    # dated beats undated, newer beats older, then fixed repository order
    best = min(
        candidates,
        key=lambda c: (c[2].cache_date is None, -(c[2].cache_date.toordinal() if c[2].cache_date else 0), c[0]),
    )
    return best[1], best[2]


def recover_resource(url: str, repos: Sequence[Repository] | Mapping[str, Repository], policy: RecoveryPolicy,
                     query: Callable | None = None) -> RecoveredResource | None:
    """Look *url* up across *repos* following *policy*; None means missing everywhere.

    *query(repo, kind, url)* performs one lookup (kind is ``"image"`` or
    ``"nonimage"``) and returns a RepoResult; the default calls the repository
    directly. The reconstructor passes a wrapper that books queries to the budget.
    """
    repo_list = list(repos.values()) if isinstance(repos, Mapping) else list(repos)
    by_id = _by_id(repo_list)
    order_non, order_img = default_orders(repo_list)
    order_non = policy.repo_order_nonimage or order_non
    order_img = policy.repo_order_image or order_img
    if query is None:
        def query(repo, kind, u):
            return repo.query_image(u) if kind == "image" else repo.query_nonimage(u)

    if classify_url(url, policy.image_extensions) is ResourceClass.IMAGE:
        for rid in order_img:
            repo = by_id[rid]
            if not repo.descriptor.supports_image_query:
                continue
            res = query(repo, "image", url)
            if res.found:
                return _recovered(res.resource, rid)
        return None

    canonical_ids = [rid for rid in order_non if by_id[rid].descriptor.is_canonical_store]
    cache_ids = [rid for rid in order_non if not by_id[rid].descriptor.is_canonical_store]
    candidates: list[tuple[int, str, StoredResource]] = []
    for rid in canonical_ids:
        res = query(by_id[rid], "nonimage", url)
        if res.found:
            if (policy.version_preference is VersionPreference.CANONICAL_FIRST
                    and not looks_like_html(url, res.resource.mime)):
                return _recovered(res.resource, rid)
            candidates.append((order_non.index(rid), rid, res.resource))
            break
    for rid in cache_ids:
        res = query(by_id[rid], "nonimage", url)
        if res.found:
            candidates.append((order_non.index(rid), rid, res.resource))
    if not candidates:
        return None
    rid, stored = _freshest(candidates)
    return _recovered(stored, rid)


class Reconstructor:
    """Single-owner handle for one reconstruction run."""

    def __init__(self, start_url: str, repos: Sequence[Repository], policy: RecoveryPolicy | None = None,
                 budget: QueryBudget | None = None, store: SiteStore | None = None,
                 clock: Clock | None = None, seed: int = 0):
        self.start_url = canonicalize(start_url)
        self.repos = list(repos)
        if not self.repos:
            raise ValueError("at least one repository is required")
        self.by_id = _by_id(self.repos)
        if len(self.by_id) != len(self.repos):
            raise ValueError("repository ids must be unique")
        self.policy = policy or RecoveryPolicy.for_start(self.start_url)
        for order in (self.policy.repo_order_nonimage, self.policy.repo_order_image):
            unknown = set(order or ()) - set(self.by_id)
            if unknown:
                raise ValueError(f"policy names unregistered repositories: {sorted(unknown)}")
        self.budget = budget or QueryBudget()
        for rid in self.by_id:
            if rid not in self.budget.policies:
                self.budget.register(rid)
        self.store = store
        self.clock = clock or SystemClock()
        self.rng = random.Random(seed)
        self.frontier: deque[str] = deque([self.start_url])
        self.seen: set[str] = {self.start_url}
        self.visited: list[str] = []
        self.result = ReconstructionResult()
        order_non, order_img = default_orders(self.repos)
        self._order_non = self.policy.repo_order_nonimage or order_non
        self._order_img = self.policy.repo_order_image or order_img
        for rid, repo in self.by_id.items():
            need = max(max_lookup_cost(repo, False),
                       max_lookup_cost(repo, True) if repo.descriptor.supports_image_query else 0)
            if self.budget.policy(rid).limit < need:
                raise ValueError(f"{rid}: query limit {self.budget.policy(rid).limit} is below the "
                                 f"{need} queries a single lookup may need")

    # ---- per-round planning and budget ----

    def _plan(self, url: str) -> list[tuple[str, int]]:
        """Repositories a lookup of *url* may touch, with the most each could spend."""
        if classify_url(url, self.policy.image_extensions) is ResourceClass.IMAGE:
            return [(rid, max_lookup_cost(self.by_id[rid], True)) for rid in self._order_img
                    if self.by_id[rid].descriptor.supports_image_query]
        return [(rid, max_lookup_cost(self.by_id[rid], False)) for rid in self._order_non]

    def _gate(self, plan: list[tuple[str, int]]) -> Pause | None:
        now = self.clock.now()
        pauses = [p for rid, cost in plan if (p := self.budget.check(rid, now, cost)) is not None]
        return max(pauses, key=lambda p: p.until) if pauses else None

    def _query(self, repo: Repository, kind: str, url: str):
        attempts = 0
        while True:
            try:
                res = repo.query_image(url) if kind == "image" else repo.query_nonimage(url)
            except TransportError:
                attempts += 1
                self._book(repo.descriptor.id, 1)
                if attempts > self.policy.transport_retries:
                    raise
                log.warning("transport error querying %s for %s; retrying", repo.descriptor.id, url)
                continue
            self._book(repo.descriptor.id, res.queries_spent)
            return res

    def _book(self, repo_id: str, n: int) -> None:
        self.budget.record(repo_id, n, self.clock.now())
        self.result.query_ledger[repo_id] = self.result.query_ledger.get(repo_id, 0) + n

    # ---- main loop ----

    def _enqueue_links(self, res: RecoveredResource) -> None:
        for link in extract_links(res.content, res.url):
            if not in_scope(link, self.policy.scope):
                continue
            if type_group(link, self.policy.image_extensions) not in self.policy.allowed_types:
                continue
            self.result.discovery_edges.append((res.url, link))
            if link not in self.seen:
                self.seen.add(link)
                self.frontier.append(link)

    def _limit_reached(self) -> bool:
        return self.policy.max_resources is not None and len(self.result.recovered) >= self.policy.max_resources

    def run(self) -> ReconstructionResult:
        result = self.result
        result.status, result.paused_until, result.error = "complete", None, None
        while self.frontier and not self._limit_reached():
            url = self.frontier[0]
            plan = self._plan(url)
            pause = self._gate(plan)
            if pause is not None:
                if self.policy.on_limit == "suspend":
                    result.status, result.paused_until = "suspended", pause.until
                    log.info("query limit reached; suspended until %s", pause.until)
                    return result
                log.info("query limit reached; sleeping until %s", pause.until)
                self.clock.sleep(pause.until - self.clock.now())
                continue
            try:
                recovered = recover_resource(url, self.repos, self.policy, query=self._query)
            except TransportError as exc:
                result.status, result.error = "partial", str(exc)
                return result
            try:
                if recovered is not None:
                    if self.store is not None:
                        self.store.save(recovered)
                        self.store.append_log(LogEntry.recovered(
                            url, recovered.mime, recovered.source_repo, recovered.source_date))
                else:
                    if self.store is not None:
                        self.store.append_log(LogEntry.missing(url))
            except StoreError as exc:
                result.status, result.error = "partial", str(exc)
                return result
            self.frontier.popleft()
            self.visited.append(url)
            if recovered is not None:
                result.recovered[url] = recovered
                if looks_like_html(url, recovered.mime):
                    self._enqueue_links(recovered)
            else:
                result.missing.add(url)
            self.clock.sleep(self.budget.inter_round_delay(self.rng, [rid for rid, _ in plan]))
        if self.store is not None and self.store.relativize_links:
            try:
                self.store.relativize()
            except OSError as exc:
                result.status, result.error = "partial", str(exc)
        return result

    # ---- checkpointing ----

    def _fingerprints(self) -> dict[str, str]:
        return {rid: repo.fingerprint() for rid, repo in sorted(self.by_id.items())}

    def checkpoint(self) -> dict:
        return {
            "version": CHECKPOINT_VERSION,
            "start_url": self.start_url,
            "frontier": list(self.frontier),
            "visited": list(self.visited),
            "seen": sorted(self.seen),
            "ledger": self.budget.to_dict(),
            "policy_hash": self.policy.digest(),
            "repositories": self._fingerprints(),
            "clock": self.clock.now(),
            "paused_until": self.result.paused_until,
            "rng_state": _rng_state_to_json(self.rng.getstate()),
            "result": self.result.to_dict(),
        }

    def write_checkpoint(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.checkpoint(), indent=1))

    @classmethod
    def from_checkpoint(cls, checkpoint: dict | str | Path | None, repos: Sequence[Repository],
                        policy: RecoveryPolicy | None = None, budget: QueryBudget | None = None,
                        store: SiteStore | None = None, clock: Clock | None = None) -> "Reconstructor":
        if checkpoint is None:
            raise CheckpointError("no checkpoint to resume from")
        if not isinstance(checkpoint, dict):
            path = Path(checkpoint)
            if not path.exists():
                raise CheckpointError(f"checkpoint {path} does not exist")
            checkpoint = json.loads(path.read_text())
        if checkpoint.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {checkpoint.get('version')!r}")
        self = cls(checkpoint["start_url"], repos, policy, budget, store, clock)
        if self.policy.digest() != checkpoint["policy_hash"]:
            raise CheckpointError("recovery policy differs from the one that wrote the checkpoint")
        mine = self._fingerprints()
        theirs = checkpoint["repositories"]
        if mine != theirs:
            changed = sorted(set(mine) ^ set(theirs) | {k for k in mine if k in theirs and mine[k] != theirs[k]})
            raise CheckpointError(f"repositories differ from the checkpointed run: {changed}")
        self.frontier = deque(checkpoint["frontier"])
        self.visited = list(checkpoint["visited"])
        self.seen = set(checkpoint["seen"])
        self.budget.load(checkpoint["ledger"])
        for rid in self.by_id:
            if rid not in self.budget.policies:
                self.budget.register(rid)
        self.rng.setstate(_rng_state_from_json(checkpoint["rng_state"]))
        self.result = ReconstructionResult.from_dict(checkpoint["result"])
        if isinstance(self.clock, VirtualClock):
            self.clock.advance_to(checkpoint["clock"])
        return self


def _rng_state_to_json(state) -> list:
    version, internal, gauss = state
    return [version, list(internal), gauss]


def _rng_state_from_json(data) -> tuple:
    version, internal, gauss = data
    return (version, tuple(internal), gauss)


def reconstruct(start_url: str, repos: Sequence[Repository], policy: RecoveryPolicy | None = None,
                budget: QueryBudget | None = None, store: SiteStore | None = None,
                clock: Clock | None = None, seed: int = 0) -> ReconstructionResult:
    return Reconstructor(start_url, repos, policy, budget, store, clock, seed).run()


def resume(checkpoint, repos: Sequence[Repository], policy: RecoveryPolicy | None = None,
           budget: QueryBudget | None = None, store: SiteStore | None = None,
           clock: Clock | None = None) -> ReconstructionResult:
    return Reconstructor.from_checkpoint(checkpoint, repos, policy, budget, store, clock).run()
