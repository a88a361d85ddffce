"""Crawl, cache and purge dynamics of a repository watching a decaying collection.

Crawls happen on ``first_crawl`` and every ``crawl_interval`` days after it; a
crawl on day ``c`` runs before that day's removals. The first crawl that finds
a resource live caches it at ``c + cache_lag``. The first crawl after the
removal day notices the 404 and the copy is purged ``purge_lag`` days later.
Between those two points the copy answers on each day with probability
``availability_prob``.
"""

from __future__ import annotations

import datetime as dt
import html
import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..repo.fixture import manifest_entry
from ..repo.models import RepositoryDescriptor, StoredForm, Wrapper, profile as repo_profile
from .collection import Resource, ResourceSchedule, render

BASE_DATE = dt.date(2005, 6, 1)
CACHE_BANNER = Wrapper(b'<div class="cache-banner">This is a cached copy of the page.</div>\n',
                       b'\n<div class="cache-footer">end of cached copy</div>')


@dataclass(frozen=True)
class RepoBehavior:
    crawl_interval: int = 7
    cache_lag: int = 0
    purge_lag: int = 0
    availability_prob: float = 1.0
    seed: int = 0
    first_crawl: int | None = None  # defaults to crawl_interval

    def __post_init__(self):
        if self.crawl_interval < 1:
            raise ValueError("crawl_interval must be at least 1")
        if self.cache_lag < 0 or self.purge_lag < 0:
            raise ValueError("lags must be non-negative")
        if not 0.0 <= self.availability_prob <= 1.0:
            raise ValueError("availability_prob must be in [0, 1]")
        if self.first_crawl is not None and self.first_crawl < 0:
            raise ValueError("first_crawl must be non-negative")

    def crawl_days(self, horizon: int) -> list[int]:
        start = self.crawl_interval if self.first_crawl is None else self.first_crawl
        return list(range(start, horizon + 1, self.crawl_interval))

    @classmethod
    def from_dict(cls, data: dict) -> "RepoBehavior":
        return cls(**data)


# Illustrative behaviours loosely shaped after the observed engines: one crawls
# often and purges fast, one is slow to crawl and to purge, one flickers.
EXAMPLE_BEHAVIORS = {
    "google": RepoBehavior(crawl_interval=3, cache_lag=1, purge_lag=2, seed=1),
    "msn": RepoBehavior(crawl_interval=7, cache_lag=2, purge_lag=5, seed=2),
    "yahoo": RepoBehavior(crawl_interval=5, cache_lag=3, purge_lag=12, availability_prob=0.8, seed=3),
    "archive": RepoBehavior(crawl_interval=30, cache_lag=20, purge_lag=365, seed=4),
}


@dataclass(frozen=True)
class ResourceTimeline:
    uid: str
    url: str
    t0: int
    t_r: int | None  # None: never removed
    t_ca: int | None = None
    t_cr: int | None = None
    available: tuple[int, ...] = ()

    def __post_init__(self):
        if self.t_r is not None and self.t0 > self.t_r:
            raise ValueError(f"{self.uid}: t0 after t_r")
        if self.t_ca is not None and self.t0 > self.t_ca:
            raise ValueError(f"{self.uid}: t0 after t_ca")


@dataclass
class CacheTimeline:
    behavior: RepoBehavior
    horizon: int
    crawl_days: list[int]
    resources: dict[str, ResourceTimeline] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "behavior": asdict(self.behavior),
            "horizon": self.horizon,
            "crawl_days": self.crawl_days,
            "resources": [{**asdict(t), "available": list(t.available)} for t in self.resources.values()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CacheTimeline":
        res = {}
        for t in data["resources"]:
            res[t["uid"]] = ResourceTimeline(**{**t, "available": tuple(t["available"])})
        return cls(RepoBehavior.from_dict(data["behavior"]), data["horizon"], list(data["crawl_days"]), res)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "CacheTimeline":
        return cls.from_dict(json.loads(Path(path).read_text()))


def simulate_resource(uid: str, url: str, t_r: int | None, behavior: RepoBehavior, horizon: int,
                      crawls: list[int] | None = None, t0: int = 0) -> ResourceTimeline:
    crawls = behavior.crawl_days(horizon) if crawls is None else crawls
    t_ca = t_cr = None
    for c in crawls:
        if t_ca is None:
            if c >= t0 and (t_r is None or c <= t_r) and c + behavior.cache_lag <= horizon:
                t_ca = c + behavior.cache_lag
        elif t_r is not None and c > t_r:
            if c + behavior.purge_lag <= horizon:
                t_cr = c + behavior.purge_lag
            break
    available: list[int] = []
    if t_ca is not None:
        rng = random.Random(f"avail|{behavior.seed}|{uid}")
        end = horizon + 1 if t_cr is None else min(t_cr, horizon + 1)
        for day in range(t_ca, end):
            if behavior.availability_prob >= 1.0 or rng.random() < behavior.availability_prob:
                available.append(day)
    return ResourceTimeline(uid, url, t0, t_r, t_ca, t_cr, tuple(available))


def simulate_cache(schedule: ResourceSchedule, behavior: RepoBehavior, horizon: int) -> CacheTimeline:
    if horizon < schedule.spec.terminal:
        raise ValueError("horizon must reach the terminal day")
    crawls = behavior.crawl_days(horizon)
    timeline = CacheTimeline(behavior, horizon, crawls)
    for r in schedule.resources:
        timeline.resources[r.uid] = simulate_resource(r.uid, r.url, r.removal_day, behavior, horizon, crawls)
    return timeline


@dataclass(frozen=True)
class LifecycleMetrics:
    ttl_ws: int | None
    ttl_c: int | None
    tur: int | None
    p_r: float | None
    cls: str  # "vulnerable", "recoverable" or "unrecoverable"


def metrics_for(t: ResourceTimeline) -> LifecycleMetrics:
    ttl_ws = None if t.t_r is None else t.t_r - t.t0
    ttl_c = None if t.t_ca is None or t.t_cr is None else t.t_cr - t.t_ca
    tur = None if t.t_cr is None or t.t_r is None else t.t_cr - t.t_r
    p_r = len(t.available) / ttl_c if ttl_c else None
    if t.t_ca is None:
        cls = "vulnerable"
    elif (t.t_r is None or t.t_ca < t.t_r) and (ttl_c is None or ttl_c > 0):
        cls = "recoverable"
    else:
        # cached only from the removal day on, or purged before it was ever served
        cls = "unrecoverable"
    return LifecycleMetrics(ttl_ws, ttl_c, tur, p_r, cls)


def lifecycle_metrics(timeline: CacheTimeline) -> dict[str, LifecycleMetrics]:
    return {uid: metrics_for(t) for uid, t in timeline.resources.items()}


def _cached_version_day(r: Resource, timeline: CacheTimeline, as_of_day: int) -> int:
    # latest crawl that saw the resource live and whose copy is published by as_of_day
    lag = timeline.behavior.cache_lag
    seen = [c for c in timeline.crawl_days
            if c + lag <= as_of_day and (r.removal_day is None or c <= r.removal_day)]
    return seen[-1] if seen else 0


def _as_html(r: Resource, content: bytes) -> bytes:
    text = html.escape(content.decode("utf-8", errors="replace"))
    return f"<html><head><title>{html.escape(r.uid)}</title></head><body><pre>{text}</pre></body></html>\n".encode()


def _thumbnail(content: bytes) -> bytes:
    return content[:16] + b"thumbnail"


def timeline_to_fixture(schedule: ResourceSchedule, timeline: CacheTimeline, as_of_day: int,
                        profile: str | RepositoryDescriptor = "google", repo_id: str | None = None,
                        base_date: dt.date = BASE_DATE) -> dict:
    """Fixture manifest of what the repository serves on *as_of_day*.

    Canonical stores keep exact bytes. Caches keep HTML with a banner, convert
    PDFs to HTML and keep image thumbnails (none at all when the repository
    cannot be queried for images). Cache dates are ``base_date + t_ca``; a bin
    index carries the date and content of the crawl its copy came from.
    """
    if not 0 <= as_of_day <= timeline.horizon:
        raise ValueError(f"as_of_day {as_of_day} outside 0..{timeline.horizon}")
    desc = repo_profile(profile) if isinstance(profile, str) else profile
    repo_id = repo_id or desc.id
    entries = []
    for r in schedule.resources:
        t = timeline.resources.get(r.uid)
        if t is None or as_of_day not in t.available:
            continue
        if r.is_image and not desc.supports_image_query:
            continue
        day = as_of_day
        cache_day = t.t_ca
        if r.kind == "index":
            crawl = _cached_version_day(r, timeline, as_of_day)
            cache_day = crawl + timeline.behavior.cache_lag
            # a crawl runs before its day's removals, so it sees the previous day's site
            day = crawl - 1
        content = render(schedule, r, day)
        date = base_date + dt.timedelta(days=cache_day)
        if desc.is_canonical_store:
            entries.append(manifest_entry(r.url, content, r.mime, StoredForm.CANONICAL, date))
        elif r.is_image:
            entries.append(manifest_entry(r.url, _thumbnail(content), r.mime, StoredForm.THUMBNAIL, date))
        elif r.kind == "pdf":
            entries.append(manifest_entry(r.url, _as_html(r, content), "text/html", StoredForm.HTML_CONVERTED,
                                          date, wrapper=CACHE_BANNER))
        else:
            entries.append(manifest_entry(r.url, content, r.mime, StoredForm.CANONICAL, date,
                                          wrapper=CACHE_BANNER))
    return {"id": repo_id, "descriptor": desc.to_dict() | {"id": repo_id}, "entries": entries}
