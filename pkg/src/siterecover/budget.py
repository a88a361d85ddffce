"""Per-repository query accounting and respect-policy enforcement.

A repository is *respected* when no more than ``limit`` queries are issued in
any ``period`` and rounds are spaced by a random delay in
``[delay_min, delay_max]`` seconds.
"""

from __future__ import annotations

import bisect
import random
import threading
import time
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Protocol

from .repo.models import PROFILES, RepositoryDescriptor

DAY = 24 * 3600.0


class Clock(Protocol):
    def now(self) -> float: ...

    def sleep(self, seconds: float) -> None: ...


class SystemClock:
    def now(self) -> float:
        return time.time()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class VirtualClock:
    """Sleeping only advances the reading; used for tests and --no-delay runs."""

    def __init__(self, start: float = 0.0):
        self._now = float(start)

    def now(self) -> float:
        return self._now

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            self._now += seconds

    def advance_to(self, t: float) -> None:
        self._now = max(self._now, t)


@dataclass(frozen=True)
class RespectPolicy:
    limit: int
    period: float = DAY
    delay_min: float = 1.0
    delay_max: float = 4.0

    def __post_init__(self):
        if self.limit < 1:
            raise ValueError("limit must be >= 1")
        if self.period <= 0:
            raise ValueError("period must be positive")
        if not 0 <= self.delay_min <= self.delay_max:
            raise ValueError("need 0 <= delay_min <= delay_max")


DEFAULT_POLICIES = {
    "archive": RespectPolicy(1000),
    "google": RespectPolicy(1000),
    "yahoo": RespectPolicy(4000),
    "msn": RespectPolicy(10000),
}


@dataclass(frozen=True)
class Pause:
    until: float


class UnknownRepository(KeyError):
    pass


class QueryBudget:
    """Ledger of (timestamp, queries) per repository with window-limit checks.

    ``window`` is ``"sliding"`` (count over the trailing period) or ``"fixed"``
    (the period starts at the first query after the previous window closed).
    """

    def __init__(self, policies: dict[str, RespectPolicy] | None = None, window: str = "sliding"):
        if window not in ("sliding", "fixed"):
            raise ValueError(f"unknown window mode {window!r}")
        self.window = window
        self.policies: dict[str, RespectPolicy] = dict(policies or {})
        self._ledger: dict[str, list[tuple[float, int]]] = defaultdict(list)
        self._lock = threading.Lock()

    def register(self, repo_id: str, policy: RespectPolicy | None = None) -> None:
        if policy is None:
            policy = DEFAULT_POLICIES.get(repo_id, RespectPolicy(1000))
        self.policies[repo_id] = policy

    def policy(self, repo_id: str) -> RespectPolicy:
        try:
            return self.policies[repo_id]
        except KeyError:
            raise UnknownRepository(repo_id) from None

    def record(self, repo_id: str, n: int, now: float) -> None:
        if n < 1:
            raise ValueError("n must be >= 1")
        self.policy(repo_id)
        with self._lock:
            entries = self._ledger[repo_id]
            if entries and now < entries[-1][0]:
                raise ValueError(f"{repo_id}: ledger timestamps must not decrease")
            entries.append((now, n))

    def _window_start(self, entries: list[tuple[float, int]], policy: RespectPolicy, now: float) -> int:
        if self.window == "sliding":
            # an entry leaves the window once t + period <= now (same expression as Pause.until)
            return bisect.bisect_right(entries, now, key=lambda e: e[0] + policy.period)
        start = 0
        opened = None
        for i, (t, _) in enumerate(entries):
            if opened is None or t >= opened + policy.period:
                opened, start = t, i
        if opened is not None and now >= opened + policy.period:
            return len(entries)
        return start

    def window_count(self, repo_id: str, now: float) -> int:
        policy = self.policy(repo_id)
        with self._lock:
            entries = self._ledger[repo_id]
            return sum(n for _, n in entries[self._window_start(entries, policy, now):])

    def check(self, repo_id: str, now: float, n: int = 1) -> Pause | None:
        """None to proceed; Pause if issuing *n* more queries would exceed the limit."""
        policy = self.policy(repo_id)
        if n > policy.limit:
            raise ValueError(f"{repo_id}: {n} queries can never fit a limit of {policy.limit}")
        with self._lock:
            entries = self._ledger[repo_id]
            window = entries[self._window_start(entries, policy, now):]
            count = sum(q for _, q in window)
            if count + n <= policy.limit:
                return None
            if self.window == "fixed":
                return Pause(window[0][0] + policy.period)
            excess = count + n - policy.limit
            freed = 0
            for t, q in window:
                freed += q
                if freed >= excess:
                    return Pause(t + policy.period)
            return Pause(window[-1][0] + policy.period)  # not reached while n <= limit

    def inter_round_delay(self, rng: random.Random, repo_ids: Iterable[str] | None = None) -> float:
        ids = list(repo_ids) if repo_ids is not None else list(self.policies)
        if not ids:
            return 0.0
        lo = max(self.policy(r).delay_min for r in ids)
        hi = max(self.policy(r).delay_max for r in ids)
        if hi == 0:
            return 0.0
        return rng.uniform(lo, hi)

    def total(self, repo_id: str) -> int:
        with self._lock:
            return sum(n for _, n in self._ledger.get(repo_id, ()))

    def totals(self) -> dict[str, int]:
        with self._lock:
            return {r: sum(n for _, n in e) for r, e in sorted(self._ledger.items()) if e}

    def entries(self, repo_id: str) -> list[tuple[float, int]]:
        with self._lock:
            return list(self._ledger.get(repo_id, ()))

    def to_dict(self) -> dict:
        with self._lock:
            return {r: [[t, n] for t, n in e] for r, e in sorted(self._ledger.items())}

    def load(self, data: dict) -> None:
        with self._lock:
            self._ledger.clear()
            for repo_id, rows in data.items():
                self._ledger[repo_id] = [(float(t), int(n)) for t, n in rows]


def max_window_count(entries: list[tuple[float, int]], period: float) -> int:
    """Largest number of queries inside any half-open window of length *period*."""
    best = 0
    times = [t for t, _ in entries]
    for i, (t, _) in enumerate(entries):
        j = bisect.bisect_left(times, t + period)
        best = max(best, sum(n for _, n in entries[i:j]))
    return best


# ---- query cost bounds -----------------------------------------------------

@dataclass(frozen=True)
class CostProfile:
    """Per-resource query bounds (min, max) for non-image and image lookups."""

    repos: tuple[RepositoryDescriptor, ...]
    nonimage: tuple[int, int]
    image: tuple[int, int]

    @classmethod
    def from_descriptors(cls, repos: Iterable[RepositoryDescriptor]) -> "CostProfile":
        repos = tuple(repos)
        canonical = [r for r in repos if r.is_canonical_store]
        others = [r for r in repos if not r.is_canonical_store]
        if canonical:
            # non-HTML found at the first archive: nothing else is asked
            nonimage_min = canonical[0].nonimage_query_cost
        else:
            nonimage_min = sum(r.nonimage_query_cost for r in others)
        nonimage_max = sum(r.nonimage_query_cost for r in repos)
        image_repos = [r for r in canonical + others if r.supports_image_query]
        image_min = image_repos[0].image_query_cost if image_repos else 0
        image_max = sum(r.image_query_cost for r in image_repos)
        return cls(repos, (nonimage_min, nonimage_max), (image_min, image_max))


def classic_profile() -> CostProfile:
    """The four classic repositories with their usual per-resource bounds.

    Non-image lookups cost between 2 (archive hit) and 7 (all four asked).
    Image lookups are usually quoted as 2..4, which is tighter than the 6 obtained by
    summing the per-repository image costs; :meth:`CostProfile.from_descriptors`
    gives the summed figure.
    """
    repos = tuple(PROFILES[k] for k in ("archive", "google", "msn", "yahoo"))
    return CostProfile(repos, nonimage=(2, 7), image=(2, 4))


def cost_bounds(r: int, i: int, repos: CostProfile | Iterable[RepositoryDescriptor]) -> tuple[int, int]:
    """Fewest and most queries needed to recover *r* non-image and *i* image resources."""
    if r < 0 or i < 0:
        raise ValueError("resource counts must be non-negative")
    prof = repos if isinstance(repos, CostProfile) else CostProfile.from_descriptors(repos)
    return (
        r * prof.nonimage[0] + i * prof.image[0],
        r * prof.nonimage[1] + i * prof.image[1],
    )
