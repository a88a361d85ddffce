"""Builders shared by the test modules: tiny sites, fixture repositories, runs."""

from __future__ import annotations

import datetime as dt
from pathlib import Path

from siterecover.budget import DAY, QueryBudget, RespectPolicy, VirtualClock
from siterecover.reconstructor import Reconstructor, RecoveryPolicy
from siterecover.repo import StoredForm, Wrapper, manifest_entry, repository_from_manifest
from siterecover.store import SiteStore, url_to_path

BANNER = Wrapper(b"<!-- cached copy header -->\n", b"\n<!-- cached copy footer -->")


def page(title: str, links=(), imgs=(), body: str = "") -> bytes:
    parts = [f"<html><head><title>{title}</title></head><body><h1>{title}</h1>"]
    parts += [f'<a href="{h}">{h}</a>' for h in links]
    parts += [f'<img src="{s}">' for s in imgs]
    parts.append(f"<p>{body}</p></body></html>\n")
    return "\n".join(parts).encode()


def write_site(root: Path, files: dict[str, bytes]) -> Path:
    """Write ``{url: bytes}`` in the store layout."""
    root.mkdir(parents=True, exist_ok=True)
    for url, content in files.items():
        path = root / url_to_path(url)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(content)
    return root


def fixture(profile: str, items, repo_id: str | None = None):
    """*items*: tuples ``(url, content, mime[, form[, date[, retrievable[, wrapper]]]])``."""
    return repository_from_manifest(manifest(profile, items, repo_id))


def manifest(profile: str, items, repo_id: str | None = None) -> dict:
    entries = []
    for item in items:
        url, content, mime, *rest = item
        form = rest[0] if len(rest) > 0 else StoredForm.CANONICAL
        date = rest[1] if len(rest) > 1 else None
        retrievable = rest[2] if len(rest) > 2 else True
        wrapper = rest[3] if len(rest) > 3 else None
        entries.append(manifest_entry(url, content, mime, form, date, retrievable, wrapper))
    return {"id": repo_id or profile, "descriptor": profile, "entries": entries}


def quiet_budget(repos, limit: int = 100_000, period: float = DAY) -> QueryBudget:
    return QueryBudget({r.descriptor.id: RespectPolicy(limit, period, 0.0, 0.0) for r in repos})


def run(start: str, repos, out: Path | None = None, budget=None, clock=None, seed: int = 0, store_kw=None,
        **policy_kw):
    policy = RecoveryPolicy.for_start(start, **policy_kw)
    store = SiteStore(out, **(store_kw or {})) if out is not None else None
    rec = Reconstructor(start, repos, policy, budget or quiet_budget(repos), store,
                        clock or VirtualClock(), seed)
    return rec, rec.run()


# ---- the six-page example site: A links B, C, E; B links D; C links F ----

S = "http://s/"
A, B, C, D, E, F, G = (S, S + "b.html", S + "c.html", S + "d.html", S + "e.html", S + "f.html", S + "g.html")


def example_original() -> dict[str, bytes]:
    return {
        A: page("A", ["b.html", "c.html", "e.html"]),
        B: page("B", ["d.html"], body="current b"),
        C: page("C", ["f.html"], body="current c"),
        D: page("D"),
        E: page("E"),
        F: page("F"),
    }


def example_repos():
    """Repositories holding A, E identical, older B (linking G instead of D) and C, plus G; F nowhere."""
    return [repository_from_manifest(m) for m in example_manifests()]


def example_manifests() -> list[dict]:
    orig = example_original()
    day = dt.date(2005, 8, 1)
    google = manifest("google", [
        (A, orig[A], "text/html", StoredForm.CANONICAL, day, True, BANNER),
        (B, page("B", ["g.html"], body="older b"), "text/html", StoredForm.CANONICAL, day, True, BANNER),
        (C, page("C", ["f.html"], body="older c"), "text/html", StoredForm.CANONICAL, day, True, BANNER),
        (D, orig[D], "text/html", StoredForm.CANONICAL, day, True, BANNER),
        (G, page("G"), "text/html", StoredForm.CANONICAL, day, True, BANNER),
    ])
    archive = manifest("archive", [(E, orig[E], "text/html", StoredForm.CANONICAL, dt.date(2005, 7, 1))])
    return [archive, google]
