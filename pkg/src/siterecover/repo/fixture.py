"""Deterministic, manifest-backed repository used for offline reconstruction.

Manifest format (JSON)::

    {"id": "google",
     "descriptor": "google" | {...RepositoryDescriptor fields...},
     "entries": [{"url": "http://s/a.html",
                  "file": "a.html" | "inline_base64": "...",
                  "mime": "text/html",
                  "form": "canonical",
                  "cache_date": "2005-08-10",
                  "retrievable": true,
                  "wrap_header": "<!--hdr-->",
                  "wrap_footer": "<!--ftr-->"}]}

``file`` paths are relative to the manifest's directory.
"""

from __future__ import annotations

import base64
import datetime as dt
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from ..extractor import InvalidURL, canonicalize
from .models import (
    CacheDatePolicy,
    FixtureError,
    RepoResult,
    RepositoryDescriptor,
    StoredForm,
    StoredResource,
    UnsupportedQueryError,
    Wrapper,
    is_html_mime,
    profile,
)


@dataclass(frozen=True)
class FixtureEntry:
    url: str
    content: bytes
    mime: str
    form: StoredForm
    cache_date: dt.date | None = None
    retrievable: bool = True
    wrapper: Wrapper | None = None


class FixtureRepository:
    """Immutable after construction; lookups never mutate state."""

    def __init__(self, descriptor: RepositoryDescriptor, entries: Mapping[str, FixtureEntry] | list[FixtureEntry]):
        self.descriptor = descriptor
        if isinstance(entries, Mapping):
            entries = list(entries.values())
        held: dict[str, FixtureEntry] = {}
        for entry in entries:
            url = canonicalize(entry.url)
            if url in held:
                raise FixtureError(f"{descriptor.id}: duplicate URL {url}")
            held[url] = entry
        self._entries = held
        self._has_dead_links = any(not e.retrievable or e.form is StoredForm.INDEXED_ONLY for e in held.values())

    @property
    def id(self) -> str:
        return self.descriptor.id

    @property
    def holdings_count(self) -> int:
        return len(self._entries)

    def holds(self, url: str) -> bool:
        entry = self._entries.get(canonicalize(url))
        return entry is not None and entry.retrievable and entry.form is not StoredForm.INDEXED_ONLY

    def entry(self, url: str) -> FixtureEntry | None:
        return self._entries.get(canonicalize(url))

    def max_lookup_cost(self, image: bool) -> int:
        """Most queries one lookup can spend (the nominal cost, plus one for a dead listing)."""
        cost = self.descriptor.image_query_cost if image else self.descriptor.nonimage_query_cost
        return (cost or 0) + self._has_dead_links

    def query_nonimage(self, url: str) -> RepoResult:
        return self._lookup(url, self.descriptor.nonimage_query_cost)

    def query_image(self, url: str) -> RepoResult:
        if not self.descriptor.supports_image_query:
            raise UnsupportedQueryError(f"{self.id} has no image lookup interface")
        return self._lookup(url, self.descriptor.image_query_cost)

    def _lookup(self, url: str, cost: int) -> RepoResult:
        entry = self._entries.get(canonicalize(url))
        if entry is None:
            return RepoResult(None, cost)
        if not entry.retrievable or entry.form is StoredForm.INDEXED_ONLY:
            # the listing points at a copy that cannot be fetched; following it costs one more request
            return RepoResult(None, cost + 1)
        content = entry.content
        if entry.wrapper is not None:
            content = entry.wrapper.header + content + entry.wrapper.footer
        return RepoResult(
            StoredResource(
                url=canonicalize(url),
                content=content,
                mime=entry.mime,
                form=entry.form,
                cache_date=self._visible_date(entry),
                wrapper=entry.wrapper,
            ),
            cost,
        )

    def _visible_date(self, entry: FixtureEntry) -> dt.date | None:
        policy = self.descriptor.provides_cache_date
        if policy is CacheDatePolicy.NEVER:
            return None
        if policy is CacheDatePolicy.HTML_ONLY and not is_html_mime(entry.mime):
            return None
        return entry.cache_date

    def fingerprint(self) -> str:
        h = hashlib.sha256(json.dumps(self.descriptor.to_dict(), sort_keys=True).encode())
        for url in sorted(self._entries):
            e = self._entries[url]
            h.update(
                json.dumps(
                    [url, hashlib.sha256(e.content).hexdigest(), e.mime, e.form.value,
                     e.cache_date.isoformat() if e.cache_date else None, e.retrievable,
                     [e.wrapper.header.hex(), e.wrapper.footer.hex()] if e.wrapper else None]
                ).encode()
            )
        return h.hexdigest()


def _parse_entry(raw: dict, index: int, base_dir: Path) -> FixtureEntry:
    where = f"entry {index} ({raw.get('url', '<no url>')})"
    try:
        url = canonicalize(raw["url"])
        if "file" in raw:
            content = (base_dir / raw["file"]).read_bytes()
        elif "inline_base64" in raw:
            content = base64.b64decode(raw["inline_base64"], validate=True)
        else:
            raise FixtureError(f"{where}: needs 'file' or 'inline_base64'")
        cache_date = raw.get("cache_date")
        wrapper = None
        if raw.get("wrap_header") or raw.get("wrap_footer"):
            wrapper = Wrapper(raw.get("wrap_header", "").encode(), raw.get("wrap_footer", "").encode())
        return FixtureEntry(
            url=url,
            content=content,
            mime=raw["mime"],
            form=StoredForm(raw.get("form", "canonical")),
            cache_date=dt.date.fromisoformat(cache_date) if cache_date else None,
            retrievable=bool(raw.get("retrievable", True)),
            wrapper=wrapper,
        )
    except FixtureError:
        raise
    except (KeyError, ValueError, TypeError, OSError, InvalidURL) as exc:
        raise FixtureError(f"{where}: {exc}") from exc


def repository_from_manifest(data: dict, base_dir: Path | str = ".") -> FixtureRepository:
    base_dir = Path(base_dir)
    try:
        desc = data["descriptor"]
        if isinstance(desc, str):
            descriptor = profile(desc, data.get("id"))
        else:
            descriptor = RepositoryDescriptor.from_dict({"id": data.get("id"), **desc})
    except (KeyError, ValueError, TypeError) as exc:
        raise FixtureError(f"bad descriptor: {exc}") from exc
    entries = [_parse_entry(raw, i, base_dir) for i, raw in enumerate(data.get("entries", []))]
    seen: set[str] = set()
    for i, entry in enumerate(entries):
        if entry.url in seen:
            raise FixtureError(f"entry {i} ({entry.url}): duplicate URL")
        seen.add(entry.url)
    return FixtureRepository(descriptor, entries)


def load_fixture(manifest_path: str | Path) -> FixtureRepository:
    path = Path(manifest_path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FixtureError(f"{path}: {exc}") from exc
    return repository_from_manifest(data, path.parent)


def manifest_entry(url: str, content: bytes, mime: str, form: StoredForm = StoredForm.CANONICAL,
                   cache_date: dt.date | None = None, retrievable: bool = True,
                   wrapper: Wrapper | None = None) -> dict:
    """Build one inline manifest entry (handy for generated fixtures)."""
    entry = {
        "url": url,
        "inline_base64": base64.b64encode(content).decode("ascii"),
        "mime": mime,
        "form": form.value,
        "retrievable": retrievable,
    }
    if cache_date is not None:
        entry["cache_date"] = cache_date.isoformat()
    if wrapper is not None:
        entry["wrap_header"] = wrapper.header.decode()
        entry["wrap_footer"] = wrapper.footer.decode()
    return entry
