"""On-disk layout for reconstructed sites, link relativization and the recovery log."""

from __future__ import annotations

import datetime as dt
import json
import logging
import os
import posixpath
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping
from urllib.parse import quote, unquote, urlsplit

from .extractor import LINK_ATTRIBUTES, canonicalize, resolve_reference
from .repo.models import StoredForm, is_html_mime

log = logging.getLogger(__name__)

LOG_NAME = "reconstruction.log"
PATHMAP_NAME = ".pathmap.json"
MISSING = "MISSING"
# characters that are unsafe in file names on at least one common filesystem
_UNSAFE = '<>:"\\|?*%'


def _encode_segment(segment: str) -> str:
    out = []
    for ch in segment:
        if ch in _UNSAFE or ord(ch) < 32 or ord(ch) == 127:
            out.append("%{:02X}".format(ord(ch)))
        else:
            out.append(ch)
    return "".join(out)


def url_to_path(url: str) -> str:
    """Relative POSIX path for *url*: ``host/dir/file``; directories map to ``index.html``.

    Existing percent escapes in the URL path are kept as-is; a query string is
    appended percent-encoded (``?x=1`` becomes ``%3Fx%3D1``). Identical outputs for
    distinct URLs are separated by :class:`SiteStore`'s collision table.
    """
    parts = urlsplit(url)
    host = _encode_segment(parts.netloc)
    segments = parts.path.split("/")[1:] or [""]
    if segments[-1] == "":
        segments[-1] = "index.html"
    safe = []
    for seg in segments:
        if seg in ("", ".", ".."):
            seg = quote(seg, safe="") if seg else "%2F"
            seg = seg.replace(".", "%2E")
        else:
            seg = "".join(_encode_segment(part) if i % 2 == 0 else part
                          for i, part in enumerate(re.split(r"(%[0-9A-F]{2})", seg)))
        safe.append(seg)
    if parts.query:
        safe[-1] += quote("?" + parts.query, safe="")
    return posixpath.join(host, *safe)


def path_to_url(rel_path: str, scheme: str = "http") -> str:
    """Best-effort inverse of :func:`url_to_path` for files without a path map entry."""
    host, _, rest = rel_path.partition("/")
    if rest == "index.html":
        rest = ""
    elif rest.endswith("/index.html"):
        rest = rest[: -len("index.html")]
    return f"{scheme}://{unquote(host)}/{rest}"


@dataclass(frozen=True)
class LogEntry:
    url: str
    mime_or_missing: str
    source_repo: str = "-"
    source_date: str = "-"

    def __post_init__(self):
        if self.mime_or_missing == MISSING and (self.source_repo, self.source_date) != ("-", "-"):
            raise ValueError("MISSING entries carry no repository or date")

    @classmethod
    def missing(cls, url: str) -> "LogEntry":
        return cls(url, MISSING)

    @classmethod
    def recovered(cls, url: str, mime: str, repo: str, date: dt.date | None) -> "LogEntry":
        return cls(url, mime or "-", repo, date.isoformat() if date else "-")

    def to_line(self) -> str:
        fields = (self.url, self.mime_or_missing, self.source_repo, self.source_date)
        return "\t".join(f.replace("\t", " ").replace("\n", " ") for f in fields) + "\n"

    @classmethod
    def from_line(cls, line: str) -> "LogEntry":
        url, mime, repo, date = line.rstrip("\n").split("\t")
        return cls(url, mime, repo, date)


def read_log(root: str | Path) -> list[LogEntry]:
    path = Path(root) / LOG_NAME
    if not path.exists():
        return []
    return [LogEntry.from_line(line) for line in path.read_text().splitlines() if line]


def _read_pathmap_doc(root: str | Path) -> dict:
    path = Path(root) / PATHMAP_NAME
    if not path.exists():
        return {}
    return json.loads(path.read_text())


def read_pathmap(root: str | Path) -> dict[str, str]:
    return _read_pathmap_doc(root).get("paths", {})


class StoreError(OSError):
    pass


class SiteStore:
    """Writes recovered resources under *root* mirroring their URLs.

    The store keeps a path map (URL to relative path) in ``.pathmap.json`` which
    doubles as the collision table: when two URLs would land on the same file, or
    a file would need to be a directory, the later one gets a ``-N`` suffix.
    """

    def __init__(self, root: str | Path, rename_converted_html: bool = False, relativize_links: bool = False):
        self.root = Path(root)
        self.rename_converted_html = rename_converted_html
        self.relativize_links = relativize_links
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StoreError(f"cannot create store root {self.root}: {exc}") from exc
        if not os.access(self.root, os.W_OK):
            raise StoreError(f"store root {self.root} is not writable")
        doc = _read_pathmap_doc(self.root)
        self.paths: dict[str, str] = doc.get("paths", {})
        self.collisions: dict[str, str] = doc.get("collisions", {})
        self.mimes: dict[str, str] = doc.get("mimes", {})
        self._files = set(self.paths.values())
        self._dirs = {d for p in self._files for d in _ancestors(p)}

    @property
    def log_path(self) -> Path:
        return self.root / LOG_NAME

    def _conflicts(self, parts: list[str], upto: int) -> bool:
        prefix = "/".join(parts[: upto + 1])
        if upto == len(parts) - 1:
            return prefix in self._files or prefix in self._dirs
        return prefix in self._files

    def path_for(self, url: str, renamed: bool = False) -> str:
        if url in self.paths:
            return self.paths[url]
        base = url_to_path(url)
        if renamed:
            base += ".html"
        parts = base.split("/")
        for depth in range(1, len(parts)):
            if not self._conflicts(parts, depth):
                continue
            n = 1
            while True:
                candidate = parts.copy()
                candidate[depth] = _suffixed(parts[depth], n, final=depth == len(parts) - 1)
                if not self._conflicts(candidate, depth):
                    break
                n += 1
            parts = candidate
        path = "/".join(parts)
        if path != base:
            self.collisions[url] = path
        return path

    def _claim(self, url: str, path: str) -> None:
        self.paths[url] = path
        self._files.add(path)
        self._dirs.update(_ancestors(path))

    def save(self, resource) -> Path:
        """Write *resource* (a RecoveredResource) and return the absolute path."""
        renamed = (
            self.rename_converted_html
            and resource.form is StoredForm.HTML_CONVERTED
            and not _is_html_name(url_to_path(resource.url))
        )
        rel = self.path_for(resource.url, renamed=renamed)
        target = self.root / rel
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(resource.content)
        except OSError as exc:
            raise StoreError(f"saving {resource.url} to {target}: {exc}") from exc
        self._claim(resource.url, rel)
        self.mimes[resource.url] = resource.mime
        self._write_pathmap()
        return target

    def _write_pathmap(self) -> None:
        tmp = self.root / (PATHMAP_NAME + ".tmp")
        tmp.write_text(json.dumps(
            {"paths": self.paths, "collisions": self.collisions, "mimes": self.mimes}, indent=1, sort_keys=True))
        tmp.replace(self.root / PATHMAP_NAME)

    def append_log(self, entry: LogEntry) -> None:
        try:
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(entry.to_line())
        except OSError as exc:
            raise StoreError(f"appending to {self.log_path}: {exc}") from exc

    def relativize(self) -> int:
        html = [u for u, m in self.mimes.items() if is_html_mime(m)]
        return relativize_links(self.root, html, self.paths)


def _ancestors(path: str) -> set[str]:
    parts = path.split("/")
    return {"/".join(parts[:i]) for i in range(1, len(parts))}


def _suffixed(name: str, n: int, final: bool) -> str:
    if final and "." in name.lstrip("."):
        stem, ext = name.rsplit(".", 1)
        return f"{stem}-{n}.{ext}"
    return f"{name}-{n}"


def _is_html_name(path: str) -> bool:
    return path.lower().endswith((".html", ".htm"))


def save(resource, layout: SiteStore) -> Path:
    return layout.save(resource)


def append_log(entry: LogEntry, layout: SiteStore) -> None:
    layout.append_log(entry)


# ---- link rewriting -------------------------------------------------------

_ATTR_RE = re.compile(
    r"""(?P<name>[a-zA-Z_:][-a-zA-Z0-9_:.]*)\s*=\s*(?:"(?P<dq>[^"]*)"|'(?P<sq>[^']*)'|(?P<uq>[^\s"'>]+))"""
)
_TAG_RE = re.compile(r"<(?P<tag>[a-zA-Z][a-zA-Z0-9]*)\b[^>]*>", re.S)
_BASE_RE = re.compile(rb"<base\b[^>]*href", re.I)


def _rewrite_tag(tag_text: str, tag: str, page_url: str, targets: Mapping[str, str], page_path: str) -> tuple[str, int]:
    names = LINK_ATTRIBUTES.get(tag.lower())
    if not names:
        return tag_text, 0
    count = 0

    def repl(m: re.Match) -> str:
        nonlocal count
        if m.group("name").lower() not in names:
            return m.group(0)
        raw = next(v for v in (m.group("dq"), m.group("sq"), m.group("uq")) if v is not None)
        ref, hashmark, fragment = raw.partition("#")
        url = resolve_reference(ref, page_url) if ref else None
        if url is None or url not in targets:
            return m.group(0)
        rel = posixpath.relpath(targets[url], posixpath.dirname(page_path) or ".")
        new = quote(rel, safe="/%") + (hashmark + fragment)
        if new == raw:
            return m.group(0)
        count += 1
        q = "'" if m.group("sq") is not None else '"'
        return f"{m.group('name')}={q}{new}{q}"

    return _ATTR_RE.sub(repl, tag_text), count


def relativize_links(site_root: str | Path, html_urls: Iterable[str], paths: Mapping[str, str] | None = None) -> int:
    """Point references to recovered resources at their saved files, relatively.

    Only references resolving to a URL in *paths* are touched; everything else,
    including links to other sites, is left alone. Running twice changes nothing.
    """
    root = Path(site_root)
    paths = dict(paths if paths is not None else read_pathmap(root))
    total = 0
    for url in html_urls:
        url = canonicalize(url)
        rel_page = paths.get(url)
        if rel_page is None:
            continue
        file = root / rel_page
        data = file.read_bytes()
        if _BASE_RE.search(data):
            log.warning("%s declares <base href>; links left as-is", url)
            continue
        text = data.decode("utf-8", errors="surrogateescape")
        changed = 0

        def tag_repl(m: re.Match) -> str:
            nonlocal changed
            new, n = _rewrite_tag(m.group(0), m.group("tag"), url, paths, rel_page)
            changed += n
            return new

        try:
            new_text = _TAG_RE.sub(tag_repl, text)
        except (ValueError, re.error) as exc:
            log.warning("skipping %s: %s", url, exc)
            continue
        if changed:
            file.write_bytes(new_text.encode("utf-8", errors="surrogateescape"))
            total += changed
    return total
