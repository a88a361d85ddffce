from __future__ import annotations

import mimetypes
from pathlib import Path

from ..extractor import looks_like_html
from ..store import LOG_NAME, PATHMAP_NAME, _read_pathmap_doc, path_to_url, url_to_path


class Snapshot:
    """A site tree on disk in the store layout (``host/path``)."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        if not self.root.is_dir():
            raise FileNotFoundError(f"snapshot directory {self.root} does not exist")
        doc = _read_pathmap_doc(self.root)
        self.url_paths: dict[str, str] = doc.get("paths", {})
        self.path_urls = {p: u for u, p in self.url_paths.items()}
        self.mimes_by_url: dict[str, str] = doc.get("mimes", {})

    def files(self) -> list[str]:
        out = []
        for p in self.root.rglob("*"):
            if not p.is_file():
                continue
            rel = p.relative_to(self.root).as_posix()
            if "/" not in rel and (rel == LOG_NAME or rel.startswith(".")):
                continue
            out.append(rel)
        return sorted(out)

    def path_of(self, url: str) -> str:
        return self.url_paths.get(url) or url_to_path(url)

    def url_of(self, rel: str) -> str:
        return self.path_urls.get(rel) or path_to_url(rel)

    def read(self, rel: str) -> bytes:
        return (self.root / rel).read_bytes()

    def exists(self, rel: str) -> bool:
        return (self.root / rel).is_file()

    def mime_of(self, rel: str) -> str:
        url = self.url_of(rel)
        if url in self.mimes_by_url:
            return self.mimes_by_url[url]
        return guess_mime(rel)

    def is_html(self, rel: str) -> bool:
        return looks_like_html(self.url_of(rel), self.mime_of(rel))


def guess_mime(rel: str) -> str:
    name = rel.rsplit("/", 1)[-1]
    if "." not in name:
        return "text/html"
    mime, _ = mimetypes.guess_type(name, strict=False)
    return mime or "application/octet-stream"


__all__ = ["Snapshot", "guess_mime", "PATHMAP_NAME"]
