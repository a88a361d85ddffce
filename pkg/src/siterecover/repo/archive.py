"""HTTP adapter for a CDX-style web archive.

Lookup protocol, one query counted per HTTP request:

1. ``GET {base}/cdx/search/cdx?url=<url>&output=json&fl=timestamp,original,mimetype,statuscode``
   returns a JSON array whose first row is a header. Rows with a non-200
   status are ignored.
2. Captures are tried newest first:
   ``GET {base}/web/{timestamp}id_/{original}`` (the ``id_`` flag asks for the
   raw archived bytes). A non-200 reply means the listed copy is not
   retrievable and the next older capture is tried, up to ``max_versions``.

The base URL defaults to ``$SITERECOVER_ARCHIVE_URL``.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import os
import threading

import requests

from ..extractor import canonicalize
from .models import PROFILES, RepoResult, RepositoryDescriptor, StoredForm, StoredResource, TransportError

ENV_ARCHIVE_URL = "SITERECOVER_ARCHIVE_URL"


class ArchiveAdapter:
    def __init__(self, base_url: str | None = None, descriptor: RepositoryDescriptor | None = None,
                 session: requests.Session | None = None, timeout: float = 30.0, max_versions: int = 3):
        base_url = base_url or os.environ.get(ENV_ARCHIVE_URL)
        if not base_url:
            raise ValueError(f"archive base URL not given and ${ENV_ARCHIVE_URL} unset")
        self.base_url = base_url.rstrip("/")
        self.descriptor = descriptor or PROFILES["archive"]
        self.timeout = timeout
        self.max_versions = max_versions
        self._session = session or requests.Session()
        self._lock = threading.Lock()

    @property
    def id(self) -> str:
        return self.descriptor.id

    def fingerprint(self) -> str:
        return hashlib.sha256(f"archive:{self.base_url}:{self.id}".encode()).hexdigest()

    def max_lookup_cost(self, image: bool) -> int:
        return 1 + self.max_versions

    def _get(self, endpoint: str, params: dict | None = None) -> requests.Response:
        try:
            with self._lock:
                return self._session.get(endpoint, params=params, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(f"{endpoint}: {exc}") from exc

    def captures(self, url: str) -> list[tuple[str, str, str]]:
        """Return (timestamp, original, mimetype) rows, newest first."""
        resp = self._get(
            f"{self.base_url}/cdx/search/cdx",
            {"url": url, "output": "json", "fl": "timestamp,original,mimetype,statuscode"},
        )
        if resp.status_code == 404:
            return []
        if resp.status_code != 200:
            raise TransportError(f"CDX lookup for {url}: HTTP {resp.status_code}")
        try:
            rows = resp.json() if resp.content.strip() else []
        except ValueError as exc:
            raise TransportError(f"CDX lookup for {url}: bad JSON") from exc
        if not rows:
            return []
        header, body = rows[0], rows[1:]
        col = {name: i for i, name in enumerate(header)}
        found = [
            (r[col["timestamp"]], r[col["original"]], r[col.get("mimetype", 2)])
            for r in body
            if str(r[col["statuscode"]]) == "200"
        ]
        return sorted(found, key=lambda r: r[0], reverse=True)

    def _lookup(self, url: str) -> RepoResult:
        url = canonicalize(url)
        spent = 1
        rows = self.captures(url)
        for timestamp, original, cdx_mime in rows[: self.max_versions]:
            spent += 1
            resp = self._get(f"{self.base_url}/web/{timestamp}id_/{original}")
            if resp.status_code == 200:
                mime = resp.headers.get("Content-Type", cdx_mime or "application/octet-stream")
                return RepoResult(
                    StoredResource(
                        url=url,
                        content=resp.content,
                        mime=mime.split(";")[0].strip(),
                        form=StoredForm.CANONICAL,
                        cache_date=dt.datetime.strptime(timestamp[:8], "%Y%m%d").date(),
                    ),
                    spent,
                )
            if resp.status_code >= 500:
                raise TransportError(f"fetch {timestamp}/{original}: HTTP {resp.status_code}")
        return RepoResult(None, spent)

    def query_nonimage(self, url: str) -> RepoResult:
        return self._lookup(url)

    def query_image(self, url: str) -> RepoResult:
        return self._lookup(url)
