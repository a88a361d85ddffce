from __future__ import annotations

import datetime as dt
import enum
from dataclasses import dataclass, field, replace
from typing import Protocol


class StoredForm(enum.Enum):
    CANONICAL = "canonical"
    HTML_CONVERTED = "html-converted"
    THUMBNAIL = "thumbnail"
    INDEXED_ONLY = "indexed-only"


class CacheDatePolicy(enum.Enum):
    ALWAYS = "always"
    HTML_ONLY = "html-only"
    NEVER = "never"


class RepositoryError(Exception):
    pass


class TransportError(RepositoryError):
    """A lookup failed in transit; retrying may succeed. Not the same as NotFound."""


class UnsupportedQueryError(RepositoryError):
    """Image lookup against a repository that has no image interface."""


class FixtureError(RepositoryError):
    pass


@dataclass(frozen=True)
class RepositoryDescriptor:
    id: str
    supports_image_query: bool
    nonimage_query_cost: int
    image_query_cost: int | None  # None means unsupported
    is_canonical_store: bool
    provides_cache_date: CacheDatePolicy

    def __post_init__(self):
        if not self.id:
            raise ValueError("repository id must be non-empty")
        if self.nonimage_query_cost < 1:
            raise ValueError(f"{self.id}: nonimage_query_cost must be >= 1")
        if self.supports_image_query:
            if self.image_query_cost is None or self.image_query_cost < 1:
                raise ValueError(f"{self.id}: image_query_cost must be >= 1")
        elif self.image_query_cost is not None:
            raise ValueError(f"{self.id}: image_query_cost must be unsupported")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "supports_image_query": self.supports_image_query,
            "nonimage_query_cost": self.nonimage_query_cost,
            "image_query_cost": self.image_query_cost if self.supports_image_query else "unsupported",
            "is_canonical_store": self.is_canonical_store,
            "provides_cache_date": self.provides_cache_date.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RepositoryDescriptor":
        image_cost = data.get("image_query_cost", "unsupported")
        return cls(
            id=data["id"],
            supports_image_query=bool(data["supports_image_query"]),
            nonimage_query_cost=int(data["nonimage_query_cost"]),
            image_query_cost=None if image_cost in (None, "unsupported") else int(image_cost),
            is_canonical_store=bool(data["is_canonical_store"]),
            provides_cache_date=CacheDatePolicy(data["provides_cache_date"]),
        )


# Observable behaviour of the four classic repositories (query counts per lookup,
# which stored forms they keep, which dates they expose).
PROFILES: dict[str, RepositoryDescriptor] = {
    "archive": RepositoryDescriptor("archive", True, 2, 2, True, CacheDatePolicy.ALWAYS),
    "google": RepositoryDescriptor("google", True, 1, 2, False, CacheDatePolicy.HTML_ONLY),
    "msn": RepositoryDescriptor("msn", False, 2, None, False, CacheDatePolicy.ALWAYS),
    "yahoo": RepositoryDescriptor("yahoo", True, 2, 2, False, CacheDatePolicy.NEVER),
}


def profile(name: str, id: str | None = None) -> RepositoryDescriptor:
    try:
        base = PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown repository profile {name!r}; known: {sorted(PROFILES)}") from None
    return replace(base, id=id) if id else base


@dataclass(frozen=True)
class Wrapper:
    header: bytes = b""
    footer: bytes = b""


@dataclass(frozen=True)
class StoredResource:
    url: str
    content: bytes
    mime: str
    form: StoredForm
    cache_date: dt.date | None = None
    wrapper: Wrapper | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.form is StoredForm.THUMBNAIL and not self.mime.startswith("image/"):
            raise ValueError(f"{self.url}: thumbnail with non-image mime {self.mime!r}")


@dataclass(frozen=True)
class RepoResult:
    resource: StoredResource | None
    queries_spent: int

    def __post_init__(self):
        if self.queries_spent < 1:
            raise ValueError("every lookup spends at least one query")

    @property
    def found(self) -> bool:
        return self.resource is not None


class Repository(Protocol):
    """Lookup interface. Implementations may also offer ``max_lookup_cost(image)``,
    the most queries one lookup can spend; the nominal descriptor cost is assumed otherwise."""

    descriptor: RepositoryDescriptor

    def query_nonimage(self, url: str) -> RepoResult: ...

    def query_image(self, url: str) -> RepoResult: ...

    def fingerprint(self) -> str: ...


def max_lookup_cost(repo: Repository, image: bool) -> int:
    bound = getattr(repo, "max_lookup_cost", None)
    if bound is not None:
        return bound(image)
    d = repo.descriptor
    return (d.image_query_cost or 0) if image else d.nonimage_query_cost


def is_html_mime(mime: str | None) -> bool:
    return bool(mime) and mime.split(";")[0].strip().lower() in ("text/html", "application/xhtml+xml")


def strip_repository_markup(res: StoredResource, repo: RepositoryDescriptor | None = None) -> StoredResource:
    """Remove the repository-added header/footer declared for *res*.

    Content lacking the markers comes back unchanged, and the returned resource no
    longer carries a wrapper, so applying this twice is the same as once.
    """
    wrapper = res.wrapper
    if wrapper is None or not is_html_mime(res.mime):
        return res
    body = res.content
    if wrapper.header and body.startswith(wrapper.header):
        body = body[len(wrapper.header):]
    if wrapper.footer and body.endswith(wrapper.footer):
        body = body[: len(body) - len(wrapper.footer)]
    return replace(res, content=body, wrapper=None)
