"""Uniform interface over web repositories (archives and search-engine caches)."""

from .archive import ArchiveAdapter
from .fixture import FixtureEntry, FixtureRepository, load_fixture, manifest_entry, repository_from_manifest
from .models import (
    PROFILES,
    CacheDatePolicy,
    FixtureError,
    RepoResult,
    Repository,
    RepositoryDescriptor,
    RepositoryError,
    StoredForm,
    StoredResource,
    TransportError,
    UnsupportedQueryError,
    Wrapper,
    is_html_mime,
    max_lookup_cost,
    profile,
    strip_repository_markup,
)


def query_nonimage(repo: Repository, url: str) -> RepoResult:
    return repo.query_nonimage(url)


def query_image(repo: Repository, url: str) -> RepoResult:
    return repo.query_image(url)


__all__ = [
    "PROFILES", "ArchiveAdapter", "CacheDatePolicy", "FixtureEntry", "FixtureError", "FixtureRepository",
    "RepoResult", "Repository", "RepositoryDescriptor", "RepositoryError", "StoredForm", "StoredResource",
    "TransportError", "UnsupportedQueryError", "Wrapper", "is_html_mime", "load_fixture", "manifest_entry", "max_lookup_cost",
    "profile", "query_image", "query_nonimage", "repository_from_manifest", "strip_repository_markup",
]
