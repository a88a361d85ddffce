"""Resource categorization and the (changed, missing, added) difference vector."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from ..store import MISSING, LogEntry, read_log
from .snapshot import Snapshot, guess_mime


class Category(enum.Enum):
    IDENTICAL = "identical"
    CHANGED = "changed"
    MISSING = "missing"
    ADDED = "added"
    # in the original, absent from the reconstruction, and never looked up
    UNDISCOVERED = "undiscovered"


ORIGINAL_SIDE = (Category.IDENTICAL, Category.CHANGED, Category.MISSING, Category.UNDISCOVERED)
RECON_SIDE = (Category.IDENTICAL, Category.CHANGED, Category.ADDED)


@dataclass
class Categorization:
    categories: dict[str, Category]
    urls: dict[str, str] = field(default_factory=dict)
    mimes: dict[str, str] = field(default_factory=dict)
    used_log: bool = False

    def counts(self) -> Counter:
        return Counter(self.categories.values())


def categorize(original_root: str | Path, recon_root: str | Path,
               recovery_log: Iterable[LogEntry] | None = None) -> Categorization:
    """Compare two site trees file by file.

    Without a recovery log every original file absent from the reconstruction is
    MISSING. With one, only files whose URL the log marks ``MISSING`` (looked up,
    found nowhere) are; the rest were never reached and count as UNDISCOVERED.
    """
    orig = Snapshot(original_root)
    recon = Snapshot(recon_root)
    o_files = set(orig.files())
    r_files = set(recon.files())
    logged_missing: set[str] | None = None
    if recovery_log is not None:
        logged_missing = {orig.path_of(e.url) for e in recovery_log if e.mime_or_missing == MISSING}
    cats: dict[str, Category] = {}
    urls: dict[str, str] = {}
    mimes: dict[str, str] = {}
    for rel in sorted(o_files | r_files):
        if rel in o_files and rel in r_files:
            cats[rel] = Category.IDENTICAL if orig.read(rel) == recon.read(rel) else Category.CHANGED
        elif rel in o_files:
            if logged_missing is None or rel in logged_missing:
                cats[rel] = Category.MISSING
            else:
                cats[rel] = Category.UNDISCOVERED
        else:
            cats[rel] = Category.ADDED
        side = orig if rel in o_files else recon
        urls[rel] = side.url_of(rel)
        mimes[rel] = side.mime_of(rel)
    return Categorization(cats, urls, mimes, used_log=logged_missing is not None)


def categorize_with_log(original_root: str | Path, recon_root: str | Path) -> Categorization:
    """:func:`categorize` using ``reconstruction.log`` from *recon_root* when it exists."""
    entries = read_log(recon_root)
    return categorize(original_root, recon_root, entries if entries else None)


def _render(x: Fraction, places: int = 3) -> str:
    q = Decimal(1).scaleb(-places)
    return str((Decimal(x.numerator) / Decimal(x.denominator)).quantize(q, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class DifferenceVector:
    changed: Fraction
    missing: Fraction
    added: Fraction
    original_size: int
    recon_size: int
    n_changed: int
    n_missing: int
    n_added: int

    def as_tuple(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.changed, self.missing, self.added)

    def rendered(self, places: int = 3) -> tuple[str, str, str]:
        return tuple(_render(x, places) for x in self.as_tuple())

    def __str__(self) -> str:
        return "(" + ", ".join(self.rendered()) + ")"

    def to_dict(self) -> dict:
        return {
            "changed": float(self.changed),
            "missing": float(self.missing),
            "added": float(self.added),
            "exact": [str(x) for x in self.as_tuple()],
            "rendered": list(self.rendered()),
            "counts": {
                "original": self.original_size,
                "reconstructed": self.recon_size,
                "changed": self.n_changed,
                "missing": self.n_missing,
                "added": self.n_added,
            },
        }


def difference_vector(categories: Mapping[str, Category] | Categorization) -> DifferenceVector:
    if isinstance(categories, Categorization):
        categories = categories.categories
    c = Counter(categories.values())
    w = sum(c[k] for k in ORIGINAL_SIDE)
    w_prime = sum(c[k] for k in RECON_SIDE)
    if w == 0:
        raise ValueError("difference vector is undefined for an empty original site")
    return DifferenceVector(
        changed=Fraction(c[Category.CHANGED], w),
        missing=Fraction(c[Category.MISSING], w),
        added=Fraction(c[Category.ADDED], w_prime) if w_prime else Fraction(0),
        original_size=w,
        recon_size=w_prime,
        n_changed=c[Category.CHANGED],
        n_missing=c[Category.MISSING],
        n_added=c[Category.ADDED],
    )


MIME_GROUPS = ("HTML", "Images", "Other")


def mime_group(mime: str) -> str:
    mime = mime.split(";")[0].strip().lower()
    if mime in ("text/html", "application/xhtml+xml"):
        return "HTML"
    if mime.startswith("image/"):
        return "Images"
    return "Other"


def _row(orig: int, rec: int) -> dict:
    return {
        "original_count": orig,
        "recovered_count": rec,
        "percent": 100.0 * rec / orig if orig else None,
    }


def mime_breakdown(categories: Mapping[str, Category] | Categorization,
                   mime_map: Mapping[str, str] | None = None) -> dict:
    """Original vs recovered counts per MIME group and per exact MIME type."""
    if isinstance(categories, Categorization):
        mime_map = {**categories.mimes, **(mime_map or {})}
        categories = categories.categories
    mime_map = mime_map or {}
    groups: dict[str, list[int]] = {}
    exact: dict[str, list[int]] = {}
    for key, cat in categories.items():
        if cat not in ORIGINAL_SIDE:
            continue
        mime = mime_map.get(key) or guess_mime(key)
        recovered = cat in (Category.IDENTICAL, Category.CHANGED)
        for table, k in ((groups, mime_group(mime)), (exact, mime)):
            row = table.setdefault(k, [0, 0])
            row[0] += 1
            row[1] += recovered
    return {
        "groups": {g: _row(*groups[g]) for g in MIME_GROUPS if g in groups},
        "by_mime": {m: _row(*exact[m]) for m in sorted(exact)},
    }


__all__ = [
    "Categorization", "Category", "DifferenceVector", "categorize", "categorize_with_log",
    "difference_vector", "mime_breakdown", "mime_group",
]
