"""Compare an original site snapshot with its reconstruction."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

from ..store import read_log
from .compare import (
    Categorization,
    Category,
    DifferenceVector,
    categorize,
    categorize_with_log,
    difference_vector,
    mime_breakdown,
    mime_group,
)
from .diagram import render_recon_diagram
from .graph import WebGraph, build_web_graph
from .shingle import (
    DEFAULT_THRESHOLD,
    DEFAULT_WIDTH,
    AlmostIdentical,
    almost_identical_rate,
    shingle_similarity,
    shingles,
    to_text,
    tokens,
)
from .snapshot import Snapshot


def evaluate(original: str | Path, recon: str | Path, use_log: bool = True,
             converters: Mapping[str, str] | None = None, threshold: float = DEFAULT_THRESHOLD,
             w: int = DEFAULT_WIDTH, denominator: str = "jaccard", diagram: str | Path | None = None) -> dict:
    """Full JSON-ready report: vector, counts, MIME breakdown, near-identity, per-resource rows.

    When *diagram* is given the reconstruction diagram is also written there as SVG.
    """
    entries = read_log(recon) if use_log else []
    cats = categorize(original, recon, entries or None)
    vector = difference_vector(cats)
    orig_snap, recon_snap = Snapshot(original), Snapshot(recon)
    rows = []
    pairs = []
    for rel, cat in cats.categories.items():
        row = {"path": rel, "url": cats.urls[rel], "category": cat.value, "mime": cats.mimes[rel]}
        if cat is Category.CHANGED:
            a, b = orig_snap.read(rel), recon_snap.read(rel)
            ma, mb = orig_snap.mime_of(rel), recon_snap.mime_of(rel)
            pairs.append((a, b, ma, mb))
            ta, tb = to_text(a, ma, converters), to_text(b, mb, converters)
            if ta is not None and tb is not None:
                row["similarity"] = round(shingle_similarity(ta, tb, w, denominator), 6)
        rows.append(row)
    near = almost_identical_rate(pairs, threshold, w, converters, denominator)
    counts = cats.counts()
    if diagram is not None:
        render_recon_diagram(vector, diagram)
    return {
        "vector": vector.to_dict(),
        "counts": {c.value: counts.get(c, 0) for c in Category},
        "used_recovery_log": cats.used_log,
        "mime_breakdown": mime_breakdown(cats),
        "almost_identical_rate": {
            **near.to_dict(),
            "threshold": threshold,
            "shingle_size": w,
            "denominator": denominator,
            "note": "computed over changed pairs with a text conversion; others are counted in 'excluded'",
        },
        "resources": rows,
    }


__all__ = [
    "AlmostIdentical", "Categorization", "Category", "DifferenceVector", "Snapshot", "WebGraph",
    "almost_identical_rate", "build_web_graph", "categorize", "categorize_with_log", "difference_vector",
    "evaluate", "mime_breakdown", "mime_group", "render_recon_diagram", "shingle_similarity", "shingles",
    "to_text", "tokens",
]
