"""Word-shingle similarity for near-identical text detection."""

from __future__ import annotations

import logging
import shlex
import subprocess
from dataclasses import dataclass
from html.parser import HTMLParser
from typing import Iterable, Mapping, Sequence

log = logging.getLogger(__name__)

DEFAULT_WIDTH = 10
DEFAULT_THRESHOLD = 0.75
DENOMINATORS = ("jaccard", "containment-a", "containment-b")


class _TextOnly(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.chunks: list[str] = []
        self._skip = 0

    def handle_starttag(self, tag, attrs):
        if tag in ("script", "style"):
            self._skip += 1

    def handle_endtag(self, tag):
        if tag in ("script", "style") and self._skip:
            self._skip -= 1

    def handle_data(self, data):
        if not self._skip:
            self.chunks.append(data)


def tokens(text: str) -> list[str]:
    """Lower-cased words of *text* after dropping markup."""
    parser = _TextOnly()
    parser.feed(text)
    parser.close()
    return " ".join(parser.chunks).lower().split()


def shingles(words: Sequence[str], w: int = DEFAULT_WIDTH) -> set[tuple[str, ...]]:
    return {tuple(words[i:i + w]) for i in range(len(words) - w + 1)}


def shingle_similarity(a: str, b: str, w: int = DEFAULT_WIDTH, denominator: str = "jaccard") -> float:
    if denominator not in DENOMINATORS:
        raise ValueError(f"denominator must be one of {DENOMINATORS}")
    ta, tb = tokens(a), tokens(b)
    if len(ta) < w or len(tb) < w:
        # too short to shingle: compare the whole word sequences
        return 1.0 if ta == tb else 0.0
    sa, sb = shingles(ta, w), shingles(tb, w)
    shared = len(sa & sb)
    if denominator == "jaccard":
        return shared / len(sa | sb)
    return shared / len(sa if denominator == "containment-a" else sb)


def to_text(content: bytes, mime: str, converters: Mapping[str, str] | None = None) -> str | None:
    """Text for shingling, or None when *mime* has no known conversion.

    *converters* maps a MIME type to a shell-style command that reads the
    document on stdin and writes text on stdout (e.g. ``pdftotext - -``).
    """
    mime = mime.split(";")[0].strip().lower()
    converters = converters or {}
    if mime in converters:
        try:
            proc = subprocess.run(shlex.split(converters[mime]), input=content, capture_output=True,
                                  timeout=60, check=True)
        except (OSError, subprocess.SubprocessError) as exc:
            log.warning("converter for %s failed: %s", mime, exc)
            return None
        return proc.stdout.decode("utf-8", errors="replace")
    if mime in ("text/html", "application/xhtml+xml") or mime.startswith("text/"):
        return content.decode("utf-8", errors="replace")
    return None


@dataclass(frozen=True)
class AlmostIdentical:
    rate: float | None
    compared: int
    almost_identical: int
    excluded: int

    def to_dict(self) -> dict:
        return {"rate": self.rate, "compared": self.compared,
                "almost_identical": self.almost_identical, "excluded": self.excluded}


def almost_identical_rate(changed_pairs: Iterable[tuple], threshold: float = DEFAULT_THRESHOLD,
                          w: int = DEFAULT_WIDTH, converters: Mapping[str, str] | None = None,
                          denominator: str = "jaccard") -> AlmostIdentical:
    """Share of text-convertible changed pairs whose similarity reaches *threshold*.

    Each pair is ``(original, reconstructed, mime)`` or, when the two sides differ
    in type (say a PDF and its HTML conversion), ``(original, reconstructed,
    original_mime, reconstructed_mime)``.
    """
    compared = hits = excluded = 0
    for original, recon, mime, *rest in changed_pairs:
        ta = to_text(original, mime, converters)
        tb = to_text(recon, rest[0] if rest else mime, converters)
        if ta is None or tb is None:
            excluded += 1
            continue
        compared += 1
        hits += shingle_similarity(ta, tb, w, denominator) >= threshold
    return AlmostIdentical(hits / compared if compared else None, compared, hits, excluded)
