"""Synthetic decaying web collections.

A collection has ``bins`` update bins. Bin ``b`` holds pages numbered
``1..terminal // b``, each an HTML page and a PDF, and loses one of each every
``b`` days, highest page number first. Pages outside the image bin share the
bin's three images (GIF, JPG, PNG); pages in the image bin carry three images
of their own that disappear with the page. A root index with one inline image
links every bin index, and each bin index links the bin's surviving pages.
"""

from __future__ import annotations

import hashlib
import html
import json
import random
import string
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from ..store import url_to_path
from .words import WORDS

IMAGE_TYPES = (("gif", "image/gif"), ("jpg", "image/jpeg"), ("png", "image/png"))
_MAGIC = {
    "gif": b"GIF89a",
    "jpg": b"\xff\xd8\xff\xe0\x00\x10JFIF\x00",
    "png": b"\x89PNG\r\n\x1a\n",
}
MIMES = {"html": "text/html", "index": "text/html", "pdf": "application/pdf", **dict(IMAGE_TYPES)}


@dataclass(frozen=True)
class CollectionSpec:
    bins: int = 30
    terminal: int = 90
    image_bin: int = 2
    words_per_page: int = 200
    seed: int = 0
    name: str = "mln"
    host: str = "collection.test"

    def __post_init__(self):
        if not 1 <= self.bins <= self.terminal:
            raise ValueError("need 1 <= bins <= terminal")
        if not 1 <= self.image_bin <= self.bins:
            raise ValueError("need 1 <= image_bin <= bins")
        if self.words_per_page < 0:
            raise ValueError("words_per_page must be non-negative")


@dataclass(frozen=True)
class BinCounts:
    html: int
    pdf: int
    img: int

    @property
    def total(self) -> int:
        return self.html + self.pdf + self.img


@dataclass(frozen=True)
class CollectionCounts:
    total: int
    bins: dict[int, BinCounts]


def bin_counts(spec: CollectionSpec, b: int, d: int) -> BinCounts:
    # the HTML count includes the bin's own index page
    n_html = spec.terminal // b - d // b + 1
    n_pdf = spec.terminal // b - d // b
    if b == spec.image_bin:
        n_img = 3 * (n_html - 1)
    elif n_html == 1:
        n_img = 0
    else:
        n_img = 3
    return BinCounts(n_html, n_pdf, n_img)


def collection_counts(spec: CollectionSpec, d: int) -> CollectionCounts:
    """Resources present on day *d*; the 2 is the root index and its image."""
    if not 0 <= d <= spec.terminal:
        raise ValueError(f"day {d} outside 0..{spec.terminal}")
    per_bin = {b: bin_counts(spec, b, d) for b in range(1, spec.bins + 1)}
    return CollectionCounts(2 + sum(c.total for c in per_bin.values()), per_bin)


@dataclass(frozen=True)
class Resource:
    uid: str
    url: str
    kind: str  # "index", "html", "pdf" or one of the image extensions
    bin: int  # 0 for the root index and its image
    page: int  # 0 for indexes and shared images
    removal_day: int | None  # None: never removed

    @property
    def mime(self) -> str:
        return MIMES[self.kind]

    @property
    def is_image(self) -> bool:
        return self.mime.startswith("image/")

    @property
    def ttl_ws(self) -> int | None:
        return self.removal_day  # every resource exists from day 0

    def alive(self, day: int) -> bool:
        return self.removal_day is None or self.removal_day > day


@dataclass
class ResourceSchedule:
    spec: CollectionSpec
    collection_id: str
    resources: list[Resource] = field(default_factory=list)

    def __post_init__(self):
        self._by_url = {r.url: r for r in self.resources}
        self._by_uid = {r.uid: r for r in self.resources}

    @property
    def root_url(self) -> str:
        return f"http://{self.spec.host}/"

    def by_url(self, url: str) -> Resource | None:
        return self._by_url.get(url)

    def by_uid(self, uid: str) -> Resource:
        return self._by_uid[uid]

    def alive(self, day: int) -> list[Resource]:
        return [r for r in self.resources if r.alive(day)]

    def to_dict(self) -> dict:
        return {
            "spec": asdict(self.spec),
            "collection_id": self.collection_id,
            "resources": [asdict(r) for r in self.resources],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ResourceSchedule":
        return cls(CollectionSpec(**data["spec"]), data["collection_id"],
                   [Resource(**r) for r in data["resources"]])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ResourceSchedule":
        return cls.from_dict(json.loads(Path(path).read_text()))


def page_removal_day(spec: CollectionSpec, b: int, p: int) -> int:
    return b * (spec.terminal // b - p + 1)


def collection_id(spec: CollectionSpec) -> str:
    rng = random.Random(f"collection-id|{spec.seed}|{spec.name}")
    return spec.name + "".join(rng.choice(string.ascii_uppercase) for _ in range(6)) + str(rng.randrange(10))


def build_schedule(spec: CollectionSpec) -> ResourceSchedule:
    cid = collection_id(spec)
    base = f"http://{spec.host}/"
    res = [
        Resource(f"{cid} root index", base, "index", 0, 0, None),
        Resource(f"{cid} root png", f"{base}{cid}-root.png", "png", 0, 0, None),
    ]
    for b in range(1, spec.bins + 1):
        bin_url = f"{base}dgrp{b}/"
        pages = spec.terminal // b
        res.append(Resource(f"{cid} dgrp{b} index", bin_url, "index", b, 0, None))
        for p in range(1, pages + 1):
            gone = page_removal_day(spec, b, p)
            res.append(Resource(f"{cid} dgrp{b} pg{b}-{p}-html", f"{bin_url}pg{b}-{p}.html", "html", b, p, gone))
            res.append(Resource(f"{cid} dgrp{b} pg{b}-{p}-pdf", f"{bin_url}pg{b}-{p}.pdf", "pdf", b, p, gone))
            if b == spec.image_bin:
                for ext, _ in IMAGE_TYPES:
                    res.append(Resource(f"{cid} dgrp{b} pg{b}-{p}-{ext}", f"{bin_url}{cid}-b{b}-p{p}.{ext}",
                                        ext, b, p, gone))
        if b != spec.image_bin:
            # shared images go when the bin's last page does
            for ext, _ in IMAGE_TYPES:
                res.append(Resource(f"{cid} dgrp{b} img-{ext}", f"{bin_url}{cid}-b{b}.{ext}", ext, b, 0,
                                    b * pages))
    return ResourceSchedule(spec, cid, res)


def _words(spec: CollectionSpec, uid: str) -> list[str]:
    rng = random.Random(f"words|{spec.seed}|{uid}")
    return [rng.choice(WORDS) for _ in range(spec.words_per_page)]


def _page_images(schedule: ResourceSchedule, r: Resource) -> list[Resource]:
    b, cid = r.bin, schedule.collection_id
    if b == schedule.spec.image_bin:
        uids = [f"{cid} dgrp{b} pg{b}-{r.page}-{ext}" for ext, _ in IMAGE_TYPES]
    else:
        uids = [f"{cid} dgrp{b} img-{ext}" for ext, _ in IMAGE_TYPES]
    return [schedule.by_uid(u) for u in uids]


def _html_doc(title: str, body: str) -> bytes:
    return (f"<html>\n<head><title>{html.escape(title)}</title></head>\n<body>\n{body}</body>\n</html>\n").encode()


def render(schedule: ResourceSchedule, r: Resource, day: int = 0) -> bytes:
    """Bytes of *r* as served on *day*; only bin indexes change over time."""
    spec = schedule.spec
    if r.kind == "index" and r.bin == 0:
        img = schedule.resources[1]
        links = "".join(f'<li><a href="dgrp{b}/">dgrp{b}</a></li>\n' for b in range(1, spec.bins + 1))
        body = f'<h1>{html.escape(r.uid)}</h1>\n<img src="{img.url.rsplit("/", 1)[1]}">\n<ul>\n{links}</ul>\n'
        return _html_doc(r.uid, body)
    if r.kind == "index":
        items = [x for x in schedule.resources
                 if x.bin == r.bin and x.kind in ("html", "pdf") and x.alive(day)]
        links = "".join(f'<li><a href="{x.url.rsplit("/", 1)[1]}">{html.escape(x.uid)}</a></li>\n' for x in items)
        return _html_doc(r.uid, f'<h1>{html.escape(r.uid)}</h1>\n<ul>\n{links}</ul>\n')
    if r.kind == "html":
        imgs = "".join(f'<img src="{i.url.rsplit("/", 1)[1]}">\n' for i in _page_images(schedule, r))
        text = " ".join(_words(spec, r.uid))
        return _html_doc(r.uid, f"<p>{html.escape(r.uid)}</p>\n{imgs}<p>{text}</p>\n")
    if r.kind == "pdf":
        # a text placeholder labelled as PDF; only its type, UID and lifetime matter
        words = _words(spec, r.uid)
        lines = [" ".join(words[i:i + 12]) for i in range(0, len(words), 12)]
        return ("%PDF-1.4\n% text placeholder\n" + r.uid + "\n" + "\n".join(lines) + "\n%%EOF\n").encode()
    noise = hashlib.sha256(f"image|{spec.seed}|{r.uid}".encode()).digest() * 2
    tail = b"\xff\xd9" if r.kind == "jpg" else b""
    return _MAGIC[r.kind] + noise + tail


def write_snapshot(schedule: ResourceSchedule, day: int, out: str | Path) -> int:
    """Write the site as served on *day* in the store layout; returns the file count."""
    out = Path(out)
    n = 0
    for r in schedule.alive(day):
        path = out / url_to_path(r.url)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(render(schedule, r, day))
        n += 1
    return n


def generate_collection(spec: CollectionSpec, out_dir: str | Path) -> ResourceSchedule:
    """Write the day-0 site under ``out_dir/site`` and its schedule to ``out_dir/schedule.json``."""
    out_dir = Path(out_dir)
    schedule = build_schedule(spec)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_snapshot(schedule, 0, out_dir / "site")
    schedule.save(out_dir / "schedule.json")
    return schedule


def lose_site(schedule: ResourceSchedule, day: int) -> ResourceSchedule:
    """Copy of *schedule* in which everything still online is removed on *day*."""
    res = [replace(r, removal_day=day if r.removal_day is None else min(r.removal_day, day))
           for r in schedule.resources]
    return ResourceSchedule(schedule.spec, schedule.collection_id, res)


def daily_queries(w: int, b: int, t: int, s: int) -> int:
    """Daily text queries: collections x bins x resource types x search engines."""
    return w * b * t * s


def image_daily_queries(w: int, i: int, s: int) -> int:
    """Daily image queries: collections x images per collection x search engines."""
    return w * i * s
