"""URL classification, canonicalization, scoping and HTML link extraction."""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass
from html.parser import HTMLParser
from typing import Iterable
from urllib.parse import quote, urljoin, urlsplit, urlunsplit

log = logging.getLogger(__name__)

DEFAULT_IMAGE_EXTENSIONS = frozenset(
    {"png", "gif", "jpg", "jpeg", "bmp", "ico", "tif", "tiff"}
)
HTML_EXTENSIONS = frozenset({"html", "htm", "shtml", "xhtml"})
HTML_MIMES = frozenset({"text/html", "application/xhtml+xml"})

# (tag, attribute) pairs that carry references to other resources.
LINK_ATTRIBUTES = {
    "a": ("href",),
    "area": ("href",),
    "link": ("href",),
    "img": ("src",),
    "embed": ("src",),
    "script": ("src",),
    "frame": ("src",),
    "iframe": ("src",),
    "object": ("data",),
    "body": ("background",),
    "input": ("src",),  # only type=image, filtered in _link_attrs
}

_DEFAULT_PORTS = {"http": "80", "https": "443"}
_PCT_RE = re.compile(r"%([0-9a-fA-F]{2})")
# RFC 3986 pchar plus "/" and "%" (existing escapes are re-cased, not re-encoded)
_PATH_SAFE = "/%:@!$&'()*+,;=-._~"


class InvalidURL(ValueError):
    pass


class ResourceClass(enum.Enum):
    IMAGE = "image"
    OTHER = "other"


class ScopeMode(enum.Enum):
    HOST_ONLY = "host"
    PREFIX_ONLY = "prefix"


@dataclass(frozen=True)
class ScopeRule:
    mode: ScopeMode
    root: str

    def __post_init__(self):
        root = canonicalize(self.root)
        if self.mode is ScopeMode.PREFIX_ONLY and not urlsplit(root).path.endswith("/"):
            raise ValueError(f"prefix scope root must end in '/': {root}")
        object.__setattr__(self, "root", root)

    @classmethod
    def for_start(cls, start_url: str, mode: ScopeMode = ScopeMode.HOST_ONLY) -> "ScopeRule":
        """Build a rule rooted at *start_url*; prefix mode uses its directory."""
        url = canonicalize(start_url)
        if mode is ScopeMode.PREFIX_ONLY:
            parts = urlsplit(url)
            directory = parts.path[: parts.path.rfind("/") + 1]
            url = urlunsplit((parts.scheme, parts.netloc, directory, "", ""))
        return cls(mode, url)


def _extension(url: str) -> str:
    path = urlsplit(url).path
    name = path.rsplit("/", 1)[-1]
    if "." not in name:
        return ""
    return name.rsplit(".", 1)[-1].lower()


def classify_url(url: str, image_extensions: Iterable[str] = DEFAULT_IMAGE_EXTENSIONS) -> ResourceClass:
    exts = {e.lower().lstrip(".") for e in image_extensions}
    return ResourceClass.IMAGE if _extension(url) in exts else ResourceClass.OTHER


def type_group(url: str, image_extensions: Iterable[str] = DEFAULT_IMAGE_EXTENSIONS) -> str:
    """Coarse pre-query grouping used by type filters: 'html', 'images' or 'other'."""
    if classify_url(url, image_extensions) is ResourceClass.IMAGE:
        return "images"
    ext = _extension(url)
    if ext == "" or ext in HTML_EXTENSIONS:
        return "html"
    return "other"


def looks_like_html(url: str, mime: str | None) -> bool:
    if mime:
        return mime.split(";")[0].strip().lower() in HTML_MIMES
    ext = _extension(url)
    return ext == "" or ext in HTML_EXTENSIONS


def _remove_dot_segments(path: str) -> str:
    # RFC 3986 section 5.2.4
    out: list[str] = []
    inp = path
    while inp:
        if inp.startswith("../"):
            inp = inp[3:]
        elif inp.startswith("./"):
            inp = inp[2:]
        elif inp.startswith("/./"):
            inp = "/" + inp[3:]
        elif inp == "/.":
            inp = "/"
        elif inp.startswith("/../"):
            inp = "/" + inp[4:]
            if out:
                out.pop()
        elif inp == "/..":
            inp = "/"
            if out:
                out.pop()
        elif inp in (".", ".."):
            inp = ""
        else:
            start = 1 if inp.startswith("/") else 0
            end = inp.find("/", start)
            if end == -1:
                end = len(inp)
            out.append(inp[:end])
            inp = inp[end:]
    return "".join(out)


def _normalize_escapes(text: str) -> str:
    # encode anything outside the safe set, then upper-case existing escapes;
    # a '%' not followed by two hex digits is itself escaped
    text = re.sub(r"%(?![0-9a-fA-F]{2})", "%25", text)
    text = quote(text, safe=_PATH_SAFE)
    return _PCT_RE.sub(lambda m: "%" + m.group(1).upper(), text)


def canonicalize(url: str) -> str:
    try:
        parts = urlsplit(url.strip())
        port = parts.port
    except ValueError as exc:
        raise InvalidURL(f"{url!r}: {exc}") from exc
    scheme = parts.scheme.lower()
    if not scheme or not parts.netloc or not parts.hostname:
        raise InvalidURL(f"{url!r}: not an absolute URL")
    host = parts.hostname.lower()
    if ":" in host:  # IPv6 literal
        host = f"[{host}]"
    netloc = host
    if port is not None and str(port) != _DEFAULT_PORTS.get(scheme):
        netloc = f"{host}:{port}"
    if parts.username is not None:
        userinfo = parts.username + (f":{parts.password}" if parts.password is not None else "")
        netloc = f"{userinfo}@{netloc}"
    path = _normalize_escapes(_remove_dot_segments(parts.path)) or "/"
    if not path.startswith("/"):
        path = "/" + path
    return urlunsplit((scheme, netloc, path, parts.query, ""))


def in_scope(url: str, rule: ScopeRule) -> bool:
    if rule.mode is ScopeMode.HOST_ONLY:
        return urlsplit(url).netloc == urlsplit(rule.root).netloc
    return url.startswith(rule.root)


class _LinkParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.refs: list[str] = []
        self.base: str | None = None

    def handle_starttag(self, tag, attrs):
        if tag == "base" and self.base is None:
            href = dict(attrs).get("href")
            if href:
                self.base = href.strip()
            return
        for value in _link_attrs(tag, attrs):
            self.refs.append(value)

    handle_startendtag = handle_starttag


def _link_attrs(tag: str, attrs) -> list[str]:
    names = LINK_ATTRIBUTES.get(tag)
    if not names:
        return []
    amap = {k.lower(): v for k, v in attrs if v is not None}
    if tag == "input" and amap.get("type", "").lower() != "image":
        return []
    return [amap[n].strip() for n in names if amap.get(n, "").strip()]


def decode_html(html: bytes, charset: str = "utf-8") -> str | None:
    try:
        return html.decode(charset)
    except LookupError:
        log.warning("unknown charset %r; skipping link extraction", charset)
        return None
    except UnicodeDecodeError:
        log.warning("content is not valid %s; decoding lossily", charset)
        return html.decode(charset, errors="replace")


def resolve_reference(ref: str, base: str) -> str | None:
    """Resolve *ref* against *base*; None for fragment-only or non-http references."""
    ref = ref.split("#", 1)[0]
    if not ref:
        return None
    absolute = urljoin(base, ref)
    if urlsplit(absolute).scheme.lower() not in ("http", "https"):
        return None
    try:
        return canonicalize(absolute)
    except InvalidURL:
        return None


def extract_links(html: bytes, base: str, charset: str = "utf-8") -> list[str]:
    text = decode_html(html, charset)
    if text is None:
        return []
    parser = _LinkParser()
    parser.feed(text)
    parser.close()
    effective_base = urljoin(base, parser.base) if parser.base else base
    seen: dict[str, None] = {}
    for ref in parser.refs:
        url = resolve_reference(ref, effective_base)
        if url is not None and url not in seen:
            seen[url] = None
    return list(seen)

