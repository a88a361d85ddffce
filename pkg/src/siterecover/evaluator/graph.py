from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from ..extractor import canonicalize, extract_links
from .snapshot import Snapshot


@dataclass
class WebGraph:
    nodes: set[str] = field(default_factory=set)
    edges: set[tuple[str, str]] = field(default_factory=set)
    unreachable: set[str] = field(default_factory=set)  # files on disk not reached from the root

    def __post_init__(self):
        for a, b in self.edges:
            if a not in self.nodes or b not in self.nodes:
                raise ValueError(f"edge {a} -> {b} has an endpoint outside the graph")


def build_web_graph(snapshot_root: str | Path, root_url: str) -> WebGraph:
    """Crawl a snapshot from *root_url*, following links to files that exist in it."""
    snap = Snapshot(snapshot_root)
    root_url = canonicalize(root_url)
    root_path = snap.path_of(root_url)
    if not snap.exists(root_path):
        raise FileNotFoundError(f"root {root_url} ({root_path}) is not in {snapshot_root}")
    nodes = {root_url}
    edges: set[tuple[str, str]] = set()
    reached_paths = {root_path}
    queue = deque([root_url])
    while queue:
        url = queue.popleft()
        rel = snap.path_of(url)
        if not snap.is_html(rel):
            continue
        for link in extract_links(snap.read(rel), url):
            target = snap.path_of(link)
            if not snap.exists(target):
                continue
            edges.add((url, link))
            if link not in nodes:
                nodes.add(link)
                reached_paths.add(target)
                queue.append(link)
    unreachable = {snap.url_of(p) for p in snap.files() if p not in reached_paths}
    return WebGraph(nodes, edges, unreachable)
