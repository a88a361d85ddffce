"""Synthetic decaying collections and simulated repository caches."""

from .collection import (
    BinCounts,
    CollectionCounts,
    CollectionSpec,
    Resource,
    ResourceSchedule,
    bin_counts,
    build_schedule,
    collection_counts,
    daily_queries,
    generate_collection,
    image_daily_queries,
    lose_site,
    page_removal_day,
    render,
    write_snapshot,
)
from .simulate import (
    EXAMPLE_BEHAVIORS,
    CacheTimeline,
    LifecycleMetrics,
    RepoBehavior,
    ResourceTimeline,
    lifecycle_metrics,
    metrics_for,
    simulate_cache,
    simulate_resource,
    timeline_to_fixture,
)

__all__ = [
    "EXAMPLE_BEHAVIORS", "BinCounts", "CacheTimeline", "CollectionCounts", "CollectionSpec", "LifecycleMetrics",
    "RepoBehavior", "Resource", "ResourceSchedule", "ResourceTimeline", "bin_counts", "build_schedule",
    "collection_counts", "daily_queries", "generate_collection", "image_daily_queries", "lifecycle_metrics",
    "lose_site", "metrics_for", "page_removal_day", "render", "simulate_cache", "simulate_resource",
    "timeline_to_fixture", "write_snapshot",
]
