"""Recover lost websites from web archives and search-engine caches."""

from .budget import CostProfile, QueryBudget, RespectPolicy, SystemClock, VirtualClock, cost_bounds, classic_profile
from .extractor import ScopeMode, ScopeRule, canonicalize, extract_links, in_scope
from .reconstructor import (
    Reconstructor,
    ReconstructionResult,
    RecoveredResource,
    RecoveryPolicy,
    VersionPreference,
    reconstruct,
    resume,
)
from .store import SiteStore

__version__ = "0.1.0"

__all__ = [
    "CostProfile", "QueryBudget", "Reconstructor", "ReconstructionResult", "RecoveredResource", "RecoveryPolicy",
    "RespectPolicy", "ScopeMode", "ScopeRule", "SiteStore", "SystemClock", "VersionPreference", "VirtualClock",
    "canonicalize", "cost_bounds", "extract_links", "in_scope", "classic_profile", "reconstruct", "resume",
]
