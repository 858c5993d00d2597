"""Multi-target domain adaptation engine."""

import json

from ._mtda import (
    ConfigError,
    DatasetRegistry,
    HyperParams,
    IoError,
    RuntimeAbort,
    SourceConvergence,
    bce_edge,
    desk_scale_hyperparams,
    edge_targets,
    make_synthetic,
    normalize_affinity,
    select_domain,
)
from . import _mtda

__all__ = [
    "ConfigError",
    "DatasetRegistry",
    "HyperParams",
    "IoError",
    "RuntimeAbort",
    "SourceConvergence",
    "bce_edge",
    "desk_scale_hyperparams",
    "edge_targets",
    "make_synthetic",
    "normalize_affinity",
    "render_report",
    "run",
    "select_domain",
]


def run(registry, hp, dry_run=False):
    """Runs the full procedure and returns the manifest as a dict."""
    return json.loads(_mtda._run(registry, hp, dry_run))


def render_report(manifest):
    """Pass-by-pass table of a manifest dict: (table, csv, warnings, complete)."""
    return _mtda._render_report(json.dumps(manifest))
