"""Python access to the neolus library."""

import json

from ._core import (
    Error,
    average_ranks,
    clip_and_normalize_sf,
    generate_dataset,
    generate_frame,
    global_average_pool,
    manifest_summary,
    mape,
    phantom_sf,
    position_preserving_pool,
    select_frame_indices,
    spearman,
)
from . import _core


def make_split(manifest_path, seed, scheme="kfold:5"):
    """Patient-level split as a dict with seed, scheme and assignments."""
    return json.loads(_core.make_split(str(manifest_path), seed, scheme))


def report(predictions_csv, sf_clip=450.0, sf_norm=450.0):
    """Metrics of a predictions CSV as a dict keyed by level."""
    return json.loads(_core.report_json(str(predictions_csv), sf_clip, sf_norm))


__all__ = [
    "Error",
    "average_ranks",
    "clip_and_normalize_sf",
    "generate_dataset",
    "generate_frame",
    "global_average_pool",
    "make_split",
    "manifest_summary",
    "mape",
    "phantom_sf",
    "position_preserving_pool",
    "report",
    "select_frame_indices",
    "spearman",
]
