"""Cutoff-based streaming estimators for the number of distinct elements."""

from .delphic import CuboidSet, RangeSet, process_set, run_set_stream, sample_geometric
from .rng import UniformSource, make_generator
from .scores import (
    DiscreteUniform,
    GeoFinite,
    GeoInfinite,
    ScoreDistribution,
    Uniform,
    cdf_below,
    map_g,
    sample_score,
)
from .sizing import SizingParams, SizingResult, bucket_limit
from .sketch import (
    VARIANTS,
    BernoulliSketch,
    CutoffList,
    CutoffSketch,
    EstimateReport,
    SketchAborted,
    SketchConfig,
    Status,
    Transcript,
    UpdateRule,
    make_sketch,
    run,
)

__version__ = "0.1.0"

__all__ = [
    "BernoulliSketch", "CuboidSet", "CutoffList", "CutoffSketch", "DiscreteUniform",
    "EstimateReport", "GeoFinite", "GeoInfinite", "RangeSet", "ScoreDistribution",
    "SizingParams", "SizingResult", "SketchAborted", "SketchConfig", "Status",
    "Transcript", "Uniform", "UniformSource", "UpdateRule", "VARIANTS", "bucket_limit",
    "cdf_below", "make_generator", "make_sketch", "map_g", "process_set", "run",
    "run_set_stream", "sample_geometric", "sample_score",
]
