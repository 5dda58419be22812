"""Urban cluster (natural city) extraction from nighttime-light rasters and
street networks, with head/tail breaks classification and power-law
validation of the resulting cluster-size distributions."""

__version__ = "0.1.0"

from .headtail import (
    HeadTailHierarchy,
    HeadTailLevel,
    StopReason,
    head_tail_breaks,
    ht_index,
    multi_year_thresholds,
)
from .calib import (
    CalibrationModel,
    apply_calibration,
    fit_calibration,
    select_reference,
    sum_of_lights,
)
from .rastergrid import (
    DnGrid,
    LabeledMask,
    UrbanCluster,
    clip,
    cluster_areas,
    connected_components,
    load_grid,
    threshold_mask,
    vectorize,
)
from .scaling import (
    GofResult,
    PowerLawFit,
    fit_power_law,
    goodness_of_fit,
    rank_size,
)
from .compare import OverlayReport, largest_cluster, overlay_stats
from .streetnet import (
    FacePolygon,
    StreetNode,
    StreetSegment,
    VoronoiGraph,
    build_voronoi,
    extract_nodes,
    merge_adjacent,
    polygonize,
    select_short_edges,
    threshold_clusters,
)
from .pipeline import NtlRunConfig, StreetRunConfig, run_ntl_pipeline, run_street_pipeline

__all__ = [
    "HeadTailHierarchy", "HeadTailLevel", "StopReason",
    "head_tail_breaks", "ht_index", "multi_year_thresholds",
    "CalibrationModel", "sum_of_lights", "select_reference",
    "fit_calibration", "apply_calibration",
    "DnGrid", "LabeledMask", "UrbanCluster",
    "load_grid", "clip", "threshold_mask", "connected_components",
    "vectorize", "cluster_areas",
    "PowerLawFit", "GofResult", "fit_power_law", "goodness_of_fit", "rank_size",
    "OverlayReport", "overlay_stats", "largest_cluster",
    "StreetSegment", "StreetNode", "VoronoiGraph", "FacePolygon",
    "extract_nodes", "build_voronoi", "select_short_edges",
    "polygonize", "merge_adjacent", "threshold_clusters",
    "NtlRunConfig", "StreetRunConfig", "run_ntl_pipeline", "run_street_pipeline",
    "__version__",
]
