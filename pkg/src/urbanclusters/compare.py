"""Overlay statistics between a cluster set and a reference urban layer.

Totals come from the shoelace formula on each polygon (outer minus holes);
the intersection is computed by polygon clipping, pairwise intersections
unioned so overlaps are not double counted. Inputs must be simple polygons
with holes; self-intersecting geometry is rejected, not repaired.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from shapely.geometry import Polygon
from shapely.ops import unary_union

from .errors import EmptyInput, InvalidPolygon, NonPositiveRegionArea
from .geometry import shoelace
from .rastergrid import UrbanCluster


@dataclass(frozen=True)
class OverlayReport:
    total_area_a: float
    total_area_b: float
    intersection_area: float
    pct_of_region_a: float
    pct_of_region_b: float
    region_area: float

    def to_dict(self) -> dict:
        return {
            "total_area_a_km2": self.total_area_a,
            "total_area_b_km2": self.total_area_b,
            "intersection_area_km2": self.intersection_area,
            "pct_of_region_a": self.pct_of_region_a,
            "pct_of_region_b": self.pct_of_region_b,
            "region_area_km2": self.region_area,
        }


def _as_rings(poly):
    """Normalize UrbanCluster | (shell, holes) | bare ring to (shell, holes)."""
    if isinstance(poly, UrbanCluster):
        return poly.shell, poly.holes
    if isinstance(poly, (tuple, list)) and len(poly) == 2 and poly[0] and \
            isinstance(poly[0][0], (tuple, list)) and len(poly[0][0]) == 2 and \
            not isinstance(poly[0][0][0], (tuple, list)):
        # (shell, holes) pair
        return list(poly[0]), [list(h) for h in poly[1]]
    # bare ring
    return list(poly), []


def _shapely_polygon(poly) -> Polygon:
    shell, holes = _as_rings(poly)
    if len(shell) < 3:
        raise InvalidPolygon(f"ring with {len(shell)} vertices")
    p = Polygon(shell, holes)
    if not p.is_valid:
        raise InvalidPolygon("self-intersecting or otherwise invalid polygon")
    return p


def _shoelace_area(poly) -> float:
    shell, holes = _as_rings(poly)
    return abs(shoelace(shell)) - sum(abs(shoelace(h)) for h in holes)


def overlay_stats(set_a, set_b, region_area_km2: float, units_per_km: float = 1000.0) -> OverlayReport:
    """Overlay two polygon sets over a region of known size.

    Geometry is in CRS units (meters by default); areas are reported in
    km². Percentages are of ``region_area_km2``.
    """
    if region_area_km2 <= 0:
        raise NonPositiveRegionArea(f"region area must be > 0, got {region_area_km2}")
    scale = units_per_km ** 2
    polys_a = [_shapely_polygon(p) for p in set_a]
    polys_b = [_shapely_polygon(p) for p in set_b]
    total_a = sum(_shoelace_area(p) for p in set_a) / scale
    total_b = sum(_shoelace_area(p) for p in set_b) / scale

    pieces = []
    for pa in polys_a:
        for pb in polys_b:
            if pa.intersects(pb):
                inter = pa.intersection(pb)
                if not inter.is_empty:
                    pieces.append(inter)
    inter_area = unary_union(pieces).area / scale if pieces else 0.0

    return OverlayReport(
        total_area_a=float(total_a),
        total_area_b=float(total_b),
        intersection_area=float(inter_area),
        pct_of_region_a=float(100.0 * total_a / region_area_km2),
        pct_of_region_b=float(100.0 * total_b / region_area_km2),
        region_area=float(region_area_km2),
    )


def largest_cluster(clusters) -> tuple[int, float]:
    """(id, area_km2) of the biggest cluster; ties go to the smaller id."""
    clusters = list(clusters)
    if not clusters:
        raise EmptyInput("no clusters")
    best = max(clusters, key=lambda c: (c.area_km2, -c.id))
    return best.id, best.area_km2


def concentration(clusters) -> float:
    """Share of total cluster area held by the largest cluster."""
    total = sum(c.area_km2 for c in clusters)
    if total <= 0:
        raise EmptyInput("no positive cluster area")
    return largest_cluster(clusters)[1] / total


def write_overlay_report(report: OverlayReport, path) -> None:
    with open(path, "w") as f:
        json.dump(report.to_dict(), f, sort_keys=True, separators=(",", ":"))
        f.write("\n")
