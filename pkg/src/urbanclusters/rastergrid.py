"""Raster ingestion, clipping, thresholding, connected-component cluster
extraction, vectorization and area accounting for the nighttime-light
pipeline.

Grids hold 6-bit digital numbers (DN 0..63) plus a nodata sentinel. Cell
arrays are row-major with row 0 at the top edge (file order for ESRI
ASCII); ``origin`` is the lower-left corner in CRS units.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import (
    InvalidPolygon,
    MissingHeaderField,
    ParseError,
    ValueOutOfRange,
)
from .geometry import chaikin_ring, points_in_rings

DN_MAX = 63
KM_PER_DEGREE = 111.32

_GEOGRAPHIC_TAGS = ("geographic", "lonlat", "latlon", "wgs84", "epsg:4326", "4326")


@dataclass(frozen=True)
class DnGrid:
    width: int
    height: int
    origin: tuple[float, float]  # lower-left corner, CRS units
    cell_size: float
    crs_tag: str
    nodata: int
    cells: np.ndarray  # (height, width) int32, row 0 = top

    def __post_init__(self):
        if self.cells.shape != (self.height, self.width):
            raise ValueError("cells shape does not match width/height")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be > 0")

    @property
    def is_geographic(self) -> bool:
        return self.crs_tag.lower() in _GEOGRAPHIC_TAGS

    def valid_mask(self) -> np.ndarray:
        return self.cells != self.nodata

    def values(self) -> np.ndarray:
        """DN of valid cells, flattened."""
        return self.cells[self.valid_mask()]

    def row_center_y(self, row) -> np.ndarray:
        """CRS y of cell centers for the given row index/indices (row 0 = top)."""
        row = np.asarray(row, dtype=float)
        return self.origin[1] + (self.height - row - 0.5) * self.cell_size

    def col_center_x(self, col) -> np.ndarray:
        col = np.asarray(col, dtype=float)
        return self.origin[0] + (col + 0.5) * self.cell_size

    def cell_area_km2(self, row: int | None = None) -> float:
        """Area of one cell in km². Projected grids assume meters; geographic
        grids apply a cos(latitude) correction at the row's center latitude."""
        if not self.is_geographic:
            return (self.cell_size / 1000.0) ** 2
        if row is None:
            row = (self.height - 1) / 2.0
        lat = float(self.row_center_y(row))
        return (self.cell_size * KM_PER_DEGREE) ** 2 * math.cos(math.radians(lat))

    def row_areas_km2(self) -> np.ndarray:
        """Per-row cell area in km² (constant for projected grids)."""
        if not self.is_geographic:
            return np.full(self.height, (self.cell_size / 1000.0) ** 2)
        lats = self.row_center_y(np.arange(self.height))
        return (self.cell_size * KM_PER_DEGREE) ** 2 * np.cos(np.radians(lats))


def _check_dn_range(cells: np.ndarray, nodata: int, where: str) -> None:
    bad = (cells != nodata) & ((cells < 0) | (cells > DN_MAX))
    if np.any(bad):
        v = int(cells[bad][0])
        raise ValueOutOfRange(f"{where}: DN value {v} outside [0, {DN_MAX}]")


def load_grid(path, format: str = "esri_ascii", crs_tag: str = "projected") -> DnGrid:
    """Load a grid from ESRI ASCII or the package's flat binary format."""
    if format == "esri_ascii":
        return _load_esri_ascii(path, crs_tag)
    if format == "flat_binary":
        return _load_flat_binary(path, crs_tag)
    raise ValueError(f"unknown grid format {format!r}")


def _load_esri_ascii(path, crs_tag: str) -> DnGrid:
    header: dict[str, float] = {}
    data_tokens: list[str] = []
    try:
        f = open(path)
    except OSError as e:
        raise ParseError(f"cannot read grid {path}: {e}")
    with f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            key = parts[0].lower()
            if not data_tokens and key in (
                "ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value",
            ):
                if len(parts) != 2:
                    raise ParseError(f"{path}: malformed header line {line.strip()!r}")
                header[key] = float(parts[1])
            else:
                data_tokens.extend(parts)
    for k in ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize"):
        if k not in header:
            raise MissingHeaderField(f"{path}: missing header field {k!r}")
    w, h = int(header["ncols"]), int(header["nrows"])
    nodata = int(header.get("nodata_value", -9999))
    if len(data_tokens) != w * h:
        raise ParseError(f"{path}: expected {w * h} cell values, found {len(data_tokens)}")
    try:
        cells = np.array([int(float(t)) for t in data_tokens], dtype=np.int32).reshape(h, w)
    except ValueError as e:
        raise ParseError(f"{path}: non-numeric cell value ({e})")
    _check_dn_range(cells, nodata, str(path))
    return DnGrid(
        width=w,
        height=h,
        origin=(header["xllcorner"], header["yllcorner"]),
        cell_size=header["cellsize"],
        crs_tag=crs_tag,
        nodata=nodata,
        cells=cells,
    )


_BIN_MAGIC = b"DNG1"
_BIN_HEADER = struct.Struct("<4sHHddd")  # magic, ncols, nrows, xll, yll, cellsize
BIN_NODATA = 255


def _load_flat_binary(path, crs_tag: str) -> DnGrid:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise ParseError(f"cannot read grid {path}: {e}")
    if len(raw) < _BIN_HEADER.size:
        raise ParseError(f"{path}: truncated header")
    magic, w, h, xll, yll, cs = _BIN_HEADER.unpack_from(raw)
    if magic != _BIN_MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r}")
    if cs <= 0:
        raise MissingHeaderField(f"{path}: non-positive cellsize in header")
    body = raw[_BIN_HEADER.size:]
    if len(body) != w * h:
        raise ParseError(f"{path}: expected {w * h} cell bytes, found {len(body)}")
    cells = np.frombuffer(body, dtype=np.uint8).astype(np.int32).reshape(h, w)
    _check_dn_range(cells, BIN_NODATA, str(path))
    return DnGrid(
        width=w, height=h, origin=(xll, yll), cell_size=cs,
        crs_tag=crs_tag, nodata=BIN_NODATA, cells=cells,
    )


def write_esri_ascii(grid: DnGrid, path) -> None:
    with open(path, "w") as f:
        f.write(f"ncols {grid.width}\n")
        f.write(f"nrows {grid.height}\n")
        f.write(f"xllcorner {grid.origin[0]:.10g}\n")
        f.write(f"yllcorner {grid.origin[1]:.10g}\n")
        f.write(f"cellsize {grid.cell_size:.10g}\n")
        f.write(f"NODATA_value {grid.nodata}\n")
        for row in grid.cells:
            f.write(" ".join(str(int(v)) for v in row))
            f.write("\n")


def write_flat_binary(grid: DnGrid, path) -> None:
    if grid.width > 0xFFFF or grid.height > 0xFFFF:
        raise ValueError("flat binary format caps dimensions at 65535")
    cells = grid.cells.copy()
    cells[cells == grid.nodata] = BIN_NODATA
    header = _BIN_HEADER.pack(
        _BIN_MAGIC, grid.width, grid.height,
        grid.origin[0], grid.origin[1], grid.cell_size,
    )
    Path(path).write_bytes(header + cells.astype(np.uint8).tobytes())


def _normalize_rings(boundary):
    """Accept a single ring or a list of rings; validate minimally."""
    if not boundary:
        raise InvalidPolygon("empty boundary")
    first = boundary[0]
    rings = [boundary] if (len(first) == 2 and np.isscalar(first[0])) else list(boundary)
    for ring in rings:
        if len(ring) < 3:
            raise InvalidPolygon(f"ring with {len(ring)} vertices")
        for p in ring:
            if not (np.isfinite(p[0]) and np.isfinite(p[1])):
                raise InvalidPolygon("non-finite boundary coordinate")
    return rings


def clip(grid: DnGrid, boundary) -> DnGrid:
    """Set cells whose centers fall outside the boundary polygon to nodata.

    ``boundary`` is a ring or list of rings (shell plus holes, even-odd
    rule). The grid extent is unchanged.
    """
    rings = _normalize_rings(boundary)
    cols, rows = np.meshgrid(np.arange(grid.width), np.arange(grid.height))
    px = grid.col_center_x(cols.ravel())
    py = grid.row_center_y(rows.ravel())
    inside = points_in_rings(px, py, rings).reshape(grid.height, grid.width)
    cells = grid.cells.copy()
    cells[~inside] = grid.nodata
    return replace(grid, cells=cells)


def threshold_mask(grid: DnGrid, t: int, strict: bool = True) -> np.ndarray:
    """Boolean mask of lit cells: DN > t (or >= t when strict=False)."""
    if not 0 <= t <= DN_MAX:
        raise ValueOutOfRange(f"threshold {t} outside [0, {DN_MAX}]")
    valid = grid.valid_mask()
    return (grid.cells > t if strict else grid.cells >= t) & valid


_STRUCT_FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCT_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class LabeledMask:
    width: int
    height: int
    labels: np.ndarray  # (height, width) int32, 0 = background
    connectivity: str  # "four" | "eight"
    n_clusters: int


def connected_components(mask: np.ndarray, connectivity: str = "eight") -> LabeledMask:
    """Label connected true-regions with dense ids in deterministic
    row-major first-encounter order."""
    if connectivity not in ("four", "eight"):
        raise ValueError(f"connectivity must be 'four' or 'eight', got {connectivity!r}")
    structure = _STRUCT_FOUR if connectivity == "four" else _STRUCT_EIGHT
    raw, n = ndimage.label(mask, structure=structure)
    raw = raw.astype(np.int32)
    if n > 0:
        flat = raw.ravel()
        nz = flat != 0
        # renumber so label k is the k-th distinct region met in row-major scan
        uniq, first = np.unique(flat[nz], return_index=True)
        order = uniq[np.argsort(first)]
        remap = np.zeros(n + 1, dtype=np.int32)
        remap[order] = np.arange(1, n + 1, dtype=np.int32)
        raw = remap[raw]
    h, w = mask.shape
    return LabeledMask(width=w, height=h, labels=raw, connectivity=connectivity, n_clusters=int(n))


@dataclass
class UrbanCluster:
    """A polygonal urban cluster. ``shell`` is the outer ring (CCW in CRS
    coordinates), ``holes`` are CW rings. Areas come from cell counts for
    raster clusters and from face sums for street clusters, never from
    float shoelace on output coordinates."""

    id: int
    shell: list[tuple[float, float]]
    holes: list[list[tuple[float, float]]]
    area_km2: float
    source: str  # "ntl" | "street"
    year: int | None = None
    threshold_used: float | None = None
    cell_count: int | None = None
    grid_rings: list | None = field(default=None, repr=False)  # integer corner-space rings


# Directions in corner space (x=col, y=row): E, N, W, S with CCW codes.
_DIR_STEP = ((1, 0), (0, 1), (-1, 0), (0, -1))


def _boundary_darts(labels: np.ndarray):
    """For every labeled cell side facing a different label, emit a dart
    (label, dircode, x0, y0) oriented so the region is on the left and a
    single cell traces with positive shoelace in corner space."""
    h, w = labels.shape
    out = []
    pad = np.zeros((h + 2, w + 2), dtype=labels.dtype)
    pad[1:-1, 1:-1] = labels
    core = pad[1:-1, 1:-1]
    neigh = {
        "N": pad[0:-2, 1:-1],
        "S": pad[2:, 1:-1],
        "W": pad[1:-1, 0:-2],
        "E": pad[1:-1, 2:],
    }
    # dart start corner and direction code per exposed side
    for side, (dir_code, fx, fy) in {
        "N": (0, 0, 0),   # (c, r) -> (c+1, r)
        "E": (1, 1, 0),   # (c+1, r) -> (c+1, r+1)
        "S": (2, 1, 1),   # (c+1, r+1) -> (c, r+1)
        "W": (3, 0, 1),   # (c, r+1) -> (c, r)
    }.items():
        rs, cs = np.nonzero((core != 0) & (core != neigh[side]))
        if rs.size == 0:
            continue
        lab = core[rs, cs]
        x0 = cs + fx
        y0 = rs + fy
        out.append(np.column_stack([lab, np.full(rs.size, dir_code), x0, y0]))
    if not out:
        return np.empty((0, 4), dtype=np.int64)
    table = np.concatenate(out).astype(np.int64)
    # deterministic order: by label, then direction, then start corner
    order = np.lexsort((table[:, 3], table[:, 2], table[:, 1], table[:, 0]))
    return table[order]


def _trace_label_rings(darts_for_label: np.ndarray):
    """Trace the boundary darts of one label into cycles, jumping across
    pinch corners so the region yields exactly one outer (positive) ring.
    Returns (outer_ring, hole_rings) in integer corner space."""
    out_map: dict[tuple[int, int], dict[int, int]] = {}
    for i in range(darts_for_label.shape[0]):
        d, x, y = int(darts_for_label[i, 1]), int(darts_for_label[i, 2]), int(darts_for_label[i, 3])
        out_map.setdefault((x, y), {})[d] = i

    n = darts_for_label.shape[0]
    seen = np.zeros(n, dtype=bool)
    cycles = []
    for start in range(n):
        if seen[start]:
            continue
        ring = []
        i = start
        while not seen[i]:
            seen[i] = True
            d, x, y = int(darts_for_label[i, 1]), int(darts_for_label[i, 2]), int(darts_for_label[i, 3])
            ring.append((x, y))
            sx, sy = _DIR_STEP[d]
            head = (x + sx, y + sy)
            rev = (d + 2) % 4
            choices = out_map[head]
            for k in (1, 2, 3):  # CCW rotation from the reversal
                cand = (rev + k) % 4
                if cand in choices:
                    i = choices[cand]
                    break
            else:
                raise AssertionError("boundary trace dead end (corrupt labeling)")
        cycles.append(ring)

    outer = None
    holes = []
    for ring in cycles:
        ring = _compact_collinear(ring)
        a = 0
        m = len(ring)
        for j in range(m):
            x0, y0 = ring[j]
            x1, y1 = ring[(j + 1) % m]
            a += x0 * y1 - x1 * y0
        if a > 0:
            if outer is not None:
                raise AssertionError("label region traced to multiple outer rings")
            outer = ring
        else:
            holes.append(ring)
    if outer is None:
        raise AssertionError("label region with no outer ring")
    return outer, holes


def _compact_collinear(ring):
    """Merge runs of unit steps that share a direction (axis-aligned rings)."""
    out = []
    n = len(ring)
    for i in range(n):
        px, py = ring[(i - 1) % n]
        x, y = ring[i]
        nx, ny = ring[(i + 1) % n]
        if (x - px, y - py) != (nx - x, ny - y):
            out.append((x, y))
    return out


def vectorize(
    labeled: LabeledMask,
    grid: DnGrid,
    chaikin_weight: float | None = None,
    chaikin_iterations: int = 1,
    source: str = "ntl",
    year: int | None = None,
    threshold: float | None = None,
) -> list[UrbanCluster]:
    """Trace one polygon (with holes) per label.

    Areas are exact: cell_count times the per-cell area (per-row areas for
    geographic grids). Chaikin smoothing, when asked for, perturbs only the
    emitted coordinates; the reported area stays the raster area.
    """
    if (labeled.height, labeled.width) != (grid.height, grid.width):
        raise ValueError("labeled mask and grid dimensions differ")
    labels = labeled.labels
    table = _boundary_darts(labels)
    row_areas = grid.row_areas_km2()
    # per-label cell counts and per-row breakdown for geographic grids
    clusters: list[UrbanCluster] = []
    if labeled.n_clusters == 0:
        return clusters
    flat = labels.ravel()
    nz = flat != 0
    counts = np.bincount(flat[nz], minlength=labeled.n_clusters + 1)
    if grid.is_geographic:
        rows = np.nonzero(labels)[0]
        areas_acc = np.zeros(labeled.n_clusters + 1)
        np.add.at(areas_acc, labels[labels != 0], row_areas[rows])
    else:
        areas_acc = counts * row_areas[0]

    bounds = np.searchsorted(table[:, 0], np.arange(1, labeled.n_clusters + 2))
    h = labeled.height
    xll, yll = grid.origin
    cs = grid.cell_size
    for lab in range(1, labeled.n_clusters + 1):
        seg = table[bounds[lab - 1]:bounds[lab]]
        outer, holes = _trace_label_rings(seg)

        def to_crs(ring):
            pts = [(xll + x * cs, yll + (h - y) * cs) for (x, y) in ring]
            pts.reverse()  # the y-flip mirrors orientation; restore it
            if chaikin_weight is not None:
                pts = chaikin_ring(pts, chaikin_weight, chaikin_iterations)
            return pts

        clusters.append(
            UrbanCluster(
                id=lab,
                shell=to_crs(outer),
                holes=[to_crs(hole) for hole in holes],
                area_km2=float(areas_acc[lab]),
                source=source,
                year=year,
                threshold_used=threshold,
                cell_count=int(counts[lab]),
                grid_rings=[outer] + holes,
            )
        )
    return clusters


def cluster_areas(clusters: list[UrbanCluster], cell_area_km2: float | None = None):
    """Per-cluster (id, area_km2) pairs plus the total.

    When ``cell_area_km2`` is given areas are rederived from cell counts,
    otherwise the stored (already exact) areas are reported.
    """
    pairs = []
    for c in clusters:
        if cell_area_km2 is not None and c.cell_count is not None:
            pairs.append((c.id, c.cell_count * cell_area_km2))
        else:
            pairs.append((c.id, c.area_km2))
    total = float(sum(a for _, a in pairs))
    return pairs, total


def clusters_to_geojson(clusters: list[UrbanCluster]) -> dict:
    features = []
    for c in clusters:
        rings = [[[float(x), float(y)] for (x, y) in c.shell + [c.shell[0]]]]
        for hole in c.holes:
            rings.append([[float(x), float(y)] for (x, y) in hole + [hole[0]]])
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": rings},
                "properties": {
                    "id": c.id,
                    "area_km2": c.area_km2,
                    "source": c.source,
                    "year": c.year,
                    "threshold": c.threshold_used,
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}


def write_clusters_geojson(clusters: list[UrbanCluster], path) -> None:
    with open(path, "w") as f:
        json.dump(clusters_to_geojson(clusters), f, sort_keys=True, separators=(",", ":"))
        f.write("\n")
