"""Urban clusters from street networks: segment endpoints become nodes,
nodes seed a Voronoi diagram, edges shorter than the mean edge length are
kept, their bounded faces are polygonized, edge-adjacent faces merge into
clusters, and head/tail breaks on cluster areas supplies the selection
thresholds.

The diagram itself comes from Qhull; everything downstream (clipping,
finite-edge flagging, polygonization, merging) works on the exact
vertex-indexed arrangement so face adjacency and area additivity are
combinatorial, not tolerance-based.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Voronoi, QhullError

from .errors import (
    AllCollinear,
    EmptyInput,
    GeographicCrs,
    InvalidPolygon,
    LevelOutOfRange,
    NoFiniteEdges,
    ParseError,
    TooFewSites,
)
from .geometry import DartTracer, remove_spikes, shoelace
from .headtail import HeadTailHierarchy
from .rastergrid import UrbanCluster


@dataclass(frozen=True)
class StreetSegment:
    id: int
    polyline: tuple  # ((x, y), ...) with >= 2 vertices

    def __post_init__(self):
        if len(self.polyline) < 2:
            raise InvalidPolygon(f"segment {self.id}: needs >= 2 vertices")
        for p, q in zip(self.polyline, self.polyline[1:]):
            if p == q:
                raise InvalidPolygon(f"segment {self.id}: repeated consecutive vertex {p}")


@dataclass
class StreetNode:
    id: int
    position: tuple[float, float]
    degree: int


@dataclass(frozen=True)
class VoronoiEdge:
    a: tuple[float, float]
    b: tuple[float, float]
    vertex_a: int  # original Voronoi vertex id, or -1 for a clip-box endpoint
    vertex_b: int
    left_site: int
    right_site: int
    length: float
    finite: bool  # True iff both endpoints are original vertices strictly inside the box


@dataclass
class VoronoiGraph:
    sites: list[StreetNode]
    vertices: np.ndarray  # (n, 2) Voronoi vertex coordinates
    edges: list[VoronoiEdge]
    clip_box: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    point_region: np.ndarray = field(repr=False, default=None)
    regions: list = field(repr=False, default=None)
    ridge_points: np.ndarray = field(repr=False, default=None)
    ridge_vertices: list = field(repr=False, default=None)

    def finite_edges(self) -> list[VoronoiEdge]:
        return [e for e in self.edges if e.finite]


@dataclass
class FacePolygon:
    id: int
    ring: list[tuple[float, float]]  # closed CCW, last vertex != first
    area_km2: float
    darts: list[tuple[int, bool]] = field(repr=False, default_factory=list)
    vertex_ids: list[int] = field(repr=False, default_factory=list)
    coords: dict = field(repr=False, default=None)
    edge_vertices: dict = field(repr=False, default=None)  # edge id -> (va, vb)


# ---------------------------------------------------------------------------
# segment I/O and node extraction
# ---------------------------------------------------------------------------

def load_segments(path, format: str | None = None, assume_projected: bool = False):
    """Read LineString GeoJSON or (id,x1,y1,x2,y2) CSV into segments.

    Inputs whose coordinates all fit in lon/lat ranges are rejected as
    geographic unless ``assume_projected`` says otherwise.
    """
    p = str(path)
    if format is None:
        format = "geojson" if p.endswith((".geojson", ".json")) else "csv"
    segments: list[StreetSegment] = []
    if format == "geojson":
        try:
            with open(path) as f:
                doc = json.load(f)
        except OSError as e:
            raise ParseError(f"cannot read segments {path}: {e}")
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: invalid GeoJSON: {e}")
        feats = doc.get("features", [doc] if doc.get("type") == "Feature" else [])
        sid = 0
        for feat in feats:
            geom = feat.get("geometry", {})
            gtype = geom.get("type")
            if gtype == "LineString":
                lines = [geom["coordinates"]]
            elif gtype == "MultiLineString":
                lines = geom["coordinates"]
            else:
                continue
            for line in lines:
                segments.append(StreetSegment(id=sid, polyline=tuple((float(x), float(y)) for x, y in line)))
                sid += 1
    elif format == "csv":
        try:
            with open(path, newline="") as f:
                rows = list(csv.reader(f))
        except OSError as e:
            raise ParseError(f"cannot read segments {path}: {e}")
        if not rows:
            raise ParseError(f"{path}: empty segment file")
        start = 1 if rows[0] and not _is_number(rows[0][0]) else 0
        for r in rows[start:]:
            if not r:
                continue
            if len(r) < 5:
                raise ParseError(f"{path}: segment row needs id,x1,y1,x2,y2: {r!r}")
            sid = int(r[0])
            segments.append(
                StreetSegment(
                    id=sid,
                    polyline=((float(r[1]), float(r[2])), (float(r[3]), float(r[4]))),
                )
            )
    else:
        raise ValueError(f"unknown segment format {format!r}")
    if not segments:
        raise EmptyInput(f"{path}: no line features found")
    if not assume_projected and _looks_geographic(segments):
        raise GeographicCrs(
            f"{path}: coordinates fit in lon/lat ranges; supply projected data "
            "or pass assume_projected"
        )
    return segments


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _looks_geographic(segments) -> bool:
    for seg in segments:
        for (x, y) in seg.polyline:
            if abs(x) > 180.0 or abs(y) > 90.0:
                return False
    return True


def extract_nodes(
    segments, snap_tol: float = 0.0, detect_crossings: bool = False
) -> list[StreetNode]:
    """Distinct segment endpoints after grid-snapping within ``snap_tol``.

    Interior polyline vertices are not nodes; degree counts incident
    segment ends (a loop segment contributes 2 to one node). Properly
    noded networks need nothing more; for non-noded data,
    ``detect_crossings`` additionally turns proper interior crossings of
    segment pairs into nodes (each crossing street adds 2 to the degree).
    Touches where an endpoint merely lies on another segment's interior
    are not crossings.
    """
    segments = list(segments)
    if not segments:
        raise EmptyInput("no segments")
    if snap_tol < 0:
        raise ValueError("snap_tol must be >= 0")

    def key(pt):
        if snap_tol == 0:
            return pt
        return (round(pt[0] / snap_tol), round(pt[1] / snap_tol))

    nodes: list[StreetNode] = []
    index: dict = {}

    def add(pt, degree_inc):
        k = key(pt)
        node = index.get(k)
        if node is None:
            node = StreetNode(id=len(nodes), position=pt, degree=0)
            index[k] = node
            nodes.append(node)
        node.degree += degree_inc

    for seg in segments:
        for pt in (seg.polyline[0], seg.polyline[-1]):
            add(pt, 1)
    if detect_crossings:
        for pt in _proper_crossings(segments):
            add(pt, 4)
    return nodes


def _proper_crossings(segments):
    """Interior crossing points of straight sub-segments, bucketed so the
    pair scan stays near-linear on dispersed networks."""
    subs = []
    for seg in segments:
        for p, q in zip(seg.polyline, seg.polyline[1:]):
            subs.append((p, q))
    xs = [c for p, q in subs for c in (p[0], q[0])]
    ys = [c for p, q in subs for c in (p[1], q[1])]
    span = max(max(xs) - min(xs), max(ys) - min(ys)) or 1.0
    h = span / 128.0

    buckets: dict = {}
    for i, (p, q) in enumerate(subs):
        x0, x1 = sorted((p[0], q[0]))
        y0, y1 = sorted((p[1], q[1]))
        for bx in range(int(x0 // h), int(x1 // h) + 1):
            for by in range(int(y0 // h), int(y1 // h) + 1):
                buckets.setdefault((bx, by), []).append(i)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    out = []
    seen_pairs = set()
    for members in buckets.values():
        for ii in range(len(members)):
            for jj in range(ii + 1, len(members)):
                pair = (members[ii], members[jj])
                if pair in seen_pairs:
                    continue
                seen_pairs.add(pair)
                a, b = subs[pair[0]]
                c, d = subs[pair[1]]
                d1 = cross(c, d, a)
                d2 = cross(c, d, b)
                d3 = cross(a, b, c)
                d4 = cross(a, b, d)
                if d1 * d2 < 0 and d3 * d4 < 0:  # strict: touches do not count
                    t = d1 / (d1 - d2)
                    out.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
    return out


# ---------------------------------------------------------------------------
# Voronoi construction
# ---------------------------------------------------------------------------

def _clip_to_box(p, q, box):
    """Liang-Barsky clip of segment p->q to an axis-aligned box.

    Returns (clipped_p, clipped_q, t0, t1) or None when fully outside.
    """
    (xmin, ymin, xmax, ymax) = box
    x0, y0 = p
    x1, y1 = q
    dx, dy = x1 - x0, y1 - y0
    t0, t1 = 0.0, 1.0
    for num, den in (
        (xmin - x0, dx), (x0 - xmax, -dx), (ymin - y0, dy), (y0 - ymax, -dy),
    ):
        if den == 0.0:
            if num > 0.0:
                return None
            continue
        t = num / den
        if den > 0.0:  # entering
            if t > t1:
                return None
            t0 = max(t0, t)
        else:  # leaving
            if t < t0:
                return None
            t1 = min(t1, t)
    if t1 <= t0:
        return None
    cp = (x0 + t0 * dx, y0 + t0 * dy)
    cq = (x0 + t1 * dx, y0 + t1 * dy)
    return cp, cq, t0, t1


def _strictly_inside(pt, box) -> bool:
    xmin, ymin, xmax, ymax = box
    return xmin < pt[0] < xmax and ymin < pt[1] < ymax


def build_voronoi(nodes, clip_margin: float = 0.10) -> VoronoiGraph:
    """Planar Voronoi diagram of the node positions, clipped to the nodes'
    bounding box expanded by ``clip_margin`` per dimension. Edges touching
    the clip boundary (including all rays) are flagged non-finite."""
    nodes = list(nodes)
    if len(nodes) < 3:
        raise TooFewSites(f"need >= 3 sites, got {len(nodes)}")
    pts = np.asarray([n.position for n in nodes], dtype=float)
    v0 = pts[1] - pts[0]
    rest = pts[2:] - pts[0]
    cross = np.abs(v0[0] * rest[:, 1] - v0[1] * rest[:, 0])
    scale = float(np.abs(pts - pts[0]).max()) or 1.0
    if pts.shape[0] >= 3 and np.all(cross <= 1e-12 * scale * scale):
        raise AllCollinear("all sites are collinear")

    xmin, ymin = pts.min(axis=0)
    xmax, ymax = pts.max(axis=0)
    mx = clip_margin * (xmax - xmin)
    my = clip_margin * (ymax - ymin)
    box = (xmin - mx, ymin - my, xmax + mx, ymax + my)
    diag = math.hypot(box[2] - box[0], box[3] - box[1])

    try:
        vor = Voronoi(pts)
    except QhullError as e:
        raise AllCollinear(f"degenerate site configuration: {e}")

    center = pts.mean(axis=0)
    edges: list[VoronoiEdge] = []
    for (p1, p2), (r1, r2) in zip(vor.ridge_points, vor.ridge_vertices):
        if r1 == -1 and r2 == -1:
            continue
        if r1 == -1 or r2 == -1:
            vfin = int(r2 if r1 == -1 else r1)
            vpos = vor.vertices[vfin]
            t = pts[p2] - pts[p1]
            t = t / np.linalg.norm(t)
            nrm = np.array([-t[1], t[0]])
            midpoint = (pts[p1] + pts[p2]) / 2.0
            direction = np.sign(np.dot(midpoint - center, nrm)) * nrm
            if not direction.any():
                direction = nrm
            far = vpos + direction * (2.0 * diag + 1.0)
            clipped = _clip_to_box(tuple(vpos), tuple(far), box)
            if clipped is None:
                continue
            cp, cq, t0, _ = clipped
            ia = vfin if (t0 == 0.0 and _strictly_inside(cp, box)) else -1
            edge = _make_edge(cp, cq, ia, -1, int(p1), int(p2), finite=False)
        else:
            a = tuple(vor.vertices[r1])
            b = tuple(vor.vertices[r2])
            ina, inb = _strictly_inside(a, box), _strictly_inside(b, box)
            if ina and inb:
                edge = _make_edge(a, b, int(r1), int(r2), int(p1), int(p2), finite=True)
            else:
                clipped = _clip_to_box(a, b, box)
                if clipped is None:
                    continue
                cp, cq, t0, t1 = clipped
                ia = int(r1) if (t0 == 0.0 and ina) else -1
                ib = int(r2) if (t1 == 1.0 and inb) else -1
                edge = _make_edge(cp, cq, ia, ib, int(p1), int(p2), finite=False)
        if edge.length > 0.0:
            edges.append(edge)

    return VoronoiGraph(
        sites=nodes,
        vertices=vor.vertices.copy(),
        edges=edges,
        clip_box=box,
        point_region=vor.point_region.copy(),
        regions=[list(r) for r in vor.regions],
        ridge_points=vor.ridge_points.copy(),
        ridge_vertices=[list(rv) for rv in vor.ridge_vertices],
    )


def _make_edge(a, b, ia, ib, left, right, finite) -> VoronoiEdge:
    return VoronoiEdge(
        a=(float(a[0]), float(a[1])),
        b=(float(b[0]), float(b[1])),
        vertex_a=ia,
        vertex_b=ib,
        left_site=left,
        right_site=right,
        length=math.hypot(b[0] - a[0], b[1] - a[1]),
        finite=finite,
    )


@dataclass(frozen=True)
class ShortEdgeSelection:
    edges: list[VoronoiEdge]
    mean_length: float


def select_short_edges(graph: VoronoiGraph) -> ShortEdgeSelection:
    """Finite edges strictly shorter than the mean finite-edge length."""
    finite = graph.finite_edges()
    if not finite:
        raise NoFiniteEdges("diagram has no finite edges inside the clip box")
    mean = float(np.mean([e.length for e in finite]))
    return ShortEdgeSelection(
        edges=[e for e in finite if e.length < mean], mean_length=mean
    )


# ---------------------------------------------------------------------------
# faces, merging, thresholding
# ---------------------------------------------------------------------------

def polygonize(edges) -> list[FacePolygon]:
    """Bounded faces of the arrangement of the given (finite) edges.

    The unbounded face and dangling edges contribute nothing; faces carry
    their dart lists so merging stays combinatorial.
    """
    edges = list(edges)
    if not edges:
        return []
    coords: dict[int, tuple[float, float]] = {}
    edge_vertices: dict[int, tuple[int, int]] = {}
    darts = []
    for k, e in enumerate(edges):
        coords[e.vertex_a] = e.a
        coords[e.vertex_b] = e.b
        edge_vertices[k] = (e.vertex_a, e.vertex_b)
        darts.append((e.vertex_a, e.vertex_b))  # dart 2k
        darts.append((e.vertex_b, e.vertex_a))  # dart 2k + 1
    tracer = DartTracer(darts, coords, policy="cw")
    faces: list[FacePolygon] = []
    for cycle in tracer.cycles():
        area = tracer.cycle_area(cycle)
        if area <= 0.0:
            continue
        ids = remove_spikes(tracer.cycle_vertices(cycle))
        if len(ids) < 3:
            continue
        ring = [coords[i] for i in ids]
        faces.append(
            FacePolygon(
                id=len(faces) + 1,
                ring=ring,
                area_km2=shoelace(ring) / 1e6,
                darts=[(i // 2, i % 2 == 0) for i in cycle],
                vertex_ids=ids,
                coords=coords,
                edge_vertices=edge_vertices,
            )
        )
    return faces


def merge_adjacent(faces) -> list[UrbanCluster]:
    """Union faces that share a boundary edge (vertex contact does not
    merge). Cluster area is the exact sum of face areas; the geometry is
    the traced outer boundary with holes preserved."""
    faces = list(faces)
    if not faces:
        return []
    owner: dict[tuple[int, bool], int] = {}
    for fi, f in enumerate(faces):
        for d in f.darts:
            owner[d] = fi

    parent = list(range(len(faces)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    for (eid, fwd), fi in owner.items():
        twin = owner.get((eid, not fwd))
        if twin is not None and twin != fi:
            union(fi, twin)

    groups: dict[int, list[int]] = {}
    for fi in range(len(faces)):
        groups.setdefault(find(fi), []).append(fi)

    clusters: list[UrbanCluster] = []
    for root in sorted(groups):
        members = set(groups[root])
        coords = faces[root].coords
        edge_vertices = faces[root].edge_vertices
        boundary = []
        for fi in sorted(members):
            for (eid, fwd) in faces[fi].darts:
                twin_owner = owner.get((eid, not fwd))
                if twin_owner is None or find(twin_owner) != root:
                    va, vb = edge_vertices[eid]
                    boundary.append((va, vb) if fwd else (vb, va))
        # dedupe while preserving order (spur darts within one face pair off)
        seen = set()
        kept = []
        for d in boundary:
            if d not in seen:
                seen.add(d)
                kept.append(d)
        tracer = DartTracer(kept, coords, policy="ccw")
        outer = None
        holes = []
        for cycle in tracer.cycles():
            ids = remove_spikes(tracer.cycle_vertices(cycle))
            if len(ids) < 3:
                continue
            ring = [coords[i] for i in ids]
            a = shoelace(ring)
            if a > 0:
                if outer is not None:
                    raise AssertionError("edge-connected face group traced two outer rings")
                outer = ring
            else:
                holes.append(ring)
        if outer is None:
            raise AssertionError("face group with no outer ring")
        clusters.append(
            UrbanCluster(
                id=len(clusters) + 1,
                shell=outer,
                holes=holes,
                area_km2=float(sum(faces[fi].area_km2 for fi in sorted(members))),
                source="street",
            )
        )
    return clusters


def threshold_clusters(clusters, hierarchy: HeadTailHierarchy, level: int):
    """Clusters whose area strictly exceeds the chosen level mean."""
    if not 0 <= level < len(hierarchy.levels):
        raise LevelOutOfRange(
            f"level {level} outside 0..{len(hierarchy.levels) - 1}"
        )
    cut = hierarchy.levels[level].mean
    return [c for c in clusters if c.area_km2 > cut]


# ---------------------------------------------------------------------------
# validation helpers (Euler counts, cell polygons) and the Delaunay dual mode
# ---------------------------------------------------------------------------

def euler_counts(graph: VoronoiGraph) -> tuple[int, int, int]:
    """(V, E, F) of the clipped subdivision including the box boundary.

    Every site lies strictly inside the box, so F = n_sites + 1 (outer
    face included); V and E are counted from the clipped edges plus the
    subdivided box boundary. V - E + F must equal 2.
    """
    xmin, ymin, xmax, ymax = graph.clip_box
    interior: set[int] = set()
    boundary_pts: set[tuple[float, float]] = set()

    def classify(pt, vid):
        if vid >= 0:
            interior.add(vid)
        else:
            boundary_pts.add((round(pt[0], 9), round(pt[1], 9)))

    n_edges = 0
    for e in graph.edges:
        n_edges += 1
        classify(e.a, e.vertex_a)
        classify(e.b, e.vertex_b)
    corners = {
        (round(xmin, 9), round(ymin, 9)),
        (round(xmax, 9), round(ymin, 9)),
        (round(xmax, 9), round(ymax, 9)),
        (round(xmin, 9), round(ymax, 9)),
    }
    all_boundary = boundary_pts | corners
    v = len(interior) + len(all_boundary)
    e_total = n_edges + len(all_boundary)  # boundary arcs between consecutive boundary points
    f = len(graph.sites) + 1
    return v, e_total, f


def cell_polygons(graph: VoronoiGraph) -> list[list[tuple[float, float]]]:
    """Per-site Voronoi cell clipped to the box (convex rings).

    Unbounded regions are closed with far points along their two infinite
    ridge directions before clipping; used by the nearest-site oracle test
    and the Delaunay dual mode.
    """
    pts = np.asarray([n.position for n in graph.sites], dtype=float)
    center = pts.mean(axis=0)
    box = graph.clip_box
    diag = math.hypot(box[2] - box[0], box[3] - box[1])
    far_len = 4.0 * diag + 1.0

    # gather the infinite ridge directions per site
    rays: dict[int, list[np.ndarray]] = {}
    for (p1, p2), (r1, r2) in zip(graph.ridge_points, graph.ridge_vertices):
        if r1 != -1 and r2 != -1:
            continue
        vfin = r2 if r1 == -1 else r1
        if vfin == -1:
            continue
        t = pts[p2] - pts[p1]
        t = t / np.linalg.norm(t)
        nrm = np.array([-t[1], t[0]])
        midpoint = (pts[p1] + pts[p2]) / 2.0
        direction = np.sign(np.dot(midpoint - center, nrm)) * nrm
        if not direction.any():
            direction = nrm
        far = graph.vertices[vfin] + direction * far_len
        for p in (int(p1), int(p2)):
            rays.setdefault(p, []).append(far)

    out = []
    for i in range(len(graph.sites)):
        region = graph.regions[graph.point_region[i]]
        verts = [graph.vertices[r] for r in region if r != -1]
        verts.extend(rays.get(i, []))
        arr = np.asarray(verts)
        c = arr.mean(axis=0)
        order = np.argsort(np.arctan2(arr[:, 1] - c[1], arr[:, 0] - c[0]))
        ring = [tuple(arr[k]) for k in order]
        out.append(_clip_ring_to_box(ring, box))
    return out


def _clip_ring_to_box(ring, box):
    """Sutherland-Hodgman clip of a convex ring to an axis-aligned box."""
    xmin, ymin, xmax, ymax = box
    planes = (
        lambda p: p[0] >= xmin, lambda p: p[0] <= xmax,
        lambda p: p[1] >= ymin, lambda p: p[1] <= ymax,
    )
    def cross_point(p, q, which):
        x0, y0 = p
        x1, y1 = q
        if which == 0:
            t = (xmin - x0) / (x1 - x0)
        elif which == 1:
            t = (xmax - x0) / (x1 - x0)
        elif which == 2:
            t = (ymin - y0) / (y1 - y0)
        else:
            t = (ymax - y0) / (y1 - y0)
        return (x0 + t * (x1 - x0), y0 + t * (y1 - y0))

    out = list(ring)
    for which, inside in enumerate(planes):
        if not out:
            return []
        cur = out
        out = []
        for i in range(len(cur)):
            p, q = cur[i], cur[(i + 1) % len(cur)]
            pin, qin = inside(p), inside(q)
            if pin and qin:
                out.append(q)
            elif pin and not qin:
                out.append(cross_point(p, q, which))
            elif not pin and qin:
                out.append(cross_point(p, q, which))
                out.append(q)
    return out


def dual_mode_clusters(graph: VoronoiGraph) -> list[UrbanCluster]:
    """Comparison mode: select short Delaunay edges (site-to-site) and
    union the Voronoi cells of each connected site group."""
    from shapely.geometry import Polygon
    from shapely.ops import unary_union

    pts = np.asarray([n.position for n in graph.sites], dtype=float)
    pairs = graph.ridge_points
    lengths = np.hypot(
        pts[pairs[:, 0], 0] - pts[pairs[:, 1], 0],
        pts[pairs[:, 0], 1] - pts[pairs[:, 1], 1],
    )
    mean = float(lengths.mean())
    short = pairs[lengths < mean]

    parent = list(range(len(graph.sites)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for p1, p2 in short:
        r1, r2 = find(int(p1)), find(int(p2))
        if r1 != r2:
            parent[max(r1, r2)] = min(r1, r2)

    touched = set(int(p) for pair in short for p in pair)
    groups: dict[int, list[int]] = {}
    for s in sorted(touched):
        groups.setdefault(find(s), []).append(s)

    cells = cell_polygons(graph)
    clusters = []
    for root in sorted(groups):
        polys = [Polygon(cells[s]) for s in groups[root] if len(cells[s]) >= 3]
        if not polys:
            continue
        merged = unary_union(polys)
        geoms = list(merged.geoms) if merged.geom_type == "MultiPolygon" else [merged]
        for g in geoms:
            shell = [(float(x), float(y)) for x, y in g.exterior.coords[:-1]]
            holes = [
                [(float(x), float(y)) for x, y in interior.coords[:-1]]
                for interior in g.interiors
            ]
            clusters.append(
                UrbanCluster(
                    id=len(clusters) + 1,
                    shell=shell,
                    holes=holes,
                    area_km2=float(g.area) / 1e6,
                    source="street",
                )
            )
    return clusters
