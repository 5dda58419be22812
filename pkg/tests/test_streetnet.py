import json
import math

import numpy as np
import pytest

from urbanclusters.errors import (
    AllCollinear,
    EmptyInput,
    GeographicCrs,
    LevelOutOfRange,
    NoFiniteEdges,
    ParseError,
    TooFewSites,
)
from urbanclusters.geometry import points_in_rings, shoelace
from urbanclusters.headtail import head_tail_breaks
from urbanclusters.rastergrid import UrbanCluster
from urbanclusters.streetnet import (
    StreetNode,
    StreetSegment,
    VoronoiEdge,
    build_voronoi,
    cell_polygons,
    dual_mode_clusters,
    euler_counts,
    extract_nodes,
    load_segments,
    merge_adjacent,
    polygonize,
    select_short_edges,
    threshold_clusters,
)
from urbanclusters.testkit import (
    TABLE2_HEAD_TOTALS,
    TABLE2_LEVEL_COUNTS,
    nearest_site_oracle,
    rng_for,
    table2_areas,
)


def seg(sid, *pts):
    return StreetSegment(id=sid, polyline=tuple(pts))


def sites(pts):
    return [StreetNode(i, (float(x), float(y)), 1) for i, (x, y) in enumerate(pts)]


def edge(a, b, ia, ib):
    return VoronoiEdge(
        a=a, b=b, vertex_a=ia, vertex_b=ib, left_site=0, right_site=1,
        length=math.dist(a, b), finite=True,
    )


UNIT_SQUARE = [
    edge((0.0, 0.0), (1.0, 0.0), 0, 1),
    edge((1.0, 0.0), (1.0, 1.0), 1, 2),
    edge((1.0, 1.0), (0.0, 1.0), 2, 3),
    edge((0.0, 1.0), (0.0, 0.0), 3, 0),
]


class TestExtractNodes:
    def test_shared_endpoint(self):
        nodes = extract_nodes([seg(0, (0, 0), (1, 0)), seg(1, (1, 0), (2, 1))])
        assert len(nodes) == 3
        shared = [n for n in nodes if n.position == (1, 0)]
        assert shared[0].degree == 2

    def test_t_junction(self):
        segs = [
            seg(0, (0, 0), (1, 1)),
            seg(1, (2, 0), (1, 1)),
            seg(2, (1, 2), (1, 1)),
        ]
        nodes = extract_nodes(segs)
        assert len(nodes) == 4
        junction = [n for n in nodes if n.position == (1, 1)][0]
        assert junction.degree == 3

    def test_snap_tolerance(self):
        segs = [seg(0, (0, 0), (1.0, 2.0)), seg(1, (1.000000001, 2.0), (3, 3))]
        assert len(extract_nodes(segs, snap_tol=1e-6)) == 3
        assert len(extract_nodes(segs, snap_tol=0.0)) == 4

    def test_interior_vertices_are_not_nodes(self):
        nodes = extract_nodes([seg(0, (0, 0), (1, 5), (2, 0))])
        assert len(nodes) == 2
        assert all(n.position != (1, 5) for n in nodes)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            extract_nodes([])

    def test_crossing_detection_flag(self):
        crossing = [seg(0, (0.0, 0.0), (10.0, 10.0)), seg(1, (0.0, 10.0), (10.0, 0.0))]
        assert len(extract_nodes(crossing)) == 4
        nodes = extract_nodes(crossing, detect_crossings=True)
        assert len(nodes) == 5
        mid = [n for n in nodes if n.position == (5.0, 5.0)][0]
        assert mid.degree == 4

    def test_crossing_detection_skips_touches(self):
        # an endpoint resting on another segment's interior is not a crossing
        touch = [seg(0, (0.0, 0.0), (10.0, 0.0)), seg(1, (5.0, 0.0), (5.0, 8.0))]
        nodes = extract_nodes(touch, detect_crossings=True)
        assert len(nodes) == 4


class TestLoadSegments:
    def test_csv_and_geojson(self, tmp_path):
        p = tmp_path / "segs.csv"
        p.write_text("id,x1,y1,x2,y2\n0,1000.0,2000.0,1100.0,2000.0\n")
        segs = load_segments(p)
        assert segs[0].polyline == ((1000.0, 2000.0), (1100.0, 2000.0))

        gj = tmp_path / "segs.geojson"
        gj.write_text(json.dumps({
            "type": "FeatureCollection",
            "features": [{
                "type": "Feature",
                "geometry": {"type": "LineString",
                             "coordinates": [[1000.0, 2000.0], [1100.0, 2050.0]]},
                "properties": {},
            }],
        }))
        segs = load_segments(gj)
        assert len(segs) == 1

    def test_geographic_rejected(self, tmp_path):
        p = tmp_path / "lonlat.csv"
        p.write_text("id,x1,y1,x2,y2\n0,7.5,46.9,7.6,46.95\n")
        with pytest.raises(GeographicCrs):
            load_segments(p)
        assert load_segments(p, assume_projected=True)

    def test_bad_row(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("id,x1,y1\n0,1,2\n")
        with pytest.raises(ParseError):
            load_segments(p)


class TestBuildVoronoi:
    def test_too_few_sites(self):
        with pytest.raises(TooFewSites):
            build_voronoi(sites([(0, 0), (1, 0)]))

    def test_collinear(self):
        with pytest.raises(AllCollinear):
            build_voronoi(sites([(0, 0), (1, 0), (2, 0), (3, 0)]))

    def test_four_corner_square(self):
        g = build_voronoi(sites([(0, 0), (1, 0), (0, 1), (1, 1)]), clip_margin=0.5)
        assert len(g.vertices) == 1
        assert g.vertices[0] == pytest.approx([0.5, 0.5])
        assert len(g.edges) == 4
        # the four rays all touch the clip box, so none is finite
        assert all(not e.finite for e in g.edges)
        assert all(e.left_site != e.right_site for e in g.edges)

    def test_finite_edge_lengths(self):
        rng = rng_for(2)
        g = build_voronoi(sites(rng.uniform(0, 64, size=(15, 2))))
        assert g.finite_edges()
        for e in g.finite_edges():
            assert e.length == pytest.approx(math.dist(e.a, e.b))
            assert e.length > 0

    def test_euler_formula(self):
        rng = rng_for(4)
        for _ in range(20):
            pts = rng.uniform(0, 64, size=(int(rng.integers(4, 21)), 2))
            g = build_voronoi(sites(pts))
            v, e, f = euler_counts(g)
            assert v - e + f == 2

    def test_ownership_against_oracle(self):
        rng = rng_for(6)
        for _ in range(15):
            pts = rng.uniform(2, 62, size=(int(rng.integers(4, 21)), 2))
            g = build_voronoi(sites(pts))
            assert_ownership_matches_oracle(g, pts)


def assert_ownership_matches_oracle(graph, pts, resolution=64, extent=(0, 0, 64, 64)):
    cells = cell_polygons(graph)
    oracle = nearest_site_oracle(pts, extent, resolution)
    xmin, ymin, xmax, ymax = extent
    xs = xmin + (np.arange(resolution) + 0.5) * (xmax - xmin) / resolution
    ys = ymin + (np.arange(resolution) + 0.5) * (ymax - ymin) / resolution
    px, py = np.meshgrid(xs, ys)
    d = np.sqrt(
        (px[None] - pts[:, 0, None, None]) ** 2 + (py[None] - pts[:, 1, None, None]) ** 2
    )
    dsort = np.sort(d, axis=0)
    near_bisector = (dsort[1] - dsort[0]) < 1e-6
    box = graph.clip_box
    inside_box = (px > box[0]) & (px < box[2]) & (py > box[1]) & (py < box[3])
    own = np.full(px.shape, -1)
    for i, ring in enumerate(cells):
        if len(ring) >= 3:
            hit = points_in_rings(px.ravel(), py.ravel(), [ring]).reshape(px.shape)
            own[hit & (own == -1)] = i
    check = inside_box & ~near_bisector
    assert np.array_equal(own[check], oracle[check])


class TestSelectShortEdges:
    def test_arithmetic_example(self):
        edges = [
            edge((0, 0), (1, 0), 0, 1),
            edge((0, 1), (1, 1), 2, 3),
            edge((0, 2), (4, 2), 4, 5),
        ]
        g = _graph_with(edges)
        sel = select_short_edges(g)
        assert sel.mean_length == pytest.approx(2.0)
        assert len(sel.edges) == 2
        assert all(e.length == 1.0 for e in sel.edges)

    def test_all_equal_selects_none(self):
        edges = [edge((i, 0), (i + 1, 0), 2 * i, 2 * i + 1) for i in range(4)]
        sel = select_short_edges(_graph_with(edges))
        assert sel.edges == []

    def test_dense_core_fixture(self):
        # a tight cluster of sites plus a sparse ring: short edges stay inside
        rng = rng_for(14)
        dense = rng.uniform(30, 34, size=(25, 2))
        sparse = rng.uniform(0, 64, size=(6, 2))
        sparse = sparse[(np.abs(sparse - 32).max(axis=1) > 12)]
        pts = np.vstack([dense, sparse])
        g = build_voronoi(sites(pts))
        sel = select_short_edges(g)
        assert sel.edges
        for e in sel.edges:
            assert max(abs(e.a[0] - 32), abs(e.a[1] - 32)) < 16
            assert max(abs(e.b[0] - 32), abs(e.b[1] - 32)) < 16

    def test_no_finite_edges(self):
        g = build_voronoi(sites([(0, 0), (1, 0), (0.5, 1)]))
        assert not g.finite_edges()
        with pytest.raises(NoFiniteEdges):
            select_short_edges(g)


def _graph_with(edges):
    from urbanclusters.streetnet import VoronoiGraph

    return VoronoiGraph(
        sites=sites([(0, 0), (1, 1), (2, 2)]),
        vertices=np.empty((0, 2)),
        edges=edges,
        clip_box=(0, 0, 10, 10),
    )


class TestPolygonize:
    def test_unit_square(self):
        faces = polygonize(UNIT_SQUARE)
        assert len(faces) == 1
        assert faces[0].area_km2 * 1e6 == pytest.approx(1.0)

    def test_two_squares_share_edge(self):
        edges = UNIT_SQUARE + [
            edge((1.0, 0.0), (2.0, 0.0), 1, 4),
            edge((2.0, 0.0), (2.0, 1.0), 4, 5),
            edge((2.0, 1.0), (1.0, 1.0), 5, 2),
        ]
        faces = polygonize(edges)
        assert len(faces) == 2

    def test_open_polyline_no_faces(self):
        edges = [
            edge((0.0, 0.0), (1.0, 0.0), 0, 1),
            edge((1.0, 0.0), (2.0, 0.0), 1, 2),
            edge((2.0, 0.0), (3.0, 1.0), 2, 3),
        ]
        assert polygonize(edges) == []

    def test_dangling_spur_is_ignored(self):
        edges = UNIT_SQUARE + [edge((1.0, 1.0), (2.0, 2.0), 2, 9)]
        faces = polygonize(edges)
        assert len(faces) == 1
        assert faces[0].area_km2 * 1e6 == pytest.approx(1.0)
        assert (2.0, 2.0) not in faces[0].ring

    def test_empty(self):
        assert polygonize([]) == []


class TestMergeAdjacent:
    def test_edge_adjacent_union(self):
        edges = UNIT_SQUARE + [
            edge((1.0, 0.0), (2.0, 0.0), 1, 4),
            edge((2.0, 0.0), (2.0, 1.0), 4, 5),
            edge((2.0, 1.0), (1.0, 1.0), 5, 2),
        ]
        clusters = merge_adjacent(polygonize(edges))
        assert len(clusters) == 1
        assert clusters[0].area_km2 * 1e6 == pytest.approx(2.0)
        assert shoelace(clusters[0].shell) == pytest.approx(2.0)

    def test_corner_touch_stays_separate(self):
        edges = UNIT_SQUARE + [
            edge((1.0, 1.0), (2.0, 1.0), 2, 6),
            edge((2.0, 1.0), (2.0, 2.0), 6, 7),
            edge((2.0, 2.0), (1.0, 2.0), 7, 8),
            edge((1.0, 2.0), (1.0, 1.0), 8, 2),
        ]
        clusters = merge_adjacent(polygonize(edges))
        assert len(clusters) == 2

    def test_single_face_identity(self):
        (face,) = polygonize(UNIT_SQUARE)
        (cluster,) = merge_adjacent([face])
        assert cluster.area_km2 == face.area_km2
        assert set(cluster.shell) == set(face.ring)

    def test_ring_of_squares_absorbs_enclosed_void(self):
        # 3x3 lattice of unit-square edges, center cell drawn by its
        # neighbours' walls: the enclosed void is itself a bounded face of
        # the arrangement, so it merges into the cluster
        edges = []
        vid = {}

        def v(x, y):
            return vid.setdefault((x, y), len(vid))

        for gy in range(3):
            for gx in range(3):
                if (gx, gy) == (1, 1):
                    continue
                corners = [(gx, gy), (gx + 1, gy), (gx + 1, gy + 1), (gx, gy + 1)]
                for a, b in zip(corners, corners[1:] + corners[:1]):
                    key = tuple(sorted((a, b)))
                    edges.append((key, a, b))
        uniq = {}
        for key, a, b in edges:
            uniq[key] = (a, b)
        final = [
            edge((float(a[0]), float(a[1])), (float(b[0]), float(b[1])), v(*a), v(*b))
            for a, b in uniq.values()
        ]
        faces = polygonize(final)
        assert len(faces) == 9
        clusters = merge_adjacent(faces)
        assert len(clusters) == 1
        c = clusters[0]
        assert c.area_km2 * 1e6 == pytest.approx(9.0)
        assert c.holes == []
        assert shoelace(c.shell) == pytest.approx(9.0)

    def test_area_additivity_random(self):
        rng = rng_for(33)
        pts = rng.uniform(0, 64, size=(40, 2))
        g = build_voronoi(sites(pts))
        faces = polygonize(select_short_edges(g).edges)
        clusters = merge_adjacent(faces)
        assert math.fsum(c.area_km2 for c in clusters) == pytest.approx(
            math.fsum(f.area_km2 for f in faces), rel=1e-12
        )

    def test_selection_monotonicity(self):
        rng = rng_for(44)
        pts = rng.uniform(0, 64, size=(60, 2))
        g = build_voronoi(sites(pts))
        finite = g.finite_edges()
        mean = float(np.mean([e.length for e in finite]))
        prev_area = -1.0
        for frac in (0.4, 0.6, 0.8, 1.0):
            cut = frac * mean
            area = math.fsum(
                f.area_km2 for f in polygonize([e for e in finite if e.length < cut])
            )
            assert area >= prev_area - 1e-15
            prev_area = area

    def test_determinism(self):
        rng = rng_for(51)
        pts = rng.uniform(0, 64, size=(30, 2))
        runs = []
        for _ in range(2):
            g = build_voronoi(sites(pts))
            clusters = merge_adjacent(polygonize(select_short_edges(g).edges))
            runs.append([(c.id, c.area_km2, tuple(c.shell)) for c in clusters])
        assert runs[0] == runs[1]


class TestThresholdClusters:
    def make_clusters(self, areas):
        return [
            UrbanCluster(id=i + 1, shell=[(0, 0), (1, 0), (1, 1)], holes=[],
                         area_km2=float(a), source="street")
            for i, a in enumerate(areas)
        ]

    def test_table2_level_selection(self):
        areas = table2_areas()
        clusters = self.make_clusters(areas)
        h = head_tail_breaks(areas)
        for level, (count, total) in enumerate(
            zip(TABLE2_LEVEL_COUNTS[1:4], TABLE2_HEAD_TOTALS)
        ):
            kept = threshold_clusters(clusters, h, level)
            assert len(kept) == count
            assert math.fsum(c.area_km2 for c in kept) == pytest.approx(total, abs=1e-3)

    def test_all_below_mean_empty(self):
        clusters = self.make_clusters([1.0, 1.0, 1.0, 4.0])
        h = head_tail_breaks([c.area_km2 for c in clusters])
        kept = threshold_clusters(clusters, h, len(h.levels) - 1)
        assert kept == [] or all(c.area_km2 > h.levels[-1].mean for c in kept)

    def test_level_out_of_range(self):
        clusters = self.make_clusters([1.0, 2.0, 3.0])
        h = head_tail_breaks([1.0, 2.0, 3.0])
        with pytest.raises(LevelOutOfRange):
            threshold_clusters(clusters, h, len(h.levels))


def test_dual_mode_smoke():
    rng = rng_for(61)
    dense = rng.uniform(20, 28, size=(30, 2))
    sparse = rng.uniform(0, 64, size=(8, 2))
    pts = np.vstack([dense, sparse])
    g = build_voronoi(sites(pts))
    clusters = dual_mode_clusters(g)
    assert clusters
    assert all(c.area_km2 > 0 for c in clusters)
    again = dual_mode_clusters(g)
    assert [(c.id, c.area_km2) for c in clusters] == [(c.id, c.area_km2) for c in again]
