import json

import pytest

from urbanclusters.compare import (
    concentration,
    largest_cluster,
    overlay_stats,
    write_overlay_report,
)
from urbanclusters.errors import EmptyInput, InvalidPolygon, NonPositiveRegionArea
from urbanclusters.rastergrid import UrbanCluster


def square(x0, y0, side):
    return [(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)]


def cluster(cid, ring, area=None, holes=()):
    from urbanclusters.geometry import shoelace

    a = area if area is not None else abs(shoelace(ring)) / 1e6
    return UrbanCluster(id=cid, shell=list(ring), holes=[list(h) for h in holes],
                        area_km2=a, source="ntl")


class TestOverlayStats:
    def test_identical_sets(self):
        a = [square(0, 0, 1000), square(5000, 0, 2000)]
        rep = overlay_stats(a, a, region_area_km2=100.0)
        assert rep.total_area_a == pytest.approx(5.0)
        assert rep.total_area_b == pytest.approx(5.0)
        assert rep.intersection_area == pytest.approx(5.0)
        assert rep.pct_of_region_a == pytest.approx(5.0)

    def test_disjoint(self):
        rep = overlay_stats([square(0, 0, 1000)], [square(3000, 0, 1000)], 10.0)
        assert rep.intersection_area == 0.0

    def test_half_offset(self):
        rep = overlay_stats([square(0, 0, 1000)], [square(500, 0, 1000)], 10.0)
        assert rep.intersection_area == pytest.approx(0.5)

    def test_symmetry(self):
        a = [square(0, 0, 1500), square(2000, 2000, 700)]
        b = [square(1000, 0, 1500), square(2100, 1800, 900)]
        r1 = overlay_stats(a, b, 50.0)
        r2 = overlay_stats(b, a, 50.0)
        assert r1.intersection_area == pytest.approx(r2.intersection_area, rel=1e-9)

    def test_containment_exact(self):
        inner = [square(100, 100, 200), square(600, 600, 300)]
        outer = [square(0, 0, 1000)]
        rep = overlay_stats(inner, outer, 10.0)
        assert rep.intersection_area == rep.total_area_a

    def test_pairwise_overlap_not_double_counted(self):
        # two overlapping A squares against one B square
        a = [square(0, 0, 1000), square(500, 0, 1000)]
        b = [square(0, 0, 2000)]
        rep = overlay_stats(a, b, 10.0)
        assert rep.intersection_area == pytest.approx(1.5)

    def test_accepts_clusters_and_holes(self):
        donut = cluster(1, square(0, 0, 1000), holes=[list(reversed(square(250, 250, 500)))])
        rep = overlay_stats([donut], [square(0, 0, 1000)], 10.0)
        assert rep.total_area_a == pytest.approx(0.75)
        assert rep.intersection_area == pytest.approx(0.75)

    def test_percentage_sanity(self):
        rep = overlay_stats([square(0, 0, 1000)], [square(0, 0, 500)], 1.0)
        assert 0.0 <= rep.pct_of_region_b <= rep.pct_of_region_a <= 100.0

    def test_invalid_polygon_rejected(self):
        bowtie = [(0, 0), (1000, 1000), (1000, 0), (0, 1000)]
        with pytest.raises(InvalidPolygon):
            overlay_stats([bowtie], [square(0, 0, 1000)], 10.0)

    def test_region_area_validation(self):
        with pytest.raises(NonPositiveRegionArea):
            overlay_stats([square(0, 0, 10)], [square(0, 0, 10)], 0.0)


class TestLargestCluster:
    def test_argmax(self):
        clusters = [cluster(1, square(0, 0, 10), area=3.2),
                    cluster(2, square(0, 0, 10), area=130.1),
                    cluster(3, square(0, 0, 10), area=7.0)]
        assert largest_cluster(clusters) == (2, 130.1)

    def test_singleton(self):
        c = cluster(9, square(0, 0, 10), area=1.5)
        assert largest_cluster([c]) == (9, 1.5)

    def test_tie_smaller_id(self):
        clusters = [cluster(4, square(0, 0, 10), area=5.0),
                    cluster(2, square(0, 0, 10), area=5.0)]
        assert largest_cluster(clusters) == (2, 5.0)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            largest_cluster([])


def test_concentration():
    clusters = [cluster(1, square(0, 0, 10), area=6.0),
                cluster(2, square(0, 0, 10), area=2.0),
                cluster(3, square(0, 0, 10), area=2.0)]
    assert concentration(clusters) == pytest.approx(0.6)


def test_report_json(tmp_path):
    rep = overlay_stats([square(0, 0, 1000)], [square(0, 0, 1000)], 10.0)
    p = tmp_path / "overlay.json"
    write_overlay_report(rep, p)
    doc = json.loads(p.read_text())
    assert doc["intersection_area_km2"] == pytest.approx(1.0)
    assert doc["region_area_km2"] == 10.0
