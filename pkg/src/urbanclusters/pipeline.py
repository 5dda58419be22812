"""End-to-end extraction runs.

The nighttime-light flow: clip to the study boundary, pick the reference
satellite-year by maximal sum of lights, intercalibrate every grid onto
it, run head/tail breaks per year on the lit pixels, average the level
means into integer candidate thresholds, extract clusters per candidate,
and keep the largest candidate whose cluster sizes are plausibly power-law
distributed (bootstrap p > 0.1).

The street flow: segment endpoints to nodes, Voronoi diagram, short-edge
selection, polygonization, adjacency merge, head/tail breaks on cluster
areas, then pick the hierarchy level with the best p-value among levels
that keep enough clusters.

Every run owns its output directory (lock file), writes deterministic
artifacts (no timestamps), and can resume from persisted stage files.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import calib, headtail, rastergrid, scaling, streetnet
from .compare import largest_cluster
from .errors import (
    ConfigError,
    DataError,
    NoPlausibleLevel,
    NoPlausibleThreshold,
    RunDirLocked,
    TooFewValues,
    DegenerateSample,
)
from .rastergrid import UrbanCluster

MIN_FIT_SAMPLE = scaling.MIN_SAMPLE


# ---------------------------------------------------------------------------
# configs
# ---------------------------------------------------------------------------

@dataclass
class NtlRunConfig:
    grids: dict  # (satellite, year) -> path
    out_dir: str
    boundary: str | None = None
    head_limit: float = 0.5
    connectivity: str = "eight"
    tie_rule: str = "head"
    rounding: str = "floor"
    candidate_override: list[int] | None = None
    seed: int = 0
    depth: int = 3
    eval_year: int | None = None
    n_bootstrap: int = 1000
    region_area_km2: float | None = None
    grid_format: str = "esri_ascii"
    resume: bool = False

    def __post_init__(self):
        if not self.grids:
            raise ConfigError("ntl config needs at least one grid")
        if not 0.0 < self.head_limit <= 1.0:
            raise ConfigError(f"head_limit must be in (0, 1], got {self.head_limit}")
        if self.connectivity not in ("four", "eight"):
            raise ConfigError(f"connectivity must be four|eight, got {self.connectivity}")
        if self.tie_rule not in ("head", "tail"):
            raise ConfigError(f"tie_rule must be head|tail, got {self.tie_rule}")
        if self.rounding not in ("floor", "nearest"):
            raise ConfigError(f"rounding must be floor|nearest, got {self.rounding}")

    @classmethod
    def from_json(cls, path, **overrides) -> "NtlRunConfig":
        raw = _read_config(path)
        grids = {}
        for entry in raw.pop("grids", []):
            try:
                grids[(str(entry["satellite"]), int(entry["year"]))] = entry["path"]
            except (KeyError, TypeError, ValueError) as e:
                raise ConfigError(f"bad grid entry {entry!r}: {e}")
        raw["grids"] = grids
        raw.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**raw)
        except TypeError as e:
            raise ConfigError(str(e))

    def manifest_dict(self) -> dict:
        d = asdict(self)
        # the run directory and resume flag do not shape the outputs
        d.pop("out_dir", None)
        d.pop("resume", None)
        d["grids"] = [
            {"satellite": s, "year": y, "path": str(p)}
            for (s, y), p in sorted(self.grids.items())
        ]
        return d


@dataclass
class StreetRunConfig:
    segments: str
    out_dir: str
    snap_tol: float | None = None
    clip_margin: float = 0.10
    level_override: int | None = None
    seed: int = 0
    min_cluster_count: int = 50
    dual_mode: bool = False
    n_bootstrap: int = 1000
    region_area_km2: float | None = None
    assume_projected: bool = False
    resume: bool = False

    def __post_init__(self):
        if self.snap_tol is not None and self.snap_tol < 0:
            raise ConfigError(f"snap_tol must be >= 0, got {self.snap_tol}")
        if self.clip_margin < 0:
            raise ConfigError(f"clip_margin must be >= 0, got {self.clip_margin}")

    @classmethod
    def from_json(cls, path, **overrides) -> "StreetRunConfig":
        raw = _read_config(path)
        raw.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**raw)
        except TypeError as e:
            raise ConfigError(str(e))

    def manifest_dict(self) -> dict:
        d = asdict(self)
        d.pop("out_dir", None)
        d.pop("resume", None)
        return d


def _read_config(path) -> dict:
    try:
        with open(path) as f:
            raw = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}")
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return raw


# ---------------------------------------------------------------------------
# run directory plumbing
# ---------------------------------------------------------------------------

class _RunDir:
    """Owns an output directory for the duration of a run (lock file)."""

    def __init__(self, out_dir):
        self.path = Path(out_dir)
        self.path.mkdir(parents=True, exist_ok=True)
        self._lock = self.path / ".lock"
        self._fd = None
        self.checksums: dict[str, str] = {}

    def __enter__(self):
        try:
            self._fd = os.open(self._lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RunDirLocked(f"{self.path} is locked by another run ({self._lock})")
        os.write(self._fd, str(os.getpid()).encode())
        return self

    def __exit__(self, *exc):
        if self._fd is not None:
            os.close(self._fd)
            self._lock.unlink(missing_ok=True)
        return False

    def file(self, *parts) -> Path:
        p = self.path.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def record(self, p: Path) -> None:
        rel = str(p.relative_to(self.path))
        self.checksums[rel] = hashlib.sha256(p.read_bytes()).hexdigest()

    def write_json(self, p: Path, obj) -> None:
        with open(p, "w") as f:
            json.dump(obj, f, sort_keys=True, separators=(",", ":"))
            f.write("\n")
        self.record(p)


def load_boundary(path):
    """Polygon rings from a GeoJSON file (Feature/FeatureCollection/geometry)."""
    try:
        with open(path) as f:
            doc = json.load(f)
    except OSError as e:
        raise DataError(f"cannot read boundary {path}: {e}")
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: invalid GeoJSON: {e}")
    geom = doc
    if doc.get("type") == "FeatureCollection":
        feats = doc.get("features") or []
        if not feats:
            raise DataError(f"{path}: boundary FeatureCollection is empty")
        geom = feats[0].get("geometry", {})
    elif doc.get("type") == "Feature":
        geom = doc.get("geometry", {})
    if geom.get("type") == "Polygon":
        return [[(float(x), float(y)) for x, y in ring] for ring in geom["coordinates"]]
    if geom.get("type") == "MultiPolygon":
        rings = []
        for poly in geom["coordinates"]:
            rings.extend([[(float(x), float(y)) for x, y in ring] for ring in poly])
        return rings
    raise DataError(f"{path}: boundary must be a Polygon or MultiPolygon")


def read_clusters_geojson(path) -> list[UrbanCluster]:
    with open(path) as f:
        doc = json.load(f)
    out = []
    for feat in doc.get("features", []):
        rings = feat["geometry"]["coordinates"]
        props = feat.get("properties", {})
        shell = [(float(x), float(y)) for x, y in rings[0][:-1]]
        holes = [[(float(x), float(y)) for x, y in r[:-1]] for r in rings[1:]]
        out.append(
            UrbanCluster(
                id=int(props["id"]),
                shell=shell,
                holes=holes,
                area_km2=float(props["area_km2"]),
                source=props.get("source", "ntl"),
                year=props.get("year"),
                threshold_used=props.get("threshold"),
            )
        )
    return out


def _fit_and_test(areas, n_bootstrap: int, seed: int):
    """(fit, gof, error_message); fit failures are recorded, not raised."""
    try:
        fit = scaling.fit_power_law(areas)
    except (TooFewValues, DegenerateSample) as e:
        return None, None, f"{type(e).__name__}: {e}"
    gof = scaling.goodness_of_fit(fit, areas, n_bootstrap=n_bootstrap, seed=seed)
    return fit, gof, None


def _diag_dict(fit, gof, error):
    if error is not None:
        return {"error": error, "plausible": False}
    d = scaling.fit_report(fit, gof)
    d["plausible"] = gof.plausible
    return d


# ---------------------------------------------------------------------------
# NTL pipeline
# ---------------------------------------------------------------------------

@dataclass
class NtlRunResult:
    reference: tuple[str, int]
    candidates: list[int]
    chosen_threshold: int
    clusters_by_key: dict  # (satellite, year) -> list[UrbanCluster] at the chosen threshold
    diagnostics: dict  # threshold -> {fit..., plausible} dict
    hierarchies: dict  # (satellite, year) -> HeadTailHierarchy
    summary: dict
    out_dir: str


def run_ntl_pipeline(cfg: NtlRunConfig) -> NtlRunResult:
    with _RunDir(cfg.out_dir) as run:
        # 1. load + clip
        boundary = load_boundary(cfg.boundary) if cfg.boundary else None
        grids = {}
        for key in sorted(cfg.grids):
            g = rastergrid.load_grid(cfg.grids[key], format=cfg.grid_format)
            grids[key] = rastergrid.clip(g, boundary) if boundary else g

        # 2. reference by sum of lights
        sols = {key: calib.sum_of_lights(g) for key, g in grids.items()}
        ref_key = calib.select_reference(grids)
        reference = grids[ref_key]

        # 3. calibrate everything onto the reference
        models = []
        calibrated = {}
        for key in sorted(grids):
            sat, year = key
            cpath = run.file("calibrated", f"{sat}_{year}.asc")
            if cfg.resume and cpath.exists():
                calibrated[key] = rastergrid.load_grid(cpath, format="esri_ascii")
                pairs = calib.pair_grids(grids[key], reference)
                models.append(calib.fit_calibration(pairs, satellite=sat, year=year))
                run.record(cpath)
                continue
            pairs = calib.pair_grids(grids[key], reference)
            model = calib.fit_calibration(pairs, satellite=sat, year=year)
            models.append(model)
            calibrated[key] = calib.apply_calibration(grids[key], model)
            rastergrid.write_esri_ascii(calibrated[key], cpath)
            run.record(cpath)
        mpath = run.file("calibration_models.csv")
        calib.write_models_csv(models, mpath)
        run.record(mpath)

        # 4. head/tail breaks per year on lit pixels
        hierarchies = {}
        for key, g in calibrated.items():
            vals = g.values()
            vals = vals[vals > 0]
            h = headtail.head_tail_breaks(vals, head_limit=cfg.head_limit, tie_rule=cfg.tie_rule)
            hierarchies[key] = h
            hpath = run.file("headtail", f"{key[0]}_{key[1]}.csv")
            headtail.write_hierarchy_csv(h, hpath)
            run.record(hpath)

        # 5. candidate thresholds
        if cfg.candidate_override:
            candidates = sorted(int(t) for t in cfg.candidate_override)
        else:
            candidates = headtail.multi_year_thresholds(
                hierarchies, depth=cfg.depth, rounding=cfg.rounding
            )
        run.write_json(run.file("candidates.json"), {"candidates": candidates})

        # 6. clusters per candidate per year; fit on the evaluation year
        years = sorted({y for (_, y) in calibrated})
        eval_year = cfg.eval_year if cfg.eval_year is not None else years[-1]
        if eval_year not in years:
            raise ConfigError(f"eval_year {eval_year} not among run years {years}")
        eval_key = max((k for k in calibrated if k[1] == eval_year))

        clusters_cache: dict = {}

        def clusters_for(key, t: int) -> list[UrbanCluster]:
            memo = clusters_cache.get((key, t))
            if memo is not None:
                return memo
            gpath = run.file("clusters", f"{key[0]}_{key[1]}_t{t}.geojson")
            if cfg.resume and gpath.exists():
                cl = read_clusters_geojson(gpath)
            else:
                mask = rastergrid.threshold_mask(calibrated[key], t)
                labeled = rastergrid.connected_components(mask, cfg.connectivity)
                cl = rastergrid.vectorize(
                    labeled, calibrated[key], source="ntl", year=key[1], threshold=float(t)
                )
                rastergrid.write_clusters_geojson(cl, gpath)
            run.record(gpath)
            clusters_cache[(key, t)] = cl
            return cl

        diagnostics = {}
        for t in candidates:
            for key in sorted(calibrated):
                clusters_for(key, t)
            areas = [c.area_km2 for c in clusters_cache[(eval_key, t)]]
            fit, gof, err = _fit_and_test(areas, cfg.n_bootstrap, cfg.seed)
            diagnostics[t] = _diag_dict(fit, gof, err)
            run.write_json(run.file("powerlaw", f"t{t}.json"), diagnostics[t])

        # 7. the largest plausible candidate wins
        if cfg.candidate_override and len(candidates) == 1:
            chosen = candidates[0]
        else:
            plausible = [t for t in candidates if diagnostics[t]["plausible"]]
            if not plausible:
                _write_ntl_summary(run, cfg, sols, ref_key, candidates, None, {}, diagnostics, eval_year)
                raise NoPlausibleThreshold(
                    f"no candidate threshold passed the p > {scaling.PLAUSIBILITY_P} rule "
                    f"(diagnostics in {run.path})"
                )
            chosen = max(plausible)

        # 8. emit outputs for the chosen threshold
        clusters_by_key = {key: clusters_cache[(key, chosen)] for key in sorted(calibrated)}
        eval_clusters = clusters_by_key[eval_key]
        pairs = scaling.rank_size([c.area_km2 for c in eval_clusters]) if eval_clusters else []
        if pairs:
            rpath = run.file("rank_size.csv")
            scaling.write_rank_size_csv(pairs, rpath)
            run.record(rpath)
            spath = run.file("rank_size.svg")
            scaling.rank_size_svg(pairs, spath, title=f"clusters at threshold {chosen}")
            run.record(spath)

        summary = _write_ntl_summary(
            run, cfg, sols, ref_key, candidates, chosen, clusters_by_key, diagnostics, eval_year
        )
        _write_manifest(run, cfg.manifest_dict())
        return NtlRunResult(
            reference=ref_key,
            candidates=candidates,
            chosen_threshold=chosen,
            clusters_by_key=clusters_by_key,
            diagnostics=diagnostics,
            hierarchies=hierarchies,
            summary=summary,
            out_dir=str(run.path),
        )


def _write_ntl_summary(run, cfg, sols, ref_key, candidates, chosen, clusters_by_key, diagnostics, eval_year):
    counts = {f"{k[0]}_{k[1]}": len(v) for k, v in clusters_by_key.items()}
    eval_clusters = [
        c for k, v in clusters_by_key.items() if k[1] == eval_year for c in v
    ]
    total = sum(c.area_km2 for c in eval_clusters)
    largest = largest_cluster(eval_clusters)[1] if eval_clusters else None
    summary = {
        "source": "ntl",
        "reference": {"satellite": ref_key[0], "year": ref_key[1]},
        "sum_of_lights": {f"{k[0]}_{k[1]}": v for k, v in sols.items()},
        "candidates": candidates,
        "chosen_threshold": chosen,
        "evaluation_year": eval_year,
        "cluster_count_by_year": counts,
        "total_cluster_area_km2": total if clusters_by_key else None,
        "pct_of_region": (
            100.0 * total / cfg.region_area_km2
            if (cfg.region_area_km2 and clusters_by_key) else None
        ),
        "largest_cluster_area_km2": largest,
        "power_law": {str(t): d for t, d in diagnostics.items()},
        "seed": cfg.seed,
        "n_bootstrap": cfg.n_bootstrap,
    }
    run.write_json(run.file("summary.json"), summary)
    return summary


def _write_manifest(run, config_dict) -> None:
    from . import __version__

    manifest = {
        "version": __version__,
        "config": config_dict,
        "artifacts": dict(sorted(run.checksums.items())),
    }
    with open(run.file("manifest.json"), "w") as f:
        json.dump(manifest, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


# ---------------------------------------------------------------------------
# street pipeline
# ---------------------------------------------------------------------------

@dataclass
class StreetRunResult:
    chosen_level: int
    threshold_km2: float
    clusters: list  # selected clusters at the chosen level
    all_clusters: list
    hierarchy: headtail.HeadTailHierarchy
    diagnostics: dict  # level -> diag dict
    summary: dict
    out_dir: str


def run_street_pipeline(cfg: StreetRunConfig) -> StreetRunResult:
    with _RunDir(cfg.out_dir) as run:
        segments = streetnet.load_segments(cfg.segments, assume_projected=cfg.assume_projected)
        pts = np.asarray([p for s in segments for p in (s.polyline[0], s.polyline[-1])])
        diag = float(np.hypot(*(pts.max(axis=0) - pts.min(axis=0))))
        snap_tol = cfg.snap_tol if cfg.snap_tol is not None else 1e-6 * diag
        nodes = streetnet.extract_nodes(segments, snap_tol=snap_tol)

        cpath = run.file("clusters_all.geojson")
        stats_path = run.file("voronoi_stats.json")
        if cfg.resume and cpath.exists() and stats_path.exists():
            all_clusters = read_clusters_geojson(cpath)
            with open(stats_path) as f:
                vstats = json.load(f)
            run.record(cpath)
            run.record(stats_path)
        else:
            graph = streetnet.build_voronoi(nodes, clip_margin=cfg.clip_margin)
            if cfg.dual_mode:
                all_clusters = streetnet.dual_mode_clusters(graph)
                vstats = {
                    "n_finite_edges": len(graph.finite_edges()),
                    "mean_edge_length": None,
                    "n_selected_edges": None,
                    "n_faces": None,
                    "mode": "dual",
                }
            else:
                selection = streetnet.select_short_edges(graph)
                faces = streetnet.polygonize(selection.edges)
                all_clusters = streetnet.merge_adjacent(faces)
                vstats = {
                    "n_finite_edges": len(graph.finite_edges()),
                    "mean_edge_length": selection.mean_length,
                    "n_selected_edges": len(selection.edges),
                    "n_faces": len(faces),
                    "mode": "voronoi",
                }
            rastergrid.write_clusters_geojson(all_clusters, cpath)
            run.record(cpath)
            run.write_json(stats_path, vstats)

        areas = [c.area_km2 for c in all_clusters]
        hierarchy = headtail.head_tail_breaks(areas)
        hpath = run.file("hierarchy.csv")
        headtail.write_hierarchy_csv(
            hierarchy, hpath, value_label="Area (km^2)", include_product=False
        )
        run.record(hpath)

        diagnostics = {}
        eligible = []
        for level in range(len(hierarchy.levels)):
            selected = streetnet.threshold_clusters(all_clusters, hierarchy, level)
            if not selected:
                continue
            fit, gof, err = _fit_and_test(
                [c.area_km2 for c in selected], cfg.n_bootstrap, cfg.seed
            )
            d = _diag_dict(fit, gof, err)
            d["n_selected"] = len(selected)
            d["threshold_km2"] = hierarchy.levels[level].mean
            diagnostics[level] = d
            run.write_json(run.file("powerlaw", f"level{level}.json"), d)
            if err is None and len(selected) >= cfg.min_cluster_count:
                eligible.append((level, gof.p_value))

        if cfg.level_override is not None:
            if not 0 <= cfg.level_override < len(hierarchy.levels):
                raise ConfigError(
                    f"level_override {cfg.level_override} outside hierarchy depth "
                    f"{len(hierarchy.levels)}"
                )
            chosen = cfg.level_override
        else:
            if not eligible:
                _write_street_summary(run, cfg, segments, nodes, vstats, all_clusters,
                                      hierarchy, None, [], diagnostics)
                raise NoPlausibleLevel(
                    f"no hierarchy level kept >= {cfg.min_cluster_count} clusters with a "
                    f"successful fit (diagnostics in {run.path})"
                )
            chosen = max(eligible, key=lambda lp: (lp[1], -lp[0]))[0]

        selected = streetnet.threshold_clusters(all_clusters, hierarchy, chosen)
        threshold = hierarchy.levels[chosen].mean
        for c in selected:
            c.threshold_used = threshold
        spath = run.file(f"clusters_level{chosen}.geojson")
        rastergrid.write_clusters_geojson(selected, spath)
        run.record(spath)

        if selected:
            pairs = scaling.rank_size([c.area_km2 for c in selected])
            rpath = run.file("rank_size.csv")
            scaling.write_rank_size_csv(pairs, rpath)
            run.record(rpath)
            svgpath = run.file("rank_size.svg")
            scaling.rank_size_svg(pairs, svgpath, title=f"street clusters, level {chosen}")
            run.record(svgpath)

        summary = _write_street_summary(
            run, cfg, segments, nodes, vstats, all_clusters, hierarchy, chosen,
            selected, diagnostics,
        )
        _write_manifest(run, cfg.manifest_dict())
        return StreetRunResult(
            chosen_level=chosen,
            threshold_km2=threshold,
            clusters=selected,
            all_clusters=all_clusters,
            hierarchy=hierarchy,
            diagnostics=diagnostics,
            summary=summary,
            out_dir=str(run.path),
        )


def _write_street_summary(run, cfg, segments, nodes, vstats, all_clusters, hierarchy,
                          chosen, selected, diagnostics):
    total = sum(c.area_km2 for c in selected)
    summary = {
        "source": "street",
        "n_segments": len(segments),
        "n_nodes": len(nodes),
        "n_voronoi_polygons": vstats.get("n_faces"),
        "mean_edge_length": vstats.get("mean_edge_length"),
        "n_clusters": len(all_clusters),
        "chosen_level": chosen,
        "threshold_km2": hierarchy.levels[chosen].mean if chosen is not None else None,
        "n_selected_clusters": len(selected),
        "total_cluster_area_km2": total if selected else None,
        "pct_of_region": (
            100.0 * total / cfg.region_area_km2
            if (cfg.region_area_km2 and selected) else None
        ),
        "largest_cluster_area_km2": largest_cluster(selected)[1] if selected else None,
        "power_law": {str(k): v for k, v in diagnostics.items()},
        "seed": cfg.seed,
        "n_bootstrap": cfg.n_bootstrap,
        "mode": vstats.get("mode"),
    }
    run.write_json(run.file("summary.json"), summary)
    return summary
