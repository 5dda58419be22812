"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 data error,
4 no plausible threshold/level.
"""

from __future__ import annotations

import json
import sys

import click

from . import __version__, compare, headtail, pipeline, scaling
from .errors import (
    ConfigError,
    NoPlausibleLevel,
    NoPlausibleThreshold,
    UrbanClustersError,
)

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NO_PLAUSIBLE = 4


def _fail(exc: BaseException) -> int:
    click.echo(f"error: {exc}", err=True)
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (NoPlausibleThreshold, NoPlausibleLevel)):
        return EXIT_NO_PLAUSIBLE
    return EXIT_DATA


@click.group()
@click.version_option(version=__version__, prog_name="urbanclusters")
def cli():
    """Extract urban clusters from nighttime lights or street networks."""


@cli.group()
def ntl():
    """Nighttime-light pipeline."""


@ntl.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", default=None, type=click.Path())
@click.option("--seed", default=None, type=int)
@click.option("--connectivity", default=None, type=click.Choice(["four", "eight"]))
@click.option("--threshold", default=None, type=int,
              help="Force this candidate threshold instead of deriving one.")
@click.option("--resume/--no-resume", default=None)
def ntl_run(config_path, out_dir, seed, connectivity, threshold, resume):
    try:
        cfg = pipeline.NtlRunConfig.from_json(
            config_path,
            out_dir=out_dir,
            seed=seed,
            connectivity=connectivity,
            candidate_override=[threshold] if threshold is not None else None,
            resume=resume,
        )
        result = pipeline.run_ntl_pipeline(cfg)
    except UrbanClustersError as e:
        sys.exit(_fail(e))
    click.echo(
        f"chosen threshold {result.chosen_threshold} "
        f"(candidates {result.candidates}); outputs in {result.out_dir}"
    )


@cli.group()
def streets():
    """Street-network pipeline."""


@streets.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", default=None, type=click.Path())
@click.option("--seed", default=None, type=int)
@click.option("--level", default=None, type=int, help="Force this hierarchy level.")
@click.option("--dual-mode/--no-dual-mode", default=None,
              help="Select short Delaunay edges and union Voronoi cells instead.")
@click.option("--resume/--no-resume", default=None)
def streets_run(config_path, out_dir, seed, level, dual_mode, resume):
    try:
        cfg = pipeline.StreetRunConfig.from_json(
            config_path,
            out_dir=out_dir,
            seed=seed,
            level_override=level,
            dual_mode=dual_mode,
            resume=resume,
        )
        result = pipeline.run_street_pipeline(cfg)
    except UrbanClustersError as e:
        sys.exit(_fail(e))
    click.echo(
        f"chosen level {result.chosen_level} (threshold {result.threshold_km2:.6g} km², "
        f"{len(result.clusters)} clusters); outputs in {result.out_dir}"
    )


@cli.group(name="headtail")
def headtail_group():
    """Head/tail breaks classification."""


@headtail_group.command("classify")
@click.argument("values_csv", type=click.Path(exists=True))
@click.option("--column", default="0", help="Column index or name holding the values.")
@click.option("--head-limit", default=0.5, show_default=True)
@click.option("--tie-rule", default="head", type=click.Choice(["head", "tail"]), show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path(),
              help="Write the per-level CSV report here.")
@click.option("--label", default="Light", show_default=True, help="Value column label in the report.")
def headtail_classify(values_csv, column, head_limit, tie_rule, out_path, label):
    try:
        col = int(column) if column.lstrip("-").isdigit() else column
        values = headtail.read_values_csv(values_csv, column=col)
        h = headtail.head_tail_breaks(values, head_limit=head_limit, tie_rule=tie_rule)
    except UrbanClustersError as e:
        sys.exit(_fail(e))
    for lv in h.levels:
        click.echo(
            f"{lv.range_lo:.6g}-{lv.range_hi:.6g}  count={lv.count}  mean={lv.mean:.6g}  "
            f"head={lv.head_count} ({100 * lv.head_fraction:.2f}%)"
        )
    click.echo(f"stop: {h.stop_reason.value}; ht-index {headtail.ht_index(h)}")
    if out_path:
        headtail.write_hierarchy_csv(h, out_path, value_label=label,
                                     include_product=(label == "Light"))
        click.echo(f"report written to {out_path}")


@cli.group(name="powerlaw")
def powerlaw_group():
    """Power-law fitting."""


@powerlaw_group.command("fit")
@click.argument("sizes_csv", type=click.Path(exists=True))
@click.option("--column", default="0")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--bootstrap", "n_bootstrap", default=1000, show_default=True, type=int)
@click.option("--skip-gof", is_flag=True, help="Fit only; skip the bootstrap test.")
@click.option("--out", "out_path", default=None, type=click.Path(), help="Write the JSON report here.")
@click.option("--rank-size", "rank_csv", default=None, type=click.Path(),
              help="Write a (rank, size) CSV here.")
@click.option("--svg", "svg_path", default=None, type=click.Path(),
              help="Write a log-log rank-size chart here.")
def powerlaw_fit(sizes_csv, column, seed, n_bootstrap, skip_gof, out_path, rank_csv, svg_path):
    try:
        col = int(column) if column.lstrip("-").isdigit() else column
        sizes = headtail.read_values_csv(sizes_csv, column=col)
        fit = scaling.fit_power_law(sizes)
        gof = None if skip_gof else scaling.goodness_of_fit(fit, sizes, n_bootstrap, seed)
    except UrbanClustersError as e:
        sys.exit(_fail(e))
    click.echo(
        f"x_min={fit.x_min:.6g} alpha={fit.alpha:.6g} ks={fit.ks_distance:.6g} n_tail={fit.n_tail}"
    )
    if gof is not None:
        verdict = "plausible" if gof.plausible else "rejected"
        click.echo(f"p={gof.p_value:.4f} ({gof.n_bootstrap} replicates, seed {gof.seed}): {verdict}")
    if out_path:
        scaling.write_fit_report(fit, gof, out_path)
    pairs = scaling.rank_size(sizes)
    if rank_csv:
        scaling.write_rank_size_csv(pairs, rank_csv)
    if svg_path:
        scaling.rank_size_svg(pairs, svg_path)


@cli.group(name="compare")
def compare_group():
    """Cluster-set comparison."""


@compare_group.command("overlay")
@click.argument("clusters_a", type=click.Path(exists=True))
@click.argument("clusters_b", type=click.Path(exists=True))
@click.option("--region-area", "region_area_km2", required=True, type=float,
              help="Region area in km² for the percentage columns.")
@click.option("--units-per-km", default=1000.0, show_default=True, type=float)
@click.option("--out", "out_path", default=None, type=click.Path())
def compare_overlay(clusters_a, clusters_b, region_area_km2, units_per_km, out_path):
    try:
        set_a = pipeline.read_clusters_geojson(clusters_a)
        set_b = pipeline.read_clusters_geojson(clusters_b)
        report = compare.overlay_stats(
            set_a, set_b, region_area_km2, units_per_km=units_per_km
        )
    except UrbanClustersError as e:
        sys.exit(_fail(e))
    click.echo(json.dumps(report.to_dict(), sort_keys=True, indent=2))
    if out_path:
        compare.write_overlay_report(report, out_path)


def main():
    cli(prog_name="urbanclusters")


if __name__ == "__main__":
    main()
