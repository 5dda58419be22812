"""Shared fixtures: the synthetic end-to-end inputs are generated once per
session and both pipelines run twice (the second run feeds the
byte-determinism checks)."""

import hashlib
from pathlib import Path

import pytest

from urbanclusters.pipeline import (
    NtlRunConfig,
    StreetRunConfig,
    run_ntl_pipeline,
    run_street_pipeline,
)
from urbanclusters.testkit import ntl_blobs, street_grid_city

NTL_FIXTURE_SEED = 11
STREET_FIXTURE_SEED = 5
PIPELINE_SEED = 0
CI_BOOTSTRAP = 250


def tree_hashes(root) -> dict:
    root = Path(root)
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name != ".lock"
    }


@pytest.fixture(scope="session")
def ntl_fixture(tmp_path_factory):
    fx = ntl_blobs(seed=NTL_FIXTURE_SEED)
    paths = fx.write(tmp_path_factory.mktemp("ntl_fixture"))
    return fx, paths


@pytest.fixture(scope="session")
def ntl_runs(ntl_fixture, tmp_path_factory):
    fx, paths = ntl_fixture
    grids = {(e["satellite"], e["year"]): e["path"] for e in paths["grids"]}
    results = []
    dirs = []
    for tag in ("a", "b"):
        out = tmp_path_factory.mktemp(f"ntl_run_{tag}")
        cfg = NtlRunConfig(
            grids=grids,
            boundary=paths["boundary"],
            out_dir=str(out),
            seed=PIPELINE_SEED,
            n_bootstrap=CI_BOOTSTRAP,
        )
        results.append(run_ntl_pipeline(cfg))
        dirs.append(out)
    return fx, paths, results, dirs


@pytest.fixture(scope="session")
def street_fixture(tmp_path_factory):
    fx = street_grid_city(seed=STREET_FIXTURE_SEED)
    d = tmp_path_factory.mktemp("street_fixture")
    csv_path = d / "segments.csv"
    fx.write_csv(csv_path)
    return fx, csv_path


@pytest.fixture(scope="session")
def street_runs(street_fixture, tmp_path_factory):
    fx, csv_path = street_fixture
    results = []
    dirs = []
    for tag in ("a", "b"):
        out = tmp_path_factory.mktemp(f"street_run_{tag}")
        cfg = StreetRunConfig(
            segments=str(csv_path),
            out_dir=str(out),
            seed=PIPELINE_SEED,
            n_bootstrap=CI_BOOTSTRAP,
        )
        results.append(run_street_pipeline(cfg))
        dirs.append(out)
    return fx, csv_path, results, dirs
