"""Independent oracles and synthetic fixture generators.

Everything here exists to check the production code paths without sharing
code with them: the flood-fill labeler is an explicit stack fill, the
nearest-site oracle is a brute-force distance scan, the quadratic-fit
oracle assembles normal equations by hand, and the aggregate-constrained
multisets are built by direct arithmetic. All generators are seeded with a
counter-based generator so output is identical across platforms and runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleConstraints
from .rastergrid import DnGrid, LabeledMask, write_esri_ascii

DN_NODATA = -9999


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator keyed on (seed, substream...); replicate-stable."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed,) + stream)))


# ---------------------------------------------------------------------------
# Aggregate-constrained multisets
# ---------------------------------------------------------------------------

def _fill_band(lo: int, hi: int, count: int, total: int) -> dict[int, int]:
    """Distribute ``count`` integer values in [lo, hi] summing to ``total``.

    Simplest feasible shape: everything at lo, a block at hi, at most one
    value in between. Raises InfeasibleConstraints if no multiset exists.
    """
    if count < 0 or total < lo * count or total > hi * count:
        raise InfeasibleConstraints(
            f"band [{lo},{hi}] cannot hold {count} values summing to {total}"
        )
    if lo == hi:
        return {lo: count} if count else {}
    extra = total - lo * count
    width = hi - lo
    k, rem = divmod(extra, width)
    h: dict[int, int] = {}
    n_lo = count - k - (1 if rem else 0)
    if n_lo < 0:
        raise InfeasibleConstraints(
            f"band [{lo},{hi}]: rounding split failed for count={count} total={total}"
        )
    if n_lo:
        h[lo] = n_lo
    if rem:
        h[lo + rem] = h.get(lo + rem, 0) + 1
    if k:
        h[hi] = h.get(hi, 0) + k
    return h


# Published per-level aggregates for the DN classification example:
# nested (count, sum) over bands 1-63 / 20-63 / 36-63 / 48-63 plus the
# final head count above the last mean.
TABLE1_BAND_AGGREGATES = (
    (1, 63, 70891, 1347627),
    (20, 63, 29423, 1039959),
    (36, 63, 12403, 593531),
    (48, 63, 6156, 336034),
)
TABLE1_FINAL_HEAD_COUNT = 3287  # values >= 55


def table1_histogram() -> np.ndarray:
    """A DN multiset (ints 1..63) reproducing all published band aggregates.

    Solved innermost-band-first: the 48-63 band is split at 55 so the final
    head count also matches, then each enclosing shell band is filled.
    """
    shells = []
    inner = TABLE1_BAND_AGGREGATES[-1]
    for outer_band, inner_band in zip(TABLE1_BAND_AGGREGATES, TABLE1_BAND_AGGREGATES[1:]):
        lo, _, c_out, s_out = outer_band
        in_lo, _, c_in, s_in = inner_band
        shells.append((lo, in_lo - 1, c_out - c_in, s_out - s_in))

    hist: dict[int, int] = {}
    # innermost band [48, 63]: sub-split at 55 with a chosen head sum that
    # leaves the 48..54 part exactly representable
    lo, hi, c, s = inner
    head_c = TABLE1_FINAL_HEAD_COUNT
    body_c = c - head_c
    body_s = 54 * body_c  # all the sub-55 part at 54: feasible by construction
    head_s = s - body_s
    for val, n in _fill_band(lo, 54, body_c, body_s).items():
        hist[val] = hist.get(val, 0) + n
    for val, n in _fill_band(55, hi, head_c, head_s).items():
        hist[val] = hist.get(val, 0) + n
    for lo, hi, c, s in shells:
        for val, n in _fill_band(lo, hi, c, s).items():
            hist[val] = hist.get(val, 0) + n

    values = np.repeat(
        np.array(sorted(hist), dtype=np.int64),
        np.array([hist[v] for v in sorted(hist)], dtype=np.int64),
    )
    # verify against every published aggregate before handing the fixture out
    for lo, hi, c, s in TABLE1_BAND_AGGREGATES:
        sel = values[(values >= lo) & (values <= hi)]
        if sel.size != c or int(sel.sum()) != s:
            raise InfeasibleConstraints(f"band [{lo},{hi}] check failed: {sel.size}/{sel.sum()}")
    if int((values >= 55).sum()) != TABLE1_FINAL_HEAD_COUNT:
        raise InfeasibleConstraints("final head count check failed")
    return values


# Published level aggregates for the street-cluster area example: per-level
# counts and the head totals selected at the first three level means.
def table1_grid(width: int = 300, height: int = 300) -> DnGrid:
    """The Table-1 DN multiset embedded in a grid, padded with zeros and a
    nodata frame; sum_of_lights over it equals the published total."""
    values = table1_histogram()
    n_cells = (height - 1) * width  # row 0 stays a nodata frame
    if values.size > n_cells:
        raise InfeasibleConstraints("grid too small for the DN multiset")
    body = np.zeros(n_cells, dtype=np.int32)
    body[: values.size] = values[::-1]  # brightest first; placement is arbitrary
    cells = np.vstack([np.full((1, width), DN_NODATA, dtype=np.int32),
                       body.reshape(height - 1, width)])
    grid = DnGrid(
        width=width, height=height, origin=(0.0, 0.0), cell_size=1000.0,
        crs_tag="projected", nodata=DN_NODATA, cells=cells,
    )
    return grid


TABLE2_LEVEL_COUNTS = (18446, 1879, 334, 64, 17, 5)
TABLE2_HEAD_TOTALS = (2017.75621, 1466.75917, 960.155935)  # km², levels 0..2
TABLE2_LEVEL5_SUM = 610.47  # 17 * 35.91, pins the level-4 mean
TABLE2_TOP_SUM = 400.0  # the 5 head values, all equal, pins a clean stop


def table2_areas() -> np.ndarray:
    """An area multiset (km²) reproducing the published hierarchy.

    Each tail band collapses to a single repeated value strictly between
    the enclosing level means, which satisfies every (count, sum) pair at
    once; the 5 largest areas are equal so the hierarchy stops right after
    the sixth level.
    """
    counts = TABLE2_LEVEL_COUNTS
    total = 2287.304  # 18446 * 0.124, the level-0 sum
    level_sums = [total, *TABLE2_HEAD_TOTALS, TABLE2_LEVEL5_SUM, TABLE2_TOP_SUM]
    parts: list[np.ndarray] = []
    for i in range(len(counts)):
        n_tail = counts[i] - (counts[i + 1] if i + 1 < len(counts) else 0)
        s_tail = level_sums[i] - (level_sums[i + 1] if i + 1 < len(level_sums) else 0.0)
        value = s_tail / n_tail
        lo_mean = level_sums[i] / counts[i]
        if i > 0 and not (level_sums[i - 1] / counts[i - 1]) < value:
            raise InfeasibleConstraints(f"level {i}: tail value {value} below previous mean")
        if i + 1 < len(counts) and not value < lo_mean:
            # tail values must sit strictly below their own level mean
            raise InfeasibleConstraints(f"level {i}: tail value {value} not below mean {lo_mean}")
        parts.append(np.full(n_tail, value))
    areas = np.concatenate(parts)
    if areas.size != counts[0]:
        raise InfeasibleConstraints("area multiset size mismatch")
    return areas


# ---------------------------------------------------------------------------
# Reference implementations
# ---------------------------------------------------------------------------

def flood_fill_oracle(mask: np.ndarray, connectivity: str = "eight") -> LabeledMask:
    """Stack-based flood fill, labels in row-major first-encounter order."""
    if connectivity == "four":
        steps = ((-1, 0), (1, 0), (0, -1), (0, 1))
    elif connectivity == "eight":
        steps = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
    else:
        raise ValueError(f"connectivity must be 'four' or 'eight', got {connectivity!r}")
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    current = 0
    for r0 in range(h):
        for c0 in range(w):
            if not mask[r0, c0] or labels[r0, c0]:
                continue
            current += 1
            stack = [(r0, c0)]
            labels[r0, c0] = current
            while stack:
                r, c = stack.pop()
                for dr, dc in steps:
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < h and 0 <= cc < w and mask[rr, cc] and not labels[rr, cc]:
                        labels[rr, cc] = current
                        stack.append((rr, cc))
    return LabeledMask(width=w, height=h, labels=labels, connectivity=connectivity, n_clusters=current)


def labelings_equivalent(a: np.ndarray, b: np.ndarray) -> bool:
    """True when two labelings agree up to a renumbering of labels."""
    if a.shape != b.shape:
        return False
    if not np.array_equal(a == 0, b == 0):
        return False
    pairs = np.stack([a[a != 0], b[a != 0]], axis=1)
    uniq = np.unique(pairs, axis=0)
    return (
        uniq.shape[0] == np.unique(uniq[:, 0]).size == np.unique(uniq[:, 1]).size
    )


def nearest_site_oracle(sites: np.ndarray, extent, resolution: int) -> np.ndarray:
    """Index of the nearest site for every pixel center, brute force.

    ``extent`` is (xmin, ymin, xmax, ymax); ties go to the lowest index.
    """
    xmin, ymin, xmax, ymax = extent
    xs = xmin + (np.arange(resolution) + 0.5) * (xmax - xmin) / resolution
    ys = ymin + (np.arange(resolution) + 0.5) * (ymax - ymin) / resolution
    px, py = np.meshgrid(xs, ys)
    d2 = (
        (px[None, :, :] - sites[:, 0, None, None]) ** 2
        + (py[None, :, :] - sites[:, 1, None, None]) ** 2
    )
    return np.argmin(d2, axis=0)


def pareto_sampler(alpha: float, x_min: float, n: int, seed: int) -> np.ndarray:
    """Continuous Pareto draws by inverse CDF: x_min * (1-u)^(-1/(alpha-1))."""
    if n == 0:
        return np.empty(0)
    u = rng_for(seed).random(n)
    return x_min * (1.0 - u) ** (-1.0 / (alpha - 1.0))


def exponential_sampler(rate: float, n: int, seed: int) -> np.ndarray:
    """Exponential draws by inverse CDF: -ln(1-u)/rate."""
    if n == 0:
        return np.empty(0)
    u = rng_for(seed).random(n)
    return -np.log1p(-u) / rate


def quad_fit_oracle(pairs) -> tuple[float, float, float]:
    """Quadratic least squares by explicit normal equations.

    Assembles the 3x3 moment matrix sum(x^{i+j}) and right-hand side
    sum(y x^i) by direct summation and solves with a generic linear
    solver; shares nothing with the production lstsq route.
    """
    xs = np.asarray([p[0] for p in pairs], dtype=float)
    ys = np.asarray([p[1] for p in pairs], dtype=float)
    moments = [float(np.sum(xs ** k)) for k in range(5)]
    a = np.array(
        [
            [moments[0], moments[1], moments[2]],
            [moments[1], moments[2], moments[3]],
            [moments[2], moments[3], moments[4]],
        ]
    )
    b = np.array(
        [float(np.sum(ys)), float(np.sum(ys * xs)), float(np.sum(ys * xs ** 2))]
    )
    c0, c1, c2 = np.linalg.solve(a, b)
    return float(c0), float(c1), float(c2)


# ---------------------------------------------------------------------------
# Synthetic end-to-end fixtures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FixtureSpec:
    kind: str  # ntl_blobs | street_grid_city | pareto_sample | table1_histogram | table2_areas
    seed: int = 0
    parameters: dict = field(default_factory=dict)


def build_fixture(spec: FixtureSpec):
    if spec.kind == "table1_histogram":
        return table1_histogram()
    if spec.kind == "table2_areas":
        return table2_areas()
    if spec.kind == "pareto_sample":
        p = {"alpha": 2.5, "x_min": 1.0, "n": 10000, **spec.parameters}
        return pareto_sampler(p["alpha"], p["x_min"], p["n"], spec.seed)
    if spec.kind == "ntl_blobs":
        return ntl_blobs(seed=spec.seed, **spec.parameters)
    if spec.kind == "street_grid_city":
        return street_grid_city(seed=spec.seed, **spec.parameters)
    raise ValueError(f"unknown fixture kind {spec.kind!r}")


@dataclass
class NtlBlobsFixture:
    """A small multi-year country: dim noise, two-tone rectangular blobs
    with Pareto sizes, and a handful of very bright cores. Built so the
    second head/tail candidate threshold isolates the blob interiors
    (Pareto-sized) while the third one leaves fewer clusters than a power
    law fit accepts."""

    grids: dict[tuple[str, int], DnGrid]
    boundary: list[list[tuple[float, float]]]
    blob_sizes: list[int]
    inner_sizes: list[int]
    n_supercores: int
    seed: int

    def write(self, out_dir) -> dict:
        """Export grids and boundary to real pipeline inputs; returns a
        config-shaped dict of paths."""
        from pathlib import Path
        import json

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        grid_entries = []
        for (sat, year), grid in sorted(self.grids.items()):
            p = out / f"ntl_{sat}_{year}.asc"
            write_esri_ascii(grid, p)
            grid_entries.append({"satellite": sat, "year": year, "path": str(p)})
        bpath = out / "boundary.geojson"
        geom = {
            "type": "Feature",
            "properties": {},
            "geometry": {
                "type": "Polygon",
                "coordinates": [
                    [[float(x), float(y)] for (x, y) in ring + [ring[0]]]
                    for ring in self.boundary
                ],
            },
        }
        with open(bpath, "w") as f:
            json.dump({"type": "FeatureCollection", "features": [geom]}, f, sort_keys=True)
        return {"grids": grid_entries, "boundary": str(bpath)}


def _blob_cells(r0: int, c0: int, size: int):
    """Row-major cell list of a near-square blob of exactly ``size`` cells."""
    w = int(math.ceil(math.sqrt(size)))
    cells = []
    r = r0
    left = size
    while left > 0:
        row_n = min(w, left)
        for j in range(row_n):
            cells.append((r, c0 + j))
        left -= row_n
        r += 1
    return cells


def ntl_blobs(
    seed: int = 0,
    width: int = 240,
    height: int = 240,
    n_blobs: int = 130,
    n_noise: int = 12000,
    blob_alpha: float = 2.2,
    blob_min_size: int = 12,
    blob_max_size: int = 400,
    inner_ratio: float = 0.4,
    n_supercores: int = 6,
    body_dn: int = 24,
    inner_dn: int = 48,
    cell_size: float = 500.0,
    origin: tuple[float, float] = (600000.0, 150000.0),
) -> NtlBlobsFixture:
    rng = rng_for(seed)
    sizes = np.clip(
        np.round(pareto_sampler(blob_alpha, blob_min_size, n_blobs, seed)).astype(int),
        blob_min_size,
        blob_max_size,
    )
    sizes = np.sort(sizes)[::-1]  # place the big ones first

    base = np.zeros((height, width), dtype=np.int32)
    occupied = np.zeros((height, width), dtype=bool)
    inset = 6  # keep everything inside the clip boundary
    blob_cell_lists = []
    for s in sizes:
        w = int(math.ceil(math.sqrt(int(s))))
        h = int(math.ceil(int(s) / w))
        placed = False
        for _ in range(4000):
            r0 = int(rng.integers(inset, height - inset - h))
            c0 = int(rng.integers(inset, width - inset - w))
            window = occupied[max(0, r0 - 2):r0 + h + 2, max(0, c0 - 2):c0 + w + 2]
            if not window.any():
                cells = _blob_cells(r0, c0, int(s))
                blob_cell_lists.append(cells)
                for (r, c) in cells:
                    occupied[r, c] = True
                # margin stamp so neighbouring blobs stay 8-disconnected
                occupied[max(0, r0 - 2):r0 + h + 2, max(0, c0 - 2):c0 + w + 2] = True
                placed = True
                break
        if not placed:
            raise InfeasibleConstraints("could not pack blobs; lower n_blobs or sizes")

    inner_sizes = []
    for i, cells in enumerate(blob_cell_lists):
        s = len(cells)
        s_in = max(1, int(round(inner_ratio * s)))
        inner_sizes.append(s_in)
        for (r, c) in cells:
            base[r, c] = body_dn
        for (r, c) in cells[:s_in]:
            base[r, c] = inner_dn
        if i < n_supercores:
            sc = min(12, s_in)
            for k, (r, c) in enumerate(cells[:sc]):
                base[r, c] = 60 + (k % 4)

    # noise speckle strictly below the first candidate threshold
    free = np.flatnonzero(~occupied)
    pick = rng.choice(free, size=min(n_noise, free.size), replace=False)
    noise_vals = rng.integers(1, 13, size=pick.size)
    flat = base.ravel()
    flat[pick] = noise_vals

    def year_grid(transform) -> DnGrid:
        cells = base.copy()
        nz = cells > 0
        cells[nz] = np.clip(np.rint(transform(cells[nz].astype(float))), 0, 63).astype(np.int32)
        return DnGrid(
            width=width, height=height, origin=origin, cell_size=cell_size,
            crs_tag="projected", nodata=DN_NODATA, cells=cells,
        )

    grids = {
        ("F10", 1992): year_grid(lambda v: v),
        ("F18", 1993): year_grid(lambda v: 1.0 + 1.06 * v - 0.0004 * v * v),
        ("F12", 1994): year_grid(lambda v: 0.93 * v),
    }
    x0, y0 = origin
    bx0 = x0 + 2 * cell_size
    by0 = y0 + 2 * cell_size
    bx1 = x0 + (width - 2) * cell_size
    by1 = y0 + (height - 2) * cell_size
    boundary = [[(bx0, by0), (bx1, by0), (bx1, by1), (bx0, by1)]]
    return NtlBlobsFixture(
        grids=grids,
        boundary=boundary,
        blob_sizes=[len(c) for c in blob_cell_lists],
        inner_sizes=inner_sizes,
        n_supercores=n_supercores,
        seed=seed,
    )


@dataclass
class StreetGridFixture:
    """Many small lattice towns plus one oversized core town; segments are
    unit grid edges so every junction is a segment endpoint."""

    segments: list  # list of (id, (x1, y1), (x2, y2))
    town_centers: list[tuple[float, float]]
    town_sizes: list[int]
    mega_center: tuple[float, float]
    mega_size: int
    n_nodes_expected: int
    seed: int

    def write_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("id,x1,y1,x2,y2\n")
            for sid, (x1, y1), (x2, y2) in self.segments:
                f.write(f"{sid},{x1!r},{y1!r},{x2!r},{y2!r}\n")

    def write_geojson(self, path) -> None:
        import json

        features = [
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[x1, y1], [x2, y2]],
                },
                "properties": {"id": sid},
            }
            for sid, (x1, y1), (x2, y2) in self.segments
        ]
        with open(path, "w") as f:
            json.dump({"type": "FeatureCollection", "features": features}, f, sort_keys=True)


def street_grid_city(
    seed: int = 0,
    n_towns: int = 340,
    spacing: float = 100.0,
    area_alpha: float = 2.3,
    area_min_km2: float = 0.045,
    area_cap_km2: float = 3.3,
    mega_k: int = 26,
    domain: tuple[float, float] = (100000.0, 80000.0),
    min_gap: float = 1200.0,
    jitter: float = 3.0,
) -> StreetGridFixture:
    rng = rng_for(seed)
    # target footprint areas follow a continuous power law; each town's grid
    # pitch is tuned so (k-1)*pitch hits the target side length exactly
    targets = np.minimum(
        pareto_sampler(area_alpha, area_min_km2, n_towns, seed + 1), area_cap_km2
    )
    sides = np.sqrt(targets) * 1000.0  # meters
    ks = np.maximum(3, np.round(sides / spacing).astype(int) + 1).tolist()
    all_ks = [mega_k] + ks
    pitches = [spacing] + [
        float(side / (k - 1)) for side, k in zip(sides, ks)
    ]
    dx, dy = domain
    placed: list[tuple[float, float, float]] = []  # center x, y, half-extent
    centers: list[tuple[float, float]] = []
    for i, k in enumerate(all_ks):
        half = (k - 1) * pitches[i] / 2.0
        if i == 0:
            cx, cy = dx / 2.0, dy / 2.0
        else:
            ok = False
            for _ in range(5000):
                cx = float(rng.uniform(half + spacing, dx - half - spacing))
                cy = float(rng.uniform(half + spacing, dy - half - spacing))
                if all(
                    abs(cx - px) > half + ph + min_gap or abs(cy - py) > half + ph + min_gap
                    for (px, py, ph) in placed
                ):
                    ok = True
                    break
            if not ok:
                raise InfeasibleConstraints("could not place towns; shrink n_towns or min_gap")
        placed.append((cx, cy, half))
        centers.append((cx, cy))

    segments = []
    sid = 0
    n_nodes = 0
    for (cx, cy, half), k, pitch in zip(placed, all_ks, pitches):
        xs = cx - half + pitch * np.arange(k)
        ys = cy - half + pitch * np.arange(k)
        nodes = {}
        for i in range(k):
            for j in range(k):
                nodes[(i, j)] = (
                    float(xs[j] + rng.uniform(-jitter, jitter)),
                    float(ys[i] + rng.uniform(-jitter, jitter)),
                )
        n_nodes += k * k
        for i in range(k):
            for j in range(k - 1):
                segments.append((sid, nodes[(i, j)], nodes[(i, j + 1)]))
                sid += 1
        for i in range(k - 1):
            for j in range(k):
                segments.append((sid, nodes[(i, j)], nodes[(i + 1, j)]))
                sid += 1

    return StreetGridFixture(
        segments=segments,
        town_centers=centers[1:],
        town_sizes=all_ks[1:],
        mega_center=centers[0],
        mega_size=mega_k,
        n_nodes_expected=n_nodes,
        seed=seed,
    )
