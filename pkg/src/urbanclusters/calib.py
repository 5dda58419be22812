"""Intercalibration of a nighttime-light time series against a reference
satellite-year via second-order regression.

The reference is the satellite-year with the maximal sum of lights. Each
other grid is paired pixel-by-pixel with the reference (zeros and nodata
excluded on either side), a quadratic is fit by ordinary least squares,
and calibrated DN values are rounded and clamped back into the 6-bit
range. Raw zeros stay zero: calibration never invents lit pixels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .errors import DegenerateDesign, EmptyInput
from .rastergrid import DN_MAX, DnGrid


@dataclass(frozen=True)
class CalibrationModel:
    satellite_id: str
    year: int
    c0: float
    c1: float
    c2: float
    r_squared: float
    n_samples: int

    def apply_value(self, dn):
        dn = np.asarray(dn, dtype=float)
        return self.c0 + self.c1 * dn + self.c2 * dn * dn


def sum_of_lights(grid: DnGrid) -> int:
    """Total DN over valid cells."""
    return int(grid.values().sum())


def select_reference(grids: dict) -> tuple[str, int]:
    """Key of the grid with maximal sum of lights.

    Ties break toward the latest year, then the lexicographically largest
    satellite id.
    """
    if not grids:
        raise EmptyInput("no grids to select a reference from")
    return max(grids, key=lambda k: (sum_of_lights(grids[k]), k[1], k[0]))


def fit_calibration(pairs, satellite: str = "", year: int = 0) -> CalibrationModel:
    """OLS fit of y = c0 + c1*x + c2*x² over (raw, reference) DN pairs."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise DegenerateDesign(f"need at least 3 pairs, got {len(pairs)}")
    x = np.asarray([p[0] for p in pairs], dtype=float)
    y = np.asarray([p[1] for p in pairs], dtype=float)
    if np.unique(x).size < 3:
        raise DegenerateDesign("need at least 3 distinct x values for a quadratic")
    design = np.column_stack([np.ones_like(x), x, x * x])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 3:
        raise DegenerateDesign("rank-deficient quadratic design")
    resid = y - design @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot > 0:
        r2 = max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    else:
        r2 = 1.0 if ss_res < 1e-12 else 0.0
    return CalibrationModel(
        satellite_id=satellite, year=year,
        c0=float(coef[0]), c1=float(coef[1]), c2=float(coef[2]),
        r_squared=r2, n_samples=len(pairs),
    )


def apply_calibration(grid: DnGrid, model: CalibrationModel, clamp=(0, DN_MAX)) -> DnGrid:
    """Calibrate every lit valid cell; nodata and zeros pass through."""
    cells = grid.cells.copy()
    target = grid.valid_mask() & (cells > 0)
    v = cells[target].astype(float)
    out = np.rint(model.apply_value(v))
    cells[target] = np.clip(out, clamp[0], clamp[1]).astype(cells.dtype)
    return dc_replace(grid, cells=cells)


def pair_grids(target: DnGrid, reference: DnGrid):
    """Co-located (target DN, reference DN) pairs over cells that are lit
    and valid in both grids (the whole-area sampling simplification)."""
    if target.cells.shape != reference.cells.shape:
        raise EmptyInput("grids must share dimensions to be paired")
    ok = (
        target.valid_mask() & reference.valid_mask()
        & (target.cells > 0) & (reference.cells > 0)
    )
    return np.column_stack([target.cells[ok], reference.cells[ok]]).astype(float)


def write_models_csv(models, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["satellite", "year", "c0", "c1", "c2", "r_squared", "n_samples"])
        for m in models:
            w.writerow([
                m.satellite_id, m.year,
                f"{m.c0!r}", f"{m.c1!r}", f"{m.c2!r}", f"{m.r_squared!r}", m.n_samples,
            ])
