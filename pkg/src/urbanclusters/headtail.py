"""Iterative head/tail breaks classification for heavy-tailed samples.

The classifier splits a positive-valued sample at its arithmetic mean,
keeps the values at or above the mean (the head), and re-splits that head
at its own mean, stopping once the head share overshoots a configurable
limit (default 50%) or the head can no longer shrink. The sequence of
level means is what downstream code uses as candidate thresholds.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import DepthZero, EmptyInput, NonPositiveValue, ParseError


class StopReason(str, enum.Enum):
    LIMIT_EXCEEDED = "limit_exceeded"
    HEAD_EMPTY = "head_empty"
    HEAD_SINGLETON = "head_singleton"


@dataclass(frozen=True)
class HeadTailLevel:
    """Per-level statistics: one row of the classification report."""

    range_lo: float
    range_hi: float
    count: int
    sum: float
    mean: float
    head_count: int
    head_fraction: float
    tail_count: int
    tail_fraction: float


@dataclass(frozen=True)
class HeadTailHierarchy:
    levels: tuple[HeadTailLevel, ...]
    head_limit: float
    stop_reason: StopReason

    def __len__(self) -> int:
        return len(self.levels)

    def means(self) -> list[float]:
        return [lv.mean for lv in self.levels]


def head_tail_breaks(
    values: Iterable[float],
    head_limit: float = 0.5,
    tie_rule: str = "head",
) -> HeadTailHierarchy:
    """Classify a positive sample by iterated mean splits.

    ``tie_rule`` decides where values exactly equal to a level mean go:
    ``"head"`` keeps them in the head (values >= mean), ``"tail"`` pushes
    them to the tail (head is values > mean). The level that overshoots
    ``head_limit`` is still reported, with ``stop_reason=limit_exceeded``.

    Raises EmptyInput for an empty sample and NonPositiveValue if any
    value is <= 0 (zeros must be filtered upstream).
    """
    if tie_rule not in ("head", "tail"):
        raise ValueError(f"tie_rule must be 'head' or 'tail', got {tie_rule!r}")
    if not 0.0 < head_limit <= 1.0:
        raise ValueError(f"head_limit must be in (0, 1], got {head_limit}")

    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    if arr.size == 0:
        raise EmptyInput("head_tail_breaks needs a nonempty sample")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise NonPositiveValue("all values must be finite and > 0")

    data = np.sort(arr)
    side = "left" if tie_rule == "head" else "right"

    levels: list[HeadTailLevel] = []
    while True:
        n = data.size
        total = float(data.sum())
        mean = total / n
        split = int(np.searchsorted(data, mean, side=side))
        head = data[split:]
        hc = int(head.size)
        tc = n - hc
        levels.append(
            HeadTailLevel(
                range_lo=float(data[0]),
                range_hi=float(data[-1]),
                count=n,
                sum=total,
                mean=mean,
                head_count=hc,
                head_fraction=hc / n,
                tail_count=tc,
                tail_fraction=tc / n,
            )
        )
        if n == 1:
            reason = StopReason.HEAD_SINGLETON
            break
        if hc / n > head_limit:
            reason = StopReason.LIMIT_EXCEEDED
            break
        if hc == 0:
            reason = StopReason.HEAD_EMPTY
            break
        if hc == n:
            # Head did not shrink (all values equal, head_limit == 1.0);
            # recursing would never terminate.
            reason = StopReason.LIMIT_EXCEEDED
            break
        data = head

    return HeadTailHierarchy(levels=tuple(levels), head_limit=head_limit, stop_reason=reason)


def ht_index(h: HeadTailHierarchy) -> int:
    """Number of levels that did not overshoot the head limit, plus one.

    A hierarchy whose very first split overshoots the limit scores 1.
    Levels retained by a singleton/empty-head stop count as non-violating.
    """
    n = len(h.levels)
    if h.stop_reason is StopReason.LIMIT_EXCEEDED:
        n -= 1
    return n + 1


def multi_year_thresholds(
    hierarchies: Mapping[int, HeadTailHierarchy],
    depth: int,
    rounding: str = "floor",
) -> list[int]:
    """Average per-level means across years and round to integer thresholds.

    For each level k < depth, the threshold is the rounded arithmetic mean
    of ``levels[k].mean`` over the years that possess level k; years with
    shallower hierarchies contribute only the levels they have. Levels
    possessed by no year are skipped. The result must come out strictly
    increasing (it always does unless rounding collapses two levels).
    """
    if rounding not in ("floor", "nearest"):
        raise ValueError(f"rounding must be 'floor' or 'nearest', got {rounding!r}")
    if not hierarchies:
        raise EmptyInput("no hierarchies given")
    if depth <= 0:
        raise DepthZero(f"depth must be >= 1, got {depth}")

    out: list[int] = []
    for k in range(depth):
        means = [h.levels[k].mean for h in hierarchies.values() if len(h.levels) > k]
        if not means:
            continue
        avg = sum(means) / len(means)
        t = int(np.floor(avg)) if rounding == "floor" else int(round(avg))
        out.append(t)
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ValueError(f"rounded thresholds are not strictly increasing: {out}")
    return out


HIERARCHY_CSV_COLUMNS = (
    "Light", "Count", "Light*Count", "Mean", "In head#", "In head%", "In tail#", "In tail%",
)


def write_hierarchy_csv(
    h: HeadTailHierarchy,
    path,
    value_label: str = "Light",
    include_product: bool = True,
) -> None:
    """Write the per-level report with the classic column layout.

    ``value_label="Light"`` with the product column reproduces the DN
    report shape; ``value_label="Area (km^2)", include_product=False``
    gives the area report shape.
    """
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        header = [value_label, "Count"]
        if include_product:
            header.append(f"{value_label}*Count")
        header += ["Mean", "In head#", "In head%", "In tail#", "In tail%"]
        w.writerow(header)
        for lv in h.levels:
            row = [f"{lv.range_lo:.10g}-{lv.range_hi:.10g}", lv.count]
            if include_product:
                row.append(f"{lv.sum:.10g}")
            row += [
                f"{lv.mean:.10g}",
                lv.head_count,
                f"{100.0 * lv.head_fraction:.2f}%",
                lv.tail_count,
                f"{100.0 * lv.tail_fraction:.2f}%",
            ]
            w.writerow(row)


def read_values_csv(path, column: str | int = 0) -> np.ndarray:
    """Read a one-column (or named-column) CSV of numeric values."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise EmptyInput(f"{path}: empty file")
    idx: int
    start = 0
    if isinstance(column, str):
        try:
            idx = rows[0].index(column)
        except ValueError:
            raise ParseError(f"{path}: no column named {column!r}")
        start = 1
    else:
        idx = column
        # Skip a header row if the target cell is not numeric.
        try:
            float(rows[0][idx])
        except (ValueError, IndexError):
            start = 1
    vals = []
    for r in rows[start:]:
        if not r:
            continue
        vals.append(float(r[idx]))
    return np.asarray(vals, dtype=float)
