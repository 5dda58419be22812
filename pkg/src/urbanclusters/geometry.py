"""Shared low-level geometry: shoelace areas, point-in-polygon tests,
Chaikin corner cutting, and the angular dart tracer used for face
extraction and region-boundary tracing on planar subdivisions.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right

import numpy as np


def shoelace(ring) -> float:
    """Signed area of a closed ring (last->first edge implied). CCW > 0."""
    a = 0.0
    n = len(ring)
    for i in range(n):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % n]
        a += x0 * y1 - x1 * y0
    return 0.5 * a


def shoelace_int(ring) -> int:
    """Twice the signed area of an integer-coordinate ring, exact."""
    a = 0
    n = len(ring)
    for i in range(n):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % n]
        a += x0 * y1 - x1 * y0
    return a


def points_in_rings(px: np.ndarray, py: np.ndarray, rings) -> np.ndarray:
    """Even-odd point-in-polygon test, vectorized over query points.

    ``rings`` is a list of closed rings; holes are handled by parity.
    Points exactly on an edge may land on either side (callers avoid
    relying on boundary points).
    """
    inside = np.zeros(px.shape, dtype=bool)
    for ring in rings:
        n = len(ring)
        for i in range(n):
            x0, y0 = ring[i]
            x1, y1 = ring[(i + 1) % n]
            if y0 == y1:
                continue
            crosses = ((y0 > py) != (y1 > py)) & (
                px < (x1 - x0) * (py - y0) / (y1 - y0) + x0
            )
            inside ^= crosses
    return inside


def chaikin_ring(ring, weight: float, iterations: int = 1):
    """Chaikin corner cutting on a closed ring; area-perturbing, map use only."""
    if not 0.0 < weight <= 0.5:
        raise ValueError(f"chaikin weight must be in (0, 0.5], got {weight}")
    pts = [tuple(p) for p in ring]
    for _ in range(iterations):
        out = []
        n = len(pts)
        for i in range(n):
            x0, y0 = pts[i]
            x1, y1 = pts[(i + 1) % n]
            out.append((x0 + weight * (x1 - x0), y0 + weight * (y1 - y0)))
            out.append((x0 + (1.0 - weight) * (x1 - x0), y0 + (1.0 - weight) * (y1 - y0)))
        pts = out
    return pts


def remove_spikes(seq: list) -> list:
    """Drop out-and-back spikes (.. a, b, a ..) from a cyclic vertex sequence."""
    pts = list(seq)
    changed = True
    while changed and len(pts) >= 3:
        stack: list = []
        for v in pts:
            if len(stack) >= 2 and stack[-2] == v:
                stack.pop()
            else:
                stack.append(v)
        # cyclic wrap: the stack ends may still form a spike across the seam
        changed = False
        while len(stack) >= 3 and stack[0] == stack[-1]:
            stack.pop()
            changed = True
        while len(stack) >= 3 and stack[-2] == stack[0]:
            stack.pop()
            stack.pop()
            changed = True
        if len(stack) != len(pts):
            changed = True
        pts = stack
    return pts if len(pts) >= 3 else []


class DartTracer:
    """Partitions directed edges (darts) of a planar straight-line graph
    into boundary cycles.

    Darts are (u, v) vertex-id pairs; ``coords`` maps a vertex id to its
    (x, y). At the head of each dart the successor is chosen by rotating
    from the reversed direction: clockwise rotation ("cw") traces the
    faces of an arrangement (bounded faces come out with positive area),
    counterclockwise rotation ("ccw") traces region boundaries with the
    region kept on the left, jumping across pinch vertices so a connected
    region yields a single outer cycle.
    """

    def __init__(self, darts, coords, policy: str):
        if policy not in ("cw", "ccw"):
            raise ValueError(f"policy must be 'cw' or 'ccw', got {policy!r}")
        self.darts = list(darts)
        self.coords = coords
        self.policy = policy
        by_tail: dict = {}
        for i, (u, v) in enumerate(self.darts):
            ux, uy = coords[u]
            vx, vy = coords[v]
            ang = math.atan2(vy - uy, vx - ux)
            by_tail.setdefault(u, []).append((ang, i))
        self._angles = {}
        self._order = {}
        for u, lst in by_tail.items():
            lst.sort()
            self._angles[u] = [a for a, _ in lst]
            self._order[u] = [i for _, i in lst]

    def _next(self, dart_idx: int) -> int:
        u, v = self.darts[dart_idx]
        ux, uy = self.coords[u]
        vx, vy = self.coords[v]
        theta = math.atan2(uy - vy, ux - vx)  # direction of the reversal v->u
        angles = self._angles.get(v)
        if angles is None:
            raise KeyError(f"dangling dart head with no outgoing darts at vertex {v!r}")
        if self.policy == "cw":
            k = bisect_left(angles, theta) - 1  # largest angle strictly below theta
        else:
            k = bisect_right(angles, theta)  # smallest angle strictly above theta
            if k == len(angles):
                k = 0
        return self._order[v][k]

    def cycles(self) -> list[list[int]]:
        """All cycles, as lists of dart indices, in first-dart order."""
        n = len(self.darts)
        nxt = [self._next(i) for i in range(n)]
        seen = [False] * n
        out = []
        for start in range(n):
            if seen[start]:
                continue
            cyc = []
            i = start
            while not seen[i]:
                seen[i] = True
                cyc.append(i)
                i = nxt[i]
            out.append(cyc)
        return out

    def cycle_vertices(self, cycle: list[int]) -> list:
        return [self.darts[i][0] for i in cycle]

    def cycle_area(self, cycle: list[int]) -> float:
        ring = [self.coords[self.darts[i][0]] for i in cycle]
        return shoelace(ring)
