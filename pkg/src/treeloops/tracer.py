"""Deterministic loop tracing on V x [0,1).

A trajectory moves along a vertex's time circle until it meets a link
on an incident edge; a cross transports it to the other endpoint
preserving the time direction, a double bar transports it and reverses
the direction.  Time wraps 1 -> 0 moving up and 0 -> 1 moving down, and
jumps are instantaneous.  The closed trajectory through a point is the
loop containing it; loops partition V x [0,1).
"""

from __future__ import annotations

import io
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStartError, UnknownVertexError
from .links import LinkConfiguration, LinkKind
from .trees import RootedTree

UP = 1
DOWN = -1


@dataclass(frozen=True)
class LoopPoint:
    vertex: int
    time: float
    direction: int = UP


@dataclass(frozen=True)
class Segment:
    """Occupation interval on one vertex's circle, traversed in one direction.

    ``length`` is the circle distance from ``t_from`` to ``t_to`` in the
    travel direction (1.0 for a full circle).
    """

    vertex: int
    t_from: float
    t_to: float
    direction: int
    length: float

    def covers(self, t: float) -> bool:
        """Membership in the half-open interval closed on the entry side."""
        d = (t - self.t_from) % 1.0 if self.direction == UP else (self.t_from - t) % 1.0
        return d < self.length or self.length == 1.0


@dataclass(frozen=True)
class LoopTrace:
    segments: tuple[Segment, ...]
    length: float
    visited_vertices: frozenset[int]
    max_depth: int
    start: LoopPoint

    def occupies(self, vertex: int, t: float) -> bool:
        return any(s.vertex == vertex and s.covers(t) for s in self.segments)

    def occupation(self, vertex: int) -> list[Segment]:
        return [s for s in self.segments if s.vertex == vertex]

    def time_at(self, vertex: int) -> float:
        return sum(s.length for s in self.segments if s.vertex == vertex)


class EventIndex:
    """Per-vertex merged, time-sorted link events over incident edges.

    Event arrays are CSR over vertices; ties in time (possible only
    through degenerate input) are broken by edge id, deterministically.
    """

    def __init__(self, tree: RootedTree, config: LinkConfiguration):
        n = tree.vertex_count
        edge_of = np.repeat(np.arange(n), np.diff(config.ptr))  # child id per link
        par_of = tree.parent[edge_of]
        ev_v = np.concatenate((edge_of, par_of))
        ev_o = np.concatenate((par_of, edge_of))
        ev_t = np.concatenate((config.time, config.time))
        ev_k = np.concatenate((config.kind, config.kind))
        ev_e = np.concatenate((edge_of, edge_of))
        perm = np.lexsort((ev_e, ev_t, ev_v))
        self.time = ev_t[perm]
        self.other = ev_o[perm]
        self.kind = ev_k[perm]
        self.edge = ev_e[perm]
        self.ptr = np.concatenate(([0], np.cumsum(np.bincount(ev_v, minlength=n))))

    def slice(self, v: int) -> tuple[int, int]:
        return int(self.ptr[v]), int(self.ptr[v + 1])

    def has_event_at(self, v: int, t: float) -> bool:
        lo, hi = self.slice(v)
        j = lo + int(np.searchsorted(self.time[lo:hi], t))
        return j < hi and self.time[j] == t


def _arc_contains(t0: float, t_from: float, t_to: float, direction: int, full: bool) -> bool:
    """Is t0 strictly inside the directed open arc from t_from to t_to?"""
    if direction == UP:
        d1 = (t0 - t_from) % 1.0
        d2 = (t_to - t_from) % 1.0
    else:
        d1 = (t_from - t0) % 1.0
        d2 = (t_from - t_to) % 1.0
    if full:
        d2 = 1.0
    return 0.0 < d1 < d2


def trace_loop(
    tree: RootedTree,
    config: LinkConfiguration,
    start: LoopPoint,
    index: EventIndex | None = None,
) -> LoopTrace:
    """Trace the unique closed trajectory through ``start``.

    Terminates on first return to the start point with the start
    direction, after at most 4M + 2 segment steps.
    """
    if not 0 <= start.vertex < tree.vertex_count:
        raise UnknownVertexError(f"vertex {start.vertex} not in tree")
    if start.direction not in (UP, DOWN):
        raise DegenerateStartError(f"direction must be +-1, got {start.direction}")
    idx = index if index is not None else EventIndex(tree, config)
    if idx.has_event_at(start.vertex, start.time):
        raise DegenerateStartError(
            f"start time {start.time} coincides with a link at vertex {start.vertex}"
        )

    v0, t0, dir0 = start.vertex, start.time % 1.0, start.direction
    segments: list[Segment] = []
    total = 0.0
    max_depth = int(tree.depth[v0])
    v, t, d = v0, t0, dir0
    at = -1  # event row we are standing on, -1 for the free start point
    max_steps = 4 * config.total_links + 4
    for _ in range(max_steps):
        lo, hi = idx.slice(v)
        k = hi - lo
        if k == 0:
            # only reachable as the start vertex: a free unit circle
            segments.append(Segment(v, t, t, d, 1.0))
            total += 1.0
            break
        if at >= 0:
            j = lo + (at - lo + d) % k
        elif d == UP:
            j = lo + bisect_right(idx.time[lo:hi], t) % k
        else:
            j = lo + (bisect_right(idx.time[lo:hi], t) - 1) % k
        te = float(idx.time[j])
        full = j == at
        if v == v0 and d == dir0 and _arc_contains(t0, t, te, d, full):
            seg_len = (t0 - t) % 1.0 if d == UP else (t - t0) % 1.0
            segments.append(Segment(v, t, t0, d, seg_len))
            total += seg_len
            break
        seg_len = 1.0 if full else ((te - t) % 1.0 if d == UP else (t - te) % 1.0)
        segments.append(Segment(v, t, te, d, seg_len))
        total += seg_len
        # jump across the link
        w = int(idx.other[j])
        d = d if idx.kind[j] == LinkKind.CROSS else -d
        wlo, whi = idx.slice(w)
        e = int(idx.edge[j])
        jw = wlo + int(np.searchsorted(idx.time[wlo:whi], te))
        while jw < whi and (idx.edge[jw] != e or idx.time[jw] != te):
            jw += 1
        if jw >= whi:
            raise RuntimeError("event index inconsistent: mirror event not found")
        v, t, at = w, te, jw
        if tree.depth[v] > max_depth:
            max_depth = int(tree.depth[v])
    else:
        raise RuntimeError("loop trace exceeded its step bound; invariant violated")

    return LoopTrace(
        segments=tuple(segments),
        length=total,
        visited_vertices=frozenset(s.vertex for s in segments),
        max_depth=max_depth,
        start=LoopPoint(v0, t0, dir0),
    )


def all_loops(tree: RootedTree, config: LinkConfiguration) -> list[LoopTrace]:
    """All loops of the configuration, each vertex-time point in exactly one.

    Loops are discovered (and returned) by scanning vertices in id order
    and each vertex's link-free arcs in time order.
    """
    idx = EventIndex(tree, config)
    loops: list[LoopTrace] = []
    visited: dict[int, np.ndarray] = {}

    def arcs_of(v: int) -> np.ndarray:
        lo, hi = idx.slice(v)
        return idx.time[lo:hi]

    def arc_id(v: int, t: float) -> int:
        ts = arcs_of(v)
        if ts.size == 0:
            return 0
        return (bisect_right(ts, t) - 1) % ts.size

    for v in range(tree.vertex_count):
        ts = arcs_of(v)
        k = max(1, ts.size)
        seen = visited.setdefault(v, np.zeros(k, dtype=bool))
        for i in range(k):
            if seen[i]:
                continue
            if ts.size == 0:
                t_start = 0.0
            else:
                a = float(ts[i])
                ln = (float(ts[(i + 1) % ts.size]) - a) % 1.0 or 1.0
                t_start = (a + ln / 2.0) % 1.0
            loop = trace_loop(tree, config, LoopPoint(v, t_start, UP), index=idx)
            for s in loop.segments:
                if s.length == 0.0:
                    continue
                mid = (s.t_from + s.direction * s.length / 2.0) % 1.0
                w = s.vertex
                warcs = visited.setdefault(w, np.zeros(max(1, arcs_of(w).size), dtype=bool))
                warcs[arc_id(w, mid)] = True
            loops.append(loop)
    return loops


def loop_reaches_depth(trace: LoopTrace, depth: int) -> bool:
    """Finite-volume proxy for an unbounded loop: the trace visits depth D."""
    return trace.max_depth >= depth


def dump_loops(loops: list[LoopTrace]) -> str:
    """CSV rows ``loop_id,vertex,entry,exit,direction``."""
    out = io.StringIO()
    out.write("loop_id,vertex,entry,exit,direction\n")
    for i, lp in enumerate(loops):
        for s in lp.segments:
            d = "+" if s.direction == UP else "-"
            out.write(f"{i},{s.vertex},{s.t_from:.17g},{s.t_to:.17g},{d}\n")
    return out.getvalue()
