"""Poisson link processes on the edges of a rooted tree.

Each edge carries two independent homogeneous Poisson processes on the
time circle [0,1): crosses with intensity ``u*beta`` and double bars
with intensity ``(1-u)*beta``.  Edges are addressed by their child
vertex id.  Configurations are immutable after sampling.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import InvalidParameterError, UnknownEdgeError
from .rand import substream
from .trees import RootedTree


class LinkKind(IntEnum):
    CROSS = 0
    BAR = 1


@dataclass(frozen=True)
class Link:
    time: float
    kind: LinkKind


@dataclass(frozen=True)
class LinkConfiguration:
    """Per-edge sorted link lists in flat CSR form.

    Links of edge ``c`` (the edge between ``c`` and its parent) occupy
    ``time[ptr[c]:ptr[c+1]]`` / ``kind[ptr[c]:ptr[c+1]]``, sorted strictly
    increasing in time.  ``kind`` is 0 for a cross, 1 for a double bar.
    """

    n_vertices: int
    beta: float
    u: float
    ptr: np.ndarray
    time: np.ndarray
    kind: np.ndarray

    @property
    def total_links(self) -> int:
        return self.time.shape[0]

    def _check_edge(self, c: int) -> None:
        if not 1 <= c < self.n_vertices:
            raise UnknownEdgeError(f"edge (child id) {c} not in tree of size {self.n_vertices}")

    def m_e(self, c: int) -> int:
        self._check_edge(c)
        return int(self.ptr[c + 1] - self.ptr[c])

    def links_on(self, c: int) -> list[Link]:
        self._check_edge(c)
        sl = slice(int(self.ptr[c]), int(self.ptr[c + 1]))
        return [Link(float(t), LinkKind(int(k))) for t, k in zip(self.time[sl], self.kind[sl])]

    def validate(self) -> None:
        if self.ptr.shape[0] != self.n_vertices + 1:
            raise InvalidParameterError("edge pointer array has wrong length")
        for c in range(1, self.n_vertices):
            sl = self.time[self.ptr[c] : self.ptr[c + 1]]
            if sl.size and (np.any(np.diff(sl) <= 0) or sl[0] < 0 or sl[-1] >= 1):
                raise InvalidParameterError(f"links on edge {c} not strictly sorted in [0,1)")


def config_from_lists(n_vertices: int, beta: float, u: float, per_edge) -> LinkConfiguration:
    """Build a configuration from ``{child_id: [(time, kind), ...]}``."""
    counts = np.zeros(n_vertices, dtype=np.int64)
    for c, lst in per_edge.items():
        if not 1 <= c < n_vertices:
            raise UnknownEdgeError(f"edge (child id) {c} out of range")
        counts[c] = len(lst)
    ptr = np.concatenate(([0], np.cumsum(counts)))
    time = np.empty(int(ptr[-1]), dtype=np.float64)
    kind = np.empty(int(ptr[-1]), dtype=np.uint8)
    for c, lst in per_edge.items():
        lst = sorted(lst)
        lo = int(ptr[c])
        for i, (t, k) in enumerate(lst):
            time[lo + i] = t
            kind[lo + i] = int(k)
    cfg = LinkConfiguration(n_vertices=n_vertices, beta=beta, u=u, ptr=ptr, time=time, kind=kind)
    cfg.validate()
    return cfg


def sample_links(tree: RootedTree, beta: float, u: float, seed: int) -> LinkConfiguration:
    """Sample independent Poisson(u*beta) crosses and Poisson((1-u)*beta)
    bars on every edge, with i.i.d. uniform times.

    Exact ties of two link times on one edge (a measure-zero event that
    floating point can nevertheless produce) are resolved by resampling
    that edge, which preserves the conditional law given the counts.
    """
    if beta <= 0:
        raise InvalidParameterError(f"beta must be > 0, got {beta}")
    if not 0.0 <= u <= 1.0:
        raise InvalidParameterError(f"u must be in [0,1], got {u}")
    rng = substream(seed, 0x11FE)
    n = tree.vertex_count
    counts = np.zeros(n, dtype=np.int64)
    if n > 1:
        counts[1:] = rng.poisson(beta, n - 1)
    ptr = np.concatenate(([0], np.cumsum(counts)))
    total = int(ptr[-1])
    time = rng.random(total)
    kind = (rng.random(total) >= u).astype(np.uint8)  # 0 cross w.p. u, 1 bar otherwise
    edge_of = np.repeat(np.arange(n), counts)
    order = np.lexsort((time, edge_of))
    time = time[order]
    kind = kind[order]
    # resample edges carrying duplicate times
    for c in np.flatnonzero(counts > 1):
        lo, hi = int(ptr[c]), int(ptr[c + 1])
        while np.any(np.diff(time[lo:hi]) == 0):
            fresh = np.sort(rng.random(hi - lo))
            time[lo:hi] = fresh
            kind[lo:hi] = (rng.random(hi - lo) >= u).astype(np.uint8)
    cfg = LinkConfiguration(n_vertices=n, beta=beta, u=u, ptr=ptr, time=time, kind=kind)
    return cfg


def is_retained(config: LinkConfiguration, e: int) -> bool:
    """An edge is retained iff it carries at least one link."""
    return config.m_e(e) >= 1


def dump_links(config: LinkConfiguration) -> str:
    """CSV rows ``edge_child_id,time,kind`` sorted by (edge, time)."""
    out = io.StringIO()
    out.write("edge_child_id,time,kind\n")
    for c in range(1, config.n_vertices):
        for lk in config.links_on(c):
            name = "cross" if lk.kind == LinkKind.CROSS else "bar"
            out.write(f"{c},{lk.time:.17g},{name}\n")
    return out.getvalue()
