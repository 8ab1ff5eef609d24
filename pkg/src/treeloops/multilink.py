"""Multi-link clusters, multi-link loops, and the uni-link branching
criterion.

The multi-link cluster below x is the maximal subtree through edges
carrying two or more links; the multi-link loop gamma_x is the loop
through (x, 0) using only those edges.  Uni-links hanging off the
cluster whose time falls inside gamma's occupation are the offspring of
the loop exploration; their mean decides supercriticality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnknownVertexError
from .links import LinkConfiguration, LinkKind, config_from_lists
from .rand import substream
from .tracer import UP, LoopPoint, LoopTrace, Segment, trace_loop
from .trees import OffspringLaw, RootedTree


@dataclass(frozen=True)
class MultiLinkCluster:
    root: int
    member_vertices: frozenset[int]
    member_edges: frozenset[int]  # child-id addressing


def multi_link_cluster(tree: RootedTree, config: LinkConfiguration, x: int) -> MultiLinkCluster:
    """Maximal rooted subtree below x whose edges all carry >= 2 links."""
    if not 0 <= x < tree.vertex_count:
        raise UnknownVertexError(f"vertex {x} not in tree")
    members = [x]
    edges = []
    queue = [x]
    while queue:
        v = queue.pop()
        for w in tree.children(v):
            if config.m_e(w) >= 2:
                members.append(w)
                edges.append(w)
                queue.append(w)
    return MultiLinkCluster(
        root=x, member_vertices=frozenset(members), member_edges=frozenset(edges)
    )


def _induced_view(
    tree: RootedTree, config: LinkConfiguration, cluster: MultiLinkCluster
) -> tuple[RootedTree, LinkConfiguration, dict[int, int], list[int]]:
    """Relabelled subtree over the cluster members with only member-edge
    links; returns (view tree, view config, old->new, new->old)."""
    order = [cluster.root]
    new_of = {cluster.root: 0}
    i = 0
    while i < len(order):
        v = order[i]
        i += 1
        for w in tree.children(v):
            if w in cluster.member_edges:
                new_of[w] = len(order)
                order.append(w)
    k = len(order)
    parent = np.full(k, -1, dtype=np.int64)
    depth = np.zeros(k, dtype=np.int64)
    counts = np.zeros(k, dtype=np.int64)
    for w, nw in new_of.items():
        if nw == 0:
            continue
        np_ = new_of[int(tree.parent[w])]
        parent[nw] = np_
        depth[nw] = depth[np_] + 1
        counts[np_] += 1
    cstart = np.concatenate(([1], 1 + np.cumsum(counts)))
    # BFS discovery order keeps children contiguous
    view_tree = RootedTree(parent=parent, depth=depth, cstart=cstart)
    per_edge = {
        new_of[w]: [(lk.time, lk.kind) for lk in config.links_on(w)]
        for w in cluster.member_edges
    }
    view_cfg = config_from_lists(k, config.beta, config.u, per_edge)
    return view_tree, view_cfg, new_of, order


def multi_link_loop(tree: RootedTree, config: LinkConfiguration, x: int) -> LoopTrace:
    """The loop through (x, 0) traced on the multi-link cluster below x,
    ignoring all links outside it; the unit circle when the cluster is
    the isolated vertex.  Vertices are reported in the input tree's ids."""
    cluster = multi_link_cluster(tree, config, x)
    view_tree, view_cfg, _, order = _induced_view(tree, config, cluster)
    lp = trace_loop(view_tree, view_cfg, LoopPoint(0, 0.0, UP))
    segments = tuple(
        Segment(order[s.vertex], s.t_from, s.t_to, s.direction, s.length) for s in lp.segments
    )
    visited = frozenset(order[v] for v in lp.visited_vertices)
    return LoopTrace(
        segments=segments,
        length=lp.length,
        visited_vertices=visited,
        max_depth=int(max(tree.depth[v] for v in visited)),
        start=LoopPoint(x, 0.0, UP),
    )


def count_incident_unilinks(
    tree: RootedTree,
    config: LinkConfiguration,
    gamma: LoopTrace,
    cluster: MultiLinkCluster,
) -> int:
    """Number of downward uni-link edges hanging off the cluster whose
    link time lies in gamma's occupation of the host vertex (closed on
    the segment entry side, a deterministic tie rule of measure zero)."""
    count = 0
    for v in cluster.member_vertices:
        occ = gamma.occupation(v)
        if not occ:
            continue
        for w in tree.children(v):
            if w in cluster.member_edges or config.m_e(w) != 1:
                continue
            t = float(config.time[config.ptr[w]])
            if any(s.covers(t) for s in occ):
                count += 1
    return count


@dataclass(frozen=True)
class UnilinkReport:
    law: str
    beta: float
    u: float
    depth: int
    replicas: int
    mean_C1: float
    stderr: float
    supercritical: bool
    mean_gamma_len: float
    stderr_gamma_len: float
    truncation_hits: int
    mean_identity_gap: float
    stderr_identity_gap: float


def unilink_branching_criterion(
    law: OffspringLaw, beta: float, u: float, D: int, N: int, seed: int
) -> UnilinkReport:
    """Monte Carlo estimate of E[C1(o)] on depth-D truncations of
    Galton-Watson trees, sampling only the multi-link cluster and its
    uni-link fringe (the rest of the tree never matters).

    ``supercritical`` is declared when mean - 3*stderr > 1.  Replicas
    whose cluster touches depth D are counted in ``truncation_hits`` so
    the truncation bias is visible.  The report also carries the paired
    gap C1 - |gamma| * beta * e^(-beta) * law_mean used by the Poisson
    identity check.
    """
    c1 = np.zeros(N)
    glen = np.zeros(N)
    hits = 0
    for i in range(N):
        rng = substream(seed, 0x01, i)
        # lazily grow the multi-link cluster; record uni-link fringe times
        members = [0]
        depth = [0]
        parent = [-1]
        per_edge: dict[int, list] = {}
        fringe: list[tuple[int, float]] = []  # (member vertex, link time)
        head = 0  # BFS keeps each vertex's children contiguous and depth-sorted
        touched = False
        while head < len(members):
            v = members[head]
            head += 1
            if depth[v] >= D:
                touched = True
                continue
            nkids = int(law.sample(rng, 1)[0])
            if nkids == 0:
                continue
            ms = rng.poisson(beta, nkids)
            for m in ms:
                if m >= 2:
                    w = len(members)
                    members.append(w)
                    depth.append(depth[v] + 1)
                    parent.append(v)
                    times = rng.random(m)
                    while np.unique(times).size < m:
                        times = rng.random(m)
                    kinds = np.where(rng.random(m) < u, int(LinkKind.CROSS), int(LinkKind.BAR))
                    per_edge[w] = list(zip(times.tolist(), kinds.tolist()))
                elif m == 1:
                    fringe.append((v, float(rng.random())))
        hits += touched
        tree = _tree_from_lists(parent, depth)
        cfg = config_from_lists(len(members), beta, u, per_edge)
        gamma = trace_loop(tree, cfg, LoopPoint(0, 0.0, UP))
        glen[i] = gamma.length
        occ_by_vertex: dict[int, list[Segment]] = {}
        for s in gamma.segments:
            occ_by_vertex.setdefault(s.vertex, []).append(s)
        n_inc = 0
        for v, t in fringe:
            if any(s.covers(t) for s in occ_by_vertex.get(v, ())):
                n_inc += 1
        c1[i] = n_inc
    mean = float(c1.mean())
    se = float(c1.std(ddof=1) / math.sqrt(N)) if N > 1 else 0.0
    rate = beta * math.exp(-beta) * law.mean()
    gap = c1 - rate * glen
    return UnilinkReport(
        law=law.describe(),
        beta=beta,
        u=u,
        depth=D,
        replicas=N,
        mean_C1=mean,
        stderr=se,
        supercritical=bool(mean - 3.0 * se > 1.0),
        mean_gamma_len=float(glen.mean()),
        stderr_gamma_len=float(glen.std(ddof=1) / math.sqrt(N)) if N > 1 else 0.0,
        truncation_hits=int(hits),
        mean_identity_gap=float(gap.mean()),
        stderr_identity_gap=float(gap.std(ddof=1) / math.sqrt(N)) if N > 1 else 0.0,
    )


def _tree_from_lists(parent: list[int], depth: list[int]) -> RootedTree:
    k = len(parent)
    counts = np.zeros(k, dtype=np.int64)
    for v in range(1, k):
        counts[parent[v]] += 1
    cstart = np.concatenate(([1], 1 + np.cumsum(counts)))
    return RootedTree(
        parent=np.asarray(parent, dtype=np.int64),
        depth=np.asarray(depth, dtype=np.int64),
        cstart=cstart,
    )
