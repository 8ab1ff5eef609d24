"""Link percolation, pruning percolation, and the coupling surfaces.

The pruning probability of a vertex with total degree d and minimal
child degree d* at rate lam is

    r = pref * E[ A(1-W)^(d*-1) * A(W)^(d-2) ],      pref = lam^3 e^(-2 lam) u^2 / (2 (1-e^(-lam))^2)

with W = |U1 - U2| for independent uniforms (the two cross times on the
pruning edge, measured relative to the entry link) and

    A(w) = (e^(-lam (1-w)) - e^(-lam)) / (1 - e^(-lam)),

the probability that a retained edge's links all fall inside a window of
length w.  Children below the pruning edge must avoid the exposed strip
of length W; the other child edges at the shallower endpoint must avoid
the complementary arc of length 1-W.  At u = 0 the two links are double
bars, both endpoints expose the arc containing the entry, and every
adjacent edge faces the same forbidden length 1-W, giving
E[A(W)^(d+d*-3)] under the bar prefactor (no u^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import poisson as sp_poisson

from .errors import InvalidParameterError, UnknownEdgeError
from .links import LinkConfiguration, LinkKind, sample_links
from .rand import substream
from .trees import RootedTree, d_star, truncate


@dataclass(frozen=True)
class PruningParams:
    lam: float
    u: float
    quadrature_nodes: int = 256

    def __post_init__(self):
        if self.lam <= 0:
            raise InvalidParameterError(f"lam must be > 0, got {self.lam}")
        if not 0.0 <= self.u <= 1.0:
            raise InvalidParameterError(f"u must be in [0,1], got {self.u}")
        if self.quadrature_nodes < 64:
            raise InvalidParameterError("quadrature_nodes must be >= 64")


@dataclass(frozen=True)
class PercolationMask:
    """Realisation of a site (removed vertices) and/or bond (retained
    edges, None meaning all) percolation on a tree."""

    removed_vertices: frozenset[int]
    retained_edges: frozenset[int] | None = None


def _avoid_factor(w: np.ndarray, lam: float) -> np.ndarray:
    """P(all Poisson(lam) links on a retained edge fall in a window of
    length w); numerically stable for lam up to ~700."""
    return (np.exp(-lam * (1.0 - w)) - math.exp(-lam)) / (-math.expm1(-lam))


def _prefactor(lam: float, u: float) -> float:
    base = lam**3 * math.exp(-2.0 * lam) / (2.0 * math.expm1(-lam) ** 2)
    return base * (u * u if u > 0.0 else 1.0)


@lru_cache(maxsize=64)
def _gauss_panels(total_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights on [0,1] with ~total_nodes points."""
    npanels = max(1, total_nodes // 64)
    order = int(math.ceil(total_nodes / npanels))
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for p in range(npanels):
        a, b = p / npanels, (p + 1) / npanels
        nodes.append(0.5 * (b - a) * (x + 1.0) + a)
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _integrand(w: np.ndarray, d: int, ds: int, lam: float, u: float) -> np.ndarray:
    if u > 0.0:
        return _avoid_factor(1.0 - w, lam) ** (ds - 1) * _avoid_factor(w, lam) ** (d - 2)
    return _avoid_factor(w, lam) ** (d + ds - 3)


def pruning_probability(d: int, d_star: int | None, params: PruningParams) -> float:
    """Probability r that a vertex with total degree d and minimal child
    degree d* is removed in pruning percolation at rate params.lam.

    Vacuous constructions (no child: d* None; leaf-with-parent-only: d < 2;
    d* < 1) give 0: a pruning event needs a child edge to carry it.
    Evaluated by the 1-D reduction of the double integral (|s-t| has
    density 2(1-w)), exact to quadrature precision for the smooth integrand.
    """
    if d_star is None or d < 2 or d_star < 1:
        return 0.0
    nodes, weights = _gauss_panels(params.quadrature_nodes)
    g = _integrand(nodes, d, d_star, params.lam, params.u)
    integral = float(np.sum(weights * 2.0 * (1.0 - nodes) * g))
    return _prefactor(params.lam, params.u) * integral


def pruning_probability_2d(d: int, d_star: int | None, params: PruningParams) -> float:
    """Same quantity by tensor quadrature over the (s,t) square, split
    along the diagonal and mapped to a smooth integrand (independent
    computational route used to cross-check the 1-D reduction)."""
    if d_star is None or d < 2 or d_star < 1:
        return 0.0
    nodes, weights = _gauss_panels(params.quadrature_nodes)
    a = nodes[:, None]
    b = nodes[None, :]
    wa = weights[:, None]
    wb = weights[None, :]
    g = _integrand(b * (1.0 - a), d, d_star, params.lam, params.u)
    integral = 2.0 * float(np.sum(wa * wb * b * g))
    return _prefactor(params.lam, params.u) * integral


@lru_cache(maxsize=100_000)
def _cached_pruning_probability(d: int, ds: int, lam: float, u: float, nodes: int) -> float:
    return pruning_probability(d, ds, PruningParams(lam, u, nodes))


def verify_pruning_probability_mc(
    d: int, d_star: int, params: PruningParams, N: int, seed: int
) -> tuple[float, float]:
    """Monte Carlo estimate of the pruning event probability.

    Samples the two link times on the pruning edge, draws conditioned-on-
    retained Poisson(lam) link counts on the d*-1 edges below the pruning
    edge and the d-2 remaining child edges at its shallower endpoint, and
    counts the event that every link avoids the relevant exposed arc.
    The exactly-one-link weight of the entry edge and the two-link (two-
    cross, for u > 0) weight of the pruning edge enter as the analytic
    prefactor.  Returns (estimate, standard error).
    """
    if d < 2 or d_star < 1:
        raise InvalidParameterError("MC check needs d >= 2 and d_star >= 1")
    if N < 1000:
        raise InvalidParameterError(f"N must be >= 1000, got {N}")
    lam, u = params.lam, params.u
    rng = substream(seed, 0x9C)
    w = np.abs(rng.random(N) - rng.random(N))
    n_child = d_star - 1
    n_sib = d - 2
    hit = np.zeros(N, dtype=bool)
    lo_cdf = math.exp(-lam)

    def conditioned_counts(cols: int) -> np.ndarray:
        if cols == 0:
            return np.zeros((N, 0), dtype=np.int64)
        v = lo_cdf + (1.0 - lo_cdf) * rng.random((N, cols))
        return sp_poisson.ppf(v, lam).astype(np.int64)

    kc = conditioned_counts(n_child)
    ks = conditioned_counts(n_sib)
    if u > 0.0:
        forb_child = w[:, None]
        forb_sib = (1.0 - w)[:, None]
    else:
        forb_child = (1.0 - w)[:, None]
        forb_sib = (1.0 - w)[:, None]
    if n_child:
        hit |= (rng.binomial(kc, np.broadcast_to(forb_child, kc.shape)) > 0).any(axis=1)
    if n_sib:
        hit |= (rng.binomial(ks, np.broadcast_to(forb_sib, ks.shape)) > 0).any(axis=1)
    ok = ~hit
    p = float(ok.mean())
    pref = _prefactor(lam, u)
    return pref * p, pref * math.sqrt(p * (1.0 - p) / N)


def link_cluster(tree: RootedTree, config: LinkConfiguration) -> RootedTree:
    """Connected component of the root in the retained-edge subgraph,
    returned as a rooted subtree whose ``labels`` map back to the input."""
    n = tree.vertex_count
    member = np.zeros(n, dtype=bool)
    member[0] = True
    retained = np.diff(config.ptr) > 0
    for v in range(1, n):
        member[v] = retained[v] and member[tree.parent[v]]
    return _induced_subtree(tree, member)


def _induced_subtree(tree: RootedTree, member: np.ndarray) -> RootedTree:
    """Subtree of the member mask (must be closed under taking parents and
    contain the root); new ids preserve BFS order."""
    ids = np.flatnonzero(member)
    new_id = np.full(tree.vertex_count, -1, dtype=np.int64)
    new_id[ids] = np.arange(ids.size)
    parent = np.where(ids == 0, -1, new_id[tree.parent[ids]])
    counts = np.bincount(parent[1:], minlength=ids.size) if ids.size > 1 else np.zeros(ids.size, dtype=np.int64)
    cstart = np.concatenate(([1], 1 + np.cumsum(counts)))
    labels = ids if tree.labels is None else tree.labels[ids]
    return RootedTree(parent=parent, depth=tree.depth[ids].copy(), cstart=cstart, labels=labels)


def delayed_pruning_mask(tree: RootedTree, params: PruningParams, seed: int) -> PercolationMask:
    """Independent removal of vertices at depths 1, 4, 7, ... with their
    pruning probabilities, computed from degrees in the input tree."""
    rng = substream(seed, 0xDE1)
    removed = []
    for x in range(1, tree.vertex_count):
        if tree.depth[x] % 3 != 1:
            continue
        r = _cached_pruning_probability(
            tree.degree(x), d_star(tree, x) or 0, params.lam, params.u, params.quadrature_nodes
        )
        if rng.random() < r:
            removed.append(x)
    return PercolationMask(removed_vertices=frozenset(removed))


def compose_link_delay_survival(
    tree: RootedTree, beta: float, params: PruningParams, D: int, seed: int
) -> bool:
    """One replica of delay-after-link percolation: sample links on the
    depth-D truncation, take the root's link cluster, apply delayed
    pruning to that cluster, and report whether the root still connects
    to depth D through kept vertices."""
    if params.lam != beta:
        raise InvalidParameterError("the coupling uses params.lam == beta")
    if D > tree.height:
        raise InvalidParameterError(f"D={D} exceeds tree height {tree.height}")
    tr = truncate(tree, D)
    config = sample_links(tr, beta, params.u, seed)
    cluster = link_cluster(tr, config)
    mask = delayed_pruning_mask(cluster, params, seed ^ 0x5EED)
    kept = np.ones(cluster.vertex_count, dtype=bool)
    for v in range(1, cluster.vertex_count):
        kept[v] = v not in mask.removed_vertices and kept[cluster.parent[v]]
    return bool(np.any(kept & (cluster.depth == D)))


def is_pruning_edge(tree: RootedTree, config: LinkConfiguration, e: int) -> bool:
    """Detect the two-link pruning event on edge ``e`` (child-id addressing).

    The edge must carry exactly two crosses (two bars for the bar
    variant), splitting the circle into two arcs.  The exploration enters
    the shallower endpoint at its single parent-edge link (at time 0 when
    that endpoint is the root; a parent edge with zero or several links
    leaves the traversal ambiguous and the event undefined, so False).
    The exploration traverses the shallower endpoint on the arc containing
    that entry and the deeper endpoint on the opposite arc for crosses /
    the same arc for bars; the event holds when no other incident link
    falls inside either traversed (exposed) arc.  A detected edge provably
    seals the subtree below its deeper endpoint off from the root loop.
    """
    if not 1 <= e < tree.vertex_count:
        raise UnknownEdgeError(f"edge (child id) {e} not in tree")
    lo, hi = int(config.ptr[e]), int(config.ptr[e + 1])
    if hi - lo != 2:
        return False
    kinds = config.kind[lo:hi]
    if kinds[0] != kinds[1]:
        return False
    bar_mode = kinds[0] == LinkKind.BAR
    u1, u2 = float(config.time[lo]), float(config.time[lo + 1])
    p = int(tree.parent[e])

    def in_inner(t: float) -> bool:
        return u1 < t < u2

    if p == 0:
        entry = 0.0
    else:
        plo, phi = int(config.ptr[p]), int(config.ptr[p + 1])
        if phi - plo != 1:
            return False
        entry = float(config.time[plo])
    entry_inner = in_inner(entry)
    # shallower endpoint traverses the arc containing the entry: its other
    # child edges must carry no link there
    for w in tree.children(p):
        if w == e:
            continue
        for t in config.time[config.ptr[w] : config.ptr[w + 1]]:
            if in_inner(float(t)) == entry_inner:
                return False
    # deeper endpoint traverses the opposite arc (crosses) or the same arc
    # (bars): its child edges must carry no link there
    exposed_inner = entry_inner if bar_mode else (not entry_inner)
    for w in tree.children(e):
        for t in config.time[config.ptr[w] : config.ptr[w + 1]]:
            if in_inner(float(t)) == exposed_inner:
                return False
    return True
