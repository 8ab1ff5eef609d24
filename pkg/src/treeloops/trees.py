"""Finite rooted trees and offspring laws.

Vertices are dense integers in breadth-first order, so children of any
vertex form a contiguous id range and the whole tree is three flat
arrays.  All trees here are finite truncations; infinite-tree events are
proxied elsewhere by depth-``D`` reachability.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, UnknownVertexError
from .rand import substream


@dataclass(frozen=True)
class RootedTree:
    """Rooted tree with BFS-contiguous integer vertex ids.

    ``parent[v]`` is the parent id (-1 for the root 0), ``depth[v]`` the
    graph distance to the root, and children of ``v`` are exactly the ids
    ``cstart[v] .. cstart[v+1]-1``.  ``labels``, when present, maps each
    vertex back to its id in a source tree (used by subtree extractors).
    """

    parent: np.ndarray
    depth: np.ndarray
    cstart: np.ndarray
    labels: np.ndarray | None = None

    @property
    def vertex_count(self) -> int:
        return self.parent.shape[0]

    @property
    def edge_count(self) -> int:
        return self.vertex_count - 1

    @property
    def height(self) -> int:
        return int(self.depth[-1]) if self.vertex_count else 0

    def children(self, v: int) -> range:
        self._check_vertex(v)
        return range(int(self.cstart[v]), int(self.cstart[v + 1]))

    def n_children(self, v: int) -> int:
        self._check_vertex(v)
        return int(self.cstart[v + 1] - self.cstart[v])

    def degree(self, v: int) -> int:
        """Total graph degree: children plus the parent edge for non-roots."""
        return self.n_children(v) + (0 if v == 0 else 1)

    def level(self, d: int) -> range:
        """Ids at depth ``d`` (contiguous by BFS order)."""
        lo = int(np.searchsorted(self.depth, d, side="left"))
        hi = int(np.searchsorted(self.depth, d, side="right"))
        return range(lo, hi)

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.vertex_count:
            raise UnknownVertexError(f"vertex {v} not in tree of size {self.vertex_count}")

    def validate(self) -> None:
        """Check the structural invariants; raises on violation."""
        n = self.vertex_count
        if n == 0 or self.parent[0] != -1:
            raise InvalidParameterError("tree must have root 0 with parent -1")
        if self.depth[0] != 0:
            raise InvalidParameterError("root depth must be 0")
        if self.cstart.shape[0] != n + 1 or self.cstart[0] != 1 or self.cstart[-1] != n:
            raise InvalidParameterError("children index does not cover vertices 1..n-1")
        if np.any(np.diff(self.cstart) < 0):
            raise InvalidParameterError("children index not monotone")
        v = np.arange(1, n)
        p = self.parent[1:]
        if np.any(p < 0) or np.any(p >= v):
            raise InvalidParameterError("non-root parents must be earlier vertices")
        if np.any(self.depth[1:] != self.depth[p] + 1):
            raise InvalidParameterError("depth must increase by one along edges")
        # parent map and children ranges must agree
        if np.any(self.cstart[p] > v) or np.any(v >= self.cstart[p + 1]):
            raise InvalidParameterError("parent map inconsistent with children ranges")


def tree_from_level_counts(counts_per_level: list[np.ndarray]) -> RootedTree:
    """Build a tree from per-level child counts (level k entry i = number of
    children of the i-th vertex at depth k)."""
    sizes = [1] + [int(c.sum()) for c in counts_per_level]
    while sizes and sizes[-1] == 0:
        sizes.pop()
    n = sum(sizes)
    parent = np.full(n, -1, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    nc = np.zeros(n, dtype=np.int64)
    base = 0
    nxt = 1
    for lvl, counts in enumerate(counts_per_level):
        if nxt >= n:
            break
        k = len(counts)
        nc[base : base + k] = counts
        for i, c in enumerate(counts):
            v = base + i
            c = int(c)
            parent[nxt : nxt + c] = v
            depth[nxt : nxt + c] = lvl + 1
            nxt += c
        base += k
    cstart = np.concatenate(([1], 1 + np.cumsum(nc)))
    return RootedTree(parent=parent, depth=depth, cstart=cstart)


def generate_regular(d: int, depth: int) -> RootedTree:
    """Rooted d-regular tree truncated at ``depth``: the root has ``d``
    children, every other internal vertex has ``d - 1``, so all non-leaf
    vertices have total degree ``d``."""
    if d < 2:
        raise InvalidParameterError(f"regular tree needs degree >= 2, got {d}")
    if depth < 0:
        raise InvalidParameterError(f"depth must be >= 0, got {depth}")
    counts = []
    width = 1
    for lvl in range(depth):
        b = d if lvl == 0 else d - 1
        counts.append(np.full(width, b, dtype=np.int64))
        width *= b
    return tree_from_level_counts(counts)


def generate_galton_watson(law: "OffspringLaw", depth: int, seed: int) -> RootedTree:
    """Galton-Watson tree truncated at ``depth``; every vertex above the
    cutoff draws an independent child count from ``law``.  Byte-identical
    output for a fixed seed."""
    if depth < 0:
        raise InvalidParameterError(f"depth must be >= 0, got {depth}")
    rng = substream(seed, 0x7EE)
    counts = []
    width = 1
    for _ in range(depth):
        if width == 0:
            break
        c = law.sample(rng, width)
        counts.append(c.astype(np.int64))
        width = int(c.sum())
    return tree_from_level_counts(counts)


def d_star(tree: RootedTree, x: int) -> int | None:
    """Minimum total degree among the children of ``x``; None if childless."""
    ch = tree.children(x)
    if len(ch) == 0:
        return None
    return min(tree.degree(y) for y in ch)


def truncate(tree: RootedTree, depth: int) -> RootedTree:
    """Subtree induced by vertices at depth <= ``depth`` (a BFS prefix)."""
    if depth < 0:
        raise InvalidParameterError(f"depth must be >= 0, got {depth}")
    n = int(np.searchsorted(tree.depth, depth, side="right"))
    cstart = np.minimum(tree.cstart[: n + 1], n)
    labels = tree.labels[:n] if tree.labels is not None else None
    return RootedTree(
        parent=tree.parent[:n].copy(),
        depth=tree.depth[:n].copy(),
        cstart=cstart.copy(),
        labels=labels,
    )


def serialize_tree(tree: RootedTree) -> str:
    """One line per vertex: ``id,parent_id,depth``; root first, empty parent."""
    out = io.StringIO()
    out.write("id,parent_id,depth\n")
    for v in range(tree.vertex_count):
        p = "" if v == 0 else str(int(tree.parent[v]))
        out.write(f"{v},{p},{int(tree.depth[v])}\n")
    return out.getvalue()


def parse_tree(text: str) -> RootedTree:
    """Inverse of :func:`serialize_tree` (ids must be in BFS order)."""
    lines = [ln for ln in text.strip().splitlines() if ln]
    if lines and lines[0].startswith("id"):
        lines = lines[1:]
    parent = []
    depth = []
    for ln in lines:
        _, p, d = ln.split(",")
        parent.append(-1 if p == "" else int(p))
        depth.append(int(d))
    parent = np.asarray(parent, dtype=np.int64)
    depth = np.asarray(depth, dtype=np.int64)
    n = parent.shape[0]
    nc = np.zeros(n, dtype=np.int64)
    for v in range(1, n):
        nc[parent[v]] += 1
    cstart = np.concatenate(([1], 1 + np.cumsum(nc)))
    tree = RootedTree(parent=parent, depth=depth, cstart=cstart)
    tree.validate()
    return tree


# ----------------------------------------------------------------------
# Offspring laws


@dataclass(frozen=True)
class OffspringLaw:
    """Offspring distribution for Galton-Watson trees.

    Supported kinds: ``deterministic(d)``, ``poisson(lam)``,
    ``binomial(n, p)``, ``geometric(p)`` (success probability ``p``,
    support 0,1,2,...), ``power_law(tau, cutoff)`` (pmf proportional to
    ``k**-tau`` on 1..cutoff; the cutoff makes the sampled law exact and
    its excluded tail mass is reported by :meth:`tail_mass`), and
    ``empirical(weights)``.
    """

    kind: str
    a: float = 0.0
    b: float = 0.0
    weights: tuple[float, ...] | None = None
    _pmf_cache: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    # -- constructors ---------------------------------------------------
    @staticmethod
    def deterministic(d: int) -> "OffspringLaw":
        if d < 0:
            raise InvalidParameterError("deterministic offspring needs d >= 0")
        return OffspringLaw("deterministic", a=float(d))

    @staticmethod
    def poisson(lam: float) -> "OffspringLaw":
        if lam < 0:
            raise InvalidParameterError("poisson offspring needs lam >= 0")
        return OffspringLaw("poisson", a=float(lam))

    @staticmethod
    def binomial(n: int, p: float) -> "OffspringLaw":
        if n < 0 or not 0.0 <= p <= 1.0:
            raise InvalidParameterError("binomial offspring needs n >= 0 and p in [0,1]")
        return OffspringLaw("binomial", a=float(n), b=float(p))

    @staticmethod
    def geometric(p: float) -> "OffspringLaw":
        if not 0.0 < p <= 1.0:
            raise InvalidParameterError("geometric offspring needs p in (0,1]")
        return OffspringLaw("geometric", a=float(p))

    @staticmethod
    def power_law(tau: float, cutoff: int = 1_000_000) -> "OffspringLaw":
        if tau <= 1.0:
            raise InvalidParameterError("power law offspring needs tau > 1")
        if cutoff < 1:
            raise InvalidParameterError("power law cutoff must be >= 1")
        return OffspringLaw("power_law", a=float(tau), b=float(cutoff))

    @staticmethod
    def empirical(weights) -> "OffspringLaw":
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0 or np.any(w < 0) or w.sum() <= 0:
            raise InvalidParameterError("empirical offspring needs non-negative weights")
        w = w / w.sum()
        return OffspringLaw("empirical", weights=tuple(float(x) for x in w))

    # -- basic quantities -----------------------------------------------
    def pmf(self) -> np.ndarray:
        """Probability mass on 0..K, truncated where the remaining mass is
        below 1e-12 (exact for finitely supported kinds)."""
        if "pmf" in self._pmf_cache:
            return self._pmf_cache["pmf"]
        tol = 1e-12
        if self.kind == "deterministic":
            d = int(self.a)
            p = np.zeros(d + 1)
            p[d] = 1.0
        elif self.kind == "poisson":
            lam = self.a
            if lam == 0:
                p = np.array([1.0])
            else:
                from scipy.stats import poisson as sp_poisson

                kmax = int(sp_poisson.ppf(1 - tol, lam)) + 2
                p = sp_poisson.pmf(np.arange(kmax + 1), lam)
        elif self.kind == "binomial":
            from scipy.stats import binom as sp_binom

            n = int(self.a)
            p = sp_binom.pmf(np.arange(n + 1), n, self.b)
        elif self.kind == "geometric":
            q = 1.0 - self.a
            if q == 0.0:
                p = np.array([1.0])
            else:
                kmax = int(math.ceil(math.log(tol) / math.log(q))) + 2
                p = self.a * q ** np.arange(kmax + 1)
        elif self.kind == "power_law":
            k = np.arange(0, int(self.b) + 1, dtype=np.float64)
            p = np.zeros_like(k)
            p[1:] = k[1:] ** (-self.a)
            p /= p.sum()
        elif self.kind == "empirical":
            p = np.asarray(self.weights, dtype=np.float64)
        else:  # pragma: no cover
            raise InvalidParameterError(f"unknown law kind {self.kind!r}")
        p = np.ascontiguousarray(p)
        self._pmf_cache["pmf"] = p
        return p

    def tail_mass(self) -> float:
        """Mass excluded by the pmf truncation (0 for finite-support kinds)."""
        if self.kind in ("deterministic", "binomial", "empirical", "power_law"):
            return 0.0
        return max(0.0, 1.0 - float(self.pmf().sum()))

    def mean(self) -> float:
        if self.kind == "deterministic":
            return self.a
        if self.kind == "poisson":
            return self.a
        if self.kind == "binomial":
            return self.a * self.b
        if self.kind == "geometric":
            return (1.0 - self.a) / self.a
        p = self.pmf()
        return float(np.arange(p.size) @ p)

    def max_degree(self) -> int:
        """Upper bound on sampled child counts (pmf truncation point)."""
        return self.pmf().size - 1

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "deterministic":
            return np.full(size, int(self.a), dtype=np.int64)
        if self.kind == "poisson":
            return rng.poisson(self.a, size).astype(np.int64)
        if self.kind == "binomial":
            return rng.binomial(int(self.a), self.b, size).astype(np.int64)
        if self.kind == "geometric":
            return (rng.geometric(self.a, size) - 1).astype(np.int64)
        p = self.pmf()
        cdf = np.cumsum(p)
        cdf[-1] = 1.0
        return np.searchsorted(cdf, rng.random(size), side="right").astype(np.int64)

    def describe(self) -> str:
        if self.kind == "deterministic":
            return f"deterministic({int(self.a)})"
        if self.kind == "poisson":
            return f"poisson({self.a:g})"
        if self.kind == "binomial":
            return f"binomial({int(self.a)},{self.b:g})"
        if self.kind == "geometric":
            return f"geometric({self.a:g})"
        if self.kind == "power_law":
            return f"powerlaw({self.a:g},{int(self.b)})"
        return f"empirical({len(self.weights)} atoms)"
