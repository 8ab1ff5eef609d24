"""Shared oracles for the test suite.

Each oracle is an independent route to a quantity some production path
computes: exact recursions for percolation survival, a dense Kirchhoff
solve for conductance, direct series sums for generating functions.
"""

import math

import numpy as np
import pytest


def regular_link_survival(d: int, D: int, p: float) -> float:
    """Exact reach-depth-D probability for Bernoulli(p) bond percolation
    on the rooted d-regular tree: q_0 = 1, q_k = 1 - (1 - p q_{k-1})^(d-1)
    inside, exponent d at the root."""
    q = 1.0
    for _ in range(D - 1):
        q = 1.0 - (1.0 - p * q) ** (d - 1)
    return 1.0 - (1.0 - p * q) ** d


def gw_link_survival(pgf, D: int, p: float) -> float:
    """Annealed reach-depth-D probability for link percolation on a
    Galton-Watson tree with offspring pgf f: q_k = 1 - f(1 - p q_{k-1})."""
    q = 1.0
    for _ in range(D):
        q = 1.0 - pgf(1.0 - p * q)
    return q


def kirchhoff_conductance(tree, delta: np.ndarray, D: int) -> float:
    """Effective root-to-depth-D conductance by a dense solve of the
    harmonic equations with all depth-D vertices shorted together."""
    n = tree.vertex_count
    keep = np.flatnonzero(tree.depth <= D)
    nodes = {int(v): i for i, v in enumerate(keep)}
    boundary = {v for v in nodes if tree.depth[v] == D}
    # unknowns: interior vertices other than root and boundary
    unknown = [v for v in nodes if v != 0 and v not in boundary]
    index = {v: i for i, v in enumerate(unknown)}
    m = len(unknown)
    A = np.zeros((m, m))
    b = np.zeros(m)

    def pot(v):
        if v == 0:
            return 1.0
        if v in boundary:
            return 0.0
        return None

    for v in nodes:
        if v == 0:
            continue
        c = np.inf if delta[v] == 0 else 1.0 / delta[v]
        p = int(tree.parent[v])
        for a, z in ((v, p), (p, v)):
            if a in index:
                i = index[a]
                A[i, i] += c
                pz = pot(z)
                if pz is None:
                    A[i, index[z]] -= c
                else:
                    b[i] += c * pz
    x = np.linalg.solve(A, b) if m else np.zeros(0)

    def value(v):
        pv = pot(v)
        return pv if pv is not None else x[index[v]]

    current = 0.0
    for w in tree.children(0):
        if int(tree.depth[w]) > D:
            continue
        c = np.inf if delta[w] == 0 else 1.0 / delta[w]
        current += c * (1.0 - value(int(w)))
    return current


def random_gauge_tree(rng, max_vertices: int = 12):
    """A small random tree plus a random monotone gauge for oracle tests."""
    from treeloops.trees import OffspringLaw, generate_galton_watson

    while True:
        tree = generate_galton_watson(
            OffspringLaw.empirical([0.25, 0.35, 0.3, 0.1]), 5, int(rng.integers(1 << 30))
        )
        if 3 <= tree.vertex_count <= max_vertices and tree.height >= 2:
            break
    delta = np.zeros(tree.vertex_count)
    delta[1:] = rng.uniform(0.05, 2.0, tree.vertex_count - 1)
    values = np.ones(tree.vertex_count)
    for v in range(1, tree.vertex_count):
        values[v] = values[tree.parent[v]] + delta[v]
    from treeloops.potential import Gauge

    return tree, Gauge(values=values, delta=delta)


@pytest.fixture(scope="session")
def rng_session():
    return np.random.default_rng(20250809)


def z_score(p1, se1, p2, se2) -> float:
    den = math.sqrt(se1 * se1 + se2 * se2)
    return 0.0 if den == 0 else (p1 - p2) / den
