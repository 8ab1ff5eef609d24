"""Gauges, effective conductance, branching numbers, and the pruning
sensitivity probe.

A gauge g with g(root) = 1, non-decreasing along rays, turns the tree
into a resistor network with edge conductance 1/(g(x) - g(parent)).
The root-to-depth-D effective conductance is the operational proxy for
boundary capacity: survival probability of the matching independent
percolation is bracketed by [C, 2C].  The branching number is read off
the exponential gauges q^-|x|: conductance profiles stabilise for
q > 1/br and decay geometrically for q < 1/br.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSampleError, DiagnosticError, InvalidParameterError
from .percolation import PruningParams, _cached_pruning_probability, _induced_subtree
from .rand import substream
from .trees import RootedTree

_CLAMP = 1e280
_LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class Gauge:
    """Vertex potential with value 1 at the root and cached increments."""

    values: np.ndarray
    delta: np.ndarray

    def validate(self) -> None:
        if self.values[0] != 1.0:
            raise InvalidParameterError("gauge must equal 1 at the root")
        if np.any(self.delta < 0):
            raise InvalidParameterError("gauge must be non-decreasing along rays")


def gauge_from_percolation(tree: RootedTree, p) -> Gauge:
    """Adapted gauge of an independent bond percolation: g(x) is the
    reciprocal of the probability that x is reached from the root,
    i.e. the product of 1/p(e) along the root path.

    ``p`` may be a scalar or an array indexed by child id.
    """
    n = tree.vertex_count
    pe = np.full(n, float(p), dtype=np.float64) if np.isscalar(p) else np.asarray(p, dtype=np.float64)
    if pe.shape[0] != n:
        raise InvalidParameterError("per-edge retention array must have one entry per vertex")
    if np.any(pe[1:] <= 0) or np.any(pe[1:] > 1):
        raise InvalidParameterError("edge retention probabilities must lie in (0,1]")
    values = np.ones(n, dtype=np.float64)
    for v in range(1, n):
        values[v] = values[tree.parent[v]] / pe[v]
    delta = np.zeros(n, dtype=np.float64)
    delta[1:] = values[1:] - values[tree.parent[1:]]
    return Gauge(values=values, delta=delta)


def exponential_gauge(tree: RootedTree, q: float) -> Gauge:
    """The purely exponential gauge q^-|x| (constant retention q)."""
    if not 0.0 < q <= 1.0:
        raise InvalidParameterError(f"q must be in (0,1], got {q}")
    values = q ** (-tree.depth.astype(np.float64))
    delta = np.zeros_like(values)
    delta[1:] = values[1:] - values[tree.parent[1:]]
    return Gauge(values=values, delta=delta)


def effective_conductance(tree: RootedTree, gauge: Gauge, D: int) -> float:
    """Effective conductance between the root and the shorted depth-D set,
    edge conductance 1/delta, by one leaf-to-root sweep.

    Depth-D vertices connect directly (C = inf); leaves short of depth D
    are dead ends (C = 0); zero-increment edges are perfect conductors.
    IEEE arithmetic makes the series reduction 1/(delta + 1/C) handle all
    of those cases at once.
    """
    if D < 1 or D > tree.height:
        raise InvalidParameterError(f"need 1 <= D <= tree height, got D={D}")
    n = tree.vertex_count
    C = np.zeros(n, dtype=np.float64)
    lvl = tree.level(D)
    C[lvl.start : lvl.stop] = np.inf
    with np.errstate(divide="ignore"):
        for d in range(D - 1, -1, -1):
            rows = tree.level(d + 1)
            w = np.arange(rows.start, rows.stop)
            if w.size == 0:
                continue
            term = 1.0 / (gauge.delta[w] + 1.0 / C[w])
            np.add.at(C, tree.parent[w], term)
    return float(C[0])


@dataclass(frozen=True)
class ConductanceReport:
    """Depth-indexed conductance profile with the knobs that produced it.

    ``brackets`` are the [C, 2C] two-sided bounds this proxy puts on the
    matching percolation's survival probability."""

    depths: tuple[int, ...]
    conductances: tuple[float, ...]
    gauge_desc: str
    tree_desc: str

    @property
    def brackets(self) -> tuple[tuple[float, float], ...]:
        return tuple((c, 2.0 * c) for c in self.conductances)


def conductance_profile(tree: RootedTree, gauge: Gauge, depths, desc: str = "") -> ConductanceReport:
    cs = tuple(effective_conductance(tree, gauge, int(d)) for d in depths)
    return ConductanceReport(
        depths=tuple(int(d) for d in depths),
        conductances=cs,
        gauge_desc=desc or "custom",
        tree_desc=f"tree(n={tree.vertex_count},h={tree.height})",
    )


def regular_conductance_profile(d: int, q: float, depths) -> np.ndarray:
    """Closed scalar recursion for the root-to-depth-D conductance of the
    rooted d-regular tree under the exponential gauge q^-|x|.

    With b = d-1 the normalised subtree resistance obeys
    sigma_h = (1-q)/b + sigma_(h-1)/(b q); conductance stays positive iff
    q b > 1.  Matches the leaf-to-root sweep exactly and is usable at
    depths no materialised tree could reach.
    """
    if d < 2:
        raise InvalidParameterError("regular tree needs degree >= 2")
    if not 0.0 < q < 1.0:
        raise InvalidParameterError("q must be in (0,1)")
    b = d - 1
    depths = [int(x) for x in depths]
    dmax = max(depths)
    sigma = np.empty(dmax, dtype=np.float64)  # sigma[h-1] for h = 1..dmax
    sigma[0] = (1.0 - q) / b
    for h in range(1, dmax):
        sigma[h] = min((1.0 - q) / b + sigma[h - 1] / (b * q), _CLAMP)
    out = np.empty(len(depths), dtype=np.float64)
    for i, D in enumerate(depths):
        if D == 1:
            out[i] = d * q / (1.0 - q)
        else:
            out[i] = d / ((1.0 - q) / q + sigma[D - 2] / (q * q))
    return out


@dataclass(frozen=True)
class BranchingEstimate:
    estimate: float
    q_hat: float
    depths: tuple[int, ...]
    slope_threshold: float
    window_frac: float
    probes: tuple[tuple[float, bool], ...] = field(default=())  # (q, decays)


def _decays(conds: np.ndarray, slope_threshold: float, window_frac: float) -> bool:
    """Log-linear fit over the deepest window; decay iff slope < -threshold.

    A window that has underflowed to numerical zero counts as decayed
    (the clamp would otherwise read as a flat, stable profile)."""
    c = np.clip(np.asarray(conds, dtype=np.float64), _LOG_FLOOR, _CLAMP)
    k = c.shape[0]
    lo = min(k - 2, int(math.floor(k * (1.0 - window_frac))))
    if float(np.max(c[lo:])) < 1e-200:
        return True
    y = np.log(c[lo:])
    x = np.arange(y.shape[0], dtype=np.float64)
    slope = float(np.polyfit(x, y, 1)[0])
    return slope < -slope_threshold


def _bisect_branching(
    profile_fn,
    depths,
    q_tolerance: float,
    slope_threshold: float,
    window_frac: float,
    grid_check: bool,
) -> BranchingEstimate:
    if len(depths) < 3:
        raise InvalidParameterError("branching classification needs at least 3 depths (D >= 4)")
    probes: list[tuple[float, bool]] = []

    def decays(q: float) -> bool:
        flag = _decays(profile_fn(q), slope_threshold, window_frac)
        probes.append((q, flag))
        return flag

    q_lo, q_hi = 1e-3, 1.0 - 1e-6
    if not decays(q_lo):
        raise DiagnosticError(f"no decay even at q={q_lo}; branching number above {1.0/q_lo:g}")
    if decays(q_hi):
        # no stabilisation below 1: single-ray growth
        q_hat = q_hi
    else:
        lo, hi = q_lo, q_hi
        while hi - lo > q_tolerance:
            mid = 0.5 * (lo + hi)
            if decays(mid):
                lo = mid
            else:
                hi = mid
        q_hat = 0.5 * (lo + hi)
    if grid_check:
        qs = np.linspace(max(q_lo, q_hat - 8 * q_tolerance), min(q_hi, q_hat + 8 * q_tolerance), 7)
        flags = [decays(float(q)) for q in qs]
        # decay region must sit entirely below the stabilising region
        if any(not f1 and f2 for f1, f2 in zip(flags, flags[1:])):
            raise DiagnosticError(f"non-monotone decay classification near q={q_hat:g}: {list(zip(qs, flags))}")
    return BranchingEstimate(
        estimate=1.0 / q_hat,
        q_hat=q_hat,
        depths=tuple(int(x) for x in depths),
        slope_threshold=slope_threshold,
        window_frac=window_frac,
        probes=tuple(probes),
    )


def branching_number_estimate(
    tree: RootedTree,
    D: int,
    q_tolerance: float,
    *,
    slope_threshold: float = 0.02,
    window_frac: float = 0.5,
    grid_check: bool = True,
) -> BranchingEstimate:
    """Finite-volume branching number: bisection over q classifying the
    exponential-gauge conductance profile C_2..C_D as decaying or
    stabilising.  Reported together with its depth sequence and knobs;
    accuracy is limited by the available depth."""
    if D < 2 or D > tree.height:
        raise InvalidParameterError(f"need 2 <= D <= tree height, got D={D}")
    depths = list(range(2, D + 1))

    def profile(q: float) -> np.ndarray:
        g = exponential_gauge(tree, q)
        return np.array([effective_conductance(tree, g, dd) for dd in depths])

    return _bisect_branching(profile, depths, q_tolerance, slope_threshold, window_frac, grid_check)


def branching_number_regular(
    d: int,
    D: int,
    q_tolerance: float,
    *,
    slope_threshold: float = 0.02,
    window_frac: float = 0.5,
    grid_check: bool = True,
) -> BranchingEstimate:
    """Same classifier driven by the closed regular-tree recursion, so the
    depth sequence can be thousands of levels long."""
    depths = list(range(2, D + 1))
    return _bisect_branching(
        lambda q: regular_conductance_profile(d, q, depths),
        depths,
        q_tolerance,
        slope_threshold,
        window_frac,
        grid_check,
    )


@dataclass(frozen=True)
class Theorem53Probe:
    lam: float
    u: float
    depth: int
    br_before: float
    br_after_mean: float
    stderr: float
    n_components: int
    n_died: int


def theorem53_probe(
    tree: RootedTree,
    lam: float,
    u: float,
    D: int,
    N: int,
    seed: int,
    *,
    q_tolerance: float = 5e-3,
    slope_threshold: float = 0.02,
    apply_link: bool = True,
    apply_delay: bool = True,
) -> Theorem53Probe:
    """Empirical strict-decrease probe: branching number of the tree
    versus the mean branching number over N root components of
    delay-after-link percolation at rate lam.

    With both percolations switched off the component is the tree itself
    and the two estimates coincide exactly.  Raises
    :class:`DegenerateSampleError` when every component dies before depth D.
    """
    if D < 2 or D > tree.height:
        raise InvalidParameterError(f"need 2 <= D <= tree height, got D={D}")
    before = branching_number_estimate(
        tree, D, q_tolerance, slope_threshold=slope_threshold, grid_check=False
    )
    n = tree.vertex_count
    p_edge = -math.expm1(-lam)
    params = PruningParams(lam, u)
    levels = [tree.level(dd) for dd in range(0, tree.height + 1)]
    estimates = []
    died = 0
    for i in range(N):
        rng = substream(seed, 0x53, i)
        member = np.ones(n, dtype=bool)
        if apply_link:
            retained = rng.random(n) < p_edge
            retained[0] = True
            for dd in range(1, D + 1):
                w = np.arange(levels[dd].start, levels[dd].stop)
                member[w] = retained[w] & member[tree.parent[w]]
        if apply_delay:
            nchild = np.bincount(
                tree.parent[np.flatnonzero(member[1:]) + 1], minlength=n
            )
            degree = nchild + 1
            degree[0] -= 1
            dstar = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
            mw = np.flatnonzero(member[1:]) + 1
            np.minimum.at(dstar, tree.parent[mw], degree[mw])
            for dd in range(1, D + 1):
                if dd % 3 != 1:
                    continue
                w = np.arange(levels[dd].start, levels[dd].stop)
                w = w[member[w]]
                for v in w:
                    ds = None if dstar[v] == np.iinfo(np.int64).max else int(dstar[v])
                    r = _cached_pruning_probability(
                        int(degree[v]), ds or 0, lam, u, params.quadrature_nodes
                    ) if ds is not None else 0.0
                    if r > 0 and rng.random() < r:
                        member[v] = False
            for dd in range(1, D + 1):
                w = np.arange(levels[dd].start, levels[dd].stop)
                member[w] &= member[tree.parent[w]]
        # restrict to depth D and keep only the root component
        member &= tree.depth <= D
        if not np.any(member & (tree.depth == D)):
            died += 1
            continue
        comp = _induced_subtree(tree, member)
        est = branching_number_estimate(
            comp, D, q_tolerance, slope_threshold=slope_threshold, grid_check=False
        )
        estimates.append(est.estimate)
    if not estimates:
        raise DegenerateSampleError(
            f"all {N} percolated components died before depth {D} at lam={lam}"
        )
    arr = np.asarray(estimates)
    if np.all(arr == arr[0]):  # keeps identity percolation exactly equal
        mean, se = float(arr[0]), 0.0
    else:
        mean = float(arr.mean())
        se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return Theorem53Probe(
        lam=lam,
        u=u,
        depth=D,
        br_before=before.estimate,
        br_after_mean=mean,
        stderr=se,
        n_components=int(arr.size),
        n_died=died,
    )
