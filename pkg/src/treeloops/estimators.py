"""Monte Carlo orchestration: survival curves, threshold bisection, and
the domination report for the loop / delay-after-link / link ordering.

Replicas are independent tasks; replica i draws from streams derived
from (master seed, i), so estimates are byte-identical across thread
counts.  Within a replica a single uniform stream drives link placement
at the top grid rate and Poisson thinning produces every smaller rate,
which makes link survival pathwise non-decreasing in beta.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import engine
from .errors import (
    DiagnosticError,
    InvalidParameterError,
    NonMonotoneCurveError,
    NoTransitionError,
)
from .percolation import _cached_pruning_probability
from .rand import mix64
from .trees import OffspringLaw, RootedTree, generate_galton_watson

MODELS = ("link", "linkdelay", "loop")
_MODEL_CODE = {"link": engine.MODEL_LINK, "linkdelay": engine.MODEL_LINKDELAY, "loop": engine.MODEL_LOOP}

_BETA_FLOOR = 1e-6
_BETA_CEIL = 30.0  # Knuth Poisson sampling bound


@dataclass(frozen=True)
class RegularTree:
    """Lazy rooted d-regular tree (root degree d, inner branching d-1)."""

    d: int

    def __post_init__(self):
        if self.d < 2:
            raise InvalidParameterError("regular tree needs degree >= 2")

    def describe(self) -> str:
        return f"regular({self.d})"


class _EngineInput:
    """Normalised tree-or-law input for the replica kernel."""

    def __init__(self, tree_or_law, D: int, quenched_seed: int | None = None):
        self.desc: str
        dummy = np.zeros(1, dtype=np.float64)
        self.root = (engine.LAW_DETERMINISTIC, 0.0, 0.0, dummy)
        self.inner = self.root
        self.cstart = np.zeros(1, dtype=np.int64)
        if isinstance(tree_or_law, RootedTree):
            if D > tree_or_law.height:
                raise InvalidParameterError(f"D={D} exceeds tree height {tree_or_law.height}")
            self.explicit = 1
            self.cstart = tree_or_law.cstart.astype(np.int64)
            self.max_children = int(np.max(np.diff(self.cstart))) if tree_or_law.vertex_count > 1 else 0
            self.desc = f"tree(n={tree_or_law.vertex_count})"
        elif isinstance(tree_or_law, RegularTree):
            self.explicit = 0
            d = tree_or_law.d
            self.root = (engine.LAW_DETERMINISTIC, float(d), 0.0, dummy)
            self.inner = (engine.LAW_DETERMINISTIC, float(d - 1), 0.0, dummy)
            self.max_children = d
            self.desc = tree_or_law.describe()
        elif isinstance(tree_or_law, OffspringLaw):
            if quenched_seed is not None:
                tree = generate_galton_watson(tree_or_law, D, quenched_seed)
                if D > tree.height:
                    raise DiagnosticError("quenched Galton-Watson tree died before depth D")
                self.__init__(tree, D)
                self.desc = f"quenched-{tree_or_law.describe()}"
                return
            self.explicit = 0
            spec = _law_spec(tree_or_law)
            self.root = spec
            self.inner = spec
            self.max_children = tree_or_law.max_degree()
            self.desc = tree_or_law.describe()
        else:
            raise InvalidParameterError(f"unsupported tree input {type(tree_or_law).__name__}")


def _law_spec(law: OffspringLaw):
    dummy = np.zeros(1, dtype=np.float64)
    if law.kind == "deterministic":
        return (engine.LAW_DETERMINISTIC, law.a, 0.0, dummy)
    if law.kind == "poisson":
        return (engine.LAW_POISSON, law.a, 0.0, dummy)
    if law.kind == "binomial":
        return (engine.LAW_BINOMIAL, law.a, law.b, dummy)
    if law.kind == "geometric":
        return (engine.LAW_GEOMETRIC, law.a, 0.0, dummy)
    cdf = np.cumsum(law.pmf())
    cdf[-1] = 1.0
    return (engine.LAW_TABLE, 0.0, 0.0, cdf.astype(np.float64))


def _r_table(grid: np.ndarray, u: float, max_children: int, nodes: int = 256) -> np.ndarray:
    """Pruning probabilities indexed [grid, degree, min-child-degree].

    Degrees beyond the cap clamp into the last row/column; the pruning
    probability is non-increasing in both arguments and already below
    1e-20 there, so the clamp is harmless."""
    cap = min(max_children + 2, 64)
    table = np.zeros((grid.shape[0], cap + 1, cap + 1), dtype=np.float64)
    for g, beta in enumerate(grid):
        for deg in range(2, cap + 1):
            for ds in range(1, cap + 1):
                table[g, deg, ds] = _cached_pruning_probability(deg, ds, float(beta), u, nodes)
    return table


def _run_block(args):
    (master, lo, hi, inp, beta_max, u, D, grid, want, table, max_vertices, out, err) = args
    engine._replica_block(
        np.uint64(master),
        lo,
        hi,
        inp.explicit,
        inp.cstart,
        inp.root[0],
        inp.root[1],
        inp.root[2],
        inp.root[3],
        inp.inner[0],
        inp.inner[1],
        inp.inner[2],
        inp.inner[3],
        beta_max,
        u,
        D,
        grid,
        want[0],
        want[1],
        want[2],
        table,
        max_vertices,
        out,
        err,
    )


_ERROR_TEXT = {
    engine.ERR_VERTICES: "replica cluster exceeded the vertex cap; use a smaller top rate or bracket",
    engine.ERR_LINKS: "loop trace failed an internal event-index invariant",
    engine.ERR_DEGENERATE_START: "a link landed exactly on the loop start point",
    engine.ERR_STEP_BOUND: "loop trace exceeded its 4M+2 step bound",
}


def run_replicas(
    tree_or_law,
    grid,
    u: float,
    D: int,
    N: int,
    seed: int,
    *,
    models=("link",),
    beta_max: float | None = None,
    threads: int = 1,
    quenched_seed: int | None = None,
    max_vertices: int = 2_000_000,
) -> np.ndarray:
    """Per-replica reach-depth-D indicators, shape (N, len(grid), 3).

    Columns follow engine model codes (link, linkdelay, loop); only the
    requested models are filled.
    """
    grid = np.asarray(sorted(float(b) for b in grid), dtype=np.float64)
    if grid.size == 0 or N < 1:
        raise InvalidParameterError("need a non-empty grid and N >= 1")
    grid = np.clip(grid, _BETA_FLOOR, None)
    bmax = float(beta_max if beta_max is not None else grid[-1])
    if bmax < grid[-1] or bmax > _BETA_CEIL:
        raise InvalidParameterError(f"top rate must lie in [grid max, {_BETA_CEIL}], got {bmax}")
    if not 0.0 <= u <= 1.0:
        raise InvalidParameterError(f"u must be in [0,1], got {u}")
    if D < 1:
        raise InvalidParameterError(f"D must be >= 1, got {D}")
    for m in models:
        if m not in MODELS:
            raise InvalidParameterError(f"unknown model {m!r}; choose from {MODELS}")
    inp = _EngineInput(tree_or_law, D, quenched_seed)
    want = (
        "link" in models,
        "linkdelay" in models,
        "loop" in models,
    )
    table = _r_table(grid, u, inp.max_children) if want[1] else np.zeros((grid.shape[0], 3, 3))
    out = np.zeros((N, grid.shape[0], 3), dtype=np.uint8)
    err = np.zeros(N, dtype=np.int64)
    master = mix64(seed, 0xE6E)
    threads = max(1, int(threads))
    bounds = np.linspace(0, N, threads + 1).astype(np.int64)
    jobs = [
        (master, int(lo), int(hi), inp, bmax, u, D, grid, want, table, max_vertices, out, err)
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    if len(jobs) == 1:
        _run_block(jobs[0])
    else:
        with ThreadPoolExecutor(max_workers=len(jobs)) as ex:
            list(ex.map(_run_block, jobs))
    if np.any(err):
        code = int(err[err != 0][0])
        raise DiagnosticError(_ERROR_TEXT.get(code, f"engine error {code}"))
    return out


@dataclass(frozen=True)
class SurvivalCurve:
    model: str
    beta_grid: tuple[float, ...]
    u: float
    depth: int
    replicas: int
    estimates: tuple[float, ...]
    stderrs: tuple[float, ...]
    tree: str
    seed: int

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("model,beta,u,D,N,estimate,stderr\n")
        for b, p, s in zip(self.beta_grid, self.estimates, self.stderrs):
            out.write(
                f"{self.model},{b:.10g},{self.u:.10g},{self.depth},{self.replicas},{p:.10g},{s:.10g}\n"
            )
        return out.getvalue()


def survival_curve(
    model: str,
    tree_or_law,
    beta_grid,
    u: float,
    D: int,
    N: int,
    seed: int,
    *,
    threads: int = 1,
    quenched_seed: int | None = None,
) -> SurvivalCurve:
    """Reach-depth-D frequency per grid rate with binomial standard errors.

    Common random numbers (thinning from the grid maximum) couple the
    grid points within each replica.
    """
    if N < 1:
        raise InvalidParameterError("N must be >= 1")
    out = run_replicas(
        tree_or_law, beta_grid, u, D, N, seed, models=(model,), threads=threads, quenched_seed=quenched_seed
    )
    col = out[:, :, _MODEL_CODE[model]].astype(np.float64)
    p = col.mean(axis=0)
    se = np.sqrt(p * (1.0 - p) / N)
    grid = sorted(max(float(b), _BETA_FLOOR) for b in beta_grid)
    inp_desc = _EngineInput(tree_or_law, D, quenched_seed).desc
    return SurvivalCurve(
        model=model,
        beta_grid=tuple(grid),
        u=u,
        depth=D,
        replicas=N,
        estimates=tuple(float(x) for x in p),
        stderrs=tuple(float(x) for x in se),
        tree=inp_desc,
        seed=seed,
    )


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise InvalidParameterError("n must be positive")
    p = k / n
    z2 = z * z
    den = 1.0 + z2 / n
    centre = p + z2 / (2.0 * n)
    half = z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n))
    lo = 0.0 if k == 0 else max(0.0, (centre - half) / den)
    hi = 1.0 if k == n else min(1.0, (centre + half) / den)
    return (lo, hi)


@dataclass(frozen=True)
class TransitionEstimate:
    model: str
    u: float
    depth: int
    target: float
    beta_hat: float
    ci: tuple[float, float]
    estimate_at_hat: float
    wilson_at_hat: tuple[float, float]
    replicas: int
    seed: int
    scan: tuple[tuple[float, float], ...]  # (beta, estimate) bracketing scan

    def to_record(self) -> dict:
        return {
            "model": self.model,
            "u": self.u,
            "D": self.depth,
            "target": self.target,
            "beta_hat": self.beta_hat,
            "ci_lo": self.ci[0],
            "ci_hi": self.ci[1],
            "seed": self.seed,
        }


def threshold_bisection(
    model: str,
    tree_or_law,
    u: float,
    D: int,
    N: int,
    target: float = 0.05,
    tol: float = 0.01,
    seed: int = 0,
    *,
    bracket: tuple[float, float] = (1e-6, 20.0),
    threads: int = 1,
    quenched_seed: int | None = None,
) -> TransitionEstimate:
    """Depth-D survival threshold proxy: the rate where the reach-depth-D
    frequency crosses ``target``.

    A coarse geometric scan first brackets the crossing and must look
    monotone at 3 standard errors (loop survival is not provably
    monotone; a failed check raises with the scanned curve attached).
    Bisection then evaluates thinned copies of one shared top-rate
    sample, so the empirical curve it walks is a deterministic function
    of the seed.  The confidence interval comes from Wilson bounds: its
    ends are the closest evaluated rates confidently on either side of
    the target.
    """
    if not 0.0 < target < 1.0:
        raise InvalidParameterError("target must be inside (0,1)")
    lo_b, hi_b = bracket
    if not 0 < lo_b < hi_b:
        raise InvalidParameterError("bracket must satisfy 0 < lo < hi")

    def estimate_at(beta: float, master_tag: int, beta_max: float) -> float:
        out = run_replicas(
            tree_or_law,
            [beta],
            u,
            D,
            N,
            mix64(seed, master_tag),
            models=(model,),
            beta_max=beta_max,
            threads=threads,
            quenched_seed=quenched_seed,
        )
        return float(out[:, 0, _MODEL_CODE[model]].mean())

    # geometric bracketing scan, stopping at the first point above target
    scan: list[tuple[float, float]] = []
    beta = max(lo_b, _BETA_FLOOR)
    k = 0
    above = None
    while True:
        p = estimate_at(beta, 0xB15E + k, beta)
        scan.append((beta, p))
        if p > target:
            above = beta
            break
        if beta >= hi_b:
            break
        beta = min(beta * 2.0, hi_b)
        k += 1
    if above is None:
        curve = tuple(scan)
        raise NoTransitionError(
            f"no crossing of target {target} inside bracket {bracket}", curve=curve
        )
    if len(scan) == 1:
        raise NoTransitionError(
            f"survival already above target {target} at bracket start {scan[0][0]:g}",
            curve=tuple(scan),
        )
    for (b1, p1), (b2, p2) in zip(scan, scan[1:]):
        se = math.sqrt(p1 * (1 - p1) / N + p2 * (1 - p2) / N)
        if p2 < p1 - 3.0 * se:
            raise NonMonotoneCurveError(
                f"scan not monotone at 3 SE between beta={b1:g} and beta={b2:g}",
                curve=tuple(scan),
            )
    lo = scan[-2][0] if len(scan) > 1 else max(lo_b, _BETA_FLOOR)
    hi = above

    # bisection on thinned evaluations of one shared top-rate sample
    evals: dict[float, float] = {}

    def thinned(beta: float) -> float:
        if beta not in evals:
            evals[beta] = estimate_at(beta, 0xB15EC7, hi)
        return evals[beta]

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if thinned(mid) < target:
            lo = mid
        else:
            hi = mid
    beta_hat = 0.5 * (lo + hi)
    p_hat = thinned(beta_hat)
    k_hat = int(round(p_hat * N))
    wil = wilson_interval(k_hat, N)
    ci_lo = max(
        (b for b, p in evals.items() if wilson_interval(int(round(p * N)), N)[1] < target),
        default=max(lo_b, _BETA_FLOOR),
    )
    ci_hi = min(
        (b for b, p in evals.items() if wilson_interval(int(round(p * N)), N)[0] > target),
        default=above,
    )
    return TransitionEstimate(
        model=model,
        u=u,
        depth=D,
        target=target,
        beta_hat=beta_hat,
        ci=(float(ci_lo), float(ci_hi)),
        estimate_at_hat=p_hat,
        wilson_at_hat=wil,
        replicas=N,
        seed=seed,
        scan=tuple(scan),
    )


@dataclass(frozen=True)
class DominationRow:
    beta: float
    p_loop: float
    se_loop: float
    p_delaylink: float
    se_delaylink: float
    p_link: float
    se_link: float
    z_loop_vs_delay: float
    z_delay_vs_link: float
    violation: bool


@dataclass(frozen=True)
class DominationReport:
    rows: tuple[DominationRow, ...]
    u: float
    depth: int
    replicas: int
    tree: str
    seed: int

    @property
    def violations(self) -> int:
        return sum(r.violation for r in self.rows)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(
            "beta,p_loop,se_loop,p_delaylink,se_delaylink,p_link,se_link,"
            "z_loop_vs_delay,z_delay_vs_link,violation\n"
        )
        for r in self.rows:
            out.write(
                f"{r.beta:.10g},{r.p_loop:.10g},{r.se_loop:.10g},{r.p_delaylink:.10g},"
                f"{r.se_delaylink:.10g},{r.p_link:.10g},{r.se_link:.10g},"
                f"{r.z_loop_vs_delay:.10g},{r.z_delay_vs_link:.10g},{int(r.violation)}\n"
            )
        return out.getvalue()


def _paired_z(a: np.ndarray, b: np.ndarray) -> float:
    """One-sided z statistic for H1: E[a] > E[b] from paired indicators."""
    d = a.astype(np.float64) - b.astype(np.float64)
    sd = d.std(ddof=1)
    if sd == 0.0:
        return 0.0
    return float(d.mean() / (sd / math.sqrt(d.shape[0])))


def domination_report(
    tree_or_law,
    beta_grid,
    u: float,
    D: int,
    N: int,
    seed: int,
    *,
    threads: int = 1,
) -> DominationReport:
    """Per-rate triple (loop, delay-after-link, link) reach frequencies
    with one-sided z statistics for each adjacent ordering; a violation
    flags an adjacent pair out of order beyond 3 standard errors."""
    out = run_replicas(
        tree_or_law, beta_grid, u, D, N, seed, models=("link", "linkdelay", "loop"), threads=threads
    )
    grid = sorted(max(float(b), _BETA_FLOOR) for b in beta_grid)
    rows = []
    for g, beta in enumerate(grid):
        link = out[:, g, engine.MODEL_LINK]
        delay = out[:, g, engine.MODEL_LINKDELAY]
        loop = out[:, g, engine.MODEL_LOOP]
        stats = []
        for col in (loop, delay, link):
            p = float(col.mean())
            stats.extend([p, math.sqrt(p * (1 - p) / N)])
        z1 = _paired_z(loop, delay)
        z2 = _paired_z(delay, link)
        rows.append(
            DominationRow(
                beta=float(beta),
                p_loop=stats[0],
                se_loop=stats[1],
                p_delaylink=stats[2],
                se_delaylink=stats[3],
                p_link=stats[4],
                se_link=stats[5],
                z_loop_vs_delay=z1,
                z_delay_vs_link=z2,
                violation=bool(z1 > 3.0 or z2 > 3.0),
            )
        )
    return DominationReport(
        rows=tuple(rows),
        u=u,
        depth=D,
        replicas=N,
        tree=_EngineInput(tree_or_law, D).desc,
        seed=seed,
    )
