"""Cross-checks between the compiled replica engine and the pure-Python
reference implementations (independent code paths for the same laws)."""

import math

import numpy as np
import pytest

from treeloops import (
    DiagnosticError,
    LoopPoint,
    OffspringLaw,
    RegularTree,
    generate_regular,
    link_cluster,
    loop_reaches_depth,
    sample_links,
    survival_curve,
    trace_loop,
)
from treeloops.estimators import run_replicas

from conftest import z_score


def _python_loop_reach(tree, beta, u, D, n, seed0):
    hits = 0
    for i in range(n):
        cfg = sample_links(tree, beta, u, seed=seed0 + i)
        hits += loop_reaches_depth(trace_loop(tree, cfg, LoopPoint(0, 0.0)), D)
    return hits / n


@pytest.mark.parametrize(
    "beta,u",
    [(0.6, 1.0), (0.6, 0.5), (0.8, 0.0)],
)
def test_engine_loop_reach_matches_python_tracer(beta, u):
    d, D = 3, 5
    tree = generate_regular(d, D)
    n_py = 2500
    py = _python_loop_reach(tree, beta, u, D, n_py, seed0=1000)
    curve = survival_curve("loop", RegularTree(d), [beta], u, D, 30000, seed=999)
    se_py = math.sqrt(py * (1 - py) / n_py)
    assert abs(z_score(py, se_py, curve.estimates[0], curve.stderrs[0])) < 3.5


def test_engine_link_reach_matches_python_cluster():
    d, D, beta = 3, 5, 0.55
    tree = generate_regular(d, D)
    n_py = 2500
    hits = sum(
        link_cluster(tree, sample_links(tree, beta, 1.0, seed=4000 + i)).height == D
        for i in range(n_py)
    )
    py = hits / n_py
    curve = survival_curve("link", RegularTree(d), [beta], 1.0, D, 30000, seed=31)
    se_py = math.sqrt(py * (1 - py) / n_py)
    assert abs(z_score(py, se_py, curve.estimates[0], curve.stderrs[0])) < 3.5


def test_engine_explicit_mode_matches_lazy_mode():
    tree = generate_regular(3, 6)
    a = survival_curve("link", tree, [0.5], 1.0, 6, 30000, seed=321)
    b = survival_curve("link", RegularTree(3), [0.5], 1.0, 6, 30000, seed=654)
    assert abs(z_score(a.estimates[0], a.stderrs[0], b.estimates[0], b.stderrs[0])) < 3.5


def test_engine_gw_annealed_mode_matches_python():
    from treeloops import generate_galton_watson

    law = OffspringLaw.poisson(2.2)
    beta, D = 0.8, 4
    n_py = 2500
    hits = 0
    for i in range(n_py):
        tree = generate_galton_watson(law, D, seed=7000 + i)
        if tree.height < D:
            continue
        cfg = sample_links(tree, beta, 1.0, seed=i)
        hits += loop_reaches_depth(trace_loop(tree, cfg, LoopPoint(0, 0.0)), D)
    py = hits / n_py
    curve = survival_curve("loop", law, [beta], 1.0, D, 30000, seed=5)
    se_py = math.sqrt(py * (1 - py) / n_py)
    assert abs(z_score(py, se_py, curve.estimates[0], curve.stderrs[0])) < 3.5


def test_engine_binomial_and_geometric_laws():
    # distributional check against the pgf recursion oracle
    from conftest import gw_link_survival
    from treeloops import GeneratingFunction

    for law in (OffspringLaw.binomial(4, 0.55), OffspringLaw.geometric(0.35)):
        f = GeneratingFunction(law)
        beta, D, N = 0.9, 6, 20000
        curve = survival_curve("link", law, [beta], 1.0, D, N, seed=77)
        target = gw_link_survival(f.f, D, 1 - math.exp(-beta))
        se = math.sqrt(curve.stderrs[0] ** 2 + target * (1 - target) / N)
        assert abs(curve.estimates[0] - target) < 3.5 * se


def test_engine_empirical_law_table_sampler():
    law = OffspringLaw.empirical([0.2, 0.3, 0.5])
    from conftest import gw_link_survival
    from treeloops import GeneratingFunction

    f = GeneratingFunction(law)
    beta, D, N = 1.2, 5, 20000
    curve = survival_curve("link", law, [beta], 1.0, D, N, seed=15)
    target = gw_link_survival(f.f, D, 1 - math.exp(-beta))
    se = math.sqrt(curve.stderrs[0] ** 2 + target * (1 - target) / N)
    assert abs(curve.estimates[0] - target) < 3.5 * se


def test_engine_thread_determinism():
    args = dict(grid=[0.4, 0.7], u=0.5, D=6, N=3000, seed=5, models=("link", "linkdelay", "loop"))
    a = run_replicas(RegularTree(3), args["grid"], args["u"], args["D"], args["N"], args["seed"], models=args["models"], threads=1)
    b = run_replicas(RegularTree(3), args["grid"], args["u"], args["D"], args["N"], args["seed"], models=args["models"], threads=2)
    assert np.array_equal(a, b)


def test_engine_vertex_cap_diagnostic():
    with pytest.raises(DiagnosticError):
        run_replicas(RegularTree(4), [5.0], 1.0, 14, 10, seed=0, max_vertices=2000)


def test_loop_never_reaches_without_link_path():
    out = run_replicas(RegularTree(3), [0.3, 0.6, 1.0], 1.0, 6, 4000, seed=9, models=("link", "loop"))
    link = out[:, :, 0]
    loop = out[:, :, 2]
    assert np.all(loop <= link)


def test_loop_reach_sanity_band_deep_regular_tree():
    # strictly between 0 and 1 at a rate inside the transition window
    curve = survival_curve("loop", RegularTree(4), [0.8], 1.0, 8, 10000, seed=314)
    assert 0.0 < curve.estimates[0] < 1.0


def test_engine_delay_model_matches_python_compose():
    from treeloops import PruningParams, compose_link_delay_survival

    beta, D = 0.8, 6
    tree = generate_regular(4, D)
    n_py = 800
    params = PruningParams(beta, 1.0)
    hits = sum(compose_link_delay_survival(tree, beta, params, D, seed=i) for i in range(n_py))
    py = hits / n_py
    curve = survival_curve("linkdelay", RegularTree(4), [beta], 1.0, D, 30000, seed=55)
    se_py = math.sqrt(py * (1 - py) / n_py)
    assert abs(z_score(py, se_py, curve.estimates[0], curve.stderrs[0])) < 3.5


def test_trace_kernel_agrees_with_python_tracer_on_identical_configs():
    # feed the compiled reach-or-close tracer the exact event index of a
    # Python-sampled configuration and compare outcomes pointwise
    from treeloops import EventIndex
    from treeloops import engine as eng

    tree = generate_regular(3, 4)
    disagreements = 0
    for i in range(300):
        beta = 0.3 + (i % 10) * 0.15
        u = (1.0, 0.5, 0.0)[i % 3]
        cfg = sample_links(tree, beta, u, seed=50_000 + i)
        idx = EventIndex(tree, cfg)
        for D in (2, 3, 4):
            want = loop_reaches_depth(trace_loop(tree, cfg, LoopPoint(0, 0.0), index=idx), D)
            got = eng._trace_reach(
                idx.ptr.astype(np.int64),
                idx.time.astype(np.float64),
                idx.other.astype(np.int64),
                idx.kind.astype(np.uint8),
                idx.edge.astype(np.int64),
                tree.depth.astype(np.int64),
                cfg.total_links,
                D,
            )
            assert got in (0, 1)
            disagreements += int(got) != int(want)
    assert disagreements == 0


def test_thinned_evaluation_matches_direct_sampling():
    # the same rate evaluated directly and as a thinned copy of a larger
    # top rate must agree in distribution
    beta = 0.5
    direct = survival_curve("loop", RegularTree(3), [beta], 1.0, 6, 30000, seed=61)
    out = run_replicas(RegularTree(3), [beta], 1.0, 6, 30000, seed=62, models=("loop",), beta_max=1.5)
    thinned = float(out[:, 0, 2].mean())
    se_t = math.sqrt(thinned * (1 - thinned) / 30000)
    assert abs(z_score(direct.estimates[0], direct.stderrs[0], thinned, se_t)) < 3.5
