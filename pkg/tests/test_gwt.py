import math

import numpy as np
import pytest

from treeloops import (
    GeneratingFunction,
    InvalidParameterError,
    OffspringLaw,
    PrecisionError,
    expected_Y,
    h_of_beta,
    link_threshold,
    poisson_sufficient,
    survivor_pgf,
    theoremB_analytic_verdict,
    theoremB_condition,
)

ALL_LAWS = [
    OffspringLaw.deterministic(3),
    OffspringLaw.poisson(2.5),
    OffspringLaw.binomial(6, 0.4),
    OffspringLaw.geometric(0.45),
    OffspringLaw.power_law(1.3, 20000),
    OffspringLaw.empirical([0.1, 0.4, 0.3, 0.2]),
]


def test_h_closed_form_value():
    assert abs(h_of_beta(1.0) - (1 - 2 * math.exp(-1)) / (1 - math.exp(-1))) < 1e-14
    assert abs(h_of_beta(1.0) - 0.4180232931) < 1e-9


def test_h_small_beta_expansion():
    # remainder beyond beta/2 - beta^2/12 is O(beta^3); actually beta^4/720
    for beta in (0.1, 0.05, 0.01):
        rem = abs(h_of_beta(beta) - (beta / 2 - beta**2 / 12))
        assert rem <= 1.01 * beta**4 / 720


def test_h_limits_and_monotonicity():
    assert h_of_beta(50.0) > 0.999999
    grid = np.linspace(1e-3, 20.0, 1000)
    vals = [h_of_beta(b) for b in grid]
    assert all(b < a for a, b in zip(vals[1:], vals))  # strictly increasing
    with pytest.raises(InvalidParameterError):
        h_of_beta(0.0)


def test_expected_Y_small_beta_vanishes():
    for law in ALL_LAWS:
        f = GeneratingFunction(law)
        assert expected_Y(1e-6, f) < 1e-3


def test_expected_Y_closed_form_deterministic3():
    f = GeneratingFunction(OffspringLaw.deterministic(3))
    beta = 1.0
    h = h_of_beta(beta)
    pb = 1 - math.exp(-beta)
    expected = 3 * (1 - h) * pb * (math.exp(-beta) + pb * (1 - h)) ** 2
    assert abs(expected_Y(beta, f) - expected) < 1e-12


def test_expected_Y_against_direct_mc():
    # Y = X_beta * 1{Bin(X_beta, h) = 0} sampled directly
    law = OffspringLaw.deterministic(3)
    beta = 1.0
    rng = np.random.default_rng(7)
    n = 200000
    x = rng.binomial(3, 1 - math.exp(-beta), n)
    b = rng.binomial(x, h_of_beta(beta))
    y = np.where(b == 0, x, 0)
    se = y.std(ddof=1) / math.sqrt(n)
    assert abs(y.mean() - expected_Y(beta, GeneratingFunction(law))) < 3 * se


def test_expected_Y_upper_bound():
    for law in ALL_LAWS:
        f = GeneratingFunction(law)
        for beta in (0.2, 1.0, 3.0):
            assert expected_Y(beta, f) <= (1 - math.exp(-beta)) * law.mean() + 1e-9


def test_expected_Y_is_survivor_pgf_derivative():
    f = GeneratingFunction(OffspringLaw.poisson(2.0))
    beta = 0.8
    eps = 1e-6
    numeric = (survivor_pgf(beta, f, 1.0) - survivor_pgf(beta, f, 1.0 - eps)) / eps
    assert abs(numeric - expected_Y(beta, f)) < 1e-4


def test_theoremB_poisson_fails_below_analytic_bound():
    lam = 5.0
    f = GeneratingFunction(OffspringLaw.poisson(lam))
    eps_bound = 1 / (2 * lam * lam)
    eps = [eps_bound / 2, eps_bound / 10, 1e-4]
    assert theoremB_condition(f, eps) == [False, False, False]
    assert theoremB_analytic_verdict(OffspringLaw.poisson(lam)) is False


def test_theoremB_power_law_holds_on_grid():
    f = GeneratingFunction(OffspringLaw.power_law(1.3, 1_000_000))
    assert theoremB_condition(f, [1e-2, 1e-3, 1e-4]) == [True, True, True]
    assert theoremB_analytic_verdict(OffspringLaw.power_law(1.3, 1_000_000)) is None


def test_theoremB_deterministic_fails_small_eps():
    f = GeneratingFunction(OffspringLaw.deterministic(4))
    assert theoremB_condition(f, [1e-3, 1e-5]) == [False, False]


def test_theoremB_rejects_bad_grid():
    f = GeneratingFunction(OffspringLaw.poisson(1.0))
    with pytest.raises(InvalidParameterError):
        theoremB_condition(f, [0.0])


def test_link_threshold():
    assert abs(link_threshold(2.0) - math.log(2.0)) < 1e-12
    assert link_threshold(1e9) < 1e-8
    assert math.isinf(link_threshold(1.0))
    assert math.isinf(link_threshold(0.5))
    with pytest.raises(InvalidParameterError):
        link_threshold(0.0)


def test_poisson_sufficient():
    assert poisson_sufficient(1.0, 3.0)  # 3/e > 1
    assert not any(poisson_sufficient(b, 2.0) for b in np.linspace(0.01, 10, 500))
    assert poisson_sufficient(0.2, 10.0)


def test_pgf_normalisation_and_mean():
    for law in ALL_LAWS:
        for mode in ("closed", "series"):
            if mode == "closed" and law.kind in ("power_law", "empirical"):
                continue
            f = GeneratingFunction(law, mode=mode)
            assert abs(f.f(1.0) - 1.0) < 1e-10
            assert abs(f.f_prime(1.0) - law.mean()) < 1e-8 * max(1.0, law.mean())


def test_pgf_cross_mode_agreement():
    for law in ALL_LAWS:
        if law.kind in ("power_law", "empirical"):
            continue
        closed = GeneratingFunction(law, mode="closed")
        series = GeneratingFunction(law, mode="series")
        for z in (0.0, 0.3, 0.9, 1.0):
            assert abs(closed.f(z) - series.f(z)) < 1e-8
            assert abs(closed.f_prime(z) - series.f_prime(z)) < 1e-8


def test_pgf_monotone_nonnegative():
    grid = np.linspace(0.0, 1.0, 50)
    for law in ALL_LAWS:
        f = GeneratingFunction(law)
        vals = [f.f(z) for z in grid]
        primes = [f.f_prime(z) for z in grid]
        assert all(v >= 0 for v in vals + primes)
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
        assert all(b >= a - 1e-12 for a, b in zip(primes, primes[1:]))


def test_series_truncation_raises_precision_error():
    law = OffspringLaw.poisson(5.0)
    law.pmf()
    law._pmf_cache["pmf"] = law._pmf_cache["pmf"][:4]  # butcher the tail
    f = GeneratingFunction(law, mode="series")
    with pytest.raises(PrecisionError):
        f.f_prime(0.9)


def test_survivor_subtree_consistency():
    # expected_Y > 1 for Deterministic(9) at beta = 1/3; survival of the
    # uni-link-only subtree stays bounded away from 0 as D grows and
    # matches the exact pgf recursion at 3 SE
    law = OffspringLaw.deterministic(9)
    f = GeneratingFunction(law)
    beta = 1.0 / 3.0
    assert expected_Y(beta, f) > 1.0

    def oracle(D):
        s = 1.0
        for _ in range(D):
            s = 1.0 - survivor_pgf(beta, f, 1.0 - s)
        return s

    n = 4000
    for D in (4, 8, 12):
        # one multi-generation pass per replica
        rng = np.random.default_rng(1000 + D)
        alive = np.ones(n, dtype=np.int64)
        for _ in range(D):
            nxt = np.zeros(n, dtype=np.int64)
            live = np.flatnonzero(alive > 0)
            for i in live:
                kids = rng.binomial(9, 1 - math.exp(-beta), alive[i])
                multi = rng.binomial(kids, h_of_beta(beta))
                nxt[i] = int(np.where(multi == 0, kids, 0).sum())
            alive = nxt
        p_hat = float((alive > 0).mean())
        target = oracle(D)
        se = math.sqrt(max(target * (1 - target), 1e-12) / n)
        assert abs(p_hat - target) < 3 * se + 1e-9
        assert p_hat > 0.1  # bounded away from zero
