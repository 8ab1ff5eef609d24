"""Closed-form and series criteria for loop vs link thresholds on
Galton-Watson trees.

Central objects: the offspring generating function f, the thinned
function f_beta'(z) = (1-e^-b) f'(e^-b + (1-e^-b) z), the conditional
multi-link probability h(b) = P(Poisson(b) > 1 | > 0) = 1 - b/(e^b - 1),
and the survivor mean E[Y_b] = (1-h) f_beta'(1-h) that governs the
uni-link subtree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, PrecisionError
from .trees import OffspringLaw

_CLOSED_FORM = {"deterministic", "poisson", "binomial", "geometric"}


@dataclass(frozen=True)
class GeneratingFunction:
    """Offspring pgf with closed-form evaluation where available and a
    truncated-series fallback carrying a rigorous tail bound.

    The series error bound for f' on [0,1] is the exact mean mass lost to
    truncation; evaluations whose bound is not negligible against the
    value raise :class:`PrecisionError` instead of returning silently.
    """

    law: OffspringLaw
    mode: str = "auto"  # auto | closed | series

    def _mode(self) -> str:
        if self.mode != "auto":
            return self.mode
        return "closed" if self.law.kind in _CLOSED_FORM else "series"

    def f(self, z: float) -> float:
        return self._eval(z, derivative=False)

    def f_prime(self, z: float) -> float:
        return self._eval(z, derivative=True)

    def mean(self) -> float:
        return self.law.mean()

    def _eval(self, z: float, derivative: bool) -> float:
        mode = self._mode()
        if mode == "closed":
            if self.law.kind not in _CLOSED_FORM:
                raise InvalidParameterError(f"no closed form for {self.law.kind}")
            return self._closed(z, derivative)
        return self._series(z, derivative)

    def _closed(self, z: float, derivative: bool) -> float:
        k = self.law.kind
        if k == "deterministic":
            d = self.law.a
            if derivative:
                return 0.0 if d == 0 else d * z ** (d - 1)
            return z**d
        if k == "poisson":
            lam = self.law.a
            val = math.exp(lam * (z - 1.0))
            return lam * val if derivative else val
        if k == "binomial":
            n, p = self.law.a, self.law.b
            base = 1.0 - p + p * z
            if derivative:
                return 0.0 if n == 0 else n * p * base ** (n - 1)
            return base**n
        # geometric with success probability p on {0,1,...}
        p = self.law.a
        q = 1.0 - p
        if derivative:
            return p * q / (1.0 - q * z) ** 2
        return p / (1.0 - q * z)

    def _series(self, z: float, derivative: bool) -> float:
        pmf = self.law.pmf()
        k = np.arange(pmf.size, dtype=np.float64)
        if derivative:
            val = float(np.sum(k[1:] * pmf[1:] * z ** (k[1:] - 1.0))) if pmf.size > 1 else 0.0
            bound = self._prime_tail_bound()
        else:
            val = float(np.sum(pmf * z**k))
            bound = self.law.tail_mass()
        if bound > 1e-6 * max(abs(val), 1e-30):
            raise PrecisionError(
                f"series truncation bound {bound:g} not negligible against value {val:g}"
            )
        return val

    def _prime_tail_bound(self) -> float:
        # mean mass beyond the truncation point bounds the f' error on [0,1]
        pmf = self.law.pmf()
        partial = float(np.arange(pmf.size) @ pmf)
        if self.law.kind in ("deterministic", "binomial", "empirical", "power_law"):
            return 0.0
        return max(0.0, self.law.mean() - partial)


def h_of_beta(beta: float) -> float:
    """P(Poisson(beta) > 1 | > 0) = 1 - beta / (e^beta - 1)."""
    if beta <= 0:
        raise InvalidParameterError(f"beta must be > 0, got {beta}")
    return 1.0 - beta / math.expm1(beta)


def expected_Y(beta: float, f: GeneratingFunction) -> float:
    """Mean offspring of the uni-link-only subtree: the link-thinned child
    count killed whenever any retained sibling edge is multi-link.

    Equals (1-h) (1-e^-b) f'(e^-b + (1-e^-b)(1-h)) with h = h_of_beta(beta).
    """
    if beta <= 0:
        raise InvalidParameterError(f"beta must be > 0, got {beta}")
    h = h_of_beta(beta)
    pb = -math.expm1(-beta)
    return (1.0 - h) * pb * f.f_prime(math.exp(-beta) + pb * (1.0 - h))


def survivor_pgf(beta: float, f: GeneratingFunction, z: float) -> float:
    """Pgf of Y_beta: E[z^Y] = 1 - f_b(1-h) + f_b((1-h) z), with f_b the
    link-thinned offspring pgf.  Used as the exact depth-survival oracle."""
    h = h_of_beta(beta)
    pb = -math.expm1(-beta)

    def f_thin(w: float) -> float:
        return f.f(math.exp(-beta) + pb * w)

    return 1.0 - f_thin(1.0 - h) + f_thin((1.0 - h) * z)


def theoremB_condition(f: GeneratingFunction, eps_grid) -> list[bool]:
    """Per-epsilon truth of sqrt(eps) * f'(1 - eps) > 1/sqrt(2).

    Reported pointwise on the grid; no "for all small eps" claim is ever
    extrapolated from finitely many points.
    """
    out = []
    for eps in eps_grid:
        if not 0.0 < eps < 1.0:
            raise InvalidParameterError(f"epsilon grid values must be in (0,1), got {eps}")
        out.append(bool(math.sqrt(eps) * f.f_prime(1.0 - eps) > 1.0 / math.sqrt(2.0)))
    return out


def theoremB_analytic_verdict(law: OffspringLaw) -> bool | None:
    """Analytic small-epsilon verdict where a closed form settles it.

    Laws with f' bounded on [0,1] (finite mean with closed form, or finite
    support) fail for all small epsilon; None when no closed form decides
    (the truncated power law is reported per-grid only).
    """
    if law.kind in ("deterministic", "binomial", "empirical"):
        return False
    if law.kind in ("poisson", "geometric"):
        return False  # f' bounded by the (finite) mean scale
    return None


def link_threshold(mean_offspring: float) -> float:
    """-log(1 - 1/mean) for mean > 1; +inf sentinel when mean <= 1."""
    if mean_offspring <= 0:
        raise InvalidParameterError(f"mean offspring must be > 0, got {mean_offspring}")
    if mean_offspring <= 1.0:
        return math.inf
    return -math.log(1.0 - 1.0 / mean_offspring)


def poisson_sufficient(beta: float, lam: float) -> bool:
    """Sufficient condition for an unbounded loop on Poisson(lam) trees at
    u = 1: beta * e^-beta * lam > 1."""
    if beta <= 0 or lam <= 0:
        raise InvalidParameterError("beta and lam must be > 0")
    return beta * math.exp(-beta) * lam > 1.0
