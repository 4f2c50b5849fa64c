"""Closed-form recovery thresholds and large-deviation exponents.

The central objects:

* ``tau(a, b)``   -- the crossing point (a-b)/(log a - log b) of the two
  Poisson-type rate functions.
* ``eta(rho, a, b)`` -- the exponent deciding exact recovery for two clusters
  of relative sizes rho and 1-rho; recovery is possible iff eta > 1.
* ``chernoff_exponent_g`` -- the exponent of P{X - R <= alpha log n} for
  independent binomials X ~ Binom(rho1 n, a log n / n), R ~ Binom(rho2 n,
  b log n / n).
* ``rate_I(mu, d) = mu - d log(e mu / d)`` -- the rate function whose
  comparisons against 1/rho_k give the general-cluster sufficient conditions.
* ``censored_threshold(epsilon)`` -- the critical density coefficient
  1 / (sqrt(1-eps) - sqrt(eps))^2 for the censored model.
* ``solve_psi`` -- root-finding for the tightest symmetric split psi used by
  the general-cluster test.

Everything is plain double-precision arithmetic; tolerances in the callers
are chosen accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Optional

from .errors import DomainError

# below this, eta's 0/0-unstable general formula is replaced by the explicit limit
_ETA_LIMIT_RHO = 1e-9

_CRITICAL_MARGIN = 1e-9


def tau(a: float, b: float) -> float:
    """Crossing point (a - b) / (log a - log b) of the two rate functions."""
    if not b > 0 or not a > b:
        raise DomainError("tau needs a > b > 0")
    return (a - b) / (math.log(a) - math.log(b))


def eta(rho: float, a: float, b: float) -> float:
    """Two-cluster recovery exponent at first-cluster fraction rho.

    Defined for rho in [0, 1] and symmetric about 1/2.  At the endpoints the
    explicit limit (a+b)/2 - tau log(e sqrt(ab)/tau) is used; the general
    formula degenerates to 0/0 there.
    """
    if not 0.0 <= rho <= 1.0:
        raise DomainError("eta needs rho in [0, 1]")
    t = tau(a, b)
    if rho < _ETA_LIMIT_RHO or rho > 1.0 - _ETA_LIMIT_RHO:
        return (a + b) / 2 - t * math.log(math.e * math.sqrt(a * b) / t)
    rb = 1.0 - rho
    d = (rb - rho) * t
    gam = math.sqrt(d * d + 4.0 * rho * rb * a * b)
    return (a + b) / 2 - gam + (d / 2) * math.log(rho * (gam + d) / (rb * (gam - d)))


def chernoff_exponent_g(rho1: float, rho2: float, a: float, b: float,
                        alpha: float) -> float:
    """Large-deviation exponent of P{X - R <= alpha log n}.

    Three branches: the two-sided one for rho1, rho2 > 0, and the one-sided
    degenerations when either vanishes.  The exponent is 0 at the mean point
    alpha = a rho1 - b rho2 and grows as alpha decreases.
    """
    if not (a > 0 and b > 0):
        raise DomainError("need a, b > 0")
    if rho1 < 0 or rho2 < 0 or (rho1 == 0 and rho2 == 0):
        raise DomainError("need rho1, rho2 >= 0, not both zero")
    if alpha > a * rho1 - b * rho2:
        raise DomainError("alpha must not exceed the mean a*rho1 - b*rho2")
    if rho1 > 0 and rho2 > 0:
        gam = math.sqrt(alpha * alpha + 4.0 * rho1 * rho2 * a * b)
        val = a * rho1 + b * rho2 - gam
        if alpha != 0.0:
            val -= (alpha / 2) * math.log(
                (gam - alpha) * a * rho1 / ((gam + alpha) * b * rho2))
        return val
    if rho1 == 0:
        # alpha <= -b*rho2 < 0 here
        return rho2 * b + alpha * math.log(-math.e * rho2 * b / alpha)
    if alpha < 0:
        raise DomainError("alpha < 0 with rho2 = 0: the event has probability 0")
    if alpha == 0:
        return rho1 * a  # 0 log 0 = 0 convention
    return rho1 * a - alpha * math.log(math.e * rho1 * a / alpha)


def rate_I(mu: float, d: float) -> float:
    """Rate function I(mu, d) = mu - d log(e mu / d); I(mu, 0) = mu."""
    if not mu > 0:
        raise DomainError("rate_I needs mu > 0")
    if d < 0:
        raise DomainError("rate_I needs d >= 0")
    if d == 0:
        return mu
    return mu - d * math.log(math.e * mu / d)


def censored_threshold(epsilon: float) -> float:
    """Critical density coefficient 1/(sqrt(1-eps) - sqrt(eps))^2.

    Returns +inf at epsilon = 1/2, where labels carry no information.
    """
    if not 0.0 <= epsilon <= 0.5:
        raise DomainError("epsilon must lie in [0, 1/2]")
    s = (math.sqrt(1.0 - epsilon) - math.sqrt(epsilon)) ** 2
    if s == 0.0:
        return math.inf
    return 1.0 / s


def psi_explicit(a: float, b: float) -> float:
    """The smaller, closed-form split psi = (tau - b)/2."""
    return (tau(a, b) - b) / 2


def solve_psi(a: float, b: float, tol: float = 1e-10) -> float:
    """The unique psi with I(a, b + 2 psi) = I(b, b + psi) and b < b+2 psi < a.

    Found by bisection on [psi_explicit*(1 - 1e-6), (a-b)/2] until the bracket
    width is at most ``tol``; the left end is the proven smaller solution and
    the right end enforces b + 2 psi < a.
    """
    if not b > 0 or not a > b:
        raise DomainError("solve_psi needs a > b > 0")

    def gap(psi: float) -> float:
        return rate_I(b, b + psi) - rate_I(a, b + 2 * psi)

    lo = max(0.0, psi_explicit(a, b) * (1.0 - 1e-6))
    hi = (a - b) / 2
    glo, ghi = gap(lo), gap(hi)
    if glo > 0 or ghi < 0:
        raise DomainError("bisection bracket failed to straddle the root")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if gap(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


@dataclass(frozen=True)
class GeneralRecoveryReport:
    """Margins of the four rate-function conditions and their conjunction.

    A margin is I(...) - 1/rho_k for the corresponding condition; inactive
    conditions still report their margin (None when undefined) but do not
    enter the verdict.
    """

    con1: float
    con2: Optional[float]
    con3: Optional[float]
    con4: float
    active: tuple[bool, bool, bool, bool]
    ok: bool


def general_recovery_check(a: float, b: float, rho_fractions,
                           psi1: float, psi2: float) -> GeneralRecoveryReport:
    """Evaluate the four sufficient conditions for the general-cluster SDPs.

    ``rho_fractions`` are the cluster fractions rho_1 >= ... >= rho_r > 0;
    a total below 1 means outlier vertices are present.  Conditions 2 and 3
    are dropped when there is a single cluster; condition 4 is evaluated
    whenever outliers exist (the single-cluster-plus-outliers reading,
    extended to every outlier case).
    """
    rhos = [float(x) for x in rho_fractions]
    if not rhos or any(x <= 0 for x in rhos):
        raise DomainError("cluster fractions must be positive")
    if rhos != sorted(rhos, reverse=True):
        raise DomainError("cluster fractions must be sorted in decreasing order")
    if sum(rhos) > 1.0 + 1e-12:
        raise DomainError("cluster fractions sum beyond 1")
    if not (psi1 > 0 and psi2 > 0):
        raise DomainError("need psi1, psi2 > 0")
    if b + psi1 + psi2 >= a:
        raise DomainError("need b + psi1 + psi2 < a")

    r = len(rhos)
    rho_min = rhos[-1]
    has_outliers = sum(rhos) < 1.0 - 1e-12

    con1 = rate_I(a, b + psi1 + psi2) - 1.0 / rho_min
    con2 = rate_I(b, b + psi1) - 1.0 / rho_min
    con3 = rate_I(b, b + psi2) - 1.0 / rhos[-2] if r >= 2 else None
    con4 = rate_I(b, b + psi1 + psi2) - 1.0 / rho_min
    active = (True, r >= 2, r >= 2, has_outliers)
    margins = (con1, con2, con3, con4)
    ok = all(m > 0 for m, act in zip(margins, active) if act and m is not None)
    return GeneralRecoveryReport(con1=con1, con2=con2, con3=con3, con4=con4,
                                 active=active, ok=ok)


@dataclass(frozen=True)
class ThresholdReport:
    """Threshold verdict for one model point.

    ``margin`` is eta - 1 for the binary and censored variants and
    sqrt(a) - sqrt(b) - sqrt(r) for the multi-cluster one; ``verdict`` is
    Critical when |margin| < 1e-9, otherwise its sign decides.
    """

    tau: Optional[float]
    gamma: Optional[float]
    eta: Optional[float]
    verdict: str
    margin: float

    def to_dict(self) -> dict:
        return asdict(self)


def _verdict(margin: float) -> str:
    if abs(margin) < _CRITICAL_MARGIN:
        return "Critical"
    return "Recoverable" if margin > 0 else "NotRecoverable"


def binary_threshold(rho: float, a: float, b: float) -> ThresholdReport:
    """Report for two clusters of fractions rho, 1-rho: recoverable iff eta > 1."""
    t = tau(a, b)
    rb = 1.0 - rho
    gam = math.sqrt((rb - rho) ** 2 * t * t + 4 * rho * rb * a * b)
    e = eta(rho, a, b)
    return ThresholdReport(tau=t, gamma=gam, eta=e, verdict=_verdict(e - 1.0),
                           margin=e - 1.0)


def multi_threshold(r: int, a: float, b: float) -> ThresholdReport:
    """Report for r equal clusters: recoverable iff sqrt(a) - sqrt(b) > sqrt(r).

    ``eta`` is filled with the per-cluster exponent (sqrt(a)-sqrt(b))^2 / r,
    which exceeds 1 exactly when the margin is positive.
    """
    if r < 2:
        raise DomainError("multi threshold needs r >= 2")
    t = tau(a, b)
    margin = math.sqrt(a) - math.sqrt(b) - math.sqrt(r)
    e = (math.sqrt(a) - math.sqrt(b)) ** 2 / r
    return ThresholdReport(tau=t, gamma=None, eta=e, verdict=_verdict(margin),
                           margin=margin)


def censored_threshold_report(a: float, epsilon: float) -> ThresholdReport:
    """Report for the censored model: recoverable iff a (sqrt(1-eps)-sqrt(eps))^2 > 1."""
    if not a > 0:
        raise DomainError("need a > 0")
    astar = censored_threshold(epsilon)
    e = 0.0 if math.isinf(astar) else a / astar
    return ThresholdReport(tau=None, gamma=None, eta=e, verdict=_verdict(e - 1.0),
                           margin=e - 1.0)
