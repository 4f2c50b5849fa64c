"""Data-driven penalty for the size-free two-cluster SDP.

The degree profile splits normalized degrees w_i = d_i / log(n) at their mean
w_hat.  Near-balanced profiles (|rho_hat - 1/2| below log(n)^(-1/9), which at
desk scale is every profile: the cutoff is ~0.82 at n = 300 while
|rho_hat - 1/2| <= 1/2) yield the penalty w_hat * log(n) / n.  Far-unbalanced
profiles instead invert the two-group degree means through a quotient
formula.

The profile exposes the above/below-mean group means under two normalizations:
conditional means (dividing by the group count) and literal 1/n-scaled sums.
Only the conditional means make the quotient formula consistent; the literal
sums routinely drive its log argument nonpositive, which is reported as a
DomainError rather than clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError
from .models import Graph

BALANCE_EXPONENT = -1.0 / 9.0
_RHO_GUARD = 1e-6   # absolute floor on |1 - 2 rho_hat| in the unbalanced branch


@dataclass(frozen=True)
class DegreeProfile:
    """Summary of the normalized degree distribution of one graph.

    ``w_plus`` / ``w_minus`` are conditional means over {w_i > w_hat} and
    {w_i < w_hat}; the ``*_literal`` variants are the same sums divided by n.
    ``degenerate`` flags an empty side, whose means are reported as the other
    side's value (or w_hat when both sides are empty).
    """

    w: np.ndarray
    w_hat: float
    rho_hat: float
    w_plus: float
    w_minus: float
    w_plus_literal: float
    w_minus_literal: float
    degenerate: bool

    @property
    def n(self) -> int:
        return self.w.shape[0]


def degree_profile(a: Graph) -> DegreeProfile:
    """Profile of w_i = d_i / log(n); plain adjacency only."""
    if a.alphabet != "01":
        raise DomainError("degree profile needs a plain 0/1 graph")
    n = a.n
    w = a.dense().sum(axis=1) / math.log(n)
    w_hat = float(w.mean())
    above = w > w_hat
    below = w < w_hat
    rho_hat = float((w <= w_hat).mean())
    plus_lit = float(w[above].sum() / n)
    minus_lit = float(w[below].sum() / n)
    degenerate = not above.any() or not below.any()
    if above.any():
        w_plus = float(w[above].mean())
    else:
        w_plus = float(w[below].mean()) if below.any() else w_hat
    if below.any():
        w_minus = float(w[below].mean())
    else:
        w_minus = w_plus if above.any() else w_hat
    return DegreeProfile(w=w, w_hat=w_hat, rho_hat=rho_hat, w_plus=w_plus,
                         w_minus=w_minus, w_plus_literal=plus_lit,
                         w_minus_literal=minus_lit, degenerate=degenerate)


def lambda_hat(profile: DegreeProfile, n: int, normalization: str = "literal",
               branch: str = "auto") -> float:
    """Data-driven penalty for the size-free two-cluster SDP.

    ``branch`` may force "balanced" or "unbalanced" (the automatic rule picks
    balanced whenever |rho_hat - 1/2| <= log(n)^(-1/9)); ``normalization``
    selects which group means feed the unbalanced quotient.  A nonpositive
    log argument in the unbalanced branch raises DomainError.
    """
    if n < 3:
        raise DomainError("lambda_hat needs n >= 3")
    if branch not in ("auto", "balanced", "unbalanced"):
        raise DomainError(f"unknown branch {branch!r}")
    if normalization not in ("literal", "conditional"):
        raise DomainError(f"unknown normalization {normalization!r}")
    logn = math.log(n)
    if branch == "auto":
        balanced = abs(profile.rho_hat - 0.5) <= logn ** BALANCE_EXPONENT
        branch = "balanced" if balanced else "unbalanced"
    if branch == "balanced":
        return profile.w_hat * logn / n

    if normalization == "conditional":
        wp, wm = profile.w_plus, profile.w_minus
    else:
        wp, wm = profile.w_plus_literal, profile.w_minus_literal
    gap = 1.0 - 2.0 * profile.rho_hat
    if abs(gap) < _RHO_GUARD:
        raise DomainError("unbalanced branch needs |1 - 2 rho_hat| bounded away from 0")
    num = (wp + wm) * gap + (wp - wm)
    den = (wp + wm) * gap - (wp - wm)
    if num <= 0 or den <= 0:
        raise DomainError("unbalanced branch log argument is nonpositive")
    ratio = num / den
    if ratio == 1.0:
        raise DomainError("degenerate unbalanced branch: equal group means")
    return (wp - wm) / gap / math.log(ratio) * logn / n
