"""Brute-force maximum-likelihood estimators and converse diagnostics.

These are the exactness ground truth for tiny instances: the SDP relaxation's
objective can never fall below the ML optimum, and whenever the relaxation is
tight the two optimizers coincide.  Objectives follow the matrix convention
<A, M> (each unordered pair counted twice), so they compare directly against
SDP objective values.

``swap_witness`` implements the converse diagnostic: a single label swap (or
flip, for the censored model) that strictly improves the ML objective proves
that ML -- and hence every estimator -- fails on the instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .errors import DomainError, SizeCapError
from .models import Graph, Partition, OUTLIER

_CHUNK = 65536
ML_BINARY_MAX_N = 24
ML_CENSORED_MAX_N = 22
ML_MULTI_MAX_ASSIGNMENTS = 10_000_000


@dataclass(frozen=True)
class MlResult:
    best: Partition
    objective: int
    unique: bool
    ties: int


@dataclass(frozen=True)
class SwapWitnessReport:
    """Margins of the best single swap/flip against the planted labels.

    ``min_margin`` is min_i (own-cluster minus strongest-other-cluster edge
    weight); for the binary variant the per-cluster minima are also reported.
    ``ml_fails`` means some swap/flip strictly improves the objective, so the
    planted labeling cannot be an ML optimizer; ``uniqueness_fails`` means a
    cost-free one exists, so the planted labeling cannot be unique.
    """

    min_margin: float
    min_margin_c1: Optional[float]
    min_margin_c2: Optional[float]
    best_improvement: float
    ml_fails: bool
    uniqueness_fails: bool

    def to_dict(self) -> dict:
        return {
            "min_margin": self.min_margin,
            "min_margin_c1": self.min_margin_c1,
            "min_margin_c2": self.min_margin_c2,
            "best_improvement": self.best_improvement,
            "ml_fails": self.ml_fails,
            "uniqueness_fails": self.uniqueness_fails,
        }


def _score_signs(adj: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """<A, s s^T> for each row s of ``signs``."""
    return np.einsum("ij,ij->i", signs @ adj, signs)


def ml_binary(a: Graph, k: int) -> MlResult:
    """Exhaustive ML over sign vectors with exactly k positive entries.

    When 2k = n, a vector and its negation are the same partition; the
    quotient anchors vertex 0 in cluster 1.
    """
    n = a.n
    if n > ML_BINARY_MAX_N:
        raise SizeCapError(f"ml_binary capped at n = {ML_BINARY_MAX_N}")
    if not 0 <= k <= n:
        raise DomainError("k must lie in [0, n]")
    adj = a.dense()
    balanced = 2 * k == n
    if balanced and k > 0:
        pool = combinations(range(1, n), k - 1)
        fixed = (0,)
    else:
        pool = combinations(range(n), k)
        fixed = ()

    best_obj = -math.inf
    best_subset = None
    ties = 0
    batch: list[tuple[int, ...]] = []

    def flush():
        nonlocal best_obj, best_subset, ties
        if not batch:
            return
        signs = -np.ones((len(batch), n))
        for row, subset in enumerate(batch):
            signs[row, list(fixed + subset)] = 1.0
        scores = _score_signs(adj, signs)
        for row, subset in enumerate(batch):
            sc = scores[row]
            if sc > best_obj + 1e-9:
                best_obj = sc
                best_subset = fixed + subset
                ties = 1
            elif sc > best_obj - 1e-9:
                ties += 1
        batch.clear()

    for subset in pool:
        batch.append(subset)
        if len(batch) >= _CHUNK:
            flush()
    flush()

    labels = np.full(n, 2, dtype=np.int64)
    labels[list(best_subset)] = 1
    return MlResult(best=Partition(labels=labels, r=2),
                    objective=int(round(best_obj)), unique=ties == 1, ties=ties)


def ml_censored(a: Graph) -> MlResult:
    """Exhaustive ML over all sign vectors, global sign fixed at vertex 0."""
    n = a.n
    if n > ML_CENSORED_MAX_N:
        raise SizeCapError(f"ml_censored capped at n = {ML_CENSORED_MAX_N}")
    adj = a.dense()
    total = 1 << (n - 1)
    best_obj = -math.inf
    best_bits = 0
    ties = 0
    bit_cols = np.arange(n - 1)
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        codes = np.arange(start, stop, dtype=np.uint64)
        bits = (codes[:, None] >> bit_cols[None, :]) & 1
        signs = np.empty((stop - start, n))
        signs[:, 0] = 1.0
        signs[:, 1:] = 1.0 - 2.0 * bits
        scores = _score_signs(adj, signs)
        for row in range(stop - start):
            sc = scores[row]
            if sc > best_obj + 1e-9:
                best_obj = sc
                best_bits = start + row
                ties = 1
            elif sc > best_obj - 1e-9:
                ties += 1
    labels = np.full(n, 1, dtype=np.int64)
    for j in range(n - 1):
        if (best_bits >> j) & 1:
            labels[j + 1] = 2
    return MlResult(best=Partition(labels=labels, r=2),
                    objective=int(round(best_obj)), unique=ties == 1, ties=ties)


def _equal_partitions(n: int, r: int, k: int):
    """All r-partitions into blocks of size k, quotiented by relabeling.

    The lowest unassigned vertex always opens the next cluster, which fixes a
    canonical cluster order.
    """
    labels = np.zeros(n, dtype=np.int64)

    def rec(cluster: int, remaining: list[int]):
        if cluster > r:
            if not remaining:
                yield labels.copy()
            return
        anchor = remaining[0]
        rest = remaining[1:]
        for companions in combinations(rest, k - 1):
            labels[anchor] = cluster
            for v in companions:
                labels[v] = cluster
            chosen = set(companions)
            yield from rec(cluster + 1, [v for v in rest if v not in chosen])
            for v in companions:
                labels[v] = 0
            labels[anchor] = 0

    yield from rec(1, list(range(n)))


def ml_multi(a: Graph, r: int, k: int) -> MlResult:
    """Exhaustive ML over equal-size r-partitions (in-cluster edge count)."""
    n = a.n
    if r * k != n:
        raise DomainError("ml_multi needs n = r * k")
    total = math.factorial(n) // (math.factorial(k) ** r)
    if total > ML_MULTI_MAX_ASSIGNMENTS:
        raise SizeCapError("ml_multi assignment count exceeds the cap")
    adj = a.dense()
    best_obj = -math.inf
    best_labels = None
    ties = 0
    for labels in _equal_partitions(n, r, k):
        same = labels[:, None] == labels[None, :]
        sc = float((adj * same).sum())
        if sc > best_obj + 1e-9:
            best_obj = sc
            best_labels = labels
            ties = 1
        elif sc > best_obj - 1e-9:
            ties += 1
    return MlResult(best=Partition(labels=best_labels, r=r),
                    objective=int(round(best_obj)), unique=ties == 1, ties=ties)


def swap_witness(a: Graph, truth: Partition) -> SwapWitnessReport:
    """Margins and failure verdicts for single-move perturbations of truth.

    Binary truth: swapping i in C1 with j in C2 changes the objective by
    -2 (m_i + m_j + 2 A_ij) where m_i is the own-versus-other edge margin of
    i.  Censored truth: flipping i changes it by -2 (s_i - r_i) with signed
    sums s_i, r_i.  Multi-cluster truth: margins use the strongest foreign
    cluster, and swaps across cluster pairs are scanned exactly.
    """
    adj = a.dense()
    labels = truth.labels
    if (labels == OUTLIER).any():
        raise DomainError("swap witness needs a partition without outliers")

    if a.alphabet == "pm1":
        sigma = truth.signs()
        agree = sigma[:, None] == sigma[None, :]
        s_i = (adj * agree).sum(axis=1)
        r_i = (adj * ~agree).sum(axis=1)
        margins = s_i - r_i
        best = float(2.0 * -margins.min())
        return SwapWitnessReport(min_margin=float(margins.min()),
                                 min_margin_c1=None, min_margin_c2=None,
                                 best_improvement=best,
                                 ml_fails=bool(margins.min() < 0),
                                 uniqueness_fails=bool(margins.min() <= 0))

    if truth.r == 2:
        c1 = labels == 1
        c2 = labels == 2
        e1 = adj[:, c1].sum(axis=1)
        e2 = adj[:, c2].sum(axis=1)
        m1 = e1[c1] - e2[c1]
        m2 = e2[c2] - e1[c2]
        cross = adj[np.ix_(c1, c2)]
        delta = -2.0 * (m1[:, None] + m2[None, :] + 2.0 * cross)
        best = float(delta.max())
        return SwapWitnessReport(min_margin=float(min(m1.min(), m2.min())),
                                 min_margin_c1=float(m1.min()),
                                 min_margin_c2=float(m2.min()),
                                 best_improvement=best,
                                 ml_fails=bool(best > 0),
                                 uniqueness_fails=bool(best >= 0))

    xi = truth.indicators()
    counts = adj @ xi
    kk = labels - 1
    n = a.n
    own = counts[np.arange(n), kk]
    others = counts.copy()
    others[np.arange(n), kk] = -np.inf
    margins = own - others.max(axis=1)
    # swap i in C_k(i) with j elsewhere: gain = (e(i,C_k(j)) - s_i) + (e(j,C_k(i)) - s_j) - 2 A_ij
    gain_i = counts[:, kk] - own[:, None]          # [i, j] -> e(i, C_k(j)) - s_i
    delta = gain_i + gain_i.T - 2.0 * adj
    foreign = labels[:, None] != labels[None, :]
    best = float(delta[foreign].max()) if foreign.any() else 0.0
    return SwapWitnessReport(min_margin=float(margins.min()),
                             min_margin_c1=None, min_margin_c2=None,
                             best_improvement=best,
                             ml_fails=bool(best > 0),
                             uniqueness_fails=bool(best >= 0))
