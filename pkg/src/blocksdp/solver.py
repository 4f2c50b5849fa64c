"""First-order operator-splitting solver for the six SDP relaxations.

All six programs share the shape

    maximize  <C, X>
    s.t.      X is symmetric PSD,
              diag(X) = 1        (or <= 1),
              optionally X >= 0 entrywise,
              optionally <J, X> = c,  X 1 = k 1,  <I, X> = t.

``solve`` runs a scaled ADMM: each iteration projects onto the PSD cone via a
full symmetric eigendecomposition (negative eigenvalues clipped to zero),
projects onto the affine/diagonal/box set (in closed form where one exists,
otherwise by Dykstra's cyclic projection with correction terms), and updates
the scaled dual variable, with over-relaxation in between.  Residuals are
Frobenius norms scaled by the iterate magnitude:

    primal = ||X - Z||_F / max(1, ||X||_F, ||Z||_F)
    dual   = ||Z - Z_prev||_F / max(1, ||X||_F, ||Z||_F)

Non-convergence within ``max_iter`` is reported, never raised.

For the variants without entrywise nonnegativity, the builders additionally
seed the iteration at a spectral rounding of the objective together with the
matching KKT dual matrix.  When that seed happens to satisfy the optimality
conditions (which it does on most recoverable instances) the iteration
detects a fixed point immediately; otherwise the seed is just a starting
point and the splitting proceeds normally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError
from .models import Graph, Partition

DIAG_FIXED = "FixedOne"
DIAG_ATMOST = "AtMostOne"

_DYKSTRA_SWEEPS = 50
_DYKSTRA_TOL = 1e-12


@dataclass(frozen=True)
class SdpProblem:
    """One instance of the common SDP shape (maximize <objective, X>).

    ``warm`` optionally carries a (Z0, S0) pair used to seed the splitting:
    Z0 a feasible candidate optimum and S0 the matching dual slack matrix.
    """

    objective: np.ndarray
    diag_mode: str
    nonneg: bool = False
    j_inner: Optional[float] = None
    rowsum: Optional[float] = None
    trace: Optional[float] = None
    warm: Optional[tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=np.float64)
        object.__setattr__(self, "objective", c)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise DomainError("objective must be a square matrix")
        if not np.allclose(c, c.T, atol=1e-12):
            raise DomainError("objective must be symmetric")
        if self.diag_mode not in (DIAG_FIXED, DIAG_ATMOST):
            raise DomainError("diag_mode must be FixedOne or AtMostOne")

    @property
    def n(self) -> int:
        return self.objective.shape[0]


@dataclass(frozen=True)
class SolveOptions:
    """Iteration controls.  ``step=None`` means the default 1/sqrt(n)."""

    max_iter: int = 5000
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6
    step: Optional[float] = None
    over_relax: float = 1.5
    seed: int = 0
    restart: bool = False      # only then does the seed perturb the start
    warm_start: bool = True    # use the builder's spectral/dual seed if any

    def __post_init__(self):
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")
        if self.tol_primal <= 0 or self.tol_dual <= 0:
            raise DomainError("tolerances must be positive")
        if not 1.0 <= self.over_relax <= 1.8:
            raise DomainError("over_relax must lie in [1, 1.8]")
        if self.step is not None and self.step <= 0:
            raise DomainError("step must be positive")


@dataclass
class SolveResult:
    X: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    iters: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "iters": self.iters,
            "converged": self.converged,
        }


# ---------------------------------------------------------------------------
# Projections
# ---------------------------------------------------------------------------

def psd_project(m: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix: eigendecompose, clip negative eigenvalues to zero.

    Reconstructs from whichever side of the spectrum is smaller.
    """
    w, v = np.linalg.eigh(m)
    npos = int(np.count_nonzero(w > 0))
    n = m.shape[0]
    if npos == 0:
        return np.zeros_like(m)
    if npos == n:
        return m
    if npos <= n - npos:
        vp = v[:, n - npos:]
        return (vp * w[n - npos:]) @ vp.T
    vn = v[:, :n - npos]
    return m - (vn * w[:n - npos]) @ vn.T


def _proj_diag(v: np.ndarray) -> np.ndarray:
    x = v.copy()
    np.fill_diagonal(x, 1.0)
    return x


def _proj_diag_jsum(v: np.ndarray, c: float) -> np.ndarray:
    """Exact projection onto {X_ii = 1, <J, X> = c}."""
    n = v.shape[0]
    off = v.sum() - np.trace(v)
    mu = (c - n - off) / (n * n - n)
    x = v + mu
    np.fill_diagonal(x, 1.0)
    return x


def _proj_diag_rowsum(v: np.ndarray, k: float) -> np.ndarray:
    """Exact projection onto {X_ii = 1, X 1 = k 1} over symmetric matrices."""
    n = v.shape[0]
    rows = v.sum(axis=1)
    diag = np.diagonal(v)
    s = (n * (k - 1.0) - v.sum() + diag.sum()) / (2.0 * n - 2.0)
    nu = (k - 1.0 - rows + diag - s) / (n - 2.0)
    x = v + nu[:, None] + nu[None, :]
    np.fill_diagonal(x, 1.0)
    return x


def _proj_trace_jsum(v: np.ndarray, t: float, c: float) -> np.ndarray:
    """Exact projection onto {<I, X> = t, <J, X> = c}."""
    n = v.shape[0]
    tv = np.trace(v)
    sv = v.sum()
    mu2 = (c - sv - t + tv) / (n * n - n)
    mu1 = (t - tv - mu2 * n) / n
    x = v + mu2
    np.fill_diagonal(x, np.diagonal(x) + mu1)
    return x


def _proj_box(v: np.ndarray, diag_cap: bool) -> np.ndarray:
    """Clip entries to >= 0, and the diagonal into [0, 1] when capped."""
    x = np.maximum(v, 0.0)
    if diag_cap:
        d = np.minimum(np.diagonal(x), 1.0)
        np.fill_diagonal(x, d)
    return x


def _dykstra(v: np.ndarray, projections, sweeps: int = _DYKSTRA_SWEEPS,
             tol: float = _DYKSTRA_TOL) -> np.ndarray:
    """Dykstra's cyclic projection with correction terms."""
    x = v
    incr = [np.zeros_like(v) for _ in projections]
    for _ in range(sweeps):
        delta = 0.0
        for idx, proj in enumerate(projections):
            y = proj(x + incr[idx])
            incr[idx] = x + incr[idx] - y
            delta = max(delta, float(np.abs(y - x).max(initial=0.0)))
            x = y
        if delta < tol:
            break
    return x


def constraint_projector(problem: SdpProblem) -> Callable[[np.ndarray], np.ndarray]:
    """Projection onto the problem's affine/diagonal/box constraint set."""
    if problem.diag_mode == DIAG_FIXED:
        if problem.trace is not None:
            raise DomainError("trace constraint requires AtMostOne diagonal")
        if problem.rowsum is not None:
            k = float(problem.rowsum)
            if problem.j_inner is not None:
                raise DomainError("rowsum and j_inner together are unsupported")
            if not problem.nonneg:
                return lambda v: _proj_diag_rowsum(v, k)
            # affine last: the equality constraints end a sweep satisfied exactly
            affine = lambda v: _proj_diag_rowsum(v, k)
            box = lambda v: _proj_box(v, diag_cap=False)
            return lambda v: _dykstra(v, (box, affine))
        if problem.j_inner is not None:
            c = float(problem.j_inner)
            if problem.nonneg:
                affine = lambda v: _proj_diag_jsum(v, c)
                box = lambda v: _proj_box(v, diag_cap=False)
                return lambda v: _dykstra(v, (box, affine))
            return lambda v: _proj_diag_jsum(v, c)
        if problem.nonneg:
            return lambda v: _dykstra(v, (lambda u: _proj_box(u, diag_cap=False),
                                          _proj_diag))
        return _proj_diag
    # AtMostOne diagonal: box with optional trace / j_inner equalities
    box = lambda v: _proj_box(v, diag_cap=True)
    if problem.trace is not None or problem.j_inner is not None:
        if problem.trace is None or problem.j_inner is None:
            raise DomainError("the general SDP fixes both trace and j_inner")
        t, c = float(problem.trace), float(problem.j_inner)
        affine = lambda v: _proj_trace_jsum(v, t, c)
        return lambda v: _dykstra(v, (box, affine))
    return box


# ---------------------------------------------------------------------------
# Problem builders
# ---------------------------------------------------------------------------

def _leading_unit_eigvec(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    vec = v[:, -1]
    top = int(np.argmax(np.abs(vec)))
    if vec[top] < 0:
        vec = -vec
    return vec


def _spectral_signs(c: np.ndarray, k: Optional[int], demean: bool) -> np.ndarray:
    """Sign vector from the leading eigenvector, optionally with exactly k ones."""
    m = c
    if demean:
        row = c.mean(axis=1, keepdims=True)
        m = c - row - row.T + c.mean()
    vec = _leading_unit_eigvec(m)
    if k is None:
        return np.where(vec > 0, 1.0, -1.0)
    sigma = -np.ones(c.shape[0])
    order = np.argsort(-vec, kind="stable")
    sigma[order[:k]] = 1.0
    return sigma


def _kkt_seed(c: np.ndarray, sigma: np.ndarray,
              lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Candidate optimum sigma sigma^T and the dual slack it would need.

    For the diagonal-constrained programs, the dual slack at Y = sigma sigma^T
    is S = diag(d) - (C - lam J) with d_i = ((C - lam J) sigma)_i sigma_i; the
    pair is a KKT point exactly when S is PSD.
    """
    ceff = c if lam == 0.0 else c - lam
    d = (ceff @ sigma) * sigma
    s = np.diag(d) - ceff
    return np.outer(sigma, sigma), s


def build_sdp_binary(a: Graph, k: int) -> SdpProblem:
    """Size-constrained two-cluster relaxation: diag = 1, <J, Y> = (2K - n)^2."""
    if not 0 <= k <= a.n:
        raise DomainError("cluster size k must lie in [0, n]")
    c = a.dense()
    sigma = _spectral_signs(c, k=k, demean=True)
    lam = c.sum() / (a.n * a.n)  # data-driven multiplier guess: mean degree / n
    return SdpProblem(objective=c, diag_mode=DIAG_FIXED,
                      j_inner=float((2 * k - a.n) ** 2),
                      warm=_kkt_seed(c, sigma, lam))


def build_sdp_penalized(a: Graph, lam: float) -> SdpProblem:
    """Size-free two-cluster relaxation: maximize <A - lam J, Y>, diag = 1."""
    if lam < 0:
        raise DomainError("penalty must be nonnegative")
    c = a.dense() - lam
    sigma = _spectral_signs(c, k=None, demean=False)
    return SdpProblem(objective=c, diag_mode=DIAG_FIXED,
                      warm=_kkt_seed(c, sigma, 0.0))


def build_sdp_multi(a: Graph, k: int) -> SdpProblem:
    """Equal-size multi-cluster relaxation: diag = 1, Z >= 0, Z 1 = K 1."""
    if k < 1:
        raise DomainError("cluster size k must be >= 1")
    return SdpProblem(objective=a.dense(), diag_mode=DIAG_FIXED, nonneg=True,
                      rowsum=float(k))


def build_sdp_censored(a: Graph) -> SdpProblem:
    """Parameter-free censored relaxation: maximize <A, Y>, diag = 1."""
    if a.alphabet != "pm1":
        raise DomainError("censored SDP needs a graph with alphabet pm1")
    c = a.dense()
    sigma = _spectral_signs(c, k=None, demean=False)
    return SdpProblem(objective=c, diag_mode=DIAG_FIXED,
                      warm=_kkt_seed(c, sigma, 0.0))


def build_sdp_general(a: Graph, sum_k: int, sum_k2: int) -> SdpProblem:
    """General-cluster relaxation with exact size sums.

    Constraints: diag <= 1, Z >= 0, <I, Z> = sum of sizes, <J, Z> = sum of
    squared sizes.
    """
    if not 0 < sum_k <= a.n:
        raise DomainError("need 0 < sum_k <= n")
    if not sum_k <= sum_k2 <= sum_k * sum_k:
        raise DomainError("need sum_k <= sum_k2 <= sum_k^2")
    return SdpProblem(objective=a.dense(), diag_mode=DIAG_ATMOST, nonneg=True,
                      trace=float(sum_k), j_inner=float(sum_k2))


def build_sdp_general_penalized(a: Graph, eta_star: float,
                                lambda_star: float) -> SdpProblem:
    """Size-free general relaxation: maximize <A - lam* J - eta* I, Z>."""
    if eta_star < 0 or lambda_star < 0:
        raise DomainError("penalties must be nonnegative")
    c = a.dense() - lambda_star
    np.fill_diagonal(c, np.diagonal(c) - eta_star)
    return SdpProblem(objective=c, diag_mode=DIAG_ATMOST, nonneg=True)


# ---------------------------------------------------------------------------
# The splitting iteration
# ---------------------------------------------------------------------------

def _initial_point(problem: SdpProblem, opts: SolveOptions) -> tuple[np.ndarray, np.ndarray]:
    n = problem.n
    if opts.warm_start and problem.warm is not None:
        z0, s0 = problem.warm
        t = opts.step if opts.step is not None else 1.0 / math.sqrt(n)
        return z0.copy(), t * s0
    if problem.j_inner is not None:
        z0 = np.full((n, n), problem.j_inner / (n * n))
    else:
        z0 = np.eye(n)
    if opts.restart:
        rng = np.random.default_rng(opts.seed)
        noise = rng.standard_normal((n, n)) * 1e-3
        z0 = z0 + (noise + noise.T) / 2
    return z0, np.zeros((n, n))


def solve(problem: SdpProblem, opts: SolveOptions = SolveOptions()) -> SolveResult:
    """Run the splitting to (approximate) optimality.

    Non-convergence is flagged in the result, not raised.  The returned X is
    the last PSD-projected iterate, so its smallest eigenvalue is never below
    the clipping error.
    """
    n = problem.n
    c = problem.objective
    t = opts.step if opts.step is not None else 1.0 / math.sqrt(n)
    alpha = opts.over_relax
    proj_k = constraint_projector(problem)

    z, u = _initial_point(problem, opts)
    x = z
    pr = dr = math.inf
    it = 0
    for it in range(1, opts.max_iter + 1):
        m = z - u
        m = (m + m.T) / 2
        x = psd_project(m)
        x_rel = alpha * x + (1.0 - alpha) * z
        z_old = z
        z = proj_k(x_rel + u + t * c)
        u = u + x_rel - z
        scale = max(1.0, np.linalg.norm(x), np.linalg.norm(z))
        pr = float(np.linalg.norm(x - z) / scale)
        dr = float(np.linalg.norm(z - z_old) / scale)
        if pr < opts.tol_primal and dr < opts.tol_dual:
            return SolveResult(X=x, objective=float(np.tensordot(c, x)),
                               primal_residual=pr, dual_residual=dr,
                               iters=it, converged=True)
    return SolveResult(X=x, objective=float(np.tensordot(c, x)),
                       primal_residual=pr, dual_residual=dr,
                       iters=it, converged=False)


# ---------------------------------------------------------------------------
# Rounding to integral partitions
# ---------------------------------------------------------------------------

def round_binary(x: np.ndarray, k: Optional[int] = None) -> Partition:
    """Round via the leading eigenvector.

    The eigenvector is sign-canonicalized so its largest-magnitude entry is
    positive (ties to the lowest index); with an unbalanced ``k`` the sign is
    instead chosen so the entry sum matches the sign of 2k - n, the sum the
    target sign vector must have.  With ``k`` given, the k largest entries
    form cluster 1 (ties to the lowest index); otherwise the sign of each
    entry decides.
    """
    x = np.asarray(x, dtype=np.float64)
    vec = _leading_unit_eigvec((x + x.T) / 2)
    n = vec.shape[0]
    if k is None:
        labels = np.where(vec > 0, 1, 2)
    else:
        if (2 * k - n) * vec.sum() < 0:
            vec = -vec
        labels = np.full(n, 2, dtype=np.int64)
        order = np.argsort(-vec, kind="stable")
        labels[order[:k]] = 1
    return Partition(labels=labels.astype(np.int64), r=2)


def round_multi(x: np.ndarray, r: int, k: int,
                sizes: Optional[list[int]] = None) -> Partition:
    """Greedy clique extraction from an entrywise-[0, 1]-ish matrix.

    Repeat r times: the unassigned vertex with the largest row sum over
    unassigned columns anchors a cluster, joined by the k-1 unassigned
    vertices with the largest affinity to it (all ties to the lowest index).
    Leftover vertices are labeled outliers.  ``sizes`` overrides the uniform
    cluster size for unequal-cluster instances.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    take = list(sizes) if sizes is not None else [k] * r
    if len(take) != r or sum(take) > n:
        raise DomainError("cluster sizes incompatible with r and n")
    labels = np.zeros(n, dtype=np.int64)
    free = np.ones(n, dtype=bool)
    for cluster in range(1, r + 1):
        row_mass = x[:, free].sum(axis=1)
        row_mass[~free] = -np.inf
        anchor = int(np.argmax(row_mass))
        aff = x[anchor].copy()
        aff[~free] = -np.inf
        aff[anchor] = np.inf
        members = np.argsort(-aff, kind="stable")[:take[cluster - 1]]
        labels[members] = cluster
        free[members] = False
    return Partition(labels=labels, r=r)
