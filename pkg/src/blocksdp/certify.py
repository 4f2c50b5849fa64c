"""Dual certificates proving a planted cluster matrix is the unique SDP optimum.

Each variant builds the dual objects whose induced slack matrix S* must

* annihilate the planted indicator vectors (exactly, by construction),
* be positive semidefinite with a strictly positive smallest eigenvalue on
  the orthogonal complement of those vectors,
* have strictly positive diagonal multipliers d*_i on inlier vertices
  (exactly zero on outliers), and
* for the variants carrying an entrywise multiplier B*, have B* >= 0 with
  strict positivity across distinct clusters.

``verify`` checks these conditions numerically and renders a verdict; it is
independent of the splitting solver, so agreement between the two is a real
consistency check rather than a tautology.

Slack matrix shapes per variant:

    binary:    S* = diag(d*) - A + lam * J,                 null {sigma*}
    censored:  S* = diag(d*) - A,                           null {sigma*}
    multi:     S* = diag(d*) - B* - A + lam 1^T + 1 lam^T,  null {xi*_1..r}
    general:   S* = diag(d*) - B* - A + eta* I + lam* J,    null {xi*_1..r}
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DomainError
from .models import Graph, Partition, OUTLIER

DEFAULT_TOL_EIG = 1e-8
_TOL_ZERO_D = 1e-9       # |d*_i| bound for outliers, exact zeros in theory
_TOL_OUTLIER_B = -1e-9   # B* entries touching outliers only need >= 0


@dataclass(frozen=True)
class Certificate:
    """Dual objects for one instance, plus the structure they certify."""

    variant: str
    Dstar: np.ndarray
    Bstar: Optional[np.ndarray]
    lam: Union[float, np.ndarray, None]
    eta_star: Optional[float]
    Sstar: np.ndarray
    null_basis: np.ndarray      # columns are the planted vectors S* annihilates
    labels: np.ndarray          # planted cluster labels, 0 = outlier
    adj: np.ndarray = field(repr=False, default=None)

    def reconstruction_error(self) -> float:
        """Frobenius distance between S* and its defining combination."""
        n = self.Dstar.shape[0]
        s = np.diag(self.Dstar) - self.adj
        if self.Bstar is not None:
            s = s - self.Bstar
        if self.variant in ("binary", "general"):
            s = s + float(self.lam) * np.ones((n, n))
        elif self.variant == "multi":
            lam = np.asarray(self.lam, dtype=np.float64)
            s = s + lam[:, None] + lam[None, :]
        if self.eta_star is not None:
            s = s + self.eta_star * np.eye(n)
        return float(np.linalg.norm(s - self.Sstar))


@dataclass(frozen=True)
class CertReport:
    """Numerical verdict on a certificate.

    ``restricted_min_eig`` is the smallest eigenvalue of P S* P restricted to
    the orthogonal complement of the null basis (P the complement projector).
    ``min_offblock_B`` is the minimum of B* over pairs in distinct real
    clusters, where the lemmas demand strict positivity; None when the
    variant carries no B*.
    """

    null_residual: float
    restricted_min_eig: float
    min_d: float
    min_offblock_B: Optional[float]
    valid: bool
    min_outlier_B: Optional[float] = None
    max_outlier_d: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "null_residual": self.null_residual,
            "restricted_min_eig": self.restricted_min_eig,
            "min_d": self.min_d,
            "min_offblock_B": self.min_offblock_B,
            "valid": self.valid,
            "min_outlier_B": self.min_outlier_B,
            "max_outlier_d": self.max_outlier_d,
        }


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def binary_certificate(a: Graph, truth: Partition, lam: float) -> Certificate:
    """Two-cluster certificate: d*_i = sum_j A_ij s_i s_j - lam (2K - n) s_i."""
    sigma = truth.signs()
    adj = a.dense()
    n = a.n
    k = int((truth.labels == 1).sum())
    d = (adj @ sigma) * sigma - lam * (2 * k - n) * sigma
    s = np.diag(d) - adj + lam * np.ones((n, n))
    return Certificate(variant="binary", Dstar=d, Bstar=None, lam=float(lam),
                       eta_star=None, Sstar=s, null_basis=sigma.reshape(-1, 1),
                       labels=truth.labels, adj=adj)


def censored_certificate(a: Graph, truth: Partition) -> Certificate:
    """Censored certificate: d*_i = sum_j A_ij s_i s_j, S* = diag(d*) - A."""
    if a.alphabet != "pm1":
        raise DomainError("censored certificate needs alphabet pm1")
    sigma = truth.signs()
    adj = a.dense()
    d = (adj @ sigma) * sigma
    s = np.diag(d) - adj
    return Certificate(variant="censored", Dstar=d, Bstar=None, lam=None,
                       eta_star=None, Sstar=s, null_basis=sigma.reshape(-1, 1),
                       labels=truth.labels, adj=adj)


def multi_certificate(a: Graph, truth: Partition, q_hat: float) -> Certificate:
    """Equal-size multi-cluster certificate.

    With K = n/r, e(i, C) the edge counts, s_i the own-cluster count, r_i the
    largest count into any other cluster, and sqrt(log n) the slack:

        alpha        = (K q_hat - sqrt(log n)) / 2
        u_{kk'}      = (e(C_k, C_k')/K - K q_hat + sqrt(log n)) / (2K)
        lam_i        = (r_i - alpha) / K
        d*_i         = s_i - r_i + 2 alpha - mean_{j in C_k(i)} r_j
        B*[i, j]     = (r_i - e(i, C_k(j)))/K + (r_j - e(j, C_k(i)))/K
                       + 2 u_{k(i) k(j)}   across distinct clusters,
                       zero inside blocks.
    """
    labels = truth.labels
    if (labels == OUTLIER).any():
        raise DomainError("multi certificate does not allow outliers")
    r = truth.r
    n = a.n
    sizes = truth.sizes()
    if len(set(sizes)) != 1 or sizes[0] * r != n:
        raise DomainError("multi certificate needs equal cluster sizes")
    big_k = sizes[0]
    adj = a.dense()
    xi = truth.indicators()
    counts = adj @ xi                      # counts[i, k] = e(i, C_{k+1})
    kk = labels - 1
    own = counts[np.arange(n), kk]
    others = counts.copy()
    others[np.arange(n), kk] = -np.inf
    r_i = others.max(axis=1)

    sqlog = math.sqrt(math.log(n))
    alpha = (big_k * q_hat - sqlog) / 2.0
    cluster_mean_r = np.array([r_i[labels == k].mean() for k in range(1, r + 1)])
    d = own - r_i + 2.0 * alpha - cluster_mean_r[kk]
    lam = (r_i - alpha) / big_k

    pair = xi.T @ counts                   # pair[k, k'] = e(C_{k+1}, C_{k'+1})
    u = (pair / big_k - big_k * q_hat + sqlog) / (2.0 * big_k)

    half = (r_i[:, None] - counts[:, kk]) / big_k   # (r_i - e(i, C_k(j))) / K
    b = half + half.T + 2.0 * u[kk[:, None], kk[None, :]]
    b[labels[:, None] == labels[None, :]] = 0.0

    s = np.diag(d) - b - adj + lam[:, None] + lam[None, :]
    return Certificate(variant="multi", Dstar=d, Bstar=b, lam=lam,
                       eta_star=None, Sstar=s, null_basis=xi, labels=labels,
                       adj=adj)


def general_certificate(a: Graph, truth: Partition, eta_star: float,
                        lambda_star: float) -> Certificate:
    """Certificate for unequal clusters plus outliers.

    d*_i = s_i - eta* - lam* K_k(i) on inliers, 0 on outliers.  B* blocks:

        inlier x inlier (k != k'): lam* - e(i,C_k')/K_k' - e(j,C_k)/K_k
                                   + e(C_k,C_k')/(K_k K_k')
        outlier i, inlier j in C_k': lam* - e(i,C_k')/K_k'   (and symmetric)
        zero inside clusters and between outliers.
    """
    labels = truth.labels
    n = a.n
    sizes = np.array(truth.sizes(), dtype=np.float64)
    if (sizes < 1).any():
        raise DomainError("every cluster must be nonempty")
    adj = a.dense()
    xi = truth.indicators()
    counts = adj @ xi
    inlier = labels != OUTLIER
    kk = np.maximum(labels - 1, 0)
    own = np.where(inlier, counts[np.arange(n), kk], 0.0)
    d = np.where(inlier, own - eta_star - lambda_star * sizes[kk], 0.0)

    frac = counts / sizes[None, :]         # frac[i, k] = e(i, C_{k+1}) / K_{k+1}
    pair_frac = (xi.T @ counts) / np.outer(sizes, sizes)

    row_in = inlier[:, None]
    col_in = inlier[None, :]
    b = np.full((n, n), lambda_star)
    b -= np.where(col_in, frac[:, kk], 0.0)        # e(i, C_k(j)) / K_k(j)
    b -= np.where(row_in, frac[:, kk].T, 0.0)      # e(j, C_k(i)) / K_k(i)
    b += np.where(row_in & col_in, pair_frac[kk[:, None], kk[None, :]], 0.0)
    same = (labels[:, None] == labels[None, :]) & row_in
    b[same] = 0.0
    b[~row_in & ~col_in] = 0.0
    np.fill_diagonal(b, 0.0)

    s = np.diag(d) - b - adj + eta_star * np.eye(n) + lambda_star * np.ones((n, n))
    return Certificate(variant="general", Dstar=d, Bstar=b,
                       lam=float(lambda_star), eta_star=float(eta_star),
                       Sstar=s, null_basis=xi, labels=labels, adj=adj)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

def _orthonormalize(basis: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt; drops numerically dependent columns."""
    cols = []
    for j in range(basis.shape[1]):
        v = basis[:, j].astype(np.float64).copy()
        for u in cols:
            v -= (u @ v) * u
        nrm = np.linalg.norm(v)
        if nrm > 1e-12:
            cols.append(v / nrm)
    return np.column_stack(cols)


def restricted_min_eigenvalue(s: np.ndarray, basis: np.ndarray) -> float:
    """Smallest eigenvalue of P S P on the complement of span(basis).

    P = I - Q Q^T from the orthonormalized basis; the deflated directions are
    shifted far above the spectrum so they cannot masquerade as the minimum.
    """
    q = _orthonormalize(basis)
    p = np.eye(s.shape[0]) - q @ q.T
    shift = float(np.linalg.norm(s)) + 1.0
    m = p @ s @ p + shift * (q @ q.T)
    return float(np.linalg.eigvalsh(m)[0])


def verify(cert: Certificate, tol_null: Optional[float] = None,
           tol_eig: float = DEFAULT_TOL_EIG) -> CertReport:
    """Check the certificate conditions; verdicts only, never raises.

    ``tol_null`` defaults to 1e-8 * n.  Validity requires the null residual
    within tolerance, the restricted smallest eigenvalue above ``tol_eig``,
    strictly positive inlier d*, vanishing outlier d*, and the variant's B*
    sign conditions.
    """
    n = cert.Sstar.shape[0]
    if tol_null is None:
        tol_null = 1e-8 * n
    null_residual = float(np.linalg.norm(cert.Sstar @ cert.null_basis, axis=0).max())
    rmin = restricted_min_eigenvalue(cert.Sstar, cert.null_basis)

    labels = cert.labels
    inlier = labels != OUTLIER
    min_d = float(cert.Dstar[inlier].min())
    max_outlier_d = None
    if (~inlier).any():
        max_outlier_d = float(np.abs(cert.Dstar[~inlier]).max())

    min_off = None
    min_outlier_b = None
    if cert.Bstar is not None:
        cross = (labels[:, None] != labels[None, :]) & inlier[:, None] & inlier[None, :]
        if cross.any():
            min_off = float(cert.Bstar[cross].min())
        one_out = inlier[:, None] ^ inlier[None, :]
        if one_out.any():
            min_outlier_b = float(cert.Bstar[one_out].min())

    valid = (null_residual <= tol_null and rmin > tol_eig and min_d > 0)
    if max_outlier_d is not None:
        valid = valid and max_outlier_d <= _TOL_ZERO_D
    if min_off is not None:
        valid = valid and min_off > 0
    if min_outlier_b is not None:
        valid = valid and min_outlier_b >= _TOL_OUTLIER_B
    return CertReport(null_residual=null_residual, restricted_min_eig=rmin,
                      min_d=min_d, min_offblock_B=min_off, valid=bool(valid),
                      min_outlier_B=min_outlier_b, max_outlier_d=max_outlier_d)


def default_eta_star(n: int, c: float = 3.0) -> float:
    """Model-free spectral-slack level C sqrt(log n) for the general variant."""
    return c * math.sqrt(math.log(n))
