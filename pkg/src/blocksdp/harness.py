"""Monte Carlo experiment driver: phase sweeps, certificate frequency,
spectral-norm measurements, exponent regressions, and CSV emission.

A trial is generate -> build SDP -> solve -> round -> match, with the dual
certificate built from the planted truth and verified alongside.  The
recovery verdict requires the solver to have converged, the rounded partition
to match the planted one, and the iterate to be entrywise within 0.1 of the
planted cluster matrix (a first-order method approaches but never attains the
exact matrix the theory speaks about).

Per-trial seeds are seed_base + point_index * 10**6 + trial_index, so every
point is reproducible in isolation.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from . import adaptive, certify, models, solver, thresholds
from .errors import DomainError
from .models import Graph, ModelSpec, Partition

MATRIX_RECOVERY_TOL = 0.1
SEED_POINT_STRIDE = 10 ** 6

CSV_COLUMNS = ("variant", "n", "a", "b", "rho", "r", "eps", "seed",
               "recovered", "cert_valid", "iters", "seconds", "margin",
               "converged")

# per-variant iteration controls chosen so the n = 300 acceptance sweeps
# finish inside their stated budgets while keeping the iterate well inside
# the 0.1 entrywise recovery tolerance
SWEEP_SOLVE_OPTIONS = {
    "binary": solver.SolveOptions(max_iter=2500, tol_primal=1e-5, tol_dual=1e-5),
    "penalized": solver.SolveOptions(max_iter=2500, tol_primal=1e-5, tol_dual=1e-5),
    "multi": solver.SolveOptions(max_iter=2500, tol_primal=1e-5, tol_dual=1e-5),
    "censored": solver.SolveOptions(max_iter=2500, tol_primal=2e-5, tol_dual=2e-5),
    "general": solver.SolveOptions(max_iter=2500, tol_primal=1e-5, tol_dual=1e-5),
    "general-pen": solver.SolveOptions(max_iter=2500, tol_primal=1e-5, tol_dual=1e-5),
}


@dataclass(frozen=True)
class SweepPoint:
    """One grid point of a sweep: the model plus the SDP used against it."""

    spec: ModelSpec
    sdp: str                      # binary | penalized | multi | censored | ...
    lam: Optional[float] = None   # penalized: explicit penalty; None = data-driven

    def margin(self) -> float:
        return theoretical_margin(self.spec)


@dataclass(frozen=True)
class SweepConfig:
    points: tuple[SweepPoint, ...]
    trials: int = 25
    seed_base: int = 0
    options: Optional[solver.SolveOptions] = None
    success_criterion: str = "RoundedMatch"   # or CertificateValid | Both

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trials must be positive")
        if not self.points:
            raise DomainError("the sweep grid is empty")
        if self.success_criterion not in ("RoundedMatch", "CertificateValid", "Both"):
            raise DomainError(f"unknown criterion {self.success_criterion!r}")


@dataclass
class TrialRecord:
    variant: str
    n: int
    a: Optional[float]
    b: Optional[float]
    rho: Optional[float]
    r: Optional[int]
    eps: Optional[float]
    seed: int
    recovered: bool
    cert_valid: bool
    iters: int
    seconds: float
    margin: float
    converged: bool

    def success(self, criterion: str) -> bool:
        if criterion == "RoundedMatch":
            return self.recovered
        if criterion == "CertificateValid":
            return self.cert_valid
        return self.recovered and self.cert_valid


def theoretical_margin(spec: ModelSpec) -> float:
    """Margin of the relevant threshold, recomputed from the model parameters."""
    if spec.variant == "BinaryAsym":
        return thresholds.binary_threshold(spec.rho, spec.a, spec.b).margin
    if spec.variant == "MultiEqual":
        return thresholds.multi_threshold(spec.r, spec.a, spec.b).margin
    if spec.variant == "Censored":
        return thresholds.censored_threshold_report(spec.a, spec.epsilon).margin
    rhos = [k / spec.n for k in spec.sizes]
    psi = thresholds.solve_psi(spec.a, spec.b)
    report = thresholds.general_recovery_check(spec.a, spec.b, rhos, psi, psi)
    margins = [m for m, act in zip((report.con1, report.con2, report.con3,
                                    report.con4), report.active)
               if act and m is not None]
    return min(margins)


def _build_problem(point: SweepPoint, graph: Graph,
                   truth: Partition) -> solver.SdpProblem:
    spec = point.spec
    if point.sdp == "binary":
        k = int((truth.labels == 1).sum())
        return solver.build_sdp_binary(graph, k)
    if point.sdp == "penalized":
        lam = point.lam
        if lam is None:
            lam = adaptive.lambda_hat(adaptive.degree_profile(graph), spec.n)
        return solver.build_sdp_penalized(graph, lam)
    if point.sdp == "multi":
        return solver.build_sdp_multi(graph, spec.n // spec.r)
    if point.sdp == "censored":
        return solver.build_sdp_censored(graph)
    sizes = truth.sizes()
    if point.sdp == "general":
        return solver.build_sdp_general(graph, sum(sizes),
                                        sum(k * k for k in sizes))
    if point.sdp == "general-pen":
        eta_star = certify.default_eta_star(spec.n)
        psi = thresholds.solve_psi(spec.a, spec.b)
        lam_star = (spec.b + 2 * psi) * math.log(spec.n) / spec.n
        return solver.build_sdp_general_penalized(graph, eta_star, lam_star)
    raise DomainError(f"unknown sdp kind {point.sdp!r}")


def _build_certificate(point: SweepPoint, graph: Graph, truth: Partition,
                       problem: solver.SdpProblem) -> certify.Certificate:
    spec = point.spec
    logn = math.log(spec.n)
    if point.sdp == "binary":
        return certify.binary_certificate(
            graph, truth, thresholds.tau(spec.a, spec.b) * logn / spec.n)
    if point.sdp == "penalized":
        # the certificate multiplier must match the penalty in the objective
        lam = float(graph.dense()[0, 0] - problem.objective[0, 0])
        return certify.binary_certificate(graph, truth, lam)
    if point.sdp == "multi":
        return certify.multi_certificate(graph, truth, spec.q)
    if point.sdp == "censored":
        return certify.censored_certificate(graph, truth)
    psi = thresholds.solve_psi(spec.a, spec.b)
    lam_star = (spec.b + 2 * psi) * logn / spec.n
    if point.sdp == "general-pen":
        # the certificate must reuse the penalties that sit in the objective
        eta_star = certify.default_eta_star(spec.n)
    else:
        expected = expected_adjacency(spec, truth)
        eta_star = float(np.linalg.norm(graph.dense() - expected, ord=2))
    return certify.general_certificate(graph, truth, eta_star, lam_star)


def _round(point: SweepPoint, result: solver.SolveResult,
           truth: Partition) -> Partition:
    if point.sdp in ("binary", "penalized", "censored"):
        k = int((truth.labels == 1).sum()) if point.sdp == "binary" else None
        return solver.round_binary(result.X, k)
    sizes = truth.sizes()
    return solver.round_multi(result.X, truth.r, max(sizes), sizes=sizes)


def planted_matrix(point: SweepPoint, truth: Partition) -> np.ndarray:
    if point.sdp in ("binary", "penalized", "censored"):
        return models.partition_to_matrix(truth, "Ybinary").values
    return models.partition_to_matrix(truth, "Zmulti").values


def run_trial(point: SweepPoint, seed: int,
              options: Optional[solver.SolveOptions] = None) -> TrialRecord:
    """One generate/solve/round/certify cycle; never raises on non-convergence."""
    spec = point.spec
    if options is None:
        options = SWEEP_SOLVE_OPTIONS[point.sdp]
    start = time.perf_counter()
    truth, graph = models.generate(spec, seed)
    problem = _build_problem(point, graph, truth)
    result = solver.solve(problem, options)
    rounded = _round(point, result, truth)
    target = planted_matrix(point, truth)
    close = bool(np.abs(result.X - target).max() <= MATRIX_RECOVERY_TOL)
    recovered = bool(result.converged and close
                     and models.exact_match(rounded, truth))
    cert = _build_certificate(point, graph, truth, problem)
    report = certify.verify(cert)
    seconds = time.perf_counter() - start
    return TrialRecord(variant=spec.variant, n=spec.n, a=spec.a, b=spec.b,
                       rho=spec.rho, r=spec.r, eps=spec.epsilon, seed=seed,
                       recovered=recovered, cert_valid=report.valid,
                       iters=result.iters, seconds=seconds,
                       margin=point.margin(), converged=result.converged)


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson 95% score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    phat = successes / trials
    denom = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class PointSummary:
    point: SweepPoint
    successes: int
    trials: int
    rate: float
    wilson_low: float
    wilson_high: float
    records: list[TrialRecord]


def phase_sweep(config: SweepConfig, csv_path=None) -> list[PointSummary]:
    """Run every grid point; flush records to CSV as they complete."""
    sink = open(csv_path, "w", newline="") if csv_path else None
    writer = None
    if sink is not None:
        writer = csv.writer(sink)
        writer.writerow(CSV_COLUMNS)
        sink.flush()
    summaries = []
    try:
        for pi, point in enumerate(config.points):
            records = []
            wins = 0
            for ti in range(config.trials):
                seed = config.seed_base + pi * SEED_POINT_STRIDE + ti
                rec = run_trial(point, seed, config.options)
                records.append(rec)
                wins += rec.success(config.success_criterion)
                if writer is not None:
                    writer.writerow(_record_row(rec))
                    sink.flush()
            low, high = wilson_interval(wins, config.trials)
            summaries.append(PointSummary(point=point, successes=wins,
                                          trials=config.trials,
                                          rate=wins / config.trials,
                                          wilson_low=low, wilson_high=high,
                                          records=records))
    finally:
        if sink is not None:
            sink.close()
    return summaries


def _record_row(rec: TrialRecord) -> list[str]:
    row = []
    for col in CSV_COLUMNS:
        v = getattr(rec, col)
        if v is None:
            row.append("")
        elif isinstance(v, bool):
            row.append("1" if v else "0")
        elif isinstance(v, float):
            row.append(repr(v))
        else:
            row.append(str(v))
    return row


def emit_csv(records: Sequence[TrialRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow(_record_row(rec))
    return buf.getvalue()


def parse_csv(text: str) -> list[TrialRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise DomainError("unexpected CSV header")
    records = []
    for row in reader:
        if not row:
            continue
        vals = dict(zip(CSV_COLUMNS, row))
        records.append(TrialRecord(
            variant=vals["variant"],
            n=int(vals["n"]),
            a=float(vals["a"]) if vals["a"] else None,
            b=float(vals["b"]) if vals["b"] else None,
            rho=float(vals["rho"]) if vals["rho"] else None,
            r=int(vals["r"]) if vals["r"] else None,
            eps=float(vals["eps"]) if vals["eps"] else None,
            seed=int(vals["seed"]),
            recovered=vals["recovered"] == "1",
            cert_valid=vals["cert_valid"] == "1",
            iters=int(vals["iters"]),
            seconds=float(vals["seconds"]),
            margin=float(vals["margin"]),
            converged=vals["converged"] == "1",
        ))
    return records


# ---------------------------------------------------------------------------
# Expected adjacency and the spectral-norm experiment
# ---------------------------------------------------------------------------

def expected_adjacency(spec: ModelSpec, truth: Partition) -> np.ndarray:
    """E[A] given the planted partition (zero diagonal)."""
    labels = truth.labels
    if spec.variant == "Censored":
        sigma = truth.signs()
        ea = spec.p * (1 - 2 * spec.epsilon) * np.outer(sigma, sigma)
    else:
        same = (labels[:, None] == labels[None, :]) & (labels[:, None] != models.OUTLIER)
        ea = np.where(same, spec.p, spec.q)
    ea = ea.astype(np.float64)
    np.fill_diagonal(ea, 0.0)
    return ea


@dataclass(frozen=True)
class SpectralNormStats:
    normalized: tuple[float, ...]
    mean: float
    max: float
    p95: float

    def to_dict(self) -> dict:
        return {"mean": self.mean, "max": self.max, "p95": self.p95,
                "normalized": list(self.normalized)}


def spectral_norm_experiment(spec: ModelSpec, trials: int,
                             seed_base: int = 0) -> SpectralNormStats:
    """Distribution of ||A - E[A]|| / sqrt(n p) over seeded trials."""
    scale = math.sqrt(spec.n * spec.p)
    vals = []
    for t in range(trials):
        truth, graph = models.generate(spec, seed_base + t)
        dev = graph.dense() - expected_adjacency(spec, truth)
        vals.append(float(np.linalg.norm(dev, ord=2)) / scale)
    arr = np.array(vals)
    return SpectralNormStats(normalized=tuple(vals), mean=float(arr.mean()),
                             max=float(arr.max()),
                             p95=float(np.quantile(arr, 0.95)))


# ---------------------------------------------------------------------------
# Exponent experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentExperiment:
    """Regression of -log P{X - R <= alpha log n} against log n."""

    n_values: tuple[int, ...]
    tail_probs: tuple[float, ...]
    censored_points: tuple[int, ...]   # n values with zero empirical hits
    slope: Optional[float]
    intercept: Optional[float]
    analytic_g: float

    def to_dict(self) -> dict:
        return {"n_values": list(self.n_values),
                "tail_probs": list(self.tail_probs),
                "censored_points": list(self.censored_points),
                "slope": self.slope, "intercept": self.intercept,
                "analytic_g": self.analytic_g}


def exponent_experiment(rho1: float, rho2: float, a: float, b: float,
                        alpha: float, n_values: Sequence[int], trials: int,
                        seed: int = 0) -> ExponentExperiment:
    """Monte Carlo estimate of the binomial-difference tail exponent.

    Samples X ~ Binom(round(rho1 n), a log n / n) minus an independent
    R ~ Binom(round(rho2 n), b log n / n) and counts the event
    X - R <= alpha log n.  Points with zero hits are excluded from the
    regression and reported as censored.
    """
    g = thresholds.chernoff_exponent_g(rho1, rho2, a, b, alpha)
    rng = models._rng(seed)
    probs = []
    censored = []
    xs, ys = [], []
    for n in n_values:
        logn = math.log(n)
        m1, m2 = round(rho1 * n), round(rho2 * n)
        x = rng.binomial(m1, a * logn / n, size=trials) if m1 > 0 else np.zeros(trials)
        r = rng.binomial(m2, b * logn / n, size=trials) if m2 > 0 else np.zeros(trials)
        hits = int(((x - r) <= alpha * logn).sum())
        p = hits / trials
        probs.append(p)
        if hits == 0:
            censored.append(n)
        else:
            xs.append(logn)
            ys.append(-math.log(p))
    slope = intercept = None
    if len(xs) >= 2:
        slope, intercept = np.polyfit(np.array(xs), np.array(ys), 1)
        slope, intercept = float(slope), float(intercept)
    return ExponentExperiment(n_values=tuple(int(n) for n in n_values),
                              tail_probs=tuple(probs),
                              censored_points=tuple(censored),
                              slope=slope, intercept=intercept, analytic_g=g)
