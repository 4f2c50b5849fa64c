import math

import numpy as np
import pytest

from blocksdp import models, solver
from blocksdp.errors import DomainError
from blocksdp.models import Graph, ModelSpec, Partition, generate, partition_to_matrix
from blocksdp.solver import (SdpProblem, SolveOptions, build_sdp_binary,
                             build_sdp_censored, build_sdp_general,
                             build_sdp_general_penalized, build_sdp_multi,
                             build_sdp_penalized, constraint_projector,
                             psd_project, round_binary, round_multi, solve)


def graph_from_dense(m, alphabet="01"):
    return Graph(entries=np.asarray(m, dtype=np.int8), alphabet=alphabet)


def two_triangles():
    blk = np.ones((3, 3)) - np.eye(3)
    a = np.zeros((6, 6))
    a[:3, :3] = blk
    a[3:, 3:] = blk
    return graph_from_dense(a)


class TestBuilders:
    def test_binary_j_inner_values(self):
        g = two_triangles()
        assert build_sdp_binary(g, 3).j_inner == 0.0          # balanced
        assert build_sdp_binary(g, 6).j_inner == 36.0          # single cluster
        g10 = graph_from_dense(np.zeros((10, 10)))
        assert build_sdp_binary(g10, 3).j_inner == 16.0        # (2*3-10)^2

    def test_penalized_objective(self):
        g = two_triangles()
        prob = build_sdp_penalized(g, 0.25)
        assert np.allclose(prob.objective, g.dense() - 0.25)
        assert np.allclose(prob.objective, prob.objective.T)
        assert prob.j_inner is None

    def test_multi_fields(self):
        prob = build_sdp_multi(two_triangles(), 3)
        assert prob.nonneg and prob.rowsum == 3.0 and prob.diag_mode == "FixedOne"

    def test_censored_rejects_plain_alphabet(self):
        with pytest.raises(DomainError):
            build_sdp_censored(two_triangles())

    def test_general_fields_and_validation(self):
        g = two_triangles()
        prob = build_sdp_general(g, 6, 18)
        assert prob.trace == 6.0 and prob.j_inner == 18.0
        assert prob.diag_mode == "AtMostOne" and prob.nonneg
        with pytest.raises(DomainError):
            build_sdp_general(g, 0, 0)
        with pytest.raises(DomainError):
            build_sdp_general(g, 4, 17)   # 17 > 16

    def test_sum_of_squares_for_sizes(self):
        assert sum(k * k for k in (5, 3)) == 34

    def test_planted_matrix_feasible_for_general(self):
        part = Partition(labels=np.array([1, 1, 1, 2, 2, 0]), r=2)
        z = partition_to_matrix(part, "Zmulti").values
        sizes = part.sizes()
        prob = build_sdp_general(graph_from_dense(np.zeros((6, 6))),
                                 sum(sizes), sum(k * k for k in sizes))
        assert np.trace(z) == prob.trace
        assert z.sum() == prob.j_inner
        assert z.min() >= 0 and np.diagonal(z).max() <= 1
        assert np.linalg.eigvalsh(z).min() >= -1e-12


class TestProjections:
    def test_psd_projection_clips_exactly(self):
        rng = np.random.default_rng(0)
        for n in (5, 20, 40):
            m = rng.standard_normal((n, n))
            m = (m + m.T) / 2
            x = psd_project(m)
            assert np.linalg.eigvalsh(x).min() >= -1e-12

    @pytest.mark.parametrize("problem", [
        SdpProblem(objective=np.zeros((8, 8)), diag_mode="FixedOne"),
        SdpProblem(objective=np.zeros((8, 8)), diag_mode="FixedOne", j_inner=4.0),
        SdpProblem(objective=np.zeros((8, 8)), diag_mode="FixedOne", rowsum=3.0),
        SdpProblem(objective=np.zeros((8, 8)), diag_mode="AtMostOne", nonneg=True),
    ])
    def test_projection_idempotent(self, problem):
        rng = np.random.default_rng(3)
        proj = constraint_projector(problem)
        v = rng.standard_normal((8, 8))
        v = (v + v.T) / 2
        once = proj(v)
        twice = proj(once)
        assert np.abs(twice - once).max() <= 1e-12

    def test_affine_projection_hits_constraints(self):
        rng = np.random.default_rng(4)
        v = rng.standard_normal((9, 9))
        v = (v + v.T) / 2
        prob = SdpProblem(objective=np.zeros((9, 9)), diag_mode="FixedOne",
                          j_inner=25.0)
        x = constraint_projector(prob)(v)
        assert np.allclose(np.diagonal(x), 1.0)
        assert x.sum() == pytest.approx(25.0, abs=1e-9)

        prob = SdpProblem(objective=np.zeros((9, 9)), diag_mode="FixedOne",
                          rowsum=4.0)
        x = constraint_projector(prob)(v)
        assert np.allclose(np.diagonal(x), 1.0)
        assert np.allclose(x.sum(axis=1), 4.0)

        prob = SdpProblem(objective=np.zeros((9, 9)), diag_mode="AtMostOne",
                          nonneg=True, trace=5.0, j_inner=13.0)
        x = constraint_projector(prob)(v)
        # Dykstra ends each sweep on the affine projection: equalities exact,
        # the box side approximate within the inner increment floor
        assert np.trace(x) == pytest.approx(5.0, abs=1e-9)
        assert x.sum() == pytest.approx(13.0, abs=1e-9)
        assert x.min() >= -1e-4

    def test_dykstra_matches_direct_projection(self):
        # {diag = 1} /\ {X >= 0} has an obvious projection for this input
        rng = np.random.default_rng(5)
        v = rng.standard_normal((6, 6))
        v = (v + v.T) / 2
        prob = SdpProblem(objective=np.zeros((6, 6)), diag_mode="FixedOne",
                          nonneg=True)
        x = constraint_projector(prob)(v)
        direct = np.maximum(v, 0.0)
        np.fill_diagonal(direct, 1.0)
        assert np.abs(x - direct).max() <= 1e-9


class TestSolve:
    def test_two_triangles_recovers_planted_matrix(self):
        g = two_triangles()
        truth = Partition(labels=np.array([1, 1, 1, 2, 2, 2]), r=2)
        ystar = partition_to_matrix(truth, "Ybinary").values
        for warm in (True, False):
            res = solve(build_sdp_binary(g, 3),
                        SolveOptions(max_iter=5000, warm_start=warm))
            assert res.converged
            assert np.abs(res.X - ystar).max() <= 1e-4

    def test_noiseless_censored_recovers_signs(self):
        spec = ModelSpec(n=10, variant="Censored", a=1.0, epsilon=0.0, p_exact=1.0)
        truth, g = generate(spec, seed=0)
        ystar = partition_to_matrix(truth, "Ybinary").values
        res = solve(build_sdp_censored(g))
        assert res.converged
        assert np.abs(res.X - ystar).max() <= 1e-4

    def test_zero_penalty_single_clique_gives_all_ones(self):
        n = 6
        g = graph_from_dense(np.ones((n, n)) - np.eye(n))
        res = solve(build_sdp_penalized(g, 0.0))
        assert res.converged
        assert np.abs(res.X - np.ones((n, n))).max() <= 1e-4

    def test_objective_dominates_planted_when_converged(self):
        spec = ModelSpec(n=60, variant="BinaryAsym", a=8.0, b=1.0, rho=0.5)
        truth, g = generate(spec, seed=3)
        prob = build_sdp_binary(g, 30)
        res = solve(prob)
        assert res.converged
        planted = partition_to_matrix(truth, "Ybinary").values
        floor = float(np.tensordot(prob.objective, planted))
        assert res.objective >= floor - 1e-3 * np.linalg.norm(prob.objective)

    def test_result_feasibility_and_psd(self):
        spec = ModelSpec(n=48, variant="MultiEqual", a=9.0, b=1.0, r=3)
        truth, g = generate(spec, seed=1)
        opts = SolveOptions(max_iter=4000, tol_primal=1e-6, tol_dual=1e-6)
        res = solve(build_sdp_multi(g, 16), opts)
        assert res.converged
        assert np.linalg.eigvalsh(res.X).min() >= -10 * opts.tol_primal
        assert np.abs(np.diagonal(res.X) - 1).max() <= 10 * opts.tol_primal * 48
        assert res.X.min() >= -10 * opts.tol_primal * 48

    def test_nonconvergence_is_flagged_not_raised(self):
        g = two_triangles()
        res = solve(build_sdp_binary(g, 3),
                    SolveOptions(max_iter=2, tol_primal=1e-14, tol_dual=1e-14,
                                 warm_start=False))
        assert not res.converged and res.iters == 2

    def test_deterministic(self):
        spec = ModelSpec(n=40, variant="BinaryAsym", a=6.0, b=1.0, rho=0.5)
        _, g = generate(spec, seed=9)
        r1 = solve(build_sdp_binary(g, 20))
        r2 = solve(build_sdp_binary(g, 20))
        assert np.array_equal(r1.X, r2.X) and r1.iters == r2.iters


class TestAgainstConvexSolver:
    """Independent optimum values from cvxpy on small instances."""

    def cvx_optimum(self, prob):
        import cvxpy as cp
        n = prob.n
        x = cp.Variable((n, n), symmetric=True)
        cons = [x >> 0]
        if prob.diag_mode == "FixedOne":
            cons.append(cp.diag(x) == 1)
        else:
            cons.append(cp.diag(x) <= 1)
        if prob.nonneg:
            cons.append(x >= 0)
        if prob.j_inner is not None:
            cons.append(cp.sum(x) == prob.j_inner)
        if prob.rowsum is not None:
            cons.append(cp.sum(x, axis=1) == prob.rowsum)
        if prob.trace is not None:
            cons.append(cp.trace(x) == prob.trace)
        task = cp.Problem(cp.Maximize(cp.sum(cp.multiply(prob.objective, x))), cons)
        task.solve(solver=cp.SCS, eps=1e-8)
        return task.value

    @pytest.mark.parametrize("kind", ["binary", "penalized", "censored", "multi",
                                      "general"])
    def test_objective_matches_cvxpy(self, kind):
        if kind == "censored":
            spec = ModelSpec(n=14, variant="Censored", a=3.0, epsilon=0.15)
        elif kind == "multi":
            spec = ModelSpec(n=12, variant="MultiEqual", a=4.0, b=0.5, r=3)
        else:
            spec = ModelSpec(n=14, variant="BinaryAsym", a=4.0, b=0.8, rho=0.5)
        truth, g = generate(spec, seed=2)
        if kind == "binary":
            prob = build_sdp_binary(g, 7)
        elif kind == "penalized":
            prob = build_sdp_penalized(g, 0.3)
        elif kind == "censored":
            prob = build_sdp_censored(g)
        elif kind == "multi":
            prob = build_sdp_multi(g, 4)
        else:
            prob = build_sdp_general(g, 10, 52)
        tol = 1e-7 if kind in ("multi", "general") else 1e-9
        res = solve(prob, SolveOptions(max_iter=20000, tol_primal=tol,
                                       tol_dual=tol))
        assert res.converged
        assert res.objective == pytest.approx(self.cvx_optimum(prob),
                                              abs=2e-4, rel=1e-4)


class TestRounding:
    def test_rank_one_exact(self):
        sigma = np.array([1.0, 1, -1, 1, -1])
        part = round_binary(np.outer(sigma, sigma))
        truth = Partition(labels=np.where(sigma > 0, 1, 2), r=2)
        assert models.exact_match(part, truth)

    def test_all_ones_is_single_cluster(self):
        part = round_binary(np.ones((5, 5)))
        assert len(set(part.labels.tolist())) == 1

    def test_perturbed_rank_one_still_recovers(self):
        rng = np.random.default_rng(8)
        sigma = np.sign(rng.standard_normal(30)) + 0.0
        sigma[sigma == 0] = 1.0
        noise = rng.standard_normal((30, 30))
        x = np.outer(sigma, sigma) + 0.01 * (noise + noise.T)
        part = round_binary(x, k=int((sigma > 0).sum()))
        truth = Partition(labels=np.where(sigma > 0, 1, 2).astype(np.int64), r=2)
        assert models.exact_match(part, truth)

    def test_round_multi_exact_and_damaged(self):
        truth = Partition(labels=np.repeat([1, 2, 3], 4), r=3)
        z = partition_to_matrix(truth, "Zmulti").values
        assert models.exact_match(round_multi(z, 3, 4), truth)
        damaged = z.copy()
        damaged[0, 1] = damaged[1, 0] = 0.0
        assert models.exact_match(round_multi(damaged, 3, 4), truth)

    def test_round_multi_labels_leftovers_outliers(self):
        truth = Partition(labels=np.array([1, 1, 2, 2, 0, 0]), r=2)
        z = partition_to_matrix(truth, "Zmulti").values
        part = round_multi(z, 2, 2)
        assert (part.labels == 0).sum() == 2
        assert models.exact_match(part, truth)
