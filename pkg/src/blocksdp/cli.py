"""Command-line front end.

Subcommands: gen, solve, certify, oracle, threshold, sweep, specnorm,
exponent.  Results print as JSON (or CSV for sweeps).  Exit code 0 on
completion; 2 when any solve carried a non-convergence flag.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import adaptive, certify, harness, models, oracle, solver, thresholds

EXIT_OK = 0
EXIT_NONCONVERGED = 2


def _load_spec(path: str) -> models.ModelSpec:
    with open(path) as fh:
        return models.ModelSpec.from_json(fh.read())


def _solve_options(args) -> solver.SolveOptions:
    return solver.SolveOptions(
        max_iter=args.max_iter, tol_primal=args.tol, tol_dual=args.tol,
        step=args.step, over_relax=args.over_relax, seed=args.solver_seed,
        warm_start=not args.no_warm_start)


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--over-relax", type=float, default=1.5)
    p.add_argument("--solver-seed", type=int, default=0)
    p.add_argument("--no-warm-start", action="store_true")


def cmd_gen(args) -> int:
    spec = _load_spec(args.spec)
    part, graph = models.generate(spec, args.seed, shuffle=args.shuffle)
    models.write_graph(graph, args.out_graph)
    models.write_partition(part, args.out_partition)
    print(json.dumps({"n": spec.n, "variant": spec.variant, "seed": args.seed,
                      "rng": models.RNG_ALGORITHM,
                      "edges": int(np.count_nonzero(np.triu(graph.entries, 1)))}))
    return EXIT_OK


def _build_problem_cli(args, graph: models.Graph) -> solver.SdpProblem:
    kind = args.sdp
    if kind == "binary":
        if args.k is None:
            raise SystemExit("--k is required for the binary SDP")
        return solver.build_sdp_binary(graph, args.k)
    if kind == "penalized":
        if args.lam == "auto":
            lam = adaptive.lambda_hat(adaptive.degree_profile(graph), graph.n)
        else:
            lam = float(args.lam)
        return solver.build_sdp_penalized(graph, lam)
    if kind == "multi":
        if args.k is None:
            raise SystemExit("--k is required for the multi SDP")
        return solver.build_sdp_multi(graph, args.k)
    if kind == "censored":
        return solver.build_sdp_censored(graph)
    if kind == "general":
        if args.sum_k is None or args.sum_k2 is None:
            raise SystemExit("--sum-k and --sum-k2 are required for the general SDP")
        return solver.build_sdp_general(graph, args.sum_k, args.sum_k2)
    if args.eta_star is None or args.lambda_star is None:
        raise SystemExit("--eta-star and --lambda-star are required for general-pen")
    return solver.build_sdp_general_penalized(graph, args.eta_star, args.lambda_star)


def cmd_solve(args) -> int:
    graph = models.read_graph(args.graph)
    problem = _build_problem_cli(args, graph)
    result = solver.solve(problem, _solve_options(args))
    if args.sdp in ("binary", "penalized", "censored"):
        part = solver.round_binary(result.X, args.k if args.sdp == "binary" else None)
    else:
        if args.r is None or args.k is None:
            raise SystemExit("--r and --k are required to round this SDP")
        part = solver.round_multi(result.X, args.r, args.k)
    if args.out_partition:
        models.write_partition(part, args.out_partition)
    payload = result.to_dict()
    if args.out_result:
        with open(args.out_result, "w") as fh:
            json.dump(payload, fh, indent=2)
    print(json.dumps(payload))
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


def cmd_certify(args) -> int:
    graph = models.read_graph(args.graph)
    truth = models.read_partition(args.partition)
    if args.variant == "binary":
        cert = certify.binary_certificate(graph, truth, args.lam or 0.0)
    elif args.variant == "censored":
        cert = certify.censored_certificate(graph, truth)
    elif args.variant == "multi":
        if args.q_hat is None:
            raise SystemExit("--q-hat is required for the multi certificate")
        cert = certify.multi_certificate(graph, truth, args.q_hat)
    else:
        eta_star = args.eta_star
        if eta_star is None:
            eta_star = certify.default_eta_star(graph.n)
        if args.lambda_star is None:
            raise SystemExit("--lambda-star is required for the general certificate")
        cert = certify.general_certificate(graph, truth, eta_star, args.lambda_star)
    report = certify.verify(cert)
    print(json.dumps(report.to_dict()))
    return EXIT_OK


def cmd_oracle(args) -> int:
    graph = models.read_graph(args.graph)
    if args.witness:
        truth = models.read_partition(args.partition)
        print(json.dumps(oracle.swap_witness(graph, truth).to_dict()))
        return EXIT_OK
    if args.ml == "binary":
        if args.k is None:
            raise SystemExit("--k is required for the binary oracle")
        res = oracle.ml_binary(graph, args.k)
    elif args.ml == "censored":
        res = oracle.ml_censored(graph)
    else:
        if args.r is None or args.k is None:
            raise SystemExit("--r and --k are required for the multi oracle")
        res = oracle.ml_multi(graph, args.r, args.k)
    print(json.dumps({"objective": res.objective, "unique": res.unique,
                      "ties": res.ties,
                      "labels": res.best.labels.tolist()}))
    return EXIT_OK


def cmd_threshold(args) -> int:
    if args.variant == "BinaryAsym":
        report = thresholds.binary_threshold(args.rho, args.a, args.b)
    elif args.variant == "MultiEqual":
        report = thresholds.multi_threshold(args.r, args.a, args.b)
    elif args.variant == "Censored":
        report = thresholds.censored_threshold_report(args.a, args.eps)
    else:
        raise SystemExit("threshold supports BinaryAsym, MultiEqual, Censored")
    print(json.dumps(report.to_dict()))
    return EXIT_OK


def _sweep_points(cfg: dict) -> list[harness.SweepPoint]:
    points = []
    for entry in cfg["points"]:
        entry = dict(entry)
        sdp = entry.pop("sdp")
        lam = entry.pop("lam", None)
        if "sizes" in entry:
            entry["sizes"] = tuple(entry["sizes"])
        points.append(harness.SweepPoint(spec=models.ModelSpec(**entry),
                                         sdp=sdp, lam=lam))
    return points


def cmd_sweep(args) -> int:
    with open(args.config) as fh:
        cfg = json.load(fh)
    config = harness.SweepConfig(
        points=tuple(_sweep_points(cfg)),
        trials=cfg.get("trials", 25),
        seed_base=cfg.get("seed_base", 0),
        success_criterion=cfg.get("success_criterion", "RoundedMatch"))
    summaries = harness.phase_sweep(config, csv_path=args.out)
    nonconverged = 0
    for s in summaries:
        nonconverged += sum(not rec.converged for rec in s.records)
        print(json.dumps({"variant": s.point.spec.variant,
                          "a": s.point.spec.a, "b": s.point.spec.b,
                          "margin": s.point.margin(), "rate": s.rate,
                          "wilson": [s.wilson_low, s.wilson_high]}))
    return EXIT_NONCONVERGED if nonconverged else EXIT_OK


def cmd_specnorm(args) -> int:
    spec = _load_spec(args.spec)
    stats = harness.spectral_norm_experiment(spec, args.trials, args.seed)
    print(json.dumps(stats.to_dict()))
    return EXIT_OK


def cmd_exponent(args) -> int:
    n_values = [int(tok) for tok in args.n.split(",")]
    exp = harness.exponent_experiment(args.rho1, args.rho2, args.a, args.b,
                                      args.alpha, n_values, args.trials,
                                      seed=args.seed)
    print(json.dumps(exp.to_dict()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="blocksdp")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a graph and planted partition")
    p.add_argument("--spec", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--shuffle", action="store_true")
    p.add_argument("--out-graph", required=True)
    p.add_argument("--out-partition", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve one of the SDP relaxations")
    p.add_argument("--sdp", required=True,
                   choices=["binary", "penalized", "multi", "censored",
                            "general", "general-pen"])
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--lambda", dest="lam", default="0.0",
                   help="penalty for the penalized SDP, or 'auto'")
    p.add_argument("--sum-k", type=int)
    p.add_argument("--sum-k2", type=int)
    p.add_argument("--eta-star", type=float)
    p.add_argument("--lambda-star", type=float)
    p.add_argument("--out-result")
    p.add_argument("--out-partition")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="build and verify a dual certificate")
    p.add_argument("--variant", required=True,
                   choices=["binary", "censored", "multi", "general"])
    p.add_argument("--graph", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--q-hat", type=float)
    p.add_argument("--eta-star", type=float)
    p.add_argument("--lambda-star", type=float)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("oracle", help="brute-force ML or a swap witness")
    p.add_argument("--ml", choices=["binary", "censored", "multi"])
    p.add_argument("--graph", required=True)
    p.add_argument("--partition")
    p.add_argument("--k", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--witness", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("threshold", help="closed-form threshold report")
    p.add_argument("--variant", required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--r", type=int)
    p.add_argument("--eps", type=float)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("sweep", help="phase-transition Monte Carlo sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("specnorm", help="spectral-norm concentration experiment")
    p.add_argument("--spec", required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_specnorm)

    p = sub.add_parser("exponent", help="binomial tail exponent regression")
    p.add_argument("--rho1", type=float, required=True)
    p.add_argument("--rho2", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n", required=True, help="comma-separated n values")
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_exponent)

    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
