"""Command-line interface.

Subcommands: simulate, loglik, reconstruct, estimate, pipeline,
experiment, export, replay.  Exit codes: 0 success, 1 usage error,
2 data validation error, 3 runtime failure.

All randomness flows from --rng-seed; when the flag is omitted a seed is
drawn from entropy and recorded in the output manifest, which suffices to
re-run the job byte-identically on the same build.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import io
from .annealer import CoolingSchedule, anneal
from .graph import DataValidationError, check_compatible, validate_adjacency
from .likelihood import (build_workspace, log_likelihood_direct,
                         log_likelihood_matrix, make_prior)
from .param_est import estimate_theta
from .pipeline import (ExperimentSettings, RenderConfig,
                       experiment_gamma_sweep, experiment_misspecification,
                       experiment_shape_bias, render, tpr_fpr)
from .simulate import SimConfig, generate_population, heavy_tailed_population, simulate
from .waiting_time import FAMILIES, make_model

__all__ = ["main"]

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_dist_args(p):
    p.add_argument("--dist", "--family", dest="dist", required=True,
                   choices=sorted(FAMILIES))
    p.add_argument("--rate", type=float, help="exponential rate")
    p.add_argument("--shape", type=float, help="gamma/power-law shape")
    p.add_argument("--scale", type=float, help="gamma scale")
    p.add_argument("--xmin", type=float, help="power-law lower bound")


def _model_from_args(ns):
    if ns.dist == "exponential":
        if ns.rate is None:
            raise DataValidationError("exponential requires --rate")
        return make_model("exponential", rate=ns.rate)
    if ns.dist == "gamma":
        if ns.shape is None or ns.scale is None:
            raise DataValidationError("gamma requires --shape and --scale")
        return make_model("gamma", shape=ns.shape, scale=ns.scale)
    if ns.shape is None or ns.xmin is None:
        raise DataValidationError("power_law requires --shape and --xmin")
    return make_model("power_law", shape=ns.shape, x_min=ns.xmin)


def _read_adjacency(path, n):
    a = np.zeros((n, n), dtype=np.int8)
    for u, v in io.read_edge_list(path):
        i, j = int(u) - 1, int(v) - 1
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise DataValidationError(f"{path}: edge ({u}, {v}) out of range")
        a[i, j] = a[j, i] = 1
    return validate_adjacency(a)


def _adjacency_edges(a):
    return [(int(i) + 1, int(j) + 1) for i, j in np.argwhere(np.triu(a, k=1))]


def _resolve_seed(ns, argv):
    if ns.rng_seed is None:
        seed = secrets.randbits(32)
        argv = list(argv) + ["--rng-seed", str(seed)]
        return seed, argv
    return ns.rng_seed, list(argv)


def _outdir(ns):
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands


def _cmd_simulate(ns, argv):
    seed, argv = _resolve_seed(ns, argv)
    started = datetime.now(timezone.utc).isoformat()
    if ns.graph:
        raw = io.read_edge_list(ns.graph)
        import networkx as nx
        g = nx.Graph()
        g.add_edges_from((int(u), int(v)) for u, v in raw)
        inputs = [ns.graph]
    else:
        g = heavy_tailed_population(ns.pop_size, ns.mean_degree, rng_seed=seed)
        inputs = []
    model = _model_from_args(ns)
    rng = np.random.default_rng(seed)
    nodes = sorted(g.nodes())
    seed_vertices = [nodes[int(i)] for i in
                     rng.choice(len(nodes), size=ns.seeds, replace=False)]
    config = SimConfig(population_graph=g,
                       seed_vertices=tuple((v, 0.0) for v in sorted(seed_vertices)),
                       coupons_per_subject=ns.coupons,
                       target_sample_size=ns.n,
                       model=model,
                       rng_seed=seed,
                       max_time=ns.max_time)
    result = simulate(config)
    out = _outdir(ns)
    io.dump_study(result.observed, out / "observed.json")
    io.write_edge_list(out / "true_edges.tsv", _adjacency_edges(result.true_subgraph))
    io.write_event_log(out / "events.csv", result.event_log)
    io.write_manifest(out / "manifest.json", "simulate", {"argv": argv},
                      seed, inputs, started=started)
    if result.truncated:
        print("warning: target sample size not reached (queue exhausted "
              "or max time hit)", file=sys.stderr)
    return EXIT_OK


def _cmd_loglik(ns, argv):
    study = io.load_study(ns.study)
    a = _read_adjacency(ns.edges, study.n)
    report = check_compatible(a, study)
    if not report.is_compatible:
        raise DataValidationError(f"candidate matrix incompatible: {report}")
    model = _model_from_args(ns)
    direct = log_likelihood_direct(a, study, model)
    ws = build_workspace(study, model)
    matrix = log_likelihood_matrix(a, study, ws)
    print(f"direct {direct!r}")
    print(f"matrix {matrix!r}")
    return EXIT_OK


def _cmd_reconstruct(ns, argv):
    seed, argv = _resolve_seed(ns, argv)
    started = datetime.now(timezone.utc).isoformat()
    study = io.load_study(ns.study)
    model = _model_from_args(ns)
    if ns.init == "recruitment":
        a_init = study.recruitment_adjacency()
        inputs = [ns.study]
    else:
        a_init = _read_adjacency(ns.init[len("file:"):], study.n)
        inputs = [ns.study, ns.init[len("file:"):]]
    ws = build_workspace(study, model)
    prior = make_prior(ns.prior)
    schedule = None
    if ns.gamma0 is not None:
        schedule = CoolingSchedule(gamma0=ns.gamma0, rate=ns.cool_rate)
    rng = np.random.default_rng(seed)
    results = [anneal(study, ws, prior, schedule, a_init, ns.iters,
                      rng if ns.chains == 1 else rng.spawn(1)[0])
               for _ in range(ns.chains)]
    best = max(results, key=lambda r: r.best_logpost)
    out = _outdir(ns)
    with open(out / "estimate.json", "w") as fh:
        json.dump({
            "edges": _adjacency_edges(best.best_a),
            "logpost": best.best_logpost,
            "final_edges": _adjacency_edges(best.final_a),
            "final_logpost": best.final_logpost,
            "accept_rate": best.accept_rate,
            "theta": model.to_dict(),
            "stuck": best.stuck,
        }, fh, indent=1)
        fh.write("\n")
    trace_path = out / (ns.trace_out or "trace.csv")
    io.write_csv_rows(trace_path,
                      [{"iter": it, "gamma": repr(g), "logpost": repr(lp),
                        "accepted": int(acc)}
                       for it, g, lp, acc in best.trace] or
                      [{"iter": 0, "gamma": "", "logpost": "", "accepted": ""}],
                      columns=["iter", "gamma", "logpost", "accepted"])
    io.write_manifest(out / "manifest.json", "reconstruct", {"argv": argv},
                      seed, inputs, started=started)
    return EXIT_OK


def _cmd_estimate(ns, argv):
    study = io.load_study(ns.study)
    a = _read_adjacency(ns.edges, study.n)
    theta_hat, logpost, report = estimate_theta(a, study, ns.family,
                                                tuple(ns.theta0))
    payload = {
        "theta": {"family": ns.family,
                  **dict(zip(FAMILIES[ns.family].theta_names,
                             map(float, theta_hat)))},
        "logpost": logpost,
        "converged": report.converged,
        "n_evaluations": report.n_evaluations,
        "message": report.message,
    }
    text = json.dumps(payload, indent=1) + "\n"
    if ns.out:
        out = _outdir(ns)
        (out / "theta.json").write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_pipeline(ns, argv):
    seed, argv = _resolve_seed(ns, argv)
    started = datetime.now(timezone.utc).isoformat()
    study = io.load_study(ns.study)
    config = RenderConfig(family=ns.family, theta0=tuple(ns.theta0),
                          iota_max=ns.outer, anneal_iters=ns.iters,
                          prior=ns.prior, chains=ns.chains,
                          cold_start=ns.cold_start)
    result = render(study, config, rng=np.random.default_rng(seed))
    out = _outdir(ns)
    inputs = [ns.study]
    with open(out / "results.json", "w") as fh:
        json.dump({
            "edges": _adjacency_edges(result.a_hat),
            "theta": {"family": ns.family,
                      **dict(zip(FAMILIES[ns.family].theta_names,
                                 map(float, result.theta_hat)))},
            "logpost": result.logpost,
            "trace": result.trace,
        }, fh, indent=1)
        fh.write("\n")
    io.write_dot(out / "estimated.dot", study, result.a_hat)
    io.write_dot(out / "observed.dot", study)
    if ns.true_edges:
        inputs.append(ns.true_edges)
        a_true = _read_adjacency(ns.true_edges, study.n)
        rows = []
        for conv in ("roc", "paper"):
            tpr, fpr = tpr_fpr(result.a_hat, a_true, conv)
            rows.append({"convention": conv, "tpr": repr(tpr), "fpr": repr(fpr)})
        io.write_csv_rows(out / "metrics.csv", rows)
        io.write_dot(out / "true.dot",
                     study, a_true)
    io.write_manifest(out / "manifest.json", "pipeline", {"argv": argv},
                      seed, inputs, started=started)
    return EXIT_OK


def _cmd_experiment(ns, argv):
    seed, argv = _resolve_seed(ns, argv)
    started = datetime.now(timezone.utc).isoformat()
    settings = ExperimentSettings(
        population_size=ns.pop_size, mean_degree=ns.mean_degree,
        sample_size=ns.n, coupons=ns.coupons, anneal_iters=ns.iters,
        iota_max=ns.outer, master_seed=seed, n_jobs=ns.replicate_jobs)
    alphas = [float(a) for a in ns.alphas]
    if ns.kind == "gamma-sweep":
        rows = experiment_gamma_sweep(alphas, ns.replicates, settings)
    elif ns.kind == "misspec":
        rows = experiment_misspecification(ns.replicates, settings,
                                           alpha=alphas[0])
    else:
        rows = experiment_shape_bias(alphas, ns.replicates, settings,
                                     use_true_a=not ns.estimated_a)
    out = _outdir(ns)
    rows = [{k: (repr(v) if isinstance(v, float) else v)
             for k, v in row.items()} for row in rows]
    io.write_csv_rows(out / "metrics.csv", rows)
    io.write_manifest(out / "manifest.json", "experiment", {"argv": argv},
                      seed, [], started=started)
    return EXIT_OK


def _cmd_export(ns, argv):
    study = io.load_study(ns.study)
    estimated = _read_adjacency(ns.edges, study.n) if ns.edges else None
    io.write_dot(ns.dot, study, estimated)
    return EXIT_OK


def _cmd_replay(ns, argv):
    with open(ns.manifest) as fh:
        manifest = json.load(fh)
    stored = list(manifest["config"]["argv"])
    if ns.out:
        k = stored.index("--out")
        stored[k + 1] = ns.out
    return main(stored)


# ---------------------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="rdsnet", description=__doc__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("simulate", help="run one recruitment diffusion")
    p.add_argument("--graph", help="population edge-list file (tsv)")
    p.add_argument("--pop-size", type=int, default=1000)
    p.add_argument("--mean-degree", type=float, default=8.0)
    _add_dist_args(p)
    p.add_argument("--n", type=int, required=True, help="target sample size")
    p.add_argument("--seeds", type=int, default=1, help="number of seeds")
    p.add_argument("--coupons", type=int, default=3)
    p.add_argument("--max-time", type=float)
    p.add_argument("--rng-seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("loglik", help="print direct and matrix log-likelihood")
    p.add_argument("--study", required=True)
    p.add_argument("--edges", required=True, help="candidate adjacency edge list")
    _add_dist_args(p)
    p.set_defaults(func=_cmd_loglik)

    p = sub.add_parser("reconstruct", help="A-step: anneal at fixed theta")
    p.add_argument("--study", required=True)
    _add_dist_args(p)
    p.add_argument("--iters", type=int, default=100000)
    p.add_argument("--gamma0", type=float)
    p.add_argument("--cool-rate", type=float, default=0.999)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--prior", default="uniform")
    p.add_argument("--init", default="recruitment",
                   help="'recruitment' or 'file:PATH'")
    p.add_argument("--trace-out", default=None)
    p.add_argument("--rng-seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("estimate", help="theta-step at a fixed matrix")
    p.add_argument("--study", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--family", required=True, choices=sorted(FAMILIES))
    p.add_argument("--theta0", type=float, nargs="+", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("pipeline", help="full alternating reconstruction")
    p.add_argument("--study", required=True)
    p.add_argument("--family", required=True, choices=sorted(FAMILIES))
    p.add_argument("--theta0", type=float, nargs="+", required=True)
    p.add_argument("--iters", type=int, default=20000)
    p.add_argument("--outer", type=int, default=3)
    p.add_argument("--prior", default="uniform")
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--cold-start", action="store_true")
    p.add_argument("--true-edges", help="true subgraph edge list for metrics")
    p.add_argument("--rng-seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("experiment", help="synthetic experiment protocols")
    p.add_argument("--kind", required=True,
                   choices=["gamma-sweep", "misspec", "shape-bias"])
    p.add_argument("--alphas", nargs="+", default=["0.5", "1.0"])
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--pop-size", type=int, default=1000)
    p.add_argument("--mean-degree", type=float, default=8.0)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--coupons", type=int, default=3)
    p.add_argument("--iters", type=int, default=20000)
    p.add_argument("--outer", type=int, default=2)
    p.add_argument("--estimated-a", action="store_true",
                   help="shape-bias: use the estimated matrix")
    p.add_argument("--replicate-jobs", type=int, default=1)
    p.add_argument("--rng-seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("export", help="DOT export with dashed inferred edges")
    p.add_argument("--study", required=True)
    p.add_argument("--edges", help="estimated adjacency edge list")
    p.add_argument("--dot", required=True)
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("replay", help="re-run a job from its manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_replay)
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return ns.func(ns, argv)
    except DataValidationError as exc:
        print(f"rdsnet: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"rdsnet: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
