"""Command-line interface: embed, graph, bicluster, bench.

Every run prints its effective configuration as a single JSON line;
re-running with ``aksvd --config <that json>`` reproduces the output
files bit-identically (benchmark timing fields excepted, since they
measure wall-clock time).

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import ksvd, downstream, solvers
from . import io as aio
from .compat import LearnableConfig, strategy_from_name
from .errors import DataError, NumericalError
from .kernels import KernelSpec, auto_gamma


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


_KERNELS = ("linear", "rbf", "poly", "sne")
_SOLVERS = ("dense", "tsvd", "rsvd", "symnys", "asymnys")


def _add_common(p):
    p.add_argument("--input", required=True, help="input data file")
    p.add_argument("--format", choices=("csv", "edges"), default="csv",
                   help="input format: dense CSV or tab-separated edge list")
    p.add_argument("--kernel", choices=_KERNELS, default="linear")
    p.add_argument("--gamma", default="auto",
                   help="kernel bandwidth, a real or 'auto' (k*sqrt(M*var) heuristic)")
    p.add_argument("--degree", type=int, default=2, help="poly kernel degree")
    p.add_argument("--offset", type=float, default=1.0, help="poly kernel offset")
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--compat", choices=("a0", "a1", "a2", "a3"), default=None,
                   help="compatibility strategy for non-square inputs")
    p.add_argument("--solver", choices=_SOLVERS, default="dense")
    p.add_argument("--nsub", type=int, default=None, help="Nystrom row subsamples")
    p.add_argument("--msub", type=int, default=None, help="Nystrom column subsamples")
    p.add_argument("--oversample", type=int, default=10, help="rsvd oversampling")
    p.add_argument("--power", type=int, default=2, help="rsvd power iterations")
    p.add_argument("--tol", type=float, default=1e-10, help="tsvd residual tolerance")
    p.add_argument("--center", action="store_true", help="double-center the Gram matrix")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix")


def build_parser() -> _Parser:
    parser = _Parser(prog="aksvd", description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=None,
                        help="re-run from an echoed JSON configuration file")
    sub = parser.add_subparsers(dest="subcommand")

    p = sub.add_parser("embed", help="fit and write embeddings")
    _add_common(p)

    p = sub.add_parser("graph", help="node classification + graph reconstruction")
    _add_common(p)
    p.add_argument("--labels", required=True, help="one integer node label per line")

    p = sub.add_parser("bicluster", help="bicluster rows and columns")
    _add_common(p)
    p.add_argument("--labels", default=None, help="optional row labels for NMI")
    p.add_argument("--k-rows", type=int, default=2, dest="k_rows")
    p.add_argument("--k-cols", type=int, default=2, dest="k_cols")

    p = sub.add_parser("bench", help="solver escalation benchmark")
    _add_common(p)
    p.add_argument("--eps", type=float, default=1e-1, help="target eta tolerance")
    p.add_argument("--solvers", default="tsvd,rsvd,symnys,asymnys",
                   help="comma-separated solver list")
    p.add_argument("--m-schedule", default="", dest="m_schedule",
                   help="comma-separated subsample escalation schedule")
    return parser


def _config_from_args(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "config"}
    return cfg


def _config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def _load_matrix(cfg) -> np.ndarray:
    if cfg["format"] == "edges":
        return aio.load_edge_list(cfg["input"])
    return aio.load_dense_csv(cfg["input"])


def _resolve_kernel(cfg, A) -> KernelSpec:
    fam = cfg["kernel"]
    if fam in ("rbf", "sne"):
        if cfg["gamma"] == "auto":
            cfg["gamma"] = auto_gamma(A)
        else:
            cfg["gamma"] = float(cfg["gamma"])
        return KernelSpec(fam, gamma=cfg["gamma"])
    cfg["gamma"] = None
    if fam == "poly":
        return KernelSpec("poly", degree=cfg["degree"], offset=cfg["offset"])
    return KernelSpec("linear")


def _resolve_solver(cfg, shape) -> solvers.SolverChoice:
    name = cfg["solver"]
    n, m = shape
    if name == "dense":
        return solvers.Dense()
    if name == "tsvd":
        return solvers.Truncated(tol=cfg["tol"])
    if name == "rsvd":
        return solvers.Randomized(oversample=cfg["oversample"], power=cfg["power"],
                                  seed=cfg["seed"])
    if cfg["nsub"] is None:
        cfg["nsub"] = max(cfg["rank"], n // 4)
    if name == "symnys":
        return solvers.SymNystrom(n_sub=cfg["nsub"], seed=cfg["seed"])
    if cfg["msub"] is None:
        cfg["msub"] = max(cfg["rank"], m // 4)
    return solvers.AsymNystrom(n_sub=cfg["nsub"], m_sub=cfg["msub"], seed=cfg["seed"])


def _fit_from_config(cfg, A) -> ksvd.KsvdModel:
    kernel = _resolve_kernel(cfg, A)
    compat = None
    if cfg["compat"] is not None:
        compat = strategy_from_name(cfg["compat"], seed=cfg["seed"],
                                    config=LearnableConfig(seed=cfg["seed"]))
    solver = _resolve_solver(cfg, (A.shape[0], A.shape[1]))
    return ksvd.fit_matrix(A, kernel, cfg["rank"], compat=compat,
                          do_center=cfg["center"], solver=solver)


def _write_embed_outputs(cfg, model) -> None:
    out = cfg["out"]
    aio.save_embeddings(out + ".left.csv", ksvd.embeddings(model, "left"))
    aio.save_embeddings(out + ".right.csv", ksvd.embeddings(model, "right"))
    if model.b_phi.shape[0] == model.b_psi.shape[0]:
        aio.save_embeddings(out + ".concat.csv", ksvd.embeddings(model, "concat"))
    r1, r2 = ksvd.residuals(model)
    report = {
        "lambdas": [float(v) for v in model.lambdas],
        "residual_r1": r1,
        "residual_r2": r2,
        "achieved_rank": model.achieved_rank,
        "centered": model.centered,
        "config_hash": _config_hash(cfg),
    }
    with open(out + ".fit.json", "w", encoding="utf-8") as f:
        json.dump(report, f, sort_keys=True)
        f.write("\n")


def _metric_rows(cfg, task, metrics) -> list:
    h = _config_hash(cfg)
    return [{"task": task, "metric_name": k, "value": v, "seed": cfg["seed"],
             "config_hash": h} for k, v in metrics]


def cmd_embed(cfg) -> int:
    A = _load_matrix(cfg)
    t0 = time.perf_counter()
    model = _fit_from_config(cfg, A)
    print(json.dumps(cfg, sort_keys=True))
    print(f"fit in {time.perf_counter() - t0:.3f}s, achieved rank {model.achieved_rank}",
          file=sys.stderr)
    _write_embed_outputs(cfg, model)
    return 0


def cmd_graph(cfg) -> int:
    A = _load_matrix(cfg)
    if A.shape[0] != A.shape[1]:
        raise DataError("graph command requires a square adjacency matrix")
    labels = aio.load_labels(cfg["labels"])
    if labels.shape[0] != A.shape[0]:
        raise DataError(f"labels length {labels.shape[0]} != {A.shape[0]} nodes")
    model = _fit_from_config(cfg, A)
    print(json.dumps(cfg, sort_keys=True))
    _write_embed_outputs(cfg, model)

    features = ksvd.embeddings(model, "concat").values
    clf = downstream.lssvm_fit(features, labels, gamma_reg=1.0)
    micro, macro = downstream.f1_scores(clf.predict(features), labels)
    out_degrees = A.sum(axis=1).astype(int)
    A_hat = downstream.graph_reconstruct(model.b_phi, model.b_psi, out_degrees)
    l1, l2 = downstream.recon_error(A, A_hat)
    rows = _metric_rows(cfg, "node_classification",
                        [("micro_f1", micro), ("macro_f1", macro)])
    rows += _metric_rows(cfg, "graph_reconstruction",
                         [("l1", l1), ("l2", l2)])
    aio.save_report(cfg["out"] + ".metrics.json", rows)
    return 0


def cmd_bicluster(cfg) -> int:
    A = _load_matrix(cfg)
    model = _fit_from_config(cfg, A)
    print(json.dumps(cfg, sort_keys=True))
    _write_embed_outputs(cfg, model)

    rows_cl = downstream.kmeans(model.b_phi, cfg["k_rows"], seed=cfg["seed"])
    cols_cl = downstream.kmeans(model.b_psi, cfg["k_cols"], seed=cfg["seed"] + 1)
    metrics = [("coherence", downstream.coherence(cols_cl.labels, A))]
    if cfg["labels"] is not None:
        truth = aio.load_labels(cfg["labels"])
        if truth.shape[0] != A.shape[0]:
            raise DataError(f"labels length {truth.shape[0]} != {A.shape[0]} rows")
        metrics.insert(0, ("row_nmi", downstream.nmi(rows_cl.labels, truth)))
    aio.save_report(cfg["out"] + ".metrics.json", _metric_rows(cfg, "bicluster", metrics))
    return 0


def cmd_bench(cfg) -> int:
    A = _load_matrix(cfg)
    kernel_needed = cfg["kernel"] != "linear" or cfg["format"] == "edges"
    # bench operates on the (scaled) Gram matrix of the data with itself
    from .kernels import KernelOperator
    if kernel_needed or A.shape[0] != A.shape[1]:
        kernel = _resolve_kernel(cfg, A)
        if A.shape[0] != A.shape[1]:
            raise DataError("bench requires a square matrix (or adjacency) input")
        G = KernelOperator(A, np.ascontiguousarray(A.T), kernel, scaled=True).materialize()
    else:
        _resolve_kernel(cfg, A)
        G = A
    print(json.dumps(cfg, sort_keys=True))
    schedule = [int(t) for t in cfg["m_schedule"].split(",") if t] or ()
    names = [s.strip() for s in cfg["solvers"].split(",") if s.strip()]
    for name in names:
        if name not in _SOLVERS:
            raise UsageError(f"unknown bench solver {name!r}")
    report = solvers.bench(G, cfg["rank"], cfg["eps"], solvers=names,
                           m_schedule=schedule, seed=cfg["seed"], power=cfg["power"])
    report.write_ldjson(cfg["out"] + ".bench.ldjson")
    with open(cfg["out"] + ".bench_summary.json", "w", encoding="utf-8") as f:
        json.dump({"summary": report.summary, "config_hash": _config_hash(cfg)},
                  f, sort_keys=True)
        f.write("\n")
    return 0


_COMMANDS = {"embed": cmd_embed, "graph": cmd_graph,
             "bicluster": cmd_bicluster, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config is not None:
            with open(args.config, "r", encoding="utf-8") as f:
                cfg = json.load(f)
            if "subcommand" not in cfg or cfg["subcommand"] not in _COMMANDS:
                raise UsageError(f"config file {args.config} lacks a valid subcommand")
        else:
            if args.subcommand is None:
                raise UsageError("a subcommand or --config is required")
            cfg = _config_from_args(args)
        return _COMMANDS[cfg["subcommand"]](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
