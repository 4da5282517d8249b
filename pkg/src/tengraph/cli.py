"""Command-line entry points: simulation sweeps, fitting, cross-validation.

The three subcommands share one calling convention: a JSON config file plus
an output directory. ``simulate`` reruns the estimators over replicated
synthetic scenarios and writes per-replication and summary CSVs, ``estimate``
runs the transfer pipeline on stored tensor files, and ``eval`` runs the
cross-validated prediction-error protocol. CSVs are UTF-8 with LF line
endings and a header row; matrices and sample batches travel as TGT1 files.
Set TENGRAPH_LOG to error, info, or debug to control logging.
"""

import argparse
import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import configure_logging
from .metrics import METRIC_FIELDS, cv_relative_error, evaluate
from .sampling import GraphSpec, ScenarioConfig, gen_scenario
from .tgt_io import read_tensor, write_tensor
from .tlasso import TlassoSettings, tlasso_fit
from .transfer import TransferOptions, transfer_fit

logger = logging.getLogger("tengraph.cli")

__all__ = ["main", "cmd_simulate", "cmd_estimate", "cmd_eval"]


def _load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SystemExit(f"cannot read config {path}: {exc}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SystemExit(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}")


def _build_options(cfg, seed):
    """TransferOptions from the config's transfer/tlasso/whitening records."""
    kwargs = dict(cfg.get("transfer", {}))
    if "tlasso" in cfg:
        kwargs["tlasso"] = TlassoSettings(**cfg["tlasso"])
    if "whitening" in cfg:
        kwargs["whitening"] = TlassoSettings(**cfg["whitening"])
    kwargs["seed"] = seed
    try:
        return TransferOptions(**kwargs)
    except TypeError as exc:
        raise SystemExit(f"bad transfer options in config: {exc}")


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _simulate_rep(task):
    """One replication: generate the scenario and run every method on it.

    Returns {method: MetricReport or None}; None marks a method that does not
    apply (the oracle with no informative domains), emitted as "n/a" rows.
    """
    sc = gen_scenario(task["scenario"])
    opt = task["options"]
    x = sc.target.samples
    auxs = [a.samples for a in sc.auxiliaries]
    truth = sc.normalized_truth

    out = {"tlasso": evaluate(tlasso_fit(x, opt.tlasso).precisions, truth)}
    for scheme, name in (("naive", "proposed"), ("adaptive", "proposed.v")):
        fit = transfer_fit(x, auxs, replace(opt, scheme=scheme))
        out[name] = evaluate(fit.omega_sym, truth)
    if task["oracle"]:
        info = sc.informative_indices
        if info:
            fit = transfer_fit(x, [auxs[i] for i in info],
                               replace(opt, scheme="naive"))
            out["oracle"] = evaluate(fit.omega_sym, truth)
        else:
            out["oracle"] = None
    return out


def cmd_simulate(cfg, out_dir, workers=1, seed=None):
    """Run the replication sweep; write results.csv, summary.csv.

    Config keys: scenario ("one" | "two"), graph {kind, dims}, n, n_k, h0,
    reps, seed, and the sweep values: K (int or list) for scenario one,
    card_A (int or list, with a fixed int K) for scenario two. Optional
    transfer/tlasso/whitening records override estimator defaults. Rows are
    ordered by sweep value, then replication, then method; replication r uses
    seed base_seed + r. Returns the number of failed replications.
    """
    scenario = cfg.get("scenario")
    if scenario not in ("one", "two"):
        raise SystemExit(f"config scenario must be 'one' or 'two', got {scenario!r}")
    try:
        graph = GraphSpec(cfg["graph"]["kind"], tuple(cfg["graph"]["dims"]))
    except (KeyError, TypeError) as exc:
        raise SystemExit(f"config graph must have kind and dims: {exc}")
    reps = int(cfg.get("reps", 1))
    if reps < 1:
        raise SystemExit(f"reps must be >= 1, got {reps}")
    base_seed = int(cfg.get("seed", 0)) if seed is None else int(seed)
    n = int(cfg.get("n", 50))
    n_k = cfg.get("n_k")
    h0 = cfg.get("h0")

    sweep_name = "K" if scenario == "one" else "card_A"
    sweep = cfg.get(sweep_name, 5 if scenario == "one" else None)
    if sweep is None:
        raise SystemExit(f"scenario {scenario} config needs {sweep_name}")
    sweep_vals = [int(v) for v in (sweep if isinstance(sweep, list) else [sweep])]
    fixed_k = int(cfg.get("K", 5)) if scenario == "two" else None
    methods = ["tlasso", "proposed", "proposed.v"]
    if scenario == "two":
        methods.append("oracle")

    tasks = []
    for val in sweep_vals:
        for rep in range(1, reps + 1):
            rep_seed = base_seed + rep
            sc_cfg = ScenarioConfig(
                scenario, graph, n=n,
                K=val if scenario == "one" else fixed_k,
                n_k=n_k,
                card_A=val if scenario == "two" else None,
                h0=h0, seed=rep_seed,
            )
            tasks.append({
                "sweep": val, "rep": rep, "seed": rep_seed,
                "scenario": sc_cfg,
                "options": _build_options(cfg, rep_seed),
                "oracle": scenario == "two",
            })

    results, failures = {}, []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {i: pool.submit(_simulate_rep, t) for i, t in enumerate(tasks)}
            for i, fut in futures.items():
                try:
                    results[i] = fut.result()
                except Exception as exc:
                    results[i] = exc
    else:
        for i, task in enumerate(tasks):
            try:
                results[i] = _simulate_rep(task)
            except Exception as exc:
                results[i] = exc

    rows = []
    for i, task in enumerate(tasks):
        res = results[i]
        if isinstance(res, Exception):
            logger.error("rep %d (%s=%d) failed: %s",
                         task["rep"], sweep_name, task["sweep"], res)
            failures.append({
                "rep": task["rep"], sweep_name: task["sweep"],
                "seed": task["seed"], "error": str(res),
            })
            continue
        logger.info("rep %d (%s=%d) done", task["rep"], sweep_name, task["sweep"])
        for method in methods:
            report = res[method]
            metric_vals = (
                ["n/a"] * len(METRIC_FIELDS) if report is None
                else [getattr(report, f) for f in METRIC_FIELDS]
            )
            rows.append([scenario, graph.kind, task["rep"], task["seed"],
                         method, task["sweep"]] + metric_vals)

    header = ["scenario", "graph", "rep", "seed", "method", sweep_name]
    header += list(METRIC_FIELDS)
    _write_csv(out_dir / "results.csv", header, rows)

    summary_rows = []
    for val in sweep_vals:
        for method in methods:
            picked = [r[6:] for r in rows
                      if r[5] == val and r[4] == method and r[6] != "n/a"]
            if picked:
                means = [float(np.mean([p[j] for p in picked]))
                         for j in range(len(METRIC_FIELDS))]
            else:
                means = ["n/a"] * len(METRIC_FIELDS)
            summary_rows.append([scenario, graph.kind, method, val] + means)
    _write_csv(out_dir / "summary.csv",
               ["scenario", "graph", "method", sweep_name] + list(METRIC_FIELDS),
               summary_rows)

    if failures:
        with open(out_dir / "failures.json", "w", encoding="utf-8") as fh:
            json.dump({"failures": failures}, fh, indent=2)
        logger.error("%d of %d replications failed", len(failures), len(tasks))
    return len(failures)


def cmd_estimate(cfg, out_dir, seed=None):
    """Fit the transfer pipeline on stored tensors; write matrices and JSON.

    Config keys: target (TGT1 path of the sample batch), auxiliaries (list of
    TGT1 paths), optional transfer/tlasso/whitening records and seed. Writes
    fit.json (weights, penalty levels, split, selected-column bitmaps),
    per-mode omega_sym_mode{m}.tgt and delta_mode{m}.tgt, and per-mode edge
    lists edges_mode{m}.csv of the nonzero off-diagonal entries.
    """
    try:
        target = read_tensor(cfg["target"])
        auxs = [read_tensor(p) for p in cfg["auxiliaries"]]
    except KeyError as exc:
        raise SystemExit(f"estimate config needs {exc.args[0]}")
    except (OSError, ValueError) as exc:
        raise SystemExit(f"cannot load input tensors: {exc}")
    opt = _build_options(cfg, int(cfg.get("seed", 0)) if seed is None else int(seed))
    try:
        fit = transfer_fit(target, auxs, opt)
    except ValueError as exc:
        raise SystemExit(f"estimate failed: {exc}")

    with open(out_dir / "fit.json", "w", encoding="utf-8") as fh:
        json.dump(fit.to_jsonable(), fh, indent=2)
    for m, (om, de) in enumerate(zip(fit.omega_sym, fit.delta)):
        write_tensor(out_dir / f"omega_sym_mode{m}.tgt", om)
        write_tensor(out_dir / f"delta_mode{m}.tgt", de)
        edges = [[i, j, om[i, j]]
                 for i in range(om.shape[0]) for j in range(om.shape[1])
                 if i != j and om[i, j] != 0]
        _write_csv(out_dir / f"edges_mode{m}.csv", ["i", "j", "value"], edges)
    logger.info("estimate wrote %d modes to %s", len(fit.omega_sym), out_dir)
    return 0


def cmd_eval(cfg, out_dir, seed=None):
    """Cross-validated prediction errors; writes cv.csv.

    Config keys: target and auxiliaries (TGT1 paths), folds, mode, optional
    transfer/tlasso/whitening records and seed. cv.csv holds one row per
    (fold, method) with the fold's prediction error, then one "avg" row per
    method carrying the fold average and the ratio to the Tlasso average.
    """
    try:
        target = read_tensor(cfg["target"])
        auxs = [read_tensor(p) for p in cfg.get("auxiliaries", [])]
    except (OSError, ValueError, KeyError) as exc:
        raise SystemExit(f"cannot load input tensors: {exc}")
    folds = int(cfg.get("folds", 5))
    mode = int(cfg.get("mode", 0))
    opt = _build_options(cfg, int(cfg.get("seed", 0)) if seed is None else int(seed))
    try:
        out = cv_relative_error(target, auxs, folds, mode, opt)
    except ValueError as exc:
        raise SystemExit(f"eval failed: {exc}")

    labels = (("tlasso", "tlasso"), ("proposed", "proposed"),
              ("proposed_v", "proposed.v"))
    rows = []
    for f in range(folds):
        for key, label in labels:
            rows.append([f + 1, label, out["per_fold"][key][f], ""])
    rows.append(["avg", "tlasso", out["pe_tlasso"], 1.0])
    rows.append(["avg", "proposed", out["pe_proposed"], out["rel_proposed"]])
    rows.append(["avg", "proposed.v", out["pe_proposed_v"], out["rel_proposed_v"]])
    _write_csv(out_dir / "cv.csv", ["fold", "method", "pe", "rel_to_tlasso"], rows)
    return 0


def main(argv=None):
    configure_logging()
    parser = argparse.ArgumentParser(
        prog="tengraph",
        description="Transfer estimation of tensor graphical models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate", "replicated synthetic scenario sweep"),
        ("estimate", "fit the transfer pipeline on stored tensors"),
        ("eval", "cross-validated prediction-error protocol"),
    ):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True, help="JSON config path")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--workers", type=int, default=1,
                        help="parallel replications (simulate only)")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config base seed")
    args = parser.parse_args(argv)

    cfg = _load_config(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.command == "simulate":
        return 1 if cmd_simulate(cfg, out_dir, args.workers, args.seed) else 0
    if args.command == "estimate":
        return cmd_estimate(cfg, out_dir, args.seed)
    return cmd_eval(cfg, out_dir, args.seed)


if __name__ == "__main__":
    import sys

    sys.exit(main())
