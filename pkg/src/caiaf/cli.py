"""Operator entry points: synthesis, ingest, headless A/B simulation, serving,
and event-log evaluation/export.

All randomness in one invocation flows from --seed: simulation seed i is
``seed + i``, sessions/clustering use the paired seed, and the annotator
stream is ``default_rng([cost_seed, seed_i])`` (see oracle.run_ab).
Relative paths resolve against $CAIAF_DATA_DIR when it is set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .dataset import SynthConfig, ingest, load_embeddings, load_gazetteer, synth, write_dataset
from .oracle import (AbReport, AbRow, CostModelParams, ErrorModelParams, run_ab,
                     run_session, write_ab_report_csv)
from .records import ContextDimension
from .session import (Session, SessionConfig, export_metrics_csv, metrics_from_events,
                      read_event_log)

DIMENSIONS = [d.value for d in ContextDimension]


def _resolve(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    data_dir = os.environ.get("CAIAF_DATA_DIR")
    if data_dir and not p.is_absolute():
        return Path(data_dir) / p
    return p


def _add_synth(sub):
    p = sub.add_parser("synth", help="generate a synthetic two-class dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n-per-class", type=int, default=100)
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--feature-dim", type=int, default=2)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--mean-a", type=float, default=-1.5)
    p.add_argument("--mean-b", type=float, default=1.5)
    p.add_argument("--tag-noise", type=float, default=0.05)
    p.add_argument("--class-names", default="class0,class1",
                   help="two comma-separated class names")


def _add_ingest(sub):
    p = sub.add_parser("ingest", help="validate a dataset file, dropping "
                       "records with incomplete metadata")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--require", default="",
                   help="comma-separated context dimensions that must be present")


def _add_simulate(sub):
    p = sub.add_parser("simulate", help="headless annotator simulation")
    p.add_argument("--dataset", required=True)
    p.add_argument("--dimension", choices=DIMENSIONS, required=True)
    p.add_argument("--mode", choices=["caiaf", "plain", "both"], default="both")
    p.add_argument("--batches", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=5)
    p.add_argument("--seeds", type=int, default=1, help="number of paired seeds")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--out", required=True, help="report CSV path")
    p.add_argument("--classes", default=None,
                   help="comma-separated class pair for multi-class datasets")
    p.add_argument("--strategy", default="informative_diverse",
                   choices=["informative_diverse", "uncertainty", "random"])
    p.add_argument("--seed-per-class", type=int, default=10)
    p.add_argument("--holdout-frac", type=float, default=0.2)
    p.add_argument("--k", type=int, default=2, help="batch clustering k")
    p.add_argument("--reg-lambda", type=float, default=1e-4)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--t-base", type=float, default=2000.0)
    p.add_argument("--t-switch", type=float, default=1500.0)
    p.add_argument("--t-amb", type=float, default=3000.0)
    p.add_argument("--delta", type=float, default=0.5, help="context discount")
    p.add_argument("--noise-sd", type=float, default=100.0)
    p.add_argument("--p0", type=float, default=0.02)
    p.add_argument("--p-amb", type=float, default=0.15)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--gazetteer", default=None)
    p.add_argument("--config", default=None,
                   help="JSON file mirroring the session config; flags override")


def _add_serve(sub):
    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--dataset", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--gazetteer", default=None)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--log-dir", default=None, help="directory for event logs")
    p.add_argument("--ui-dir", default=None, help="static annotation UI directory")


def _add_eval(sub):
    p = sub.add_parser("eval", help="summarize a session event log")
    p.add_argument("--log", required=True)


def _add_export(sub):
    p = sub.add_parser("export-metrics", help="write per-batch metrics CSV")
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="caiaf",
                                     description="context-aware image annotation")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_synth(sub)
    _add_ingest(sub)
    _add_simulate(sub)
    _add_serve(sub)
    _add_eval(sub)
    _add_export(sub)
    return parser


def cmd_synth(args) -> int:
    names = tuple(args.class_names.split(","))
    if len(names) != 2:
        print("--class-names needs exactly two names", file=sys.stderr)
        return 1
    config = SynthConfig(n_per_class=args.n_per_class, feature_dim=args.feature_dim,
                         class_names=names, mean_a=args.mean_a, mean_b=args.mean_b,
                         sigma=args.sigma, rho=args.rho, tag_noise=args.tag_noise)
    dataset = synth(config, rng_seed=args.seed)
    out = _resolve(args.out)
    write_dataset(out, dataset)
    print(f"wrote {len(dataset.records)} records to {out}")
    return 0


def cmd_ingest(args) -> int:
    dims = [d for d in args.require.split(",") if d]
    dataset, report = ingest(_resolve(args.infile), require_complete=dims)
    out = _resolve(args.out)
    write_dataset(out, dataset)
    print(f"kept {report.kept} records, dropped {report.dropped}")
    for dim, count in sorted(report.missing_counts.items()):
        print(f"  missing {dim}: {count}")
    return 0


def _load_simulation_inputs(args):
    dimension = ContextDimension(args.dimension)
    dataset, _ = ingest(_resolve(args.dataset), require_complete={dimension})
    if args.classes:
        pair = tuple(args.classes.split(","))
        if len(pair) != 2:
            raise ValueError("--classes needs exactly two names")
        dataset = dataset.restrict(pair)
    if len(dataset.classes) != 2:
        raise ValueError(
            f"dataset has {len(dataset.classes)} classes; pick a pair with --classes")
    embeddings = load_embeddings(_resolve(args.embeddings)) if args.embeddings else None
    gazetteer = load_gazetteer(_resolve(args.gazetteer)) if args.gazetteer else None
    return dataset, embeddings, gazetteer


def _session_config_from_args(args) -> SessionConfig:
    base = {}
    if args.config:
        base = json.loads(Path(_resolve(args.config)).read_text(encoding="utf-8"))
    merged = {
        "dimension": args.dimension,
        "mode": "caiaf",
        "batch_size": args.batch_size,
        "total_batches": args.batches,
        "strategy": args.strategy,
        "train": {"reg_lambda": args.reg_lambda, "epochs": args.epochs, "rng_seed": 0},
        "cluster": {"k": args.k, "rng_seed": 0},
        "rng_seed": args.seed,
        "seed_per_class": args.seed_per_class,
        "holdout_frac": args.holdout_frac,
        "dataset": args.dataset,
    }
    merged.update(base)
    return SessionConfig.from_dict(merged)


def cmd_simulate(args) -> int:
    dataset, embeddings, gazetteer = _load_simulation_inputs(args)
    base = _session_config_from_args(args)
    cost = CostModelParams(t_base=args.t_base, t_switch=args.t_switch,
                           t_amb=args.t_amb, context_discount=args.delta,
                           rng_seed=args.seed, noise_sd=args.noise_sd)
    err = ErrorModelParams(p0=args.p0, p_amb=args.p_amb)
    seeds = [args.seed + i for i in range(args.seeds)]

    if args.mode == "both":
        report = run_ab(dataset, base, cost, err, seeds,
                        embeddings=embeddings, gazetteer=gazetteer)
    else:
        rows = []
        for s in seeds:
            config = replace(base, mode=args.mode, rng_seed=s,
                             cluster=replace(base.cluster, rng_seed=s))
            session = Session(config, dataset, embeddings=embeddings,
                              gazetteer=gazetteer)
            result = run_session(session, cost, err,
                                 np.random.default_rng([cost.rng_seed, s]))
            rows.append(AbRow(seed=s, mode=args.mode,
                              cumulative_ms=result.cumulative_ms,
                              final_f1=result.final_f1,
                              switches_total=result.switches_total))
        report = AbReport(rows=rows)

    out = _resolve(args.out)
    write_ab_report_csv(report, out)
    print(f"wrote {len(report.rows)} rows to {out}")
    if args.mode == "both":
        summary = report.summary()
        print(f"caiaf time wins: {summary['caiaf_time_wins']}/{summary['n_seeds']}")
        print(f"mean cumulative_ms: caiaf {summary['mean_cumulative_ms_caiaf']:.0f} "
              f"plain {summary['mean_cumulative_ms_plain']:.0f}")
        print(f"mean final_f1: caiaf {summary['mean_final_f1_caiaf']:.4f} "
              f"plain {summary['mean_final_f1_plain']:.4f}")
    else:
        for row in report.rows:
            print(f"seed {row.seed}: cumulative_ms {row.cumulative_ms:.0f} "
                  f"final_f1 {row.final_f1:.4f}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    dataset, _ = ingest(_resolve(args.dataset))
    embeddings = load_embeddings(_resolve(args.embeddings)) if args.embeddings else None
    gazetteer = load_gazetteer(_resolve(args.gazetteer)) if args.gazetteer else None
    app = create_app(dataset, embeddings=embeddings, gazetteer=gazetteer,
                     log_dir=_resolve(args.log_dir), ui_dir=_resolve(args.ui_dir))
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_eval(args) -> int:
    events = read_event_log(_resolve(args.log))
    metrics = metrics_from_events(events)
    print(f"batches completed: {len(metrics.batches)}")
    if metrics.batches:
        print(f"cumulative_ms: {metrics.batches[-1].cumulative_ms:.1f}")
    if metrics.final_f1 is not None:
        print(f"final_f1: {metrics.final_f1:.6f}")
    return 0


def cmd_export_metrics(args) -> int:
    events = read_event_log(_resolve(args.log))
    metrics = metrics_from_events(events)
    export_metrics_csv(metrics, _resolve(args.out))
    print(f"wrote {len(metrics.batches)} rows to {args.out}")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "simulate": cmd_simulate,
    "serve": cmd_serve,
    "eval": cmd_eval,
    "export-metrics": cmd_export_metrics,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
