"""Command-line front end: simulate, compare, dataset, train, eval, optimal."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path

from .autoscaler import ConfigError
from .config import Scenario, load_scenario, scenario_to_dict, with_schedule
from .damage import damage_report
from .detector.dataset import Dataset, DatasetGrid, build_dataset, train_test_split
from .detector.features import FEATURE_NAMES
from .detector.gbt import BoostedTreeModel, GbtHyperParams, feature_importance, train
from .detector.metrics import evaluate
from .engine import Trace, run_simulation
from .workload import WorkloadKind, optimal_t_off, optimal_t_on, parse_attack

PLOT_COLUMNS = (("t", "t"), ("rate", "offered_rate"), ("pods", "total_pods"),
                ("nodes", "total_nodes"), ("cpu", "avg_relative_cpu"),
                ("response_time", "response_time"))
COMPARE_ROWS = (("Cost", "cost"), ("RD_e", "rd_e"), ("RD_p", "rd_p"), ("Potency", "potency"))


class CliError(Exception):
    pass


# output helpers

def _num(v) -> str:
    if v is None:
        return "undefined"
    if isinstance(v, float):
        return repr(round(v, 6))
    return str(v)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _commit(files: dict, out_dir: Path) -> list:
    """Write ``{name: text}`` into ``out_dir`` so each file appears whole or not at all.

    Everything is staged first; files are moved into place only once all of
    them were produced.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    staged = []
    with tempfile.TemporaryDirectory(dir=out_dir, prefix=".staging-") as tmp:
        for name, text in files.items():
            path = Path(tmp) / name
            path.write_text(text)
            staged.append((path, out_dir / name))
        for src, dst in staged:
            os.replace(src, dst)
    return [dst for _, dst in staged]


def _plot_csv(trace: Trace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([name for name, _ in PLOT_COLUMNS])
    cols = [trace[c] for _, c in PLOT_COLUMNS]
    for values in zip(*cols):
        writer.writerow([_num(v.item()) for v in values])
    return buf.getvalue()


def _actions_jsonl(trace: Trace) -> str:
    lines = []
    for a in trace.actions:
        lines.append(json.dumps({"t": a.t, "kind": a.kind, "count": a.count,
                                 "since": a.since, "ids": list(a.ids)}))
    return "".join(line + "\n" for line in lines)


# scenario runs

def run_triplet(scenario: Scenario, tick: int = 1):
    """Attack run plus the k=1 and steady-load baselines it is measured against."""
    sched = scenario.schedule
    k1 = replace(sched, power_k=1.0)
    steady = replace(sched, kind=WorkloadKind.STEADY)
    runs = [run_simulation(scenario.cluster, scenario.service, s, scenario.duration,
                           seed=scenario.seed, tick=tick) for s in (sched, k1, steady)]
    report = damage_report(*runs, sched, scenario.pricing)
    return runs[0], report


def _scenario_from_args(args) -> Scenario:
    if args.scenario:
        scenario = load_scenario(args.scenario)
    else:
        base = Scenario()
        schedule = parse_attack(args.attack, base.schedule)
        scenario = with_schedule(base, schedule, name="attack")
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    return scenario


def _scenario_dir(args, scenario: Scenario) -> Path:
    if args.out is not None:
        return Path(args.out) / scenario.name
    if scenario.output_dir:
        return Path(scenario.output_dir)
    return Path("out") / scenario.name


def cmd_simulate(args) -> int:
    scenario = _scenario_from_args(args)
    trace, report = run_triplet(scenario, args.tick)
    payload = {"scenario": scenario_to_dict(scenario), "damage": report.to_dict(),
               "peak_pods": int(trace["total_pods"].max()),
               "peak_nodes": int(trace["total_nodes"].max()),
               "errors": int(trace["errors"].sum()),
               "scaling_actions": len(trace.actions)}
    out = _scenario_dir(args, scenario)
    written = _commit({"trace.csv": trace.csv_text(), "trace.jsonl": trace.jsonl_text(),
                       "actions.jsonl": _actions_jsonl(trace), "plot.csv": _plot_csv(trace),
                       "report.json": _json(payload)}, out)
    print(f"{scenario.name}: {len(trace)} ticks, peak {payload['peak_pods']} pods / "
          f"{payload['peak_nodes']} nodes")
    for label, key in COMPARE_ROWS:
        print(f"  {label:8s} {_num(getattr(report, key))}")
    print(f"  wrote {', '.join(str(p) for p in written)}")
    return 0


def comparison_csv(columns: list) -> str:
    """``columns`` is ``[(name, DamageReport), ...]``; one row per headline metric."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric", *(name for name, _ in columns)])
    for label, key in COMPARE_ROWS:
        writer.writerow([label, *(_num(getattr(rep, key)) for _, rep in columns)])
    return buf.getvalue()


def cmd_compare(args) -> int:
    scenarios = [load_scenario(ref) for ref in args.scenarios]
    if args.seed is not None:
        scenarios = [replace(s, seed=args.seed) for s in scenarios]
    first = scenarios[0]
    for other in scenarios[1:]:
        if other.cluster != first.cluster or other.service != first.service:
            raise CliError(f"scenarios {first.name!r} and {other.name!r} use different "
                           "cluster or service settings; comparison needs them identical")
    columns, seen = [], {}
    for s in scenarios:
        _, report = run_triplet(s, args.tick)
        seen[s.name] = seen.get(s.name, 0) + 1
        name = s.name if seen[s.name] == 1 else f"{s.name}_{seen[s.name]}"
        columns.append((name, report))
    out = Path(args.out or "out")
    text = comparison_csv(columns)
    _commit({"comparison.csv": text,
             "comparison.json": _json({name: rep.to_dict() for name, rep in columns})}, out)
    sys.stdout.write(text)
    return 0


def cmd_dataset(args) -> int:
    config = Scenario()
    if args.scenario:
        config = load_scenario(args.scenario)
    seed = 0 if args.seed is None else args.seed
    started = time.perf_counter()
    data = build_dataset(DatasetGrid(), runs_per_cell=args.runs_per_cell, seed=seed,
                         config=config.cluster, service=config.service, jobs=args.jobs)
    tr, te = train_test_split(data, args.test_fraction, seed)
    out = Path(args.out or "out")
    _commit({"dataset.csv": data.csv_text(), "train.csv": tr.csv_text(),
             "test.csv": te.csv_text()}, out)
    print(f"{len(data)} samples ({int(data.y.sum())} attack), {len(tr)} train / {len(te)} test "
          f"in {time.perf_counter() - started:.1f}s -> {out}")
    return 0


def _load_dataset(path) -> Dataset:
    if not Path(path).is_file():
        raise CliError(f"dataset not found: {path}")
    return Dataset.from_csv(path)


def cmd_train(args) -> int:
    out = Path(args.out or "out")
    data = _load_dataset(args.data or out / "train.csv")
    params = GbtHyperParams(num_trees=args.num_trees, max_depth=args.max_depth,
                            learning_rate=args.learning_rate, lambda_l2=args.lambda_l2,
                            gamma_leaf_penalty=args.gamma,
                            min_samples_leaf=args.min_samples_leaf,
                            min_samples_split=args.min_samples_split,
                            class_balancing=not args.no_balancing)
    history = []
    model = train(data.X, data.y, params, FEATURE_NAMES, history=history)
    _commit({"model.json": model.to_json() + "\n",
             "train_log.json": _json({"log_loss": history, "n_samples": len(data)})}, out)
    print(f"trained {params.num_trees} trees on {len(data)} samples; "
          f"log-loss {history[0]:.4f} -> {history[-1]:.4f}")
    return 0


def cmd_eval(args) -> int:
    out = Path(args.out or "out")
    model_path = Path(args.model or out / "model.json")
    if not model_path.is_file():
        raise CliError(f"model not found: {model_path}")
    model = BoostedTreeModel.from_json(model_path.read_text())
    data = _load_dataset(args.data or out / "test.csv")
    metrics = evaluate(model.predict(data.X), data.y)
    ranking = [{"feature": name, "importance": score}
               for _, name, score in feature_importance(model)]
    _commit({"metrics.json": _json({"metrics": metrics.to_dict(), "n_samples": len(data),
                                    "feature_importance": ranking})}, out)
    print(f"accuracy {metrics.accuracy:.4f} precision {metrics.precision:.4f} "
          f"recall {metrics.recall:.4f} f1 {metrics.f1:.4f}")
    print(f"top feature: {ranking[0]['feature']}")
    return 0


def cmd_optimal(args) -> int:
    cluster = load_scenario(args.scenario).cluster if args.scenario else Scenario().cluster
    print(json.dumps({"t_on": optimal_t_on(cluster), "t_off": optimal_t_off(cluster)}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    def global_flags(p, suppress):
        # accepted before or after the subcommand; the subcommand copy wins
        default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        p.add_argument("--seed", type=int, default=default(None), help="override the run seed")
        p.add_argument("--out", default=default(None), help="output directory (default: out)")
        p.add_argument("--tick", type=int, default=default(1), help="simulation tick in seconds")

    common = argparse.ArgumentParser(add_help=False)
    global_flags(common, suppress=True)
    parser = argparse.ArgumentParser(prog="kubeyoyo",
                                     description="Autoscaling attack simulator and detector")
    global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run one scenario")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="scenario file or builtin:<name>")
    src.add_argument("--attack", help='shorthand such as "k=20 on=10m off=20m n=6"')
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", parents=[common], help="side-by-side damage table")
    p.add_argument("scenarios", nargs="+", help="scenario files or builtin:<name>")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("dataset", parents=[common], help="simulate the detector grid")
    p.add_argument("--runs-per-cell", type=int, default=3)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--test-fraction", type=float, default=0.3)
    p.add_argument("--scenario", help="take cluster and service settings from this scenario")
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("train", parents=[common], help="fit the boosted-tree detector")
    p.add_argument("--data", help="training CSV (default: <out>/train.csv)")
    d = GbtHyperParams()
    p.add_argument("--num-trees", type=int, default=d.num_trees)
    p.add_argument("--max-depth", type=int, default=d.max_depth)
    p.add_argument("--learning-rate", type=float, default=d.learning_rate)
    p.add_argument("--lambda-l2", type=float, default=d.lambda_l2)
    p.add_argument("--gamma", type=float, default=d.gamma_leaf_penalty)
    p.add_argument("--min-samples-leaf", type=int, default=d.min_samples_leaf)
    p.add_argument("--min-samples-split", type=int, default=d.min_samples_split)
    p.add_argument("--no-balancing", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="score a model on held-out data")
    p.add_argument("--model", help="model JSON (default: <out>/model.json)")
    p.add_argument("--data", help="evaluation CSV (default: <out>/test.csv)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("optimal", parents=[common], help="print optimal on/off durations")
    p.add_argument("--scenario", help="scenario whose cluster settings to use")
    p.set_defaults(func=cmd_optimal)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tick < 1:
        parser.error("--tick must be >= 1")
    try:
        return args.func(args)
    except (ConfigError, CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
