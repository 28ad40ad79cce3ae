"""Command-line entry point: train, tune, evaluate, rank, export.

Exit codes: 0 success, 1 usage error (bad flags, unknown ids), 2 runtime
failure (missing records, unwritable output, aborted runs).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path


from .algos.config import ALGORITHM_TAGS
from .configio import parse_config_file, parse_seeds
from .evalharness import (aggregate_scores, confidence_curves, delta_from_final,
                          frequency_table, n_to_threshold, rank_algorithms,
                          threshold_for_experiment, top1_table, top3_lists,
                          variance_after_threshold)
from .experiments import EXPERIMENTS, experiment_spec, run_experiment_suite
from .records import load_records_dir
from .tuner import tune_algorithm

__all__ = ["main"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage failures exit 1, not argparse's 2
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="climbench",
                     description="RL algorithm workbench on idealised climate tasks")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train algorithms and write run records")
    train.add_argument("--experiment", help="experiment id (see --list)")
    train.add_argument("--algo", action="append", default=None,
                       help="algorithm tag; repeat or comma-separate")
    train.add_argument("--seeds", default=None, help="e.g. 1..10 or 1,2,5")
    train.add_argument("--steps", type=int, default=None,
                       help="override the experiment step budget")
    train.add_argument("--workers", type=int, default=None)
    train.add_argument("--config", default=None, help="run-config file")
    train.add_argument("--out", default=None, help="records output directory")
    train.add_argument("--tuned-dir", default=None,
                       help="tuner output directory (required for *-optim-L)")
    train.add_argument("--checkpoints", action="store_true",
                       help="save final actor networks next to the records")
    train.add_argument("--list", action="store_true", help="list experiment ids")

    tune = sub.add_parser("tune", help="hyperparameter search with pruning")
    tune.add_argument("--experiment", required=True)
    tune.add_argument("--algo", action="append", required=True)
    tune.add_argument("--trials", type=int, default=32)
    tune.add_argument("--workers", type=int, default=1)
    tune.add_argument("--seed", type=int, default=1)
    tune.add_argument("--budget", type=int, default=None,
                      help="steps per trial (default: experiment budget)")
    tune.add_argument("--config", default=None)
    tune.add_argument("--out", required=True, help="tuned-config output directory")

    evaluate = sub.add_parser("evaluate", help="per-run metric table from records")
    evaluate.add_argument("--records", required=True)
    evaluate.add_argument("--out", default=None, help="write CSV here as well")

    rank = sub.add_parser("rank", help="top-3 per experiment + frequency tables")
    rank.add_argument("--records", required=True)
    rank.add_argument("--out", default=None, help="directory for CSV tables")

    export = sub.add_parser("export", help="numeric data exports")
    export_sub = export.add_subparsers(dest="what", required=True)
    curves = export_sub.add_parser("curves", help="mean +- CI learning curves")
    curves.add_argument("--records", required=True)
    curves.add_argument("--out", required=True)
    curves.add_argument("--bucket", type=int, default=None)
    profile = export_sub.add_parser("profile", help="final temperature profile table")
    profile.add_argument("--records", required=True)
    profile.add_argument("--algo", required=True)
    profile.add_argument("--seed", type=int, required=True)
    profile.add_argument("--experiment", default=None,
                         help="needed when the directory holds several experiments")
    profile.add_argument("--out", required=True)
    return parser


def _parse_algos(values) -> list[str]:
    if not values:
        raise UsageError("at least one --algo is required")
    tags = []
    for v in values:
        tags.extend(t.strip() for t in v.split(",") if t.strip())
    for t in tags:
        if t not in ALGORITHM_TAGS:
            raise UsageError(f"unknown algorithm {t!r}; known: {', '.join(ALGORITHM_TAGS)}")
    return tags


def _merge_run_section(args) -> dict:
    """defaults < config-file [run] < command-line flags."""
    merged = {"experiment": None, "algos": None, "seeds": "1..10", "steps": None,
              "workers": 1, "out": "records", "tuned_dir": None}
    env_overrides: dict = {}
    algo_overrides: dict[str, dict] = {}
    if args.config:
        sections = parse_config_file(args.config)
        run = sections.get("run", {})
        for key in ("experiment", "seeds", "out", "tuned_dir"):
            if key in run:
                merged[key] = run[key]
        if "algos" in run:
            merged["algos"] = [run["algos"]]
        for key in ("steps", "workers"):
            if key in run:
                merged[key] = int(run[key])
        env_overrides = dict(sections.get("env", {}))
        for section, body in sections.items():
            if section.startswith("algo."):
                algo_overrides[section.split(".", 1)[1]] = dict(body)
    if args.experiment:
        merged["experiment"] = args.experiment
    if args.algo:
        merged["algos"] = args.algo
    if args.seeds:
        merged["seeds"] = args.seeds
    if args.steps is not None:
        merged["steps"] = args.steps
    if args.workers is not None:
        merged["workers"] = args.workers
    if args.out:
        merged["out"] = args.out
    if getattr(args, "tuned_dir", None):
        merged["tuned_dir"] = args.tuned_dir
    merged["env_overrides"] = env_overrides
    merged["algo_overrides"] = algo_overrides
    return merged


def cmd_train(args) -> int:
    if args.list:
        for experiment_id in EXPERIMENTS:
            print(experiment_id)
        return 0
    merged = _merge_run_section(args)
    if not merged["experiment"]:
        raise UsageError("--experiment is required")
    try:
        spec = experiment_spec(merged["experiment"])
    except KeyError as exc:
        raise UsageError(str(exc)) from exc
    algos = _parse_algos(merged["algos"])
    seeds = parse_seeds(merged["seeds"])
    records = run_experiment_suite(
        spec.experiment_id, algos, seeds, out_dir=merged["out"],
        workers=int(merged["workers"]), env_overrides=merged["env_overrides"],
        algo_overrides=merged["algo_overrides"], tuned_dir=merged["tuned_dir"],
        steps=merged["steps"], save_checkpoints=args.checkpoints)
    aborted = [r for r in records if r.aborted]
    for rec in records:
        status = "ABORTED: " + rec.abort_reason if rec.aborted else \
            f"final return {rec.final_return():.4f}"
        print(f"{rec.experiment_id} {rec.algorithm} seed={rec.seed}: {status}")
    print(f"wrote {len(records)} records to {merged['out']}")
    return 2 if aborted else 0


def cmd_tune(args) -> int:
    env_overrides = {}
    if args.config:
        env_overrides = dict(parse_config_file(args.config).get("env", {}))
    for algo in _parse_algos(args.algo):
        try:
            experiment_spec(args.experiment)
        except KeyError as exc:
            raise UsageError(str(exc)) from exc
        result = tune_algorithm(algo, args.experiment, n_trials=args.trials,
                                workers=args.workers, seed=args.seed,
                                out_dir=args.out, trial_budget=args.budget,
                                env_overrides=env_overrides or None)
        pruned = sum(t.status == "pruned" for t in result.trials)
        print(f"{args.experiment} {algo}: best trial {result.best.trial_id} "
              f"score {result.best.final_score:.4f} "
              f"({pruned}/{len(result.trials)} pruned, "
              f"{result.total_env_steps} env steps)")
    print(f"tuned configs written under {args.out}")
    return 0


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def cmd_evaluate(args) -> int:
    records = load_records_dir(args.records)
    lines = ["experiment_id,algorithm,seed,n_to_threshold,var_after_threshold,"
             "delta_from_final"]
    for rec in sorted(records, key=lambda r: (r.experiment_id, r.algorithm, r.seed)):
        spec = threshold_for_experiment(rec.experiment_id)
        lines.append(",".join([
            rec.experiment_id, rec.algorithm, str(rec.seed),
            str(n_to_threshold(rec, spec) or ""),
            _fmt(variance_after_threshold(rec, spec)),
            _fmt(delta_from_final(rec, spec)),
        ]))
    grouped: dict[tuple[str, str], list] = {}
    for rec in records:
        grouped.setdefault((rec.experiment_id, rec.algorithm), []).append(rec)
    lines.append("")
    lines.append("experiment_id,algorithm,seeds,median_n_to_threshold,"
                 "mean_variance,mean_delta")
    for (experiment_id, algo), recs in sorted(grouped.items()):
        spec = threshold_for_experiment(experiment_id)
        agg = aggregate_scores(recs, spec)
        lines.append(",".join([
            experiment_id, algo, str(agg.seeds),
            _fmt(agg.median_n_to_threshold), _fmt(agg.mean_variance),
            _fmt(agg.mean_delta)]))
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


def cmd_rank(args) -> int:
    records = load_records_dir(args.records)
    ranking = rank_algorithms(records)
    tops = top3_lists(ranking)
    out_lines = []
    for experiment_id, top in tops.items():
        out_lines.append(f"{experiment_id}: " + " ".join(
            f"#{i + 1}={algo}" for i, algo in enumerate(top)))
    freq = frequency_table(tops)
    out_lines.append("")
    out_lines.append("top-3 frequency:")
    out_lines.extend(f"  {algo:12s} {count}" for algo, count in freq)
    top1 = top1_table(tops)
    out_lines.append("top-1 frequency:")
    out_lines.extend(f"  {algo:12s} {count}" for algo, count in top1)
    print("\n".join(out_lines))
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        top3_csv = ["experiment_id,rank1,rank2,rank3"]
        top3_csv += [f"{e},{','.join(t[:3])}" for e, t in tops.items()]
        (out_dir / "top3.csv").write_text("\n".join(top3_csv) + "\n", encoding="utf-8")
        (out_dir / "top3_frequency.csv").write_text(
            "algorithm,frequency\n" + "\n".join(f"{a},{c}" for a, c in freq) + "\n",
            encoding="utf-8")
        (out_dir / "top1_frequency.csv").write_text(
            "algorithm,frequency\n" + "\n".join(f"{a},{c}" for a, c in top1) + "\n",
            encoding="utf-8")
    return 0


def cmd_export_curves(args) -> int:
    records = load_records_dir(args.records)
    curves = confidence_curves(records, args.bucket)
    lines = ["algorithm,global_step,mean_return,ci_half_width,n_seeds"]
    for algo, rows in curves.items():
        for step, mean, half, n in rows:
            lines.append(f"{algo},{step},{mean!r},{half!r},{n}")
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote curves for {len(curves)} algorithms to {args.out}")
    return 0


def cmd_export_profile(args) -> int:
    records_dir = Path(args.records)
    pattern = f"{args.experiment or '*'}__{args.algo}__seed{args.seed}.profile.csv"
    matches = sorted(records_dir.glob(pattern))
    if not matches:
        raise FileNotFoundError(
            f"no profile sidecar matching {pattern} in {records_dir} "
            "(profiles are written by RCE training runs)")
    if len(matches) > 1:
        raise UsageError(f"ambiguous profile match {pattern}; pass --experiment")
    lines = Path(matches[0]).read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    if header != ["pressure_hPa", "temperature_K", "simulated_K"]:
        raise ValueError(f"{matches[0]}: unexpected profile format")
    out_lines = ["pressure_hPa,simulated_K,observed_K,difference_K"]
    for row in lines[1:]:
        p, obs, sim = (float(v) for v in row.split(","))
        out_lines.append(f"{p!r},{sim!r},{obs!r},{sim - obs!r}")
    Path(args.out).write_text("\n".join(out_lines) + "\n", encoding="utf-8")
    print(f"wrote 17-level profile table to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "train":
            return cmd_train(args)
        if args.command == "tune":
            return cmd_tune(args)
        if args.command == "evaluate":
            return cmd_evaluate(args)
        if args.command == "rank":
            return cmd_rank(args)
        if args.command == "export":
            if args.what == "curves":
                return cmd_export_curves(args)
            return cmd_export_profile(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, ValueError, KeyError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
