"""Command-line front end: run, compare, diagnose.

``run`` executes every (dataset x learner x seed) cell and writes JSON-lines
records (a config header, per-checkpoint records, one summary per run).
``compare`` additionally Welch-tests every learner pair per dataset and
emits a win-count matrix. ``diagnose`` prints dataset shape statistics and
the top-eigenvector explained-variance ratio.

Exit codes: 0 success, 1 validation (bad flags, unreadable inputs), 2
runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .bandit import LEARNER_SPECS, LearnerParams, make_learner
from .datasets import (BanditEnv, DatasetError, apply_scaling, fit_scaling,
                       load_csv, subsample, top_eigen_explained_variance)
from .evaluation import (RunConfig, comparison_record, run, run_records,
                         welch_test)


def _positive_int(name):
    def parse(text):
        value = int(text)
        if value < 1:
            raise argparse.ArgumentTypeError(f"{name} must be >= 1")
        return value
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emtree",
                                     description="Memory-tree contextual-bandit experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_dataset_flags(p):
        p.add_argument("--dataset", action="append", required=True, metavar="CSV",
                       help="dataset file; repeat for several")
        p.add_argument("--label-col", default="-1", metavar="NAME_OR_INDEX",
                       help="label column by header name or index (default: last column)")
        p.add_argument("--no-header", action="store_true",
                       help="treat the first CSV line as data")

    def add_run_flags(p):
        add_dataset_flags(p)
        p.add_argument("--learner", action="append", required=True,
                       choices=LEARNER_SPECS, help="learner spec; repeat for several")
        p.add_argument("--seeds", type=_positive_int("--seeds"), default=50,
                       help="number of replicate seeds 0..N-1 (default 50)")
        p.add_argument("--take", type=_positive_int("--take"), default=4000,
                       help="subsample size per run (default 4000)")
        p.add_argument("--epsilon", type=float, default=0.1,
                       help="exploration rate (default 0.1)")
        p.add_argument("--leaf-capacity", type=int, default=100,
                       help="tree leaf capacity (default 100)")
        p.add_argument("--eta", type=float, default=0.01,
                       help="scorer learning rate (default 0.01)")
        p.add_argument("--budget", type=int, default=None,
                       help="memory budget; unbounded when omitted")
        p.add_argument("--hash-bits", type=int, default=18,
                       help="parametric hash table bits (default 18)")
        p.add_argument("--base-lr", type=float, default=0.5,
                       help="parametric base learning rate (default 0.5)")
        p.add_argument("--jobs", type=_positive_int("--jobs"), default=1,
                       help="parallel worker processes (default 1)")
        p.add_argument("--output", default="-", metavar="PATH",
                       help="JSON-lines output path ('-' for stdout)")

    p_run = sub.add_parser("run", help="run learners and write progressive-reward records")
    add_run_flags(p_run)

    p_cmp = sub.add_parser("compare", help="run >= 2 learners and Welch-test every pair")
    add_run_flags(p_cmp)
    p_cmp.add_argument("--alpha", type=float, default=0.05,
                       help="significance level (default 0.05)")

    p_diag = sub.add_parser("diagnose", help="print dataset statistics")
    add_dataset_flags(p_diag)
    return parser


def _validate_run_args(args) -> None:
    if not 0.0 <= args.epsilon <= 1.0:
        raise ValueError("--epsilon must lie in [0, 1]")
    if args.leaf_capacity < 2:
        raise ValueError("--leaf-capacity must be >= 2")
    if args.eta <= 0:
        raise ValueError("--eta must be positive")
    if args.budget is not None and args.budget < 1:
        raise ValueError("--budget must be >= 1")
    if not 1 <= args.hash_bits <= 30:
        raise ValueError("--hash-bits must lie in [1, 30]")
    if args.base_lr <= 0:
        raise ValueError("--base-lr must be positive")
    if getattr(args, "alpha", 0.05) <= 0 or getattr(args, "alpha", 0.05) >= 1:
        raise ValueError("--alpha must lie in (0, 1)")


def _parse_label_col(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def _prepare_datasets(args):
    prepared = []
    for path in args.dataset:
        ds = load_csv(path, label_column=_parse_label_col(args.label_col),
                      has_header=not args.no_header)
        prepared.append((Path(path).stem, apply_scaling(ds, fit_scaling(ds))))
    return prepared


def _params_from_args(args) -> LearnerParams:
    return LearnerParams(epsilon=args.epsilon, leaf_capacity=args.leaf_capacity,
                         eta=args.eta, memory_budget=args.budget,
                         hash_bits=args.hash_bits, base_lr=args.base_lr)


def _execute_run(task):
    ds, learner_spec, params, seed, take = task
    data_ss, learner_ss = np.random.SeedSequence(seed).spawn(2)
    sample = subsample(ds, take, np.random.default_rng(data_ss))
    env = BanditEnv(sample)
    learner = make_learner(learner_spec, sample.n_features, sample.n_classes,
                           params, learner_ss)
    return run(learner, env, RunConfig(horizon=len(env), seed=seed))


def _execute_all(tasks, jobs):
    if jobs == 1:
        return [_execute_run(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map() returns results in task order: output stays deterministic
        # no matter how the pool schedules the work.
        return list(pool.map(_execute_run, tasks))


def _config_record(args, command: str) -> dict:
    record = {"record": "config", "command": command,
              "datasets": list(args.dataset), "learners": list(args.learner),
              "seeds": args.seeds, "take": args.take, "epsilon": args.epsilon,
              "leaf_capacity": args.leaf_capacity, "eta": args.eta,
              "budget": args.budget, "hash_bits": args.hash_bits,
              "base_lr": args.base_lr, "label_col": args.label_col,
              "backend": _kernels.BACKEND, "version": __version__}
    if command == "compare":
        record["alpha"] = args.alpha
    return record


def _write_records(records, output: str) -> None:
    text = "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in records)
    if output == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def cmd_run(args) -> int:
    _validate_run_args(args)
    prepared = _prepare_datasets(args)
    params = _params_from_args(args)
    tasks = [(ds, learner, params, seed, args.take)
             for _, ds in prepared for learner in args.learner
             for seed in range(args.seeds)]
    names = [(name, learner, seed)
             for name, _ in prepared for learner in args.learner
             for seed in range(args.seeds)]
    results = _execute_all(tasks, args.jobs)
    records = [_config_record(args, "run")]
    for (name, learner, _), result in zip(names, results):
        records.extend(run_records(result, name, learner))
    _write_records(records, args.output)
    return 0


def cmd_compare(args) -> int:
    _validate_run_args(args)
    learners = list(args.learner)  # positional: duplicate specs stay distinct cells
    if len(learners) < 2:
        raise ValueError("--learner must be given at least twice for compare")
    prepared = _prepare_datasets(args)
    params = _params_from_args(args)
    tasks = [(ds, learner, params, seed, args.take)
             for _, ds in prepared for learner in learners
             for seed in range(args.seeds)]
    results = _execute_all(tasks, args.jobs)

    records = [_config_record(args, "compare")]
    finals: dict[str, list[list[float]]] = {}
    cursor = 0
    for name, _ in prepared:
        finals[name] = []
        for learner in learners:
            cell = results[cursor : cursor + args.seeds]
            cursor += args.seeds
            for result in cell:
                records.extend(run_records(result, name, learner)[-1:])
            finals[name].append([r.final for r in cell])

    wins = [[None if i == j else 0 for j in range(len(learners))]
            for i in range(len(learners))]
    for name, _ in prepared:
        per = finals[name]
        for i in range(len(learners)):
            for j in range(i + 1, len(learners)):
                outcome = welch_test(per[i], per[j], alpha=args.alpha,
                                     labels=(learners[i], learners[j]))
                records.append(comparison_record(name, outcome))
                if outcome.winner != "tie":
                    # sign of t identifies the side even for duplicate names
                    winner_idx = i if outcome.t_stat > 0 else j
                    loser_idx = j if winner_idx == i else i
                    wins[winner_idx][loser_idx] += 1
    records.append({"record": "win_matrix", "learners": learners, "wins": wins})
    _write_records(records, args.output)
    _print_matrix(learners, wins)
    return 0


def _print_matrix(learners, wins) -> None:
    width = max(len(name) for name in learners) + 2
    out = sys.stderr
    out.write("wins (row beats column, significant):\n")
    out.write(" " * width + "".join(f"{name:>{width}}" for name in learners) + "\n")
    for i, name in enumerate(learners):
        cells = "".join(f"{'—' if wins[i][j] is None else wins[i][j]:>{width}}"
                        for j in range(len(learners)))
        out.write(f"{name:>{width}}" + cells + "\n")


def cmd_diagnose(args) -> int:
    for path in args.dataset:
        ds = load_csv(path, label_column=_parse_label_col(args.label_col),
                      has_header=not args.no_header)
        explained = top_eigen_explained_variance(ds)
        print(f"dataset: {Path(path).stem}")
        print(f"rows: {len(ds)}")
        print(f"features: {ds.n_features}")
        print(f"classes: {ds.n_classes}")
        print(f"imputed_cells: {ds.imputed_cells}")
        print(f"top_eigenvector_explained: {explained:.4f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on flag errors; our contract reserves 2 for
        # runtime failures, so map those to the validation code.
        return 0 if exc.code in (0, None) else 1
    handlers = {"run": cmd_run, "compare": cmd_compare, "diagnose": cmd_diagnose}
    try:
        return handlers[args.command](args)
    except (DatasetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # unexpected -> runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
