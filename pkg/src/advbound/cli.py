"""Command line interface.

Four commands: `bound` estimates the adversarial-risk lower bound, `attack`
measures empirical clean/adversarial error of the built-in classifier,
`sweep-t` tabulates expansion fractions over sphere counts, and `invert`
finds the largest attack strength fitting a risk budget. All emit a JSON
report document; sweep-t can additionally write its table as CSV, and every
report path can render figures next to its output. Exit codes: 0 success,
2 validation error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import figures, reports
from .attacks import AttackConfig, clean_error, run_attack
from .classifier import LogisticClassifier, train_toy_classifier
from .datasets import (
    DatasetFormat,
    DatasetSource,
    Normalization,
    infer_format,
    load_dataset,
)
from .distindex import load_distance_cache, save_distance_cache
from .errors import AdvBoundError, DomainError, FormatError, NumericalError
from .estimator import BoundConfig, estimate_bound, invert_bound, sweep_T
from .metrics import (
    L2,
    TRACE_AMPLITUDE,
    amplitude_fidelity,
    l2_distance,
    metric_from_name,
    trace_distance_from_fidelity,
)

_AUTO_FIGURES = "__auto__"


def _add_dataset_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="dataset path (CSV, IDX images, or NPZ)")
    parser.add_argument("--format", choices=[f.value for f in DatasetFormat],
                        help="input format; inferred from the extension when omitted")
    parser.add_argument("--labels", help="IDX label file accompanying --input")
    parser.add_argument("--label-column", type=int,
                        help="CSV column holding class labels (negative counts from the end)")
    parser.add_argument("--normalize", choices=[n.value for n in Normalization],
                        default="none", help="feature normalization applied after loading")
    parser.add_argument("--subsample", type=int, help="keep this many rows, drawn without replacement")
    parser.add_argument("--subsample-seed", type=int, default=0)


def _add_bound_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--metric", choices=["l2", "trace-amplitude", "trace-angle"],
                        default="l2")
    parser.add_argument("--epsilon", type=float, default=0.0, help="perturbation strength")
    parser.add_argument("--alpha", type=float, required=True,
                        help="clean error rate the bound is evaluated at")
    parser.add_argument("--spheres", type=int, default=20, help="region size cap T")
    parser.add_argument("--iterations", type=int, default=10, help="random partitions m")
    parser.add_argument("--alpha-range", help="LO:HI absorbed-fraction grid (default alpha:1.1*alpha)")
    parser.add_argument("--split", type=float, default=0.7, help="train fraction of each partition")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--distance-cache",
                        help="binary cache path for the full-set distance matrix; created if absent")


def _add_common_output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--output", help="report path (stdout when omitted)")
    parser.add_argument("--figures", nargs="?", const=_AUTO_FIGURES,
                        help="render figures into this directory (default: alongside --output)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="advbound",
        description="Model-independent lower bounds on adversarial error, "
                    "with matching empirical attacks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bound = sub.add_parser("bound", help="estimate the adversarial-risk lower bound")
    _add_dataset_args(bound)
    _add_bound_args(bound)
    _add_common_output_args(bound)
    bound.set_defaults(handler=_cmd_bound)

    attack = sub.add_parser("attack", help="run a gradient attack on the toy classifier")
    _add_dataset_args(attack)
    attack.add_argument("--attack", choices=["pgd-l2", "td-pgd"], required=True)
    attack.add_argument("--epsilon", type=float, required=True)
    attack.add_argument("--steps", type=int, default=40)
    attack.add_argument("--step-size", type=float)
    attack.add_argument("--temperature", type=float, default=1 / 50,
                        help="softmax temperature used while attacking")
    attack.add_argument("--allow-negative", action="store_true",
                        help="skip the nonnegative clamp inside td-pgd")
    attack.add_argument("--train", action="store_true",
                        help="train a fresh classifier on the input data (the default "
                             "when --model-in is not given)")
    attack.add_argument("--model-in", help="load classifier weights from this JSON file")
    attack.add_argument("--model-out", help="save trained classifier weights to this JSON file")
    attack.add_argument("--train-temperature", type=float, default=1.0)
    attack.add_argument("--learning-rate", type=float, default=5.0)
    attack.add_argument("--epochs", type=int, default=300)
    attack.add_argument("--seed", type=int, default=0)
    _add_common_output_args(attack)
    attack.set_defaults(handler=_cmd_attack)

    sweep = sub.add_parser("sweep-t", help="tabulate expansion fractions over sphere counts")
    _add_dataset_args(sweep)
    _add_bound_args(sweep)
    sweep.add_argument("--t-values", required=True, help="comma-separated sphere counts, e.g. 1,5,20")
    sweep.add_argument("--table", help="also write the sweep table to this CSV file")
    _add_common_output_args(sweep)
    sweep.set_defaults(handler=_cmd_sweep)

    invert = sub.add_parser("invert", help="largest attack strength within a risk budget")
    _add_dataset_args(invert)
    _add_bound_args(invert)
    invert.add_argument("--risk-budget", type=float, required=True)
    invert.add_argument("--eps-hi", type=float, required=True)
    invert.add_argument("--tol", type=float, default=0.01)
    _add_common_output_args(invert)
    invert.set_defaults(handler=_cmd_invert)
    return parser


def _dataset_source(args) -> DatasetSource:
    fmt = DatasetFormat(args.format) if args.format else infer_format(args.input)
    return DatasetSource(
        path=args.input,
        format=fmt,
        labels_path=args.labels,
        label_column=args.label_column,
        normalize=Normalization(args.normalize),
        subsample=args.subsample,
        subsample_seed=args.subsample_seed,
    )


def _dataset_echo(args, source: DatasetSource) -> dict:
    return {
        "input": args.input,
        "format": source.format.value,
        "labels": args.labels,
        "label_column": args.label_column,
        "normalize": source.normalize.value,
        "subsample": args.subsample,
        "subsample_seed": args.subsample_seed,
    }


def _parse_alpha_range(text):
    if text is None:
        return None, None
    parts = text.split(":")
    if len(parts) != 2:
        raise DomainError(f"--alpha-range expects LO:HI, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise DomainError(f"--alpha-range expects numbers, got {text!r}") from None


def _bound_config(args, *, epsilon=None) -> BoundConfig:
    lo, hi = _parse_alpha_range(args.alpha_range)
    return BoundConfig(
        epsilon=args.epsilon if epsilon is None else epsilon,
        alpha=args.alpha,
        metric=metric_from_name(args.metric),
        spheres=args.spheres,
        iterations=args.iterations,
        alpha_lo=lo,
        alpha_hi=hi,
        split_fraction=args.split,
        seed=args.seed,
    )


def _bound_echo(args, config: BoundConfig, source: DatasetSource) -> dict:
    lo, hi = config.alpha_range()
    echo = {"name": args.command}
    echo.update(_dataset_echo(args, source))
    echo.update({
        "metric": config.metric.name,
        "epsilon": config.epsilon,
        "alpha": config.alpha,
        "spheres": config.spheres,
        "iterations": config.iterations,
        "alpha_lo": lo,
        "alpha_hi": hi,
        "split": config.split_fraction,
        "seed": config.seed,
        "distance_cache": args.distance_cache,
    })
    return echo


def _load_or_build_dist(args, samples, metric):
    if not args.distance_cache:
        return None
    path = args.distance_cache
    if os.path.exists(path):
        dist, _kind = load_distance_cache(path, expected_kind=metric.kind)
        if dist.shape[0] != samples.n:
            raise FormatError(
                f"{path}: cache holds {dist.shape[0]} samples, dataset has {samples.n}"
            )
        return dist
    dist = metric.pairwise(samples.features)
    save_distance_cache(path, dist, metric.kind)
    return dist


def _figure_path(args, suffix: str):
    if args.figures is None:
        return None
    if args.figures == _AUTO_FIGURES:
        directory = str(Path(args.output).parent) if args.output else "."
    else:
        directory = args.figures
        os.makedirs(directory, exist_ok=True)
    stem = Path(args.output).stem if args.output else args.command
    return os.path.join(directory, f"{stem}-{suffix}.png")


def _emit(args, doc: dict) -> None:
    payload = reports.to_json_bytes(doc)
    if args.output:
        with open(args.output, "wb") as handle:
            handle.write(payload)
    else:
        sys.stdout.write(payload.decode("utf-8"))


def _cmd_bound(args) -> int:
    started = time.perf_counter()
    source = _dataset_source(args)
    samples = load_dataset(source)
    config = _bound_config(args)
    dist = _load_or_build_dist(args, samples, config.metric)
    report = estimate_bound(samples, config, threads=args.threads, dist=dist)
    doc = reports.report_document(
        command=_bound_echo(args, config, source),
        result=reports.bound_result(report),
        warnings=report.warnings,
        threads=args.threads,
        seconds=time.perf_counter() - started,
    )
    _emit(args, doc)
    figure = _figure_path(args, "regression")
    if figure:
        figures.render_bound_figure(report, figure)
    return 0


def _cmd_attack(args) -> int:
    started = time.perf_counter()
    if args.model_in and args.train:
        raise DomainError("--model-in and --train are mutually exclusive")
    source = _dataset_source(args)
    samples = load_dataset(source)
    if args.model_in:
        with open(args.model_in, "r", encoding="utf-8") as handle:
            classifier = LogisticClassifier.from_document(json.load(handle))
        trained = False
    else:
        classifier = train_toy_classifier(
            samples,
            temperature=args.train_temperature,
            learning_rate=args.learning_rate,
            epochs=args.epochs,
            seed=args.seed,
        )
        trained = True
    if args.model_out:
        with open(args.model_out, "w", encoding="utf-8") as handle:
            json.dump(classifier.to_document(), handle, indent=2)
            handle.write("\n")

    metric = L2 if args.attack == "pgd-l2" else TRACE_AMPLITUDE
    attack_config = AttackConfig(
        epsilon=args.epsilon,
        steps=args.steps,
        step_size=args.step_size,
        metric=metric,
        clamp_nonnegative=not args.allow_negative,
    )
    attacker = classifier.with_temperature(args.temperature)
    clean = clean_error(attacker, samples)
    outcome = run_attack(attacker, samples, attack_config, threads=args.threads)

    command = {"name": "attack"}
    command.update(_dataset_echo(args, source))
    command.update({
        "attack": args.attack,
        "epsilon": args.epsilon,
        "steps": args.steps,
        "step_size": attack_config.resolved_step_size(),
        "temperature": args.temperature,
        "clamp_nonnegative": not args.allow_negative,
        "model_in": args.model_in,
        "trained": trained,
        "train_temperature": args.train_temperature if trained else None,
        "learning_rate": args.learning_rate if trained else None,
        "epochs": args.epochs if trained else None,
        "seed": args.seed,
    })
    result = {
        "clean_error": clean,
        "adversarial_error": outcome.adversarial_error,
        "violations": outcome.violations,
        "samples": samples.n,
        "classes": samples.num_classes,
    }
    warnings = []
    if outcome.violations:
        warnings.append(f"{outcome.violations} attacked samples violated the metric constraint")
    doc = reports.report_document(
        command=command,
        result=result,
        warnings=warnings,
        threads=args.threads,
        seconds=time.perf_counter() - started,
    )
    _emit(args, doc)
    figure = _figure_path(args, "perturbation")
    if figure:
        if args.attack == "pgd-l2":
            moved = [l2_distance(outcome.attacked[i], samples.features[i])
                     for i in range(samples.n)]
        else:
            moved = [trace_distance_from_fidelity(
                         amplitude_fidelity(outcome.attacked[i], samples.features[i]))
                     for i in range(samples.n)]
        figures.render_attack_figure(moved, args.epsilon, figure)
    return 0


def _parse_t_values(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise DomainError(f"--t-values expects comma-separated integers, got {text!r}") from None
    if not values:
        raise DomainError("--t-values is empty")
    return values


def _cmd_sweep(args) -> int:
    started = time.perf_counter()
    source = _dataset_source(args)
    samples = load_dataset(source)
    config = _bound_config(args)
    t_values = _parse_t_values(args.t_values)
    dist = _load_or_build_dist(args, samples, config.metric)
    points = sweep_T(samples, config, t_values, threads=args.threads, dist=dist)

    command = _bound_echo(args, config, source)
    command["t_values"] = t_values
    doc = reports.report_document(
        command=command,
        result=reports.sweep_result(points),
        warnings=[],
        threads=args.threads,
        seconds=time.perf_counter() - started,
    )
    _emit(args, doc)
    if args.table:
        with open(args.table, "w", encoding="utf-8", newline="") as handle:
            reports.write_sweep_csv(handle, points)
    figure = _figure_path(args, "sweep")
    if figure:
        figures.render_sweep_figure(points, figure)
    return 0


def _cmd_invert(args) -> int:
    started = time.perf_counter()
    source = _dataset_source(args)
    samples = load_dataset(source)
    config = _bound_config(args, epsilon=0.0)
    probes: list = []
    strength = invert_bound(samples, config, args.risk_budget, args.eps_hi,
                            args.tol, threads=args.threads, probe_log=probes)

    command = _bound_echo(args, config, source)
    del command["epsilon"]  # the strength is the unknown being solved for
    command.update({
        "risk_budget": args.risk_budget,
        "eps_hi": args.eps_hi,
        "tol": args.tol,
    })
    result = {
        "max_strength": strength,
        "probes": [[eps, value] for eps, value in probes],
    }
    doc = reports.report_document(
        command=command,
        result=result,
        warnings=[],
        threads=args.threads,
        seconds=time.perf_counter() - started,
    )
    _emit(args, doc)
    figure = _figure_path(args, "inversion")
    if figure:
        figures.render_invert_figure(probes, args.risk_budget, strength, figure)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except AdvBoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
