#!/usr/bin/env python3
"""
🚀 Mirror-Diffusion Pipeline CLI
================================
End-to-end commands for quantum state generation:

    gendata  draw a labeled three-class dataset (QSD1)
    train    fit the score model in the dual (or primal) space (QCK1)
    sample   generate states from a checkpoint, with guidance and label interpolation
    eval     compare generated and reference datasets, optionally as a CI gate

Exit status: 0 on success, 1 on error, 2 when the eval gate fails.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import torch

from mirrorstate.config import (
    ENVIRONMENT,
    LOG_LEVEL,
    SENTRY_DSN,
    ConfigError,
    RunConfig,
    load_run_config,
    parse_value,
)
from mirrorstate.diffusion import (
    Checkpoint,
    GuidanceSpec,
    generate_states,
    load_checkpoint,
    save_checkpoint,
    train,
)
from mirrorstate.linalg import num_qubits, validate_density
from mirrorstate.metrics import check_gate, full_report, write_observables
from mirrorstate.mirror import to_model_space
from mirrorstate.quantum import (
    ClassLabel,
    StateDataset,
    generate_dataset,
    random_hermitian_baseline,
    read_dataset,
    write_dataset,
)
from monitoring.performance import PerformanceTracker
from monitoring.sentry_config import SentryManager

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_GATE = 2


class CLIError(Exception):
    """Invalid command-line usage or incompatible inputs."""
    pass


# --- Config resolution ---

def _parse_set(pairs: Optional[List[str]]) -> Dict[str, Any]:
    overrides = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise CLIError(f"--set expects key=value, got '{pair}'")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = parse_value(value)
    return overrides


def _parse_counts(text: str) -> List[int]:
    try:
        counts = [int(part) for part in text.split(",")]
    except ValueError:
        raise CLIError(f"--counts expects three integers like 100,100,100, got '{text}'")
    if len(counts) != 3 or any(c < 0 for c in counts):
        raise CLIError(f"--counts expects three non-negative integers, got '{text}'")
    return counts


def _flag_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Maps command flags onto config keys (only flags that were given)."""
    mapping = {
        "gendata": {"qubits": "data.qubits", "seed": "data.seed", "haar": "data.haar_method"},
        "train": {"iterations": "train.iterations", "seed": "train.seed", "batch_size": "train.batch_size"},
        "sample": {
            "steps": "sample.steps", "count": "sample.count", "guidance": "sample.guidance",
            "sampler": "sample.sampler", "integrator": "sample.integrator", "seed": "sample.seed",
        },
        "eval": {"projections": "eval.projections", "seed": "eval.seed"},
    }[args.command]
    overrides = {key: getattr(args, flag) for flag, key in mapping.items() if getattr(args, flag, None) is not None}

    if getattr(args, "counts", None):
        overrides["data.counts"] = _parse_counts(args.counts)
    if getattr(args, "no_mirror", False):
        overrides["mirror.enabled"] = False
    if getattr(args, "label", None):
        try:
            overrides["sample.label"] = ClassLabel.parse(args.label).weights
        except ValueError as e:
            raise CLIError(str(e))
    if getattr(args, "subsystem", None):
        overrides["eval.subsystem"] = [int(q) for q in args.subsystem.split(",")]
    if getattr(args, "gate", False):
        overrides["gate.enabled"] = True
    return overrides


def resolve_config(args: argparse.Namespace, base: Optional[RunConfig] = None) -> RunConfig:
    """defaults (or `base`) < --config file < command flags < --set overrides."""
    overrides = _flag_overrides(args)
    overrides.update(_parse_set(args.set))
    return load_run_config(path=args.config, overrides=overrides, base=base)


def _apply_runtime(run: RunConfig) -> None:
    torch.set_num_threads(run.runtime.threads)


# --- Commands ---

def cmd_gendata(args: argparse.Namespace) -> int:
    run = resolve_config(args)
    _apply_runtime(run)
    tracker = PerformanceTracker()

    with tracker.track_stage("gendata"):
        if args.baseline:
            total = sum(run.data.counts)
            rng = np.random.default_rng(run.data.seed)
            dataset = StateDataset(
                qubits=run.data.qubits,
                labels=np.zeros((total, 3)),
                states=random_hermitian_baseline(2 ** run.data.qubits, rng, size=total),
                seed=run.data.seed,
                isometric_scaling=run.mirror.isometric_scaling,
                generator_config=run.canonical_text(),
            )
        else:
            try:
                dataset = generate_dataset(
                    run.data.counts,
                    run.data.qubits,
                    run.generator(),
                    seed=run.data.seed,
                    isometric_scaling=run.mirror.isometric_scaling,
                    config_text=run.canonical_text(),
                )
            except ValueError as e:
                raise CLIError(f"Invalid class specification: {e}")
        write_dataset(dataset, args.out)

    tracker.log_summary("gendata")
    SentryManager.add_breadcrumb("dataset written", data={"path": str(args.out), "records": len(dataset)})
    print(f"Wrote {len(dataset)} records ({run.data.qubits} qubits) to {args.out}")
    for name, count in sorted(dataset.class_counts().items()):
        print(f"  {name}: {count}")
    if len(dataset):
        summary = dataset.validity().summary()
        print(f"Validity scan: {summary['passed']}/{summary['count']} passed (tol {summary['tolerance']:g})")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    dataset = read_dataset(args.data)
    previous: Optional[Checkpoint] = load_checkpoint(args.resume) if args.resume else None
    run = resolve_config(args, base=previous.config if previous else None)
    _apply_runtime(run)

    if len(dataset) == 0:
        raise CLIError(f"Dataset {args.data} is empty")
    if dataset.isometric_scaling != run.mirror.isometric_scaling:
        raise CLIError(
            f"Dataset was written with isometric_scaling={dataset.isometric_scaling} "
            f"but mirror.isometric_scaling={run.mirror.isometric_scaling}"
        )

    net, resume = None, None
    if previous is not None:
        if previous.mirror != run.mirror:
            raise CLIError("Resumed training must keep the checkpoint's mirror settings")
        if previous.resume is None:
            raise CLIError(f"Checkpoint {args.resume} carries no optimizer state to resume from")
        net, resume = previous.build_network(), previous.resume

    vectors = to_model_space(dataset.states, run.mirror)
    space = "dual" if run.mirror.enabled else "primal"
    logger.info(f"Training on {len(dataset)} {space}-space vectors of length {vectors.shape[1]}")

    tracker = PerformanceTracker()
    with tracker.track_stage("train"):
        result = train(
            vectors,
            dataset.labels,
            run.train,
            run.schedule,
            run.arch,
            net=net,
            resume=resume,
            on_log=lambda row: tracker.log_training_step(row["iteration"], row["loss"], row["lr"]),
        )

    checkpoint = Checkpoint.from_network(
        result.net, run, iterations=result.iterations, final_loss=result.final_loss, resume=result.resume
    )
    save_checkpoint(checkpoint, args.out)
    log_path = Path(args.log) if args.log else Path(f"{args.out}.log.csv")
    tracker.flush_training_log(log_path)

    tracker.log_summary("train")
    SentryManager.add_breadcrumb("training finished", data={"iterations": result.iterations, "loss": result.final_loss})
    print(f"Trained {result.iterations} iterations in the {space} space; final loss {result.final_loss:.6g}")
    print(f"Checkpoint: {args.out}  training log: {log_path}")
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    run = resolve_config(args, base=checkpoint.config)
    _apply_runtime(run)

    if run.mirror.enabled != checkpoint.mirror.enabled:
        trained = "dual (mirror)" if checkpoint.mirror.enabled else "primal (no-mirror)"
        raise CLIError(f"Checkpoint was trained in the {trained} space; mirror.enabled must match it")
    if not checkpoint.mirror.enabled:
        logger.warning("Checkpoint was trained without the mirror map; outputs are not guaranteed to be valid states")

    label = ClassLabel(run.sample.label) if run.sample.label is not None else None
    spec = GuidanceSpec(gamma=run.sample.guidance, label=label)

    tracker = PerformanceTracker(mirror_path=checkpoint.mirror.enabled)
    with tracker.track_stage("sample"):
        result = generate_states(
            checkpoint.build_network(),
            checkpoint.mirror,
            spec,
            checkpoint.schedule,
            run.sample.steps,
            run.sample.count,
            seed=run.sample.seed,
            sampler=run.sample.sampler,
            integrator=run.sample.integrator,
            batch_size=run.sample.batch_size,
        )
    summary = result.summary()
    tracker.log_validity(summary)

    label_row = label.as_array() if label is not None else np.zeros(3)
    dataset = StateDataset(
        qubits=num_qubits(result.states),
        labels=np.tile(label_row, (run.sample.count, 1)),
        states=result.states,
        seed=run.sample.seed,
        isometric_scaling=checkpoint.mirror.isometric_scaling,
        generator_config=run.canonical_text(),
    )
    write_dataset(dataset, args.out)

    tracker.log_summary("sample")
    SentryManager.add_breadcrumb("samples written", data={"path": str(args.out), "records": len(dataset)})
    target = label.describe() if label is not None else "unconditional"
    print(f"Wrote {len(dataset)} generated states ({target}, guidance {run.sample.guidance:g}) to {args.out}")
    print(
        f"Validity: {summary['passed']}/{summary['count']} passed; "
        f"violation rate {1.0 - summary['pass_rate']:.4f}; PSD violation rate {summary['psd_violation_rate']:.4f}"
    )
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    generated = read_dataset(args.generated)
    reference = read_dataset(args.reference)
    run = resolve_config(args)
    _apply_runtime(run)

    if generated.dim != reference.dim:
        raise CLIError(f"Incompatible datasets: dimension {generated.dim} vs {reference.dim}")

    tracker = PerformanceTracker()
    with tracker.track_stage("eval"):
        report = full_report(
            generated, reference, run.eval.subsystem, run.eval, seed=run.eval.seed, config_text=run.canonical_text()
        )
    failures = check_gate(report, run.gate) if run.gate.enabled else []
    report = report.model_copy(update={"gate_failures": failures})

    Path(args.report).write_text(report.to_json(), encoding="utf-8")
    observables_path = Path(args.observables) if args.observables else Path(args.report).with_suffix(".csv")
    write_observables(generated, observables_path, run.eval.subsystem)
    validity = validate_density(generated.states).summary()
    tracker.log_summary("eval")

    print(f"Report: {args.report}  observables: {observables_path}")
    for metric in ("swd", "mswd", "w1", "energy_mmd", "negativity_w1"):
        print(f"  {metric}: {getattr(report, metric):.6g}")
    print(f"Generated validity: {validity['passed']}/{validity['count']} passed")

    if failures:
        for failure in failures:
            logger.error(f"Gate failure: {failure}")
        print(f"Gate FAILED: {len(failures)} threshold(s) exceeded")
        return EXIT_GATE
    return EXIT_OK


COMMANDS = {"gendata": cmd_gendata, "train": cmd_train, "sample": cmd_sample, "eval": cmd_eval}


# --- Argument parsing ---

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Flat key = value run-config file (default: MIRRORSTATE_CONFIG)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="Override any config key; repeatable")
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(prog="mirrorstate", description="Mirror diffusion for quantum density matrices.")
    sub = parser.add_subparsers(dest="command", required=True)

    gendata = sub.add_parser("gendata", parents=[common], help="Generate a labeled QSD1 dataset.")
    gendata.add_argument("--out", required=True, type=Path, help="Output dataset path")
    gendata.add_argument("--qubits", type=int, help="Qubits per state")
    gendata.add_argument("--counts", help="Per-class counts product,pairwise,fully (e.g. 100,100,100)")
    gendata.add_argument("--seed", type=int, help="Dataset seed")
    gendata.add_argument("--haar", choices=["lie", "qr"], help="Haar sampler for unitaries")
    gendata.add_argument("--baseline", action="store_true", help="Write the random-Hermitian reference baseline instead")

    train_parser = sub.add_parser("train", parents=[common], help="Train the score model.")
    train_parser.add_argument("--data", required=True, type=Path, help="Training dataset (QSD1)")
    train_parser.add_argument("--out", required=True, type=Path, help="Output checkpoint path")
    train_parser.add_argument("--iterations", type=int, help="Optimizer steps to run")
    train_parser.add_argument("--batch-size", dest="batch_size", type=int, help="Minibatch size")
    train_parser.add_argument("--seed", type=int, help="Training seed")
    train_parser.add_argument("--no-mirror", action="store_true", help="Train on primal coordinates (baseline)")
    train_parser.add_argument("--resume", type=Path, help="Continue from this checkpoint's optimizer state")
    train_parser.add_argument("--log", type=Path, help="Training log CSV (default: <out>.log.csv)")

    sample = sub.add_parser("sample", parents=[common], help="Generate states from a checkpoint.")
    sample.add_argument("--checkpoint", required=True, type=Path, help="Checkpoint (QCK1)")
    sample.add_argument("--out", required=True, type=Path, help="Output dataset path")
    sample.add_argument("--count", type=int, help="Number of states")
    sample.add_argument("--steps", type=int, help="Sampler grid steps")
    sample.add_argument("--guidance", type=float, help="Guidance strength gamma")
    sample.add_argument("--label", help="Target label w1,w2,w3 or a class name")
    sample.add_argument("--sampler", choices=["sde", "ode"], help="Reverse SDE or probability-flow ODE")
    sample.add_argument("--integrator", choices=["heun", "rk4"], help="ODE integrator")
    sample.add_argument("--seed", type=int, help="Sampling seed")
    sample.add_argument("--no-mirror", action="store_true", help="Decode without the mirror map (checkpoint must be primal)")

    eval_parser = sub.add_parser("eval", parents=[common], help="Compare generated and reference datasets.")
    eval_parser.add_argument("--generated", required=True, type=Path, help="Generated dataset (QSD1)")
    eval_parser.add_argument("--reference", required=True, type=Path, help="Reference dataset (QSD1)")
    eval_parser.add_argument("--report", required=True, type=Path, help="Report JSON path")
    eval_parser.add_argument("--observables", type=Path, help="Observables CSV (default: report path with .csv)")
    eval_parser.add_argument("--subsystem", help="Qubits of subsystem A for negativity, e.g. 1 or 1,2")
    eval_parser.add_argument("--projections", type=int, help="SWD projection count")
    eval_parser.add_argument("--seed", type=int, help="Metric seed")
    eval_parser.add_argument("--gate", action="store_true", help="Exit with status 2 when a gate threshold is exceeded")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else getattr(logging, LOG_LEVEL),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    SentryManager.initialize(ENVIRONMENT, SENTRY_DSN)
    SentryManager.set_tag("command", args.command)

    try:
        with SentryManager.start_transaction(name=f"mirrorstate.{args.command}", op="cli"):
            return COMMANDS[args.command](args)
    except (CLIError, ConfigError, ValueError, ArithmeticError, OSError) as e:
        SentryManager.capture_exception_with_context(e, extra_context={"command": args.command, "argv": argv or sys.argv[1:]})
        logger.error(f"❌ {args.command} failed: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
