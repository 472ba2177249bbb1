"""This module contains the subcommands of the command-line interface. Every command takes the
parsed arguments and a logger and returns the exit code."""

from __future__ import annotations

import argparse
import csv
from pathlib import Path
from typing import Any

import numpy as np

from pyvhrnn.cli.checkpoint import (
    Checkpoint,
    CheckpointError,
    checkpoint_load,
    checkpoint_save,
    load_params,
    restore_model,
)
from pyvhrnn.cli.run_config import RunConfig, dump_run_config, load_run_config
from pyvhrnn.dataio import (
    NormStats,
    SequenceDataset,
    SequenceRecord,
    Splits,
    load_jsonl,
    preprocess_chain,
    save_jsonl,
    split,
)
from pyvhrnn.diagnostics import MIN_TREND_LENGTH, emit_csv, emit_svg, kl_trend_stat, trace
from pyvhrnn.models import (
    DecoderHeads,
    SequenceModel,
    build_model,
    generate,
    reconcile_reference_counts,
)
from pyvhrnn.objectives import (
    EvalResult,
    ObjectiveConfig,
    TrainingState,
    evaluate,
    load_metrics,
    save_metrics,
    save_run_log,
    train,
)
from pyvhrnn.synthdata import SynthFields, SynthSettings, gen_dataset

CONFIG_FILE = "config.ini"
METRICS_FILE = "metrics.csv"
RUN_LOG_FILE = "run_log.csv"
LAST_CHECKPOINT = "last.ckpt"
BEST_CHECKPOINT = "best.ckpt"
BATTERY_FILE = "battery.csv"


def _seed(args: argparse.Namespace, fallback: int = 0) -> int:
    return fallback if args.seed is None else args.seed


def _with_split(dataset: SequenceDataset, name: str) -> SequenceDataset:
    return dataset.with_sequences(dataset.sequences, split=name)


def resolve_datasets(
    run: RunConfig, logger: Any
) -> tuple[SequenceDataset, SequenceDataset, SequenceDataset | None, list[NormStats]]:
    """Loads or generates the train, valid and test sets of a run and preprocesses them.

    Valid and test replay the statistics fitted on train, one entry per normalizing mode.

    Raises:
        ValueError: If train is given without valid.

    Returns:
        tuple[SequenceDataset, SequenceDataset, SequenceDataset | None, list[NormStats]]: train,
            valid, test and the train statistics of the preprocessing chain.
    """
    data = run.data
    test: SequenceDataset | None
    if data.synthetic:
        train_set = gen_dataset(SynthSettings.TRAIN, run.synth, run.seed, logger)
        valid_set = gen_dataset(SynthSettings.VALID, run.synth, run.seed, logger)
        test = gen_dataset(SynthSettings.TEST, run.synth, run.seed, logger)
    elif data.source is not None:
        train_set, valid_set, test = split(
            load_jsonl(data.source, logger), data.fractions, data.split_seed
        )
    else:
        if data.valid is None:
            raise ValueError("[data] valid is required when [data] train is set")
        train_set = _with_split(load_jsonl(str(data.train), logger), Splits.TRAIN)
        valid_set = _with_split(load_jsonl(data.valid, logger), Splits.VALID)
        test = None if data.test is None else _with_split(load_jsonl(data.test, logger), Splits.TEST)
    train_set, stats = preprocess_chain(train_set, data.preprocess)
    valid_set, _ = preprocess_chain(valid_set, data.preprocess, stats)
    if test is not None:
        test, _ = preprocess_chain(test, data.preprocess, stats)
    return train_set, valid_set, test, stats


def _eval_dataset(
    args: argparse.Namespace, checkpoint: Checkpoint, logger: Any
) -> tuple[str, SequenceDataset]:
    run = checkpoint.run
    if args.data is not None:
        dataset, _ = preprocess_chain(
            load_jsonl(args.data, logger), run.data.preprocess, checkpoint.stats
        )
        return Path(args.data).stem, dataset
    if args.setting is not None:
        return args.setting, gen_dataset(args.setting, run.synth, run.seed, logger)
    _, _, test, _ = resolve_datasets(run, logger)
    if test is None:
        raise ValueError("The run has no test set, pass --data or --setting")
    return SynthSettings.TEST, test


def cmd_gen_data(args: argparse.Namespace, logger: Any) -> int:
    """gen-data: writes the JSONL dataset of one synthetic setting."""
    run = load_run_config(args.config, args.set)
    seed = _seed(args, run.seed)
    dataset = gen_dataset(args.setting, run.synth, seed, logger)
    out = Path(args.out or f"data/{args.setting}.jsonl")
    save_jsonl(dataset, out, logger)
    bank = dataset.sequences[0].meta.get(SynthFields.BANK_ID) if dataset.sequences else None
    print(f"{args.setting}: {len(dataset)} sequences, {dataset.total_steps} steps, bank {bank} -> {out}")
    return 0


def cmd_train(args: argparse.Namespace, logger: Any) -> int:  # pylint: disable=R0914
    """train: trains a model, writing metrics, checkpoints and the resolved config."""
    run = load_run_config(args.config, args.set)
    updates: dict[str, Any] = {}
    if args.out is not None:
        updates["out"] = args.out
    if args.seed is not None:
        updates["seed"] = args.seed
    run = run.model_copy(update=updates)
    out = Path(run.out)
    train_set, valid_set, _, stats = resolve_datasets(run, logger)
    model = build_model(run.model, run.seed, logger)
    state: TrainingState | None = None
    history = []
    if args.from_checkpoint is not None:
        resumed = checkpoint_load(args.from_checkpoint)
        if resumed.state is None:
            raise CheckpointError(f"{args.from_checkpoint} has no training state to resume from")
        load_params(model, resumed.params)
        state = resumed.state
        state.optim = state.optim.with_lr(run.optim.lr)
        if (out / METRICS_FILE).exists():
            history = [row for row in load_metrics(out / METRICS_FILE) if row.epoch <= state.epoch]
        logger.info("Resuming from epoch %s of %s", state.epoch, args.from_checkpoint)
    dump_run_config(run, out / CONFIG_FILE)

    def on_epoch(current: TrainingState) -> None:
        checkpoint_save(
            Checkpoint(
                run=run,
                params=model.params.snapshot(),
                epoch=current.epoch,
                state=current,
                stats=stats,
                best_bound=current.best_bound,
            ),
            out / LAST_CHECKPOINT,
            logger,
        )
        if current.best_epoch == current.epoch:
            checkpoint_save(
                Checkpoint(
                    run=run,
                    params=current.best_params,
                    epoch=current.epoch,
                    stats=stats,
                    best_bound=current.best_bound,
                ),
                out / BEST_CHECKPOINT,
                logger,
            )

    result = train(
        model, train_set, valid_set, run.objective, run.optim, run.seed, state, logger, on_epoch
    )
    save_metrics(history + result.metrics, out / METRICS_FILE)
    save_run_log(result.run_log, out / RUN_LOG_FILE)
    final = result.state
    print(
        f"trained {final.epoch} epochs, best valid {run.objective.bound}/step "
        f"{final.best_bound:.6f} at epoch {final.best_epoch} -> {out}"
    )
    return 0


def _objective(args: argparse.Namespace, run: RunConfig) -> ObjectiveConfig:
    updates: dict[str, Any] = {}
    if args.bound is not None:
        updates["bound"] = args.bound
    if args.kl is not None:
        updates["analytic_kl"] = args.kl == "analytic"
    return run.objective.model_copy(update=updates)


def _write_eval(results: list[tuple[str, EvalResult]], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(
            ["data", "bound", "particles", "n_sequences", "total_steps", "bound_per_step", "stderr"]
        )
        for name, r in results:
            writer.writerow(
                [name, r.bound, r.particles, r.n_sequences, r.total_steps,
                 format(r.bound_per_step, ".17g"), format(r.stderr, ".17g")]
            )


def _battery(
    args: argparse.Namespace, checkpoint: Checkpoint, model: SequenceModel, logger: Any
) -> int:
    run = checkpoint.run
    objective = _objective(args, run)
    results = {}
    for setting in SynthSettings.BATTERY:
        dataset = gen_dataset(setting, run.synth, run.seed, logger)
        results[setting] = evaluate(
            model, dataset, objective, args.particles, _seed(args), args.workers, logger
        )
    label = f"{run.model.kind} z={run.model.z_dim}"
    out = Path(args.out or Path(args.checkpoint).with_name(BATTERY_FILE))
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["model", "statistic", *SynthSettings.BATTERY])
        for statistic in ("bound_per_step", "stderr"):
            writer.writerow(
                [label, statistic]
                + [format(getattr(results[s], statistic), ".17g") for s in SynthSettings.BATTERY]
            )
    print(" ".join(f"{s:>10}" for s in ("model", *SynthSettings.BATTERY)))
    print(
        f"{label:>10} "
        + " ".join(f"{results[s].bound_per_step:>10.3f}" for s in SynthSettings.BATTERY)
    )
    return 0


def cmd_eval(args: argparse.Namespace, logger: Any) -> int:
    """eval: bound per timestep of a checkpoint on a dataset, or the generalization battery."""
    checkpoint = checkpoint_load(args.checkpoint)
    model = restore_model(checkpoint, logger)
    if args.battery:
        return _battery(args, checkpoint, model, logger)
    objective = _objective(args, checkpoint.run)
    name, dataset = _eval_dataset(args, checkpoint, logger)
    result = evaluate(model, dataset, objective, args.particles, _seed(args), args.workers, logger)
    out = Path(args.out or Path(args.checkpoint).with_name(f"eval_{name}_{result.bound}.csv"))
    _write_eval([(name, result)], out)
    print(
        f"{name}: {result.bound} (K={result.particles}) {result.bound_per_step:.6f} per step "
        f"± {result.stderr:.6f} over {result.n_sequences} sequences"
    )
    return 0


def cmd_diagnose(args: argparse.Namespace, logger: Any) -> int:
    """diagnose: per-step KL, reconstruction and log-variance traces of one sequence."""
    checkpoint = checkpoint_load(args.checkpoint)
    model = restore_model(checkpoint, logger)
    _, dataset = _eval_dataset(args, checkpoint, logger)
    if not 0 <= args.index < len(dataset):
        raise ValueError(f"Index {args.index} is out of range for {len(dataset)} sequences")
    record = dataset.sequences[args.index]
    bundle = trace(
        model, record, np.random.default_rng(_seed(args)), args.samples, args.posterior_mean, logger
    )
    out = Path(args.out or Path(args.checkpoint).parent / "diagnostics")
    emit_csv(bundle, out / f"trace_{record.id}.csv")
    emit_svg(bundle, out / f"trace_{record.id}.svg")
    message = f"{record.id}: {bundle.length} steps -> {out}"
    if bundle.length >= MIN_TREND_LENGTH:
        first, last = kl_trend_stat(bundle)
        message += f" (KL first third {first:.4f}, last third {last:.4f})"
    print(message)
    return 0


def cmd_params(args: argparse.Namespace, logger: Any) -> int:
    """params: itemized parameter counts of the reference configurations."""
    rows = reconcile_reference_counts(_seed(args))
    out = Path(args.out) if args.out else None
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(
                ["kind", "z_dim", "layer", "shapes", "count", "reference", "deviation", "status"]
            )
            for row in rows:
                for layer in row.layers:
                    shapes = " ".join("x".join(map(str, s)) for s in layer.shapes)
                    writer.writerow(
                        [row.kind, row.z_dim, layer.layer, shapes, layer.count, "", "", ""]
                    )
                writer.writerow(
                    [row.kind, row.z_dim, "total", "", row.count, row.reference,
                     format(row.deviation, ".6f"), row.status]
                )
    for row in rows:
        print(
            f"{row.kind:>6} z={row.z_dim}: {row.count:>5} parameters, reference {row.reference:>5}, "
            f"deviation {row.deviation:+.1%} ({row.status})"
        )
    for row in rows:
        note = row.note()
        if note is None:
            continue
        print(f"note: {note}")
        if not row.within_tolerance:
            logger.warning("%s", note)
    return 0


def cmd_sample(args: argparse.Namespace, logger: Any) -> int:
    """sample: ancestral generation from a checkpoint to JSONL."""
    checkpoint = checkpoint_load(args.checkpoint)
    model = restore_model(checkpoint, logger)
    if args.count < 1:
        raise ValueError(f"--count must be at least 1, got {args.count}")
    streams = np.random.SeedSequence(_seed(args)).spawn(args.count)
    records = []
    for index, stream in enumerate(streams):
        xs, means = generate(model, args.steps, np.random.default_rng(stream), return_means=True)
        records.append(
            SequenceRecord(id=f"sample-{index:05d}", data=xs, meta={"decoder_means": means.tolist()})
        )
    dataset = SequenceDataset(
        dim=model.cfg.x_dim,
        sequences=records,
        binary=model.cfg.decoder == DecoderHeads.BERNOULLI,
    )
    out = Path(args.out or Path(args.checkpoint).with_name("samples.jsonl"))
    save_jsonl(dataset, out, logger)
    print(f"{len(dataset)} sequences of {args.steps} steps -> {out}")
    return 0
