"""This module contains the minibatch training loop: gradient ascent on the chosen bound with Adam,
per-epoch train and validation metrics, best-validation snapshots and early stopping."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from pyvhrnn.dataio import SequenceDataset, Splits, iterate_batches
from pyvhrnn.distributions import clamp_monitor
from pyvhrnn.models import SequenceModel
from pyvhrnn.objectives.bounds import compute_bound
from pyvhrnn.objectives.evaluate import evaluate
from pyvhrnn.objectives.objective_config import ObjectiveConfig, OptimConfig
from pyvhrnn.objectives.optim import OptimState, adam_update
from pyvhrnn.tensor import Tensor, backward, ops
from pyvhrnn.utils import Logger

VALID_SEED_OFFSET = 1_000_003


class TrainingDivergedError(FloatingPointError):
    """Raised when the training loss stops being finite."""

    def __init__(self, epoch: int, step: int, value: float):
        super().__init__(f"Loss became {value} at epoch {epoch}, step {step}")
        self.epoch = epoch
        self.step = step


class MetricRow(BaseModel):
    """One row of metrics.csv."""

    epoch: int
    split: str
    bound_per_step: float

    model_config = ConfigDict(populate_by_name=True)


class RunLogRow(BaseModel):
    """One row of run_log.csv, the only place wall-clock times are kept."""

    epoch: int
    split: str
    wall_time: float

    model_config = ConfigDict(populate_by_name=True)


@dataclass
class TrainingState:
    """Everything needed to resume training bit-exactly.

    Attributes:
        optim (OptimState): The Adam state.
        epoch (int): The number of completed epochs.
        best_bound (float): The best validation bound per step so far.
        best_epoch (int): The epoch it was reached at, 0 before any.
        best_params (dict[str, Tensor]): The parameters at the best epoch.
        stale (int): Epochs since the last improvement.
    """

    optim: OptimState
    epoch: int = 0
    best_bound: float = -math.inf
    best_epoch: int = 0
    best_params: dict[str, Tensor] = field(default_factory=dict)
    stale: int = 0


@dataclass
class TrainResult:
    """Outcome of train().

    Attributes:
        state (TrainingState): The final state, best snapshot included.
        metrics (list[MetricRow]): Train and valid bound per step for every epoch run.
        run_log (list[RunLogRow]): Wall times for every epoch run.
        stopped_early (bool): Whether patience ran out.
    """

    state: TrainingState
    metrics: list[MetricRow] = field(default_factory=list)
    run_log: list[RunLogRow] = field(default_factory=list)
    stopped_early: bool = False


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    """The generator of one epoch, derived from (seed, epoch) alone."""
    return np.random.default_rng([seed, epoch])


def train_epoch(
    model: SequenceModel,
    dataset: SequenceDataset,
    objective: ObjectiveConfig,
    optim: OptimState,
    batch_size: int,
    rng: np.random.Generator,
    epoch: int = 1,
    logger: Any | None = None,
) -> tuple[float, OptimState]:  # pylint: disable=R0913, R0917
    """Runs one pass over the dataset, updating the model's parameters in place.

    The loss of a batch is −Σ bounds / Σ T. Ancestor choices of resampling carry no gradient.
    Log-std clamp activations during the epoch are reported as one warning.

    Raises:
        TrainingDivergedError: If a loss is not finite.

    Returns:
        tuple[float, OptimState]: The train bound per step of the epoch and the new Adam state.
    """
    logger = logger or Logger(__name__)
    total_bound = 0.0
    total_steps = 0
    clamp_monitor.reset()
    for step, (_, batch) in enumerate(iterate_batches(dataset, batch_size, rng), start=1):
        params = model.params.bind(requires_grad=True)
        bounds = compute_bound(model, batch, objective, objective.train_particles, rng, params)
        steps = batch.shape[0] * batch.shape[1]
        loss = ops.scale(ops.reduce_sum(bounds), -1.0 / steps)
        if not math.isfinite(loss.item()):
            logger.error("Loss is %s at epoch %s, step %s", loss.item(), epoch, step)
            raise TrainingDivergedError(epoch, step, loss.item())
        grads = backward(loss)
        updated, optim = adam_update(
            model.params.snapshot(), {name: grads[node] for name, node in params.items()}, optim
        )
        for name, value in updated.items():
            model.params.assign(name, value)
        total_bound += float(np.sum(bounds.value))
        total_steps += steps
        logger.debug("Epoch %s, step %s: loss %.6f", epoch, step, loss.item())
    if clamp_monitor.count:
        logger.warning("%s log-std entries were clamped in epoch %s", clamp_monitor.count, epoch)
    return total_bound / total_steps, optim


def train(
    model: SequenceModel,
    train_set: SequenceDataset,
    valid_set: SequenceDataset,
    objective: ObjectiveConfig,
    optim_cfg: OptimConfig,
    seed: int,
    state: TrainingState | None = None,
    logger: Any | None = None,
    on_epoch: Callable[[TrainingState], None] | None = None,
) -> TrainResult:  # pylint: disable=R0913, R0917, R0914
    """Trains the model on the bound named by the objective.

    Epoch e shuffles and draws noise from a generator seeded with (seed, e), and every validation
    pass uses the same fixed seed, so a run is reproducible and a resumed run continues exactly
    where the interrupted one stopped. The validation bound uses objective.train_particles.
    Training stops after optim_cfg.epochs epochs or when the validation bound hasn't improved for
    optim_cfg.patience epochs. The model keeps the last parameters; the best ones are in the
    returned state.

    Arguments:
        model (SequenceModel): The model, updated in place.
        train_set (SequenceDataset): The training sequences.
        valid_set (SequenceDataset): The validation sequences.
        objective (ObjectiveConfig): The bound.
        optim_cfg (OptimConfig): Adam and loop settings.
        seed (int): The run seed.
        state (TrainingState | None): A state to resume from.
        logger (Any | None): The logger to use. If not provided, a dummy logger is used.
        on_epoch (Callable[[TrainingState], None] | None): Called after every epoch, e.g. to
            write a checkpoint.

    Raises:
        ValueError: If a dataset is empty.
        TrainingDivergedError: If the loss stops being finite, naming epoch and step.

    Returns:
        TrainResult: The final state and the metrics of the epochs run.

    Examples:
        ```python
        result = train(model, train_set, valid_set, ObjectiveConfig(), OptimConfig(epochs=5), 7)
        result.metrics[-1].bound_per_step
        ```
    """
    logger = logger or Logger(__name__)
    if not train_set.sequences or not valid_set.sequences:
        raise ValueError("Training needs non-empty train and valid sets")
    state = state or TrainingState(optim=OptimState.create(model.params, optim_cfg))
    if not state.best_params:
        state.best_params = model.params.snapshot()
    result = TrainResult(state=state)
    while state.epoch < optim_cfg.epochs:
        epoch = state.epoch + 1
        started = time.perf_counter()
        train_bound, state.optim = train_epoch(
            model, train_set, objective, state.optim, optim_cfg.batch_size,
            epoch_rng(seed, epoch), epoch, logger,
        )
        train_time = time.perf_counter() - started
        valid = evaluate(
            model, valid_set, objective, objective.train_particles, seed + VALID_SEED_OFFSET
        )
        valid_time = time.perf_counter() - started - train_time
        state.epoch = epoch
        result.metrics.append(MetricRow(epoch=epoch, split=Splits.TRAIN, bound_per_step=train_bound))
        result.metrics.append(
            MetricRow(epoch=epoch, split=Splits.VALID, bound_per_step=valid.bound_per_step)
        )
        result.run_log.append(RunLogRow(epoch=epoch, split=Splits.TRAIN, wall_time=train_time))
        result.run_log.append(RunLogRow(epoch=epoch, split=Splits.VALID, wall_time=valid_time))
        if valid.bound_per_step > state.best_bound:
            state.best_bound = valid.bound_per_step
            state.best_epoch = epoch
            state.best_params = model.params.snapshot()
            state.stale = 0
        else:
            state.stale += 1
        logger.info(
            "Epoch %s: train %.4f, valid %.4f per step (best %.4f at epoch %s)",
            epoch, train_bound, valid.bound_per_step, state.best_bound, state.best_epoch,
        )
        if on_epoch is not None:
            on_epoch(state)
        if state.stale >= optim_cfg.patience:
            logger.warning(
                "No validation improvement for %s epochs, stopping at epoch %s", state.stale, epoch
            )
            result.stopped_early = True
            break
    return result


def _write_rows(rows: Sequence[BaseModel], columns: Sequence[str], path: str | Path) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            values = row.model_dump()
            writer.writerow(
                [format(v, ".17g") if isinstance(v, float) else v for v in (values[c] for c in columns)]
            )


def save_metrics(rows: Sequence[MetricRow], path: str | Path) -> None:
    """Writes metrics.csv (epoch, split, bound_per_step)."""
    _write_rows(rows, ("epoch", "split", "bound_per_step"), path)


def save_run_log(rows: Sequence[RunLogRow], path: str | Path) -> None:
    """Writes run_log.csv (epoch, split, wall_time)."""
    _write_rows(rows, ("epoch", "split", "wall_time"), path)


def load_metrics(path: str | Path) -> list[MetricRow]:
    """Reads a metrics.csv written by save_metrics, e.g. to extend it when resuming."""
    with Path(path).open("r", encoding="utf-8", newline="") as f:
        return [MetricRow.model_validate(row) for row in csv.DictReader(f)]
