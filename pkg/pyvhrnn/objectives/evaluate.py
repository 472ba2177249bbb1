"""This module contains the dataset-level evaluation of a bound: per-sequence estimates on
independent random streams, optionally on several worker threads, reduced to the bound per
timestep and its standard error."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict

from pyvhrnn.dataio import SequenceDataset
from pyvhrnn.models import Params, SequenceModel
from pyvhrnn.objectives.bounds import compute_bound
from pyvhrnn.objectives.objective_config import ObjectiveConfig
from pyvhrnn.utils import Logger


class EvalResult(BaseModel):
    """Bound of a dataset.

    Attributes:
        bound (str): The estimator.
        particles (int): K.
        n_sequences (int): The number of sequences.
        total_steps (int): Σ T_i.
        total_bound (float): Σ of the per-sequence bounds.
        bound_per_step (float): total_bound / total_steps.
        stderr (float): Monte Carlo standard error of bound_per_step over sequences.
        per_sequence (list[float]): The per-sequence bounds in dataset order.
    """

    bound: str
    particles: int
    n_sequences: int
    total_steps: int
    total_bound: float
    bound_per_step: float
    stderr: float
    per_sequence: list[float]

    model_config = ConfigDict(populate_by_name=True)


def ratio_stderr(bounds: np.ndarray, lengths: np.ndarray) -> float:
    """Standard error of Σ b_i / Σ T_i by the ratio-estimator linearization, 0 for one sequence."""
    n = len(bounds)
    if n < 2:
        return 0.0
    ratio = bounds.sum() / lengths.sum()
    residual = bounds - ratio * lengths
    return float(math.sqrt(n * np.sum(residual**2) / (n - 1)) / lengths.sum())


def evaluate(
    model: SequenceModel,
    dataset: SequenceDataset,
    objective: ObjectiveConfig,
    particles: int | None = None,
    seed: int = 0,
    workers: int = 1,
    logger: Any | None = None,
) -> EvalResult:  # pylint: disable=R0913, R0917
    """Estimates the bound of every sequence and reduces them to the bound per timestep.

    Sequence i uses its own generator spawned from SeedSequence(seed), so the result is the same
    for any number of workers. Parameters are bound once as read-only constants.

    Arguments:
        model (SequenceModel): The model.
        dataset (SequenceDataset): The sequences.
        objective (ObjectiveConfig): The estimator settings.
        particles (int | None): K, objective.eval_particles when not given.
        seed (int): The root seed.
        workers (int): The number of worker threads.
        logger (Any | None): The logger to use. If not provided, a dummy logger is used.

    Raises:
        ValueError: If the dataset is empty, its dimension differs from the model's, particles < 1
            or workers < 1.

    Returns:
        EvalResult: The evaluation.

    Examples:
        ```python
        result = evaluate(model, test_set, ObjectiveConfig(bound="fivo"), particles=128, seed=3)
        result.bound_per_step, result.stderr
        ```
    """
    logger = logger or Logger(__name__)
    if not dataset.sequences:
        raise ValueError("Cannot evaluate an empty dataset")
    if dataset.dim != model.cfg.x_dim:
        raise ValueError(
            f"The dataset has dimension {dataset.dim}, the model expects {model.cfg.x_dim}"
        )
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    if particles is None:
        particles = objective.eval_particles
    if particles < 1:
        raise ValueError(f"particles must be at least 1, got {particles}")
    streams = np.random.SeedSequence(seed).spawn(len(dataset))
    params: Params = model.params.bind(requires_grad=False)

    def one(index: int) -> float:
        rng = np.random.default_rng(streams[index])
        data = dataset.sequences[index].data
        return compute_bound(model, data, objective, particles, rng, params).item()

    if workers == 1:
        values = [one(index) for index in range(len(dataset))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            values = list(executor.map(one, range(len(dataset))))
    bounds = np.array(values)
    lengths = np.array([record.length for record in dataset.sequences], dtype=np.float64)
    total_bound = float(bounds.sum())
    total_steps = dataset.total_steps
    result = EvalResult(
        bound=objective.bound,
        particles=particles,
        n_sequences=len(dataset),
        total_steps=total_steps,
        total_bound=total_bound,
        bound_per_step=total_bound / total_steps,
        stderr=ratio_stderr(bounds, lengths),
        per_sequence=values,
    )
    logger.debug(
        "%s (K=%s) over %s sequences: %.6f per step", result.bound, particles, len(dataset),
        result.bound_per_step,
    )
    return result
