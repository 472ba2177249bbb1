"""This module contains the preprocessing transforms for real-world sequences, the deterministic
split and the helpers which feed datasets to training."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Any, Callable, Iterator, Sequence

import numpy as np

from pyvhrnn.dataio.dataset import NormStats, SequenceDataset, SequenceRecord, Splits
from pyvhrnn.tensor import Tensor


# pylint: disable=too-few-public-methods
class Transforms:
    """Stores the preprocessing modes."""

    MEAN_CENTER = "mean_center"
    ZSCORE = "zscore"
    LOG_RATIO = "log_ratio"
    DOWNSAMPLE = "downsample"


def parse_mode(mode: str) -> tuple[str, int | None]:
    """Parses a mode string; downsample takes its rate after a colon (downsample:30).

    Raises:
        ValueError: If the mode is unknown or the rate is missing or not positive.
    """
    name, _, argument = mode.partition(":")
    known = (Transforms.MEAN_CENTER, Transforms.ZSCORE, Transforms.LOG_RATIO, Transforms.DOWNSAMPLE)
    if name not in known:
        raise ValueError(f"Unknown preprocessing mode {mode}, expected one of {known}")
    if name != Transforms.DOWNSAMPLE:
        if argument:
            raise ValueError(f"Mode {name} takes no argument, got {mode}")
        return name, None
    if not argument.isdigit() or int(argument) < 1:
        raise ValueError(f"downsample needs a positive rate, e.g. downsample:30, got {mode}")
    return name, int(argument)


def fit_stats(dataset: SequenceDataset, mode: str) -> NormStats:
    """Fits the per-dimension mean and standard deviation over all steps of a train split.

    Arguments:
        dataset (SequenceDataset): The training split.
        mode (str): mean_center or zscore.

    Raises:
        ValueError: If the dataset is not a train split or is empty.

    Returns:
        NormStats: The statistics. A zero standard deviation is stored as 1.
    """
    if dataset.split != Splits.TRAIN:
        raise ValueError(f"Statistics may only be fitted on a train split, got split={dataset.split}")
    if not dataset.sequences:
        raise ValueError("Cannot fit statistics on an empty dataset")
    rows = np.concatenate(dataset.arrays(), axis=0)
    std = rows.std(axis=0)
    std[std == 0.0] = 1.0
    return NormStats(mode=mode, mean=rows.mean(axis=0).tolist(), std=std.tolist())


def _map(dataset: SequenceDataset, fn: Callable[[Tensor], Tensor], **changes: Any) -> SequenceDataset:
    records = [
        SequenceRecord(id=record.id, data=fn(record.data), meta=record.meta)
        for record in dataset.sequences
    ]
    return dataset.with_sequences(records, **changes)


def _log_ratio(data: Tensor) -> Tensor:
    if np.any(data <= 0.0):
        raise ValueError("log_ratio needs strictly positive values")
    if data.shape[0] < 2:
        raise ValueError("log_ratio needs sequences of at least 2 steps")
    return np.log(data[1:] / data[:-1])


def preprocess(
    dataset: SequenceDataset, mode: str, stats: NormStats | None = None
) -> SequenceDataset:
    """Applies a transform and returns a transformed copy.

    mean_center subtracts the per-dimension mean, zscore also divides by the standard deviation,
    log_ratio maps x_t to log(x_t / x_{t−1}) (one step shorter), downsample:k keeps every k-th
    step. The normalizing modes take statistics fitted on the train split; when none are given
    they are fitted here, which is only allowed for a train split.

    Arguments:
        dataset (SequenceDataset): The dataset.
        mode (str): mean_center, zscore, log_ratio or downsample:k.
        stats (NormStats | None): Train statistics for the normalizing modes.

    Raises:
        ValueError: If the mode is unknown, log_ratio meets a non-positive value, or statistics
            would be fitted on a split other than train.

    Returns:
        SequenceDataset: The transformed dataset, statistics recorded for normalizing modes.

    Examples:
        ```python
        train = preprocess(train, "zscore")
        valid = preprocess(valid, "zscore", train.stats)
        ```
    """
    name, rate = parse_mode(mode)
    if name == Transforms.LOG_RATIO:
        return _map(dataset, _log_ratio)
    if name == Transforms.DOWNSAMPLE:
        return _map(dataset, lambda data: data[:: rate or 1])
    if stats is None:
        stats = fit_stats(dataset, name)
    if len(stats.mean) != dataset.dim:
        raise ValueError(f"Statistics have {len(stats.mean)} dimensions, the data has {dataset.dim}")
    mean = np.asarray(stats.mean)
    std = np.asarray(stats.std)
    if name == Transforms.MEAN_CENTER:
        return _map(dataset, lambda data: data - mean, stats=stats)
    return _map(dataset, lambda data: (data - mean) / std, stats=stats)


def preprocess_chain(
    dataset: SequenceDataset, modes: Sequence[str], stats: Sequence[NormStats] | None = None
) -> tuple[SequenceDataset, list[NormStats]]:
    """Applies transforms in order, each normalizing mode with its own statistics.

    Without stats every normalizing mode fits on the output of the previous transform, which
    needs a train split. With stats, entry i serves the i-th normalizing mode of the chain, so
    replaying the list returned for a train split reproduces its transform on any other split.

    Arguments:
        dataset (SequenceDataset): The dataset.
        modes (Sequence[str]): The transforms, in order.
        stats (Sequence[NormStats] | None): Statistics of the normalizing modes, in chain order.

    Raises:
        ValueError: If a mode is invalid, or the stats don't match the normalizing modes in count
            or mode.

    Returns:
        tuple[SequenceDataset, list[NormStats]]: The transformed dataset and the statistics of
            its normalizing modes.

    Examples:
        ```python
        train, fitted = preprocess_chain(train, ["mean_center", "zscore"])
        valid, _ = preprocess_chain(valid, ["mean_center", "zscore"], fitted)
        ```
    """
    pending = None if stats is None else list(stats)
    used: list[NormStats] = []
    for mode in modes:
        name, _ = parse_mode(mode)
        if name not in (Transforms.MEAN_CENTER, Transforms.ZSCORE):
            dataset = preprocess(dataset, mode)
            continue
        given: NormStats | None = None
        if pending is not None:
            if not pending:
                raise ValueError(f"No statistics left for {mode}, the chain is {list(modes)}")
            given = pending.pop(0)
            if given.mode != name:
                raise ValueError(f"Statistics of {given.mode} can't serve {mode}")
        dataset = preprocess(dataset, mode, given)
        used.append(dataset.stats)  # type: ignore[arg-type]
    if pending:
        raise ValueError(f"{len(pending)} statistics left over after {list(modes)}")
    return dataset, used


def split(
    dataset: SequenceDataset, fractions: Sequence[float], seed: int
) -> tuple[SequenceDataset, SequenceDataset, SequenceDataset]:
    """Deterministic shuffled partition into train, valid and test.

    valid and test get ⌊fraction · N⌋ sequences, the remainder goes to train.

    Arguments:
        dataset (SequenceDataset): The dataset.
        fractions (Sequence[float]): The (train, valid, test) fractions.
        seed (int): The shuffle seed.

    Raises:
        ValueError: If there are not three non-negative fractions summing to 1.

    Returns:
        tuple[SequenceDataset, SequenceDataset, SequenceDataset]: The three splits.
    """
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise ValueError(f"Expected three non-negative fractions, got {fractions}")
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise ValueError(f"Fractions must sum to 1, got {sum(fractions)}")
    n = len(dataset)
    order = np.random.default_rng(seed).permutation(n)
    n_valid = math.floor(fractions[1] * n)
    n_test = math.floor(fractions[2] * n)
    valid_idx = order[:n_valid]
    test_idx = order[n_valid : n_valid + n_test]
    train_idx = order[n_valid + n_test :]

    def part(indices: np.ndarray, name: str) -> SequenceDataset:
        return dataset.with_sequences([dataset.sequences[i] for i in sorted(indices)], split=name)

    return part(train_idx, Splits.TRAIN), part(valid_idx, Splits.VALID), part(test_idx, Splits.TEST)


def export_csv(dataset: SequenceDataset, path: str | Path) -> None:
    """Writes flat rows (id, step, x_0 … x_{D−1}) for external tools."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["id", "step"] + [f"x_{d}" for d in range(dataset.dim)])
        for record in dataset.sequences:
            for step, row in enumerate(record.data, start=1):
                writer.writerow([record.id, step] + [format(float(v), ".17g") for v in row])


def iterate_batches(
    dataset: SequenceDataset, batch_size: int, rng: np.random.Generator
) -> Iterator[tuple[list[int], Tensor]]:
    """Yields minibatches of equal-length sequences (length bucketing, no padding).

    Sequences are shuffled within each length bucket, chunked into batches of at most
    batch_size, and the batches are visited in shuffled order.

    Arguments:
        dataset (SequenceDataset): The dataset.
        batch_size (int): The maximum batch size.
        rng (np.random.Generator): The shuffling generator.

    Raises:
        ValueError: If batch_size < 1.

    Yields:
        tuple[list[int], Tensor]: The sequence indices and their (B, T, D) stack.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be at least 1, got {batch_size}")
    buckets: dict[int, list[int]] = {}
    for index, record in enumerate(dataset.sequences):
        buckets.setdefault(record.length, []).append(index)
    batches: list[list[int]] = []
    for length in sorted(buckets):
        members = [buckets[length][i] for i in rng.permutation(len(buckets[length]))]
        batches.extend(members[i : i + batch_size] for i in range(0, len(members), batch_size))
    for b in rng.permutation(len(batches)):
        indices = batches[b]
        yield indices, np.stack([dataset.sequences[i].data for i in indices])
