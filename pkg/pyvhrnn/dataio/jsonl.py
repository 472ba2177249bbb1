"""This module contains the JSONL reader and writer of sequence datasets.

The first line is a header object with the dimension, binary flag, split and normalization
statistics. Every following line is one sequence {"id", "data", "meta"}. Floats are written with
their shortest round-trip representation, so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from pyvhrnn.dataio.dataset import DatasetFields, NormStats, SequenceDataset, SequenceRecord
from pyvhrnn.utils import Logger

FORMAT_NAME = "pyvhrnn-sequences"
FORMAT_VERSION = 1


def _header(dataset: SequenceDataset) -> dict[str, Any]:
    return {
        DatasetFields.FORMAT: FORMAT_NAME,
        DatasetFields.VERSION: FORMAT_VERSION,
        DatasetFields.DIM: dataset.dim,
        DatasetFields.BINARY: dataset.binary,
        DatasetFields.SPLIT: dataset.split,
        DatasetFields.STATS: None if dataset.stats is None else dataset.stats.model_dump(),
        DatasetFields.COUNT: len(dataset),
    }


def save_jsonl(dataset: SequenceDataset, path: str | Path, logger: Any | None = None) -> None:
    """Writes the dataset, replacing the file atomically.

    Arguments:
        dataset (SequenceDataset): The dataset.
        path (str | Path): The output file.
        logger (Any | None): The logger to use. If not provided, a dummy logger is used.
    """
    logger = logger or Logger(__name__)
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_name(target.name + ".tmp")
    with tmp.open("w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(_header(dataset), allow_nan=False) + "\n")
        for record in dataset.sequences:
            line = {
                DatasetFields.ID: record.id,
                DatasetFields.DATA: record.data.tolist(),
                DatasetFields.META: record.meta,
            }
            f.write(json.dumps(line, allow_nan=False) + "\n")
    os.replace(tmp, target)
    logger.info("Wrote %s sequences to %s", len(dataset), target)


def load_jsonl(path: str | Path, logger: Any | None = None) -> SequenceDataset:
    """Reads a dataset written by save_jsonl (or converted by the user to the same schema).

    Arguments:
        path (str | Path): The input file.
        logger (Any | None): The logger to use. If not provided, a dummy logger is used.

    Raises:
        FileNotFoundError: If the file doesn't exist.
        ValueError: If a line is malformed, naming the line number.

    Returns:
        SequenceDataset: The dataset.
    """
    logger = logger or Logger(__name__)
    with Path(path).open("r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: line 1: missing header")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: line 1: malformed header: {e}") from e
    if not isinstance(header, dict) or header.get(DatasetFields.FORMAT) != FORMAT_NAME:
        raise ValueError(f"{path}: line 1: not a {FORMAT_NAME} header")
    if header.get(DatasetFields.VERSION) != FORMAT_VERSION:
        raise ValueError(
            f"{path}: line 1: unsupported version {header.get(DatasetFields.VERSION)}"
        )
    dim = header.get(DatasetFields.DIM)
    records = []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            record = SequenceRecord.model_validate(json.loads(line))
        except (json.JSONDecodeError, ValidationError) as e:
            raise ValueError(f"{path}: line {number}: malformed sequence: {e}") from e
        if record.data.shape[1] != dim:
            raise ValueError(
                f"{path}: line {number}: sequence {record.id} has rows of {record.data.shape[1]} "
                f"values, expected {dim}"
            )
        records.append(record)
    stats = header.get(DatasetFields.STATS)
    try:
        dataset = SequenceDataset(
            dim=dim,
            sequences=records,
            binary=bool(header.get(DatasetFields.BINARY, False)),
            split=header.get(DatasetFields.SPLIT),
            stats=None if stats is None else NormStats.model_validate(stats),
        )
    except ValidationError as e:
        raise ValueError(f"{path}: line 1: inconsistent header: {e}") from e
    logger.info("Loaded %s sequences from %s", len(dataset), path)
    return dataset
