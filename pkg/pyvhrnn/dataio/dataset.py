"""This module contains the SequenceDataset class and its records."""

from __future__ import annotations

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from pyvhrnn.tensor import Tensor


# pylint: disable=too-few-public-methods
class DatasetFields:
    """Stores the keys of the JSONL header and records."""

    FORMAT = "format"
    VERSION = "version"
    DIM = "dim"
    BINARY = "binary"
    SPLIT = "split"
    STATS = "stats"
    COUNT = "count"

    ID = "id"
    DATA = "data"
    META = "meta"


# pylint: disable=too-few-public-methods
class Splits:
    """Stores the split names."""

    TRAIN = "train"
    VALID = "valid"
    TEST = "test"


class NormStats(BaseModel):
    """Per-dimension normalization statistics, always fitted on a train split.

    Attributes:
        mode (str): The transform which produced them, mean_center or zscore.
        mean (list[float]): Per-dimension mean.
        std (list[float]): Per-dimension standard deviation, 1 where the data is constant.
    """

    mode: str
    mean: list[float]
    std: list[float]

    model_config = ConfigDict(populate_by_name=True)


class SequenceRecord(BaseModel):
    """One sequence: a (T × D) matrix of float64 values with its provenance metadata.

    Attributes:
        id (str): The sequence id.
        data (Tensor): The observations, one row per step.
        meta (dict[str, Any]): Generation metadata (setting, W index, σ schedule, switches, ...).
    """

    id: str
    data: np.ndarray
    meta: dict[str, Any] = Field(default_factory=dict)

    model_config = ConfigDict(populate_by_name=True, arbitrary_types_allowed=True)

    @field_validator(DatasetFields.DATA, mode="before")
    def to_matrix(cls, value: Any) -> Tensor:  # pylint: disable=no-self-argument
        """Converts nested lists to a read-only float64 matrix.

        Arguments:
            value (Any): The data.

        Raises:
            ValueError: If the data is not a non-empty finite matrix.

        Returns:
            Tensor: The matrix.
        """
        array = np.array(value, dtype=np.float64)
        if array.ndim != 2 or array.shape[0] == 0 or array.shape[1] == 0:
            raise ValueError(f"Sequence data must be a non-empty T × D matrix, got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValueError("Sequence data must be finite")
        array.flags.writeable = False
        return array

    @property
    def length(self) -> int:
        return self.data.shape[0]


class SequenceDataset(BaseModel):
    """A list of variable-length sequences sharing one dimension D.

    Attributes:
        dim (int): D.
        sequences (list[SequenceRecord]): The sequences.
        binary (bool): Whether all values are 0 or 1.
        split (str | None): train, valid or test, if known.
        stats (NormStats | None): Statistics of the normalizing transform applied, if any.
    """

    dim: int = Field(gt=0)
    sequences: list[SequenceRecord] = Field(default_factory=list)
    binary: bool = False
    split: str | None = None
    stats: NormStats | None = None

    model_config = ConfigDict(populate_by_name=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def check_sequences(self) -> SequenceDataset:
        """Checks the uniform dimension and the binary flag.

        Raises:
            ValueError: If a sequence has another dimension or is not binary as flagged.

        Returns:
            SequenceDataset: The validated dataset.
        """
        for record in self.sequences:
            if record.data.shape[1] != self.dim:
                raise ValueError(
                    f"Sequence {record.id} has dimension {record.data.shape[1]}, expected {self.dim}"
                )
            if self.binary and not np.all((record.data == 0.0) | (record.data == 1.0)):
                raise ValueError(f"Sequence {record.id} is not binary")
        return self

    def __len__(self) -> int:
        return len(self.sequences)

    @property
    def total_steps(self) -> int:
        return sum(record.length for record in self.sequences)

    def arrays(self) -> list[Tensor]:
        return [record.data for record in self.sequences]

    def with_sequences(self, sequences: list[SequenceRecord], **changes: Any) -> SequenceDataset:
        """Returns a copy holding other sequences, with optional field changes."""
        fields = {"dim": self.dim, "binary": self.binary, "split": self.split, "stats": self.stats}
        fields.update(changes)
        return SequenceDataset(sequences=sequences, **fields)
