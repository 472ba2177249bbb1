"""This module contains the MatrixBank class, the fixed set of 2 × 2 transition matrices the
synthetic sequences are drawn from."""

from __future__ import annotations

import hashlib

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field

from pyvhrnn.tensor import Tensor

ENTRY_BOUND = 1.2
STATE_DIM = 2


def spectral_radius(matrix: ArrayLike) -> float:
    """Largest absolute eigenvalue of a square matrix."""
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(matrix, dtype=np.float64)))))


def bank_id(matrices: ArrayLike) -> str:
    """First 12 hex digits of the SHA-256 of the little-endian float64 payload."""
    payload = np.ascontiguousarray(matrices, dtype="<f8").tobytes()
    return hashlib.sha256(payload).hexdigest()[:12]


class MatrixBank(BaseModel):
    """A bank of 2 × 2 transition matrices.

    Attributes:
        id (str): The content hash of the matrices.
        seed (int): The generation seed.
        matrices (list[list[list[float]]]): The matrices.
    """

    id: str
    seed: int
    matrices: list[list[list[float]]] = Field(min_length=2)

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    def __len__(self) -> int:
        return len(self.matrices)

    def matrix(self, index: int) -> Tensor:
        """Returns the matrix at the index as a (2, 2) array.

        Raises:
            ValueError: If the index is out of range.
        """
        if not 0 <= index < len(self.matrices):
            raise ValueError(f"Matrix index {index} is out of range for a bank of {len(self)}")
        return np.array(self.matrices[index], dtype=np.float64)

    def radii(self) -> list[float]:
        return [spectral_radius(m) for m in self.matrices]


def make_matrix_bank(seed: int, count: int = 10, entry_bound: float = ENTRY_BOUND) -> MatrixBank:
    """Draws matrices with iid uniform(−bound, bound) entries, redrawing the whole bank until it
    holds at least one growing (ρ > 1) and one decaying (ρ < 1) matrix.

    Arguments:
        seed (int): The generation seed.
        count (int): The number of matrices.
        entry_bound (float): The entry range.

    Raises:
        ValueError: If count < 2.

    Returns:
        MatrixBank: The bank, identical for identical arguments.

    Examples:
        ```python
        bank = make_matrix_bank(0)
        bank.id  # '3f1c...'
        ```
    """
    if count < 2:
        raise ValueError(f"A bank needs at least 2 matrices, got count={count}")
    rng = np.random.default_rng(seed)
    while True:
        matrices = rng.uniform(-entry_bound, entry_bound, size=(count, STATE_DIM, STATE_DIM))
        radii = [spectral_radius(m) for m in matrices]
        if max(radii) > 1.0 and min(radii) < 1.0:
            break
    return MatrixBank(id=bank_id(matrices), seed=seed, matrices=matrices.tolist())
