"""This module contains the sequential Monte Carlo primitives: the effective sample size, multinomial
resampling and the particle ensemble carried by the FIVO estimator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from pyvhrnn.models import ModelState
from pyvhrnn.tensor import Node


class WeightUnderflowError(FloatingPointError):
    """Raised when all particle weights of a sequence underflow at some step."""

    def __init__(self, step: int, row: int):
        super().__init__(f"All particle weights underflowed at step {step} (sequence row {row})")
        self.step = step
        self.row = row


def ess(log_weights: ArrayLike) -> float | NDArray[np.float64]:
    """Effective sample size (Σw)² / Σw², computed in log-space over the last axis.

    Arguments:
        log_weights (ArrayLike): Unnormalized log-weights, shape (K,) or (B, K).

    Returns:
        float | NDArray[np.float64]: The ESS, per row for 2-D input.

    Examples:
        ```python
        ess(np.log([2.0, 1.0, 1.0]))  # 16 / 6 = 2.6667
        ```
    """
    log_w = np.asarray(log_weights, dtype=np.float64)
    value = np.exp(2.0 * special.logsumexp(log_w, axis=-1) - special.logsumexp(2.0 * log_w, axis=-1))
    if np.ndim(value) == 0:
        return float(value)
    return value


def resample_multinomial(log_weights: ArrayLike, rng: np.random.Generator) -> NDArray[np.int64]:
    """Draws K ancestor indices iid from the normalized weights.

    Arguments:
        log_weights (ArrayLike): Unnormalized log-weights, shape (K,).
        rng (np.random.Generator): The generator, the only source of randomness.

    Raises:
        ValueError: If there are no weights or none is positive.

    Returns:
        NDArray[np.int64]: The ancestor indices, shape (K,).
    """
    log_w = np.asarray(log_weights, dtype=np.float64).reshape(-1)
    if log_w.size == 0:
        raise ValueError("Resampling needs at least one particle")
    if log_w.size == 1:
        return np.zeros(1, dtype=np.int64)
    normalizer = special.logsumexp(log_w)
    if not np.isfinite(normalizer):
        raise ValueError("Cannot resample: no particle has a positive finite weight")
    probs = np.exp(log_w - normalizer)
    probs /= probs.sum()
    return rng.choice(log_w.size, size=log_w.size, p=probs).astype(np.int64)


@dataclass
class ParticleEnsemble:
    """K weighted particles for each of B sequences, rows ordered b·K + k.

    Attributes:
        n_particles (int): K.
        n_sequences (int): B.
        state (ModelState): Per-particle recurrent state, B·K rows.
        log_weights (Node): Log-weights accumulated since the last resampling, shape (B, K).
        bound (Node): Running bound per sequence, shape (B,).
        ancestry (list[NDArray[np.int64]]): Per step, the (B, K) ancestor indices; identity at
            steps without resampling.
    """

    n_particles: int
    n_sequences: int
    state: ModelState
    log_weights: Node
    bound: Node
    ancestry: list[NDArray[np.int64]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.n_particles < 1:
            raise ValueError(f"K must be at least 1, got {self.n_particles}")

    def identity(self) -> NDArray[np.int64]:
        return np.tile(np.arange(self.n_particles, dtype=np.int64), (self.n_sequences, 1))

    def flat_indices(self, ancestors: NDArray[np.int64]) -> NDArray[np.int64]:
        """Maps per-sequence ancestor indices (B, K) to state rows."""
        offsets = np.arange(self.n_sequences, dtype=np.int64)[:, None] * self.n_particles
        return (ancestors + offsets).reshape(-1)
