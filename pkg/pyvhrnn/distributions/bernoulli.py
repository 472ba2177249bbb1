"""This module contains the factorized Bernoulli distribution used as decoder head for binary data."""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike
from scipy import special

from pyvhrnn.tensor import Node, Tensor, as_node, ops


class BernoulliLogits:
    """Independent Bernoulli variables parameterized by their logits.

    Arguments:
        logits (Node | ArrayLike): The logits l, p = σ(l).

    Raises:
        ValueError: If any logit is not finite.
    """

    __slots__ = ("logits",)

    def __init__(self, logits: Node | ArrayLike):
        node = as_node(logits)
        if not np.all(np.isfinite(node.value)):
            raise ValueError("Bernoulli logits must be finite")
        self.logits = node

    @property
    def dim(self) -> int:
        return self.logits.shape[-1]

    def log_prob(self, x: Node | ArrayLike) -> Node:
        return bernoulli_log_prob(x, self)

    def sample(self, rng: np.random.Generator) -> Tensor:
        probs = special.expit(self.logits.value)
        return (rng.random(probs.shape) < probs).astype(np.float64)

    def moments(self) -> tuple[Tensor, Tensor]:
        """Returns the mean p and log p(1−p), computed from the logits without cancellation."""
        logits = self.logits.value
        log_variance = -np.logaddexp(0.0, logits) - np.logaddexp(0.0, -logits)
        return special.expit(logits), log_variance


def bernoulli_log_prob(x: Node | ArrayLike, b: BernoulliLogits) -> Node:
    """Log-probability Σᵢ [xᵢ log σ(lᵢ) + (1−xᵢ) log(1−σ(lᵢ))], computed as Σᵢ [xᵢlᵢ − softplus(lᵢ)].

    Arguments:
        x (Node | ArrayLike): The binary observation.
        b (BernoulliLogits): The distribution.

    Raises:
        ValueError: If x has entries other than 0 and 1 or the dimensions don't match.

    Returns:
        Node: Scalar for a vector input, one value per row otherwise.

    Examples:
        ```python
        bernoulli_log_prob([1.0], BernoulliLogits([0.0])).item()  # -0.693147
        ```
    """
    x_node = as_node(x)
    if not np.all((x_node.value == 0.0) | (x_node.value == 1.0)):
        raise ValueError("Bernoulli observations must be 0 or 1")
    if x_node.shape[-1:] != b.logits.shape[-1:]:
        raise ValueError(
            f"Dimension mismatch: x has shape {x_node.shape}, logits have {b.logits.shape}"
        )
    per_dim = x_node * b.logits - ops.softplus(b.logits)
    return ops.reduce_sum(per_dim, axis=-1)
