"""This module contains the diagonal Gaussian used for the prior, the approximate posterior and the
continuous decoder, together with its log-density, reparameterized sampling and closed-form KL."""

from __future__ import annotations

import math
import threading

import numpy as np
from numpy.typing import ArrayLike

from pyvhrnn.tensor import Node, Tensor, as_node, ops

LOG_STD_MIN = -20.0
LOG_STD_MAX = 20.0
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class ClampMonitor:
    """Thread-safe counter of log-std entries which were clamped to [LOG_STD_MIN, LOG_STD_MAX]."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._count = 0

    @property
    def count(self) -> int:
        """The number of clamped entries since the last reset.

        Returns:
            int: The number of clamped entries."""
        return self._count

    def record(self, values: Tensor) -> None:
        clamped = int(np.count_nonzero((values < LOG_STD_MIN) | (values > LOG_STD_MAX)))
        if clamped:
            with self._lock:
                self._count += clamped

    def reset(self) -> None:
        with self._lock:
            self._count = 0


clamp_monitor = ClampMonitor()


class DiagGaussian:
    """Gaussian with diagonal covariance, parameterized by mean and log standard deviation.

    Rows of a 2-D mean are independent distributions (one per particle), the last axis is the
    event dimension. log_std is clamped to [-20, 20].

    Arguments:
        mean (Node | ArrayLike): The mean μ.
        log_std (Node | ArrayLike): Half the log of the diagonal of Σ.

    Raises:
        ValueError: If mean and log_std shapes differ.
    """

    __slots__ = ("mean", "log_std")

    def __init__(self, mean: Node | ArrayLike, log_std: Node | ArrayLike):
        mean_node = as_node(mean)
        log_std_node = as_node(log_std)
        if mean_node.shape != log_std_node.shape:
            raise ValueError(
                f"mean and log_std shapes differ: {mean_node.shape} and {log_std_node.shape}"
            )
        clamp_monitor.record(log_std_node.value)
        self.mean = mean_node
        self.log_std = ops.clip(log_std_node, LOG_STD_MIN, LOG_STD_MAX)

    @property
    def dim(self) -> int:
        """The event dimension.

        Returns:
            int: The length of the last axis."""
        return self.mean.shape[-1]

    def log_prob(self, x: Node | ArrayLike) -> Node:
        return gaussian_log_prob(x, self)

    def rsample(self, eps: Node | ArrayLike) -> Node:
        return gaussian_sample(self, eps)

    def sample(self, rng: np.random.Generator) -> Tensor:
        """Draws a value-level sample (no graph), used for ancestral generation."""
        eps = rng.standard_normal(self.mean.shape)
        return self.mean.value + np.exp(self.log_std.value) * eps

    def moments(self) -> tuple[Tensor, Tensor]:
        """Returns the per-dimension mean and log-variance.

        Returns:
            tuple[Tensor, Tensor]: The mean and 2·log_std."""
        return self.mean.value, 2.0 * self.log_std.value


def _check_dims(x: Node, d: DiagGaussian) -> None:
    if x.shape[-1:] != d.mean.shape[-1:]:
        raise ValueError(f"Dimension mismatch: x has shape {x.shape}, mean has {d.mean.shape}")


def gaussian_log_prob(x: Node | ArrayLike, d: DiagGaussian) -> Node:
    """Log-density Σᵢ [−½ln(2π) − log_stdᵢ − (xᵢ−μᵢ)²/(2σᵢ²)], summed over the last axis.

    Arguments:
        x (Node | ArrayLike): The point, a vector or one row per distribution.
        d (DiagGaussian): The distribution.

    Raises:
        ValueError: If the dimensions don't match.

    Returns:
        Node: Scalar for a vector input, one value per row otherwise.

    Examples:
        ```python
        gaussian_log_prob([0.0], DiagGaussian([0.0], [0.0])).item()  # -0.9189385
        ```
    """
    x_node = as_node(x)
    _check_dims(x_node, d)
    standardized = (x_node - d.mean) * ops.exp(-d.log_std)
    per_dim = ops.add_scalar(-d.log_std - 0.5 * ops.square(standardized), -HALF_LOG_2PI)
    return ops.reduce_sum(per_dim, axis=-1)


def gaussian_sample(d: DiagGaussian, eps: Node | ArrayLike) -> Node:
    """Reparameterized sample μ + exp(log_std) ∘ ε, differentiable in μ and log_std.

    Arguments:
        d (DiagGaussian): The distribution.
        eps (Node | ArrayLike): A standard-normal draw of the same shape as the mean.

    Raises:
        ValueError: If eps and the mean have different shapes.

    Returns:
        Node: The sample.
    """
    eps_node = as_node(eps)
    if eps_node.shape != d.mean.shape:
        raise ValueError(f"Dimension mismatch: eps has shape {eps_node.shape}, mean has {d.mean.shape}")
    return d.mean + ops.exp(d.log_std) * eps_node


def gaussian_kl(q: DiagGaussian, p: DiagGaussian) -> Node:
    """Closed-form KL(q ‖ p) between diagonal Gaussians, summed over the last axis.

    Σᵢ [log(σ_p/σ_q) + (σ_q² + (μ_q−μ_p)²)/(2σ_p²) − ½]

    Arguments:
        q (DiagGaussian): The first distribution.
        p (DiagGaussian): The second distribution.

    Raises:
        ValueError: If the shapes differ.

    Returns:
        Node: Scalar for vectors, one value per row otherwise.
    """
    if q.mean.shape != p.mean.shape:
        raise ValueError(f"Dimension mismatch: {q.mean.shape} and {p.mean.shape}")
    variance_ratio = ops.exp(2.0 * (q.log_std - p.log_std))
    mean_term = ops.square((q.mean - p.mean) * ops.exp(-p.log_std))
    per_dim = ops.add_scalar((p.log_std - q.log_std) + 0.5 * (variance_ratio + mean_term), -0.5)
    return ops.reduce_sum(per_dim, axis=-1)
