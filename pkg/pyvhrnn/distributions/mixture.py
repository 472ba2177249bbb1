"""This module contains the diagonal Gaussian mixture used as output head of the HyperLSTM baseline."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from pyvhrnn.distributions.gaussian import DiagGaussian, gaussian_log_prob
from pyvhrnn.tensor import Node, Tensor, as_node, ops


class GaussMixture:
    """Mixture of diagonal Gaussians with normalized component log-weights.

    The weight logits are normalized with log_softmax, so the stored log-weights always satisfy
    logsumexp = 0.

    Arguments:
        weight_logits (Node | ArrayLike): Unnormalized component log-weights, last axis = components.
        components (Sequence[DiagGaussian]): One distribution per component.

    Raises:
        ValueError: If there are no components or the weight count doesn't match.

    Attributes and Properties:
        log_weights (Node): The normalized component log-weights.
        components (list[DiagGaussian]): The components.
    """

    __slots__ = ("log_weights", "components")

    def __init__(self, weight_logits: Node | ArrayLike, components: Sequence[DiagGaussian]):
        logits = as_node(weight_logits)
        if not components:
            raise ValueError("A mixture needs at least one component")
        if logits.shape[-1] != len(components):
            raise ValueError(
                f"Got {logits.shape[-1]} weights for {len(components)} components"
            )
        self.log_weights = ops.log_softmax(logits, axis=-1)
        self.components = list(components)

    @classmethod
    def from_flat(cls, out: Node, n_components: int, dim: int) -> GaussMixture:
        """Splits a network output into weights, means and log-stds.

        Layout of the last axis: C weight logits, then C·D means, then C·D log-stds, component-major.

        Arguments:
            out (Node): The network output with C + 2·C·D entries on its last axis.
            n_components (int): The component count C.
            dim (int): The event dimension D.

        Raises:
            ValueError: If the width doesn't match.

        Returns:
            GaussMixture: The mixture.
        """
        expected = n_components + 2 * n_components * dim
        if out.shape[-1] != expected:
            raise ValueError(f"Expected {expected} mixture outputs, got {out.shape[-1]}")
        logits = ops.slice_(out, 0, n_components)
        components = []
        for c in range(n_components):
            mean_start = n_components + c * dim
            std_start = n_components + n_components * dim + c * dim
            components.append(
                DiagGaussian(
                    ops.slice_(out, mean_start, mean_start + dim),
                    ops.slice_(out, std_start, std_start + dim),
                )
            )
        return cls(logits, components)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def log_prob(self, x: Node | ArrayLike) -> Node:
        return gmm_log_prob(x, self)

    def sample(self, rng: np.random.Generator) -> Tensor:
        weights = np.exp(self.log_weights.value)
        draws = np.stack([c.sample(rng) for c in self.components], axis=-2)
        if weights.ndim == 1:
            return draws[rng.choice(len(weights), p=weights / weights.sum())]
        picks = [rng.choice(weights.shape[-1], p=row / row.sum()) for row in weights]
        return draws[np.arange(len(picks)), picks]

    def moments(self) -> tuple[Tensor, Tensor]:
        """Returns the mixture mean and log-variance by the law of total variance.

        Returns:
            tuple[Tensor, Tensor]: The per-dimension mean and log-variance.
        """
        weights = np.exp(self.log_weights.value)[..., None]
        means = np.stack([c.mean.value for c in self.components], axis=-2)
        variances = np.stack([np.exp(2.0 * c.log_std.value) for c in self.components], axis=-2)
        mean = np.sum(weights * means, axis=-2)
        second = np.sum(weights * (variances + means**2), axis=-2)
        return mean, np.log(np.maximum(second - mean**2, np.finfo(np.float64).tiny))


def gmm_log_prob(x: Node | ArrayLike, m: GaussMixture) -> Node:
    """Mixture log-density logsumexp_c [log w_c + log N(x; μ_c, Σ_c)].

    Arguments:
        x (Node | ArrayLike): The point.
        m (GaussMixture): The mixture.

    Raises:
        ValueError: If the dimensions don't match.

    Returns:
        Node: Scalar for a vector input, one value per row otherwise.
    """
    x_node = as_node(x)
    per_component = ops.stack_last([gaussian_log_prob(x_node, c) for c in m.components])
    return ops.reduce_logsumexp(per_component + m.log_weights, axis=-1)
