"""This module contains the Adam optimizer state and update with global-norm gradient clipping."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from pyvhrnn.objectives.objective_config import OptimConfig
from pyvhrnn.tensor import Tensor


@dataclass(frozen=True)
class OptimState:
    """Adam state.

    Attributes:
        lr (float): The learning rate.
        beta1 (float): The first-moment decay.
        beta2 (float): The second-moment decay.
        eps (float): The denominator offset.
        clip_norm (float): The global gradient norm limit.
        step (int): The number of updates applied.
        m (dict[str, Tensor]): First-moment estimates per parameter.
        v (dict[str, Tensor]): Second-moment estimates per parameter.
    """

    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 5.0
    step: int = 0
    m: dict[str, Tensor] = field(default_factory=dict)
    v: dict[str, Tensor] = field(default_factory=dict)

    @classmethod
    def create(cls, params: Mapping[str, Tensor], cfg: OptimConfig | None = None) -> OptimState:
        """Creates zero moments for the parameters.

        Arguments:
            params (Mapping[str, Tensor]): The parameters.
            cfg (OptimConfig | None): The hyperparameters, defaults when not given.

        Returns:
            OptimState: The initial state.
        """
        cfg = cfg or OptimConfig()
        return cls(
            lr=cfg.lr,
            beta1=cfg.beta1,
            beta2=cfg.beta2,
            eps=cfg.eps,
            clip_norm=cfg.clip_norm,
            m={name: np.zeros_like(value) for name, value in params.items()},
            v={name: np.zeros_like(value) for name, value in params.items()},
        )

    def with_lr(self, lr: float) -> OptimState:
        return replace(self, lr=lr)


def global_norm(grads: Mapping[str, Tensor]) -> float:
    return float(np.sqrt(sum(float(np.sum(np.square(g))) for g in grads.values())))


def clip_by_global_norm(grads: Mapping[str, Tensor], clip_norm: float) -> dict[str, Tensor]:
    """Rescales all gradients by clip_norm / ‖g‖ when the global norm exceeds clip_norm."""
    norm = global_norm(grads)
    if norm <= clip_norm:
        return dict(grads)
    factor = clip_norm / norm
    return {name: g * factor for name, g in grads.items()}


def adam_update(
    params: Mapping[str, Tensor], grads: Mapping[str, Tensor], state: OptimState
) -> tuple[dict[str, Tensor], OptimState]:
    """Applies one bias-corrected Adam step after global-norm clipping. Descends on the gradients.

    Arguments:
        params (Mapping[str, Tensor]): The parameters.
        grads (Mapping[str, Tensor]): The gradients of the loss, one per parameter.
        state (OptimState): The current state.

    Raises:
        ValueError: If a gradient or moment is missing or its shape differs from the parameter.

    Returns:
        tuple[dict[str, Tensor], OptimState]: The updated parameters and state.

    Examples:
        ```python
        params, state = adam_update({"w": np.ones(2)}, {"w": np.ones(2)}, OptimState.create(...))
        ```
    """
    for name, value in params.items():
        for label, other in (("gradient", grads), ("first moment", state.m), ("second moment", state.v)):
            if name not in other:
                raise ValueError(f"Missing {label} for parameter {name}")
            if other[name].shape != value.shape:
                raise ValueError(
                    f"The {label} of {name} has shape {other[name].shape}, expected {value.shape}"
                )
    clipped = clip_by_global_norm({name: grads[name] for name in params}, state.clip_norm)
    step = state.step + 1
    correction1 = 1.0 - state.beta1**step
    correction2 = 1.0 - state.beta2**step
    new_params, new_m, new_v = {}, {}, {}
    for name, value in params.items():
        g = clipped[name]
        m = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[name] + (1.0 - state.beta2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        new_params[name] = value - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        new_m[name] = m
        new_v[name] = v
    return new_params, replace(state, step=step, m=new_m, v=new_v)
