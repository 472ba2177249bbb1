"""This module contains the entry points of the models package: building a model from its config,
the per-kind step functions, parameter counting and ancestral generation."""

from __future__ import annotations

from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from pyvhrnn.models.model_base import ModelState, Params, SequenceModel, StepOutput
from pyvhrnn.models.model_config import ModelConfig, ModelKinds
from pyvhrnn.models.model_hyperlstm import HyperLstm
from pyvhrnn.models.model_lgssm import LinearGaussianModel
from pyvhrnn.models.model_vhrnn import Vhrnn
from pyvhrnn.models.model_vrnn import Vrnn
from pyvhrnn.tensor import Node, Tensor

_MODEL_CLASSES: dict[str, type[SequenceModel]] = {
    ModelKinds.VRNN: Vrnn,
    ModelKinds.VHRNN: Vhrnn,
    ModelKinds.HYPERLSTM: HyperLstm,
    ModelKinds.LGSSM: LinearGaussianModel,
}


def build_model(
    cfg: ModelConfig, rng: np.random.Generator | int, logger: Any | None = None
) -> SequenceModel:
    """Allocates and initializes the model described by the config.

    Arguments:
        cfg (ModelConfig): The architecture.
        rng (np.random.Generator | int): The initialization generator, or a seed.
        logger (Any | None): The logger to use. If not provided, a dummy logger is used.

    Raises:
        ValueError: If the model kind is unknown.

    Returns:
        SequenceModel: The model.

    Examples:
        ```python
        model = build_model(ModelConfig(kind="vhrnn", z_dim=4), 7)
        param_count(model)  # 1556
        ```
    """
    model_class = _MODEL_CLASSES.get(cfg.kind)
    if model_class is None:
        raise ValueError(f"Unknown model kind: {cfg.kind}")
    generator = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return model_class(cfg, generator, logger)


def _checked_step(
    kind: type[SequenceModel],
    x_t: Node | ArrayLike,
    state: ModelState,
    model: SequenceModel,
    eps: ArrayLike | None,
    params: Params | None,
) -> StepOutput:  # pylint: disable=R0913, R0917
    if not isinstance(model, kind) or (kind is Vrnn and isinstance(model, Vhrnn)):
        raise ValueError(f"Expected a {kind.__name__} model, got {type(model).__name__}")
    p = params if params is not None else model.params.bind(requires_grad=False)
    return model.step(x_t, state, p, eps)


def vrnn_step(
    x_t: Node | ArrayLike,
    state: ModelState,
    model: SequenceModel,
    eps: ArrayLike,
    params: Params | None = None,
) -> StepOutput:
    """One VRNN filtering step. Parameters are bound as constants unless given."""
    return _checked_step(Vrnn, x_t, state, model, eps, params)


def vhrnn_step(
    x_t: Node | ArrayLike,
    state: ModelState,
    model: SequenceModel,
    eps: ArrayLike,
    params: Params | None = None,
) -> StepOutput:
    """One VHRNN filtering step. Parameters are bound as constants unless given."""
    return _checked_step(Vhrnn, x_t, state, model, eps, params)


def hyperlstm_step(
    x_t: Node | ArrayLike,
    state: ModelState,
    model: SequenceModel,
    params: Params | None = None,
) -> StepOutput:
    """One HyperLSTM step: the predictive distribution of x_t and the state advanced on x_t."""
    return _checked_step(HyperLstm, x_t, state, model, None, params)


def param_count(model: SequenceModel) -> int:
    """Returns the total number of scalar parameters."""
    return model.params.count()


def generate(
    model: SequenceModel,
    steps: int,
    rng: np.random.Generator,
    return_means: bool = False,
) -> Tensor | tuple[Tensor, Tensor]:
    """Ancestral sampling of one sequence: z_t from the prior, x_t from the decoder.

    Arguments:
        model (SequenceModel): The model.
        steps (int): The number of steps T.
        rng (np.random.Generator): The generator.
        return_means (bool): Whether to also return the decoder means.

    Raises:
        ValueError: If steps < 1.

    Returns:
        Tensor | tuple[Tensor, Tensor]: x_{1:T} with shape (T, x_dim), and the decoder means
            of the same shape when requested.
    """
    if steps < 1:
        raise ValueError(f"steps must be at least 1, got {steps}")
    p = model.params.bind(requires_grad=False)
    state = model.initial_state(1)
    xs, means = [], []
    for _ in range(steps):
        x, out = model.sample_step(state, p, rng)
        xs.append(x[0])
        means.append(out.decoder.moments()[0][0])
        state = out.state
    if return_means:
        return np.stack(xs), np.stack(means)
    return np.stack(xs)
