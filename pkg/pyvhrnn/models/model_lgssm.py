"""This module contains the one-dimensional linear-Gaussian state-space model and its exact Kalman
log-likelihood, the oracle against which the bound estimators are checked."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike

from pyvhrnn.cells import CellState
from pyvhrnn.distributions import DiagGaussian
from pyvhrnn.models.model_base import ModelState, Params, SequenceModel, StepOutput
from pyvhrnn.tensor import Node, Tensor, as_node, ops


class LinearGaussianModel(SequenceModel):
    """z_t = a·z_{t−1} + N(0, q), x_t = z_t + N(0, r), with z_0 = 0.

    The proposal is either the transition prior (bootstrap) or the locally optimal
    q(z_t | z_{t−1}, x_t), under which every incremental weight equals p(x_t | z_{t−1}).

    Parameter names: lgssm.transition, lgssm.log_process_std, lgssm.log_obs_std, initialized
    from the config, not at random.
    """

    def _build(self, rng: np.random.Generator) -> None:
        cfg = self.cfg
        self.params.add("lgssm.transition", [cfg.transition])
        self.params.add("lgssm.log_process_std", [math.log(cfg.process_std)])
        self.params.add("lgssm.log_obs_std", [math.log(cfg.obs_std)])

    def initial_state(self, rows: int) -> ModelState:
        return ModelState(CellState.zeros(rows, 1, with_cell=False))

    def _prior(self, p: Params, state: ModelState) -> DiagGaussian:
        z_prev = state.primary.h
        mean = z_prev * p["lgssm.transition"]
        return DiagGaussian(mean, ops.broadcast(p["lgssm.log_process_std"], z_prev.shape))

    def _decoder(self, p: Params, z: Node) -> DiagGaussian:
        return DiagGaussian(z, ops.broadcast(p["lgssm.log_obs_std"], z.shape))

    def _optimal(self, p: Params, prior: DiagGaussian, x: Node) -> DiagGaussian:
        process_precision = ops.exp(-2.0 * prior.log_std)
        obs_precision = ops.broadcast(ops.exp(-2.0 * p["lgssm.log_obs_std"]), x.shape)
        precision = process_precision + obs_precision
        mean = (prior.mean * process_precision + x * obs_precision) * ops.exp(-ops.log(precision))
        return DiagGaussian(mean, -0.5 * ops.log(precision))

    def step(
        self, x_t: Node | ArrayLike, state: ModelState, p: Params, eps: ArrayLike | None = None
    ) -> StepOutput:
        x = as_node(x_t)
        self.check_input(x, state)
        if eps is None:
            raise ValueError("A latent model step needs posterior noise eps")
        prior = self._prior(p, state)
        posterior = prior if self.cfg.proposal == "bootstrap" else self._optimal(p, prior, x)
        z = posterior.rsample(eps)
        return StepOutput(self._decoder(p, z), ModelState(CellState(z)), prior, posterior, z)

    def sample_step(
        self, state: ModelState, p: Params, rng: np.random.Generator
    ) -> tuple[Tensor, StepOutput]:
        prior = self._prior(p, state)
        z = prior.rsample(rng.standard_normal((state.rows, 1)))
        decoder = self._decoder(p, z)
        return decoder.sample(rng), StepOutput(decoder, ModelState(CellState(z)), prior, None, z)


def kalman_log_likelihood(
    xs: ArrayLike, transition: float, process_var: float, obs_var: float
) -> float:
    """Exact log p(x_{1:T}) of the one-dimensional linear-Gaussian model by the Kalman recursion.

    Arguments:
        xs (ArrayLike): The observations, shape (T,) or (T, 1).
        transition (float): The coefficient a.
        process_var (float): The state noise variance q.
        obs_var (float): The observation noise variance r.

    Raises:
        ValueError: If the sequence is empty or a variance is not positive.

    Returns:
        float: The log-likelihood.

    Examples:
        ```python
        kalman_log_likelihood([0.0], 0.9, 1.0, 1.0)  # log N(0; 0, 2) = -1.2655
        ```
    """
    values = np.asarray(xs, dtype=np.float64).reshape(-1)
    if values.size == 0:
        raise ValueError("The sequence is empty")
    if process_var <= 0 or obs_var <= 0:
        raise ValueError(f"Variances must be positive, got q={process_var}, r={obs_var}")
    mean, var = 0.0, process_var
    total = 0.0
    for t, x in enumerate(values):
        if t:
            mean, var = transition * mean, transition * transition * var + process_var
        innovation_var = var + obs_var
        residual = x - mean
        total += -0.5 * (math.log(2.0 * math.pi * innovation_var) + residual * residual / innovation_var)
        gain = var / innovation_var
        mean, var = mean + gain * residual, (1.0 - gain) * var
    return total
