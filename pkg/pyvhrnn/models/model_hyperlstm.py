"""This module contains the HyperLstm class, the latent-free baseline: an LSTM whose gates are
modulated by a small recurrent hyper network, with a Bernoulli, Gaussian or mixture output head."""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike

from pyvhrnn.cells import CellState, hyper_gru_step, hyper_lstm_step, gru_step, lstm_step
from pyvhrnn.models.model_base import (
    ModelState,
    Params,
    SequenceModel,
    StepOutput,
    add_cell,
    add_linear,
    cell_weights,
    flat_distribution,
    run_linear,
    scales_from,
)
from pyvhrnn.models.model_config import DecoderHeads
from pyvhrnn.tensor import Node, Tensor, as_node, ops


class HyperLstm(SequenceModel):
    """HyperLSTM baseline without latent variables.

    The output head maps h_{t−1} to the predictive distribution of x_t; the hyper cell reads
    [x_t, h_{t−1}] and its hidden state is mapped linearly to the primary gate scales.

    Parameter names: cell.*, theta.cell.*, theta.out.*, head.*.
    """

    def _build(self, rng: np.random.Generator) -> None:
        cfg = self.cfg
        store = self.params
        add_cell(store, "cell", cfg.cell, cfg.x_dim, cfg.hidden, rng)
        add_cell(store, "theta.cell", cfg.cell, cfg.x_dim + cfg.hidden, cfg.hyper, rng)
        add_linear(store, "theta.out", cfg.hyper, 3 * cfg.n_gates * cfg.hidden, rng, zero=True)
        head_width = 2 * cfg.x_dim if cfg.decoder == DecoderHeads.GAUSSIAN else cfg.head_width
        add_linear(store, "head", cfg.hidden, head_width, rng)

    def initial_state(self, rows: int) -> ModelState:
        with_cell = self.cfg.cell == "lstm"
        return ModelState(
            CellState.zeros(rows, self.cfg.hidden, with_cell),
            CellState.zeros(rows, self.cfg.hyper, with_cell),
        )

    def _advance(self, p: Params, x: Node, state: ModelState) -> ModelState:
        lstm = self.cfg.cell == "lstm"
        hyper_in = ops.concat([x, state.primary.h])
        hyper_step = lstm_step if lstm else gru_step
        hyper = hyper_step(hyper_in, state.hyper, cell_weights(p, "theta.cell", self.cfg.cell))
        scales = scales_from(run_linear(p, "theta.out", hyper.h), self.cfg.n_gates * self.cfg.hidden)
        primary_step = hyper_lstm_step if lstm else hyper_gru_step
        primary = primary_step(x, state.primary, cell_weights(p, "cell", self.cfg.cell), scales)
        return ModelState(primary, hyper)

    def step(
        self, x_t: Node | ArrayLike, state: ModelState, p: Params, eps: ArrayLike | None = None
    ) -> StepOutput:
        """Predicts x_t from h_{t−1}, then advances on x_t. eps is ignored."""
        x = as_node(x_t)
        self.check_input(x, state)
        decoder = flat_distribution(self.cfg, run_linear(p, "head", state.primary.h))
        return StepOutput(decoder, self._advance(p, x, state))

    def sample_step(
        self, state: ModelState, p: Params, rng: np.random.Generator
    ) -> tuple[Tensor, StepOutput]:
        decoder = flat_distribution(self.cfg, run_linear(p, "head", state.primary.h))
        x = decoder.sample(rng)
        return x, StepOutput(decoder, self._advance(p, as_node(x), state))
