"""This module contains the Vhrnn class: a VRNN whose recurrence and decoder weights are modulated
at every step by hyper networks fed the latent variable and/or the previous hidden state."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from pyvhrnn.cells import CellState, GateScales, gru_step, lstm_step
from pyvhrnn.models.model_base import (
    ModelState,
    Modulation,
    Params,
    add_cell,
    add_hidden,
    add_linear,
    cell_weights,
    run_hidden,
    run_linear,
    scales_from,
)
from pyvhrnn.models.model_config import HyperInputs
from pyvhrnn.models.model_vrnn import Vrnn
from pyvhrnn.tensor import Node, ops

THETA_FEEDFORWARD_LAYERS = 2


class Vhrnn(Vrnn):
    """Variational hyper RNN.

    θ (an RNN, or an MLP for the feed-forward variant) maps the hyper input to the scaling and
    bias vectors of the primary cell gates through a linear layer. ω, one embedding MLP per
    decoder layer, maps the hyper input to that layer's scale d = 1 + Δ and bias δ. The final
    layers of θ and ω are zero-initialized, so a freshly built Vhrnn behaves exactly like the
    Vrnn sharing its primary weights.

    The hyper input is z_t, h_{t−1} or their concatenation, per ModelConfig.hyper_input.

    Parameter names: those of Vrnn plus theta.* and omega.<decoder layer>.*.
    """

    def _build(self, rng: np.random.Generator) -> None:
        super()._build(rng)
        cfg = self.cfg
        store = self.params
        hyper_in = self.hyper_input_width
        gate_width = cfg.n_gates * cfg.hidden
        if cfg.hyper_kind == "recurrent":
            add_cell(store, "theta.cell", cfg.cell, hyper_in, cfg.hyper, rng)
            add_linear(store, "theta.out", cfg.hyper, 3 * gate_width, rng, zero=True)
        else:
            size = add_hidden(store, "theta", hyper_in, cfg.hyper, THETA_FEEDFORWARD_LAYERS, rng)
            add_linear(store, "theta.out", size, 3 * gate_width, rng, zero=True)
        for name, _, n_out in self.decoder_layers():
            add_linear(store, f"omega.{name}.hidden", hyper_in, cfg.embed, rng)
            add_linear(store, f"omega.{name}.out", cfg.embed, 2 * n_out, rng, zero=True)

    @property
    def hyper_input_width(self) -> int:
        cfg = self.cfg
        if cfg.hyper_input == HyperInputs.LATENT_ONLY:
            return cfg.z_dim
        if cfg.hyper_input == HyperInputs.HIDDEN_ONLY:
            return cfg.hidden
        return cfg.z_dim + cfg.hidden

    def initial_state(self, rows: int) -> ModelState:
        state = super().initial_state(rows)
        if self.cfg.hyper_kind != "recurrent":
            return state
        return ModelState(
            state.primary, CellState.zeros(rows, self.cfg.hyper, with_cell=self.cfg.cell == "lstm")
        )

    def hyper_input(self, z: Node, state: ModelState) -> Node:
        """Assembles the input of θ and ω for the configured mode."""
        mode = self.cfg.hyper_input
        if mode == HyperInputs.LATENT_ONLY:
            return z
        if mode == HyperInputs.HIDDEN_ONLY:
            return state.primary.h
        return ops.concat([z, state.primary.h])

    def _decoder_modulation(self, p: Params, z: Node, state: ModelState) -> Mapping[str, Modulation]:
        hyper_in = self.hyper_input(z, state)
        mods = {}
        for name, _, n_out in self.decoder_layers():
            embedding = ops.tanh(run_linear(p, f"omega.{name}.hidden", hyper_in))
            out = run_linear(p, f"omega.{name}.out", embedding)
            mods[name] = (1.0 + ops.slice_(out, 0, n_out), ops.slice_(out, n_out, 2 * n_out))
        return mods

    def _cell_modulation(
        self, p: Params, z: Node, state: ModelState
    ) -> tuple[GateScales | None, CellState | None]:
        hyper_in = self.hyper_input(z, state)
        gate_width = self.cfg.n_gates * self.cfg.hidden
        if self.cfg.hyper_kind != "recurrent":
            hidden = run_hidden(p, "theta", hyper_in, THETA_FEEDFORWARD_LAYERS)
            return scales_from(run_linear(p, "theta.out", hidden), gate_width), None
        if state.hyper is None:
            raise ValueError("A recurrent hyper network needs a hyper state")
        weights = cell_weights(p, "theta.cell", self.cfg.cell)
        step = lstm_step if self.cfg.cell == "lstm" else gru_step
        hyper = step(hyper_in, state.hyper, weights)
        return scales_from(run_linear(p, "theta.out", hyper.h), gate_width), hyper
