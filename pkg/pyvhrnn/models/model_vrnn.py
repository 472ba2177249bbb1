"""This module contains the Vrnn class: a recurrent network with a per-step latent variable,
conditional prior, approximate posterior and decoder."""

from __future__ import annotations

from typing import Mapping

import numpy as np
from numpy.typing import ArrayLike

from pyvhrnn.cells import CellState, GateScales, gru_step, hyper_gru_step, hyper_lstm_step, lstm_step
from pyvhrnn.distributions import BernoulliLogits, DiagGaussian, GaussMixture
from pyvhrnn.models.model_base import (
    Distribution,
    ModelState,
    Modulation,
    Params,
    SequenceModel,
    StepOutput,
    add_cell,
    add_hidden,
    add_linear,
    cell_weights,
    run_hidden,
    run_linear,
)
from pyvhrnn.models.model_config import DecoderHeads
from pyvhrnn.tensor import Node, Tensor, as_node, ops


class Vrnn(SequenceModel):
    """Variational RNN.

    Per step: prior N(μ^prior, Σ^prior) = φ^prior(h_{t−1}), posterior N(μ^enc, Σ^enc) =
    φ^enc(φˣ(x_t), h_{t−1}), decoder φ^dec(φᶻ(z_t), h_{t−1}) and the recurrence
    h_t = g(h_{t−1}, [φˣ(x_t), φᶻ(z_t)]) with fixed weights.

    Parameter names: phi_x.*, phi_z.*, enc.*, prior.*, dec.*, cell.*.
    """

    def _build(self, rng: np.random.Generator) -> None:
        cfg = self.cfg
        store = self.params
        feature_in = add_hidden(store, "phi_x", cfg.x_dim, cfg.width, cfg.layers, rng)
        add_linear(store, "phi_x.out", feature_in, cfg.z_dim, rng)
        feature_in = add_hidden(store, "phi_z", cfg.z_dim, cfg.width, cfg.layers, rng)
        add_linear(store, "phi_z.out", feature_in, cfg.z_dim, rng)

        enc_out = add_hidden(store, "enc", cfg.z_dim + cfg.hidden, cfg.width, cfg.layers, rng)
        add_linear(store, "enc.mean", enc_out, cfg.z_dim, rng)
        add_linear(store, "enc.log_std", enc_out, cfg.z_dim, rng)

        prior_out = add_hidden(store, "prior", cfg.hidden, cfg.width, cfg.layers, rng)
        add_linear(store, "prior.mean", prior_out, cfg.z_dim, rng)
        add_linear(store, "prior.log_std", prior_out, cfg.z_dim, rng)

        for name, n_in, n_out in self.decoder_layers():
            add_linear(store, name, n_in, n_out, rng)

        add_cell(store, "cell", cfg.cell, 2 * cfg.z_dim, cfg.hidden, rng)

    def decoder_layers(self) -> list[tuple[str, int, int]]:
        """Lists the decoder layers as (name, input width, output width)."""
        cfg = self.cfg
        layers = []
        size = cfg.z_dim + cfg.hidden
        for index in range(cfg.layers):
            layers.append((f"dec.{index}", size, cfg.width))
            size = cfg.width
        if cfg.decoder == DecoderHeads.GAUSSIAN:
            layers.append(("dec.mean", size, cfg.x_dim))
            layers.append(("dec.log_std", size, cfg.x_dim))
        elif cfg.decoder == DecoderHeads.BERNOULLI:
            layers.append(("dec.logits", size, cfg.x_dim))
        else:
            layers.append(("dec.mixture", size, cfg.head_width))
        return layers

    def initial_state(self, rows: int) -> ModelState:
        return ModelState(CellState.zeros(rows, self.cfg.hidden, with_cell=self.cfg.cell == "lstm"))

    # region step parts

    def _feature(self, p: Params, name: str, x: Node) -> Node:
        hidden = run_hidden(p, name, x, self.cfg.layers)
        return ops.tanh(run_linear(p, f"{name}.out", hidden))

    def _gaussian(self, p: Params, name: str, x: Node) -> DiagGaussian:
        hidden = run_hidden(p, name, x, self.cfg.layers)
        return DiagGaussian(run_linear(p, f"{name}.mean", hidden), run_linear(p, f"{name}.log_std", hidden))

    def _prior(self, p: Params, state: ModelState) -> DiagGaussian:
        return self._gaussian(p, "prior", state.primary.h)

    def _posterior(self, p: Params, fx: Node, state: ModelState) -> DiagGaussian:
        return self._gaussian(p, "enc", ops.concat([fx, state.primary.h]))

    def _decoder_modulation(
        self, p: Params, z: Node, state: ModelState
    ) -> Mapping[str, Modulation] | None:  # pylint: disable=unused-argument
        return None

    def _cell_modulation(
        self, p: Params, z: Node, state: ModelState
    ) -> tuple[GateScales | None, CellState | None]:  # pylint: disable=unused-argument
        return None, state.hyper

    def _decode(
        self, p: Params, fz: Node, state: ModelState, mods: Mapping[str, Modulation] | None
    ) -> Distribution:
        hidden = run_hidden(p, "dec", ops.concat([fz, state.primary.h]), self.cfg.layers, mods)

        def head(name: str) -> Node:
            return run_linear(p, name, hidden, None if mods is None else mods.get(name))

        if self.cfg.decoder == DecoderHeads.GAUSSIAN:
            return DiagGaussian(head("dec.mean"), head("dec.log_std"))
        if self.cfg.decoder == DecoderHeads.BERNOULLI:
            return BernoulliLogits(head("dec.logits"))
        return GaussMixture.from_flat(head("dec.mixture"), self.cfg.n_components, self.cfg.x_dim)

    def _advance(
        self,
        p: Params,
        fx: Node,
        fz: Node,
        state: ModelState,
        modulation: tuple[GateScales | None, CellState | None],
    ) -> ModelState:  # pylint: disable=R0913, R0917
        scales, hyper = modulation
        weights = cell_weights(p, "cell", self.cfg.cell)
        y = ops.concat([fx, fz])
        if self.cfg.cell == "lstm":
            primary = (
                lstm_step(y, state.primary, weights)
                if scales is None
                else hyper_lstm_step(y, state.primary, weights, scales)
            )
        else:
            primary = (
                gru_step(y, state.primary, weights)
                if scales is None
                else hyper_gru_step(y, state.primary, weights, scales)
            )
        return ModelState(primary, hyper)

    def _emit(
        self, p: Params, z: Node, state: ModelState
    ) -> tuple[Distribution, Node, tuple[GateScales | None, CellState | None]]:
        fz = self._feature(p, "phi_z", z)
        decoder = self._decode(p, fz, state, self._decoder_modulation(p, z, state))
        return decoder, fz, self._cell_modulation(p, z, state)

    # endregion

    def step(
        self, x_t: Node | ArrayLike, state: ModelState, p: Params, eps: ArrayLike | None = None
    ) -> StepOutput:
        """Runs one filtering step.

        Arguments:
            x_t (Node | ArrayLike): The observations, shape (rows, x_dim).
            state (ModelState): The previous state.
            p (Params): The bound parameters.
            eps (ArrayLike | None): Standard-normal noise of shape (rows, z_dim) for the
                reparameterized posterior sample.

        Raises:
            ValueError: If a dimension doesn't match or eps is missing.

        Returns:
            StepOutput: The prior, posterior, sampled z_t, decoder and next state.
        """
        x = as_node(x_t)
        self.check_input(x, state)
        if eps is None:
            raise ValueError("A latent model step needs posterior noise eps")
        fx = self._feature(p, "phi_x", x)
        prior = self._prior(p, state)
        posterior = self._posterior(p, fx, state)
        z = posterior.rsample(eps)
        decoder, fz, modulation = self._emit(p, z, state)
        next_state = self._advance(p, fx, fz, state, modulation)
        return StepOutput(decoder, next_state, prior, posterior, z)

    def sample_step(
        self, state: ModelState, p: Params, rng: np.random.Generator
    ) -> tuple[Tensor, StepOutput]:
        """Draws z_t from the prior, x_t from the decoder and advances the state."""
        prior = self._prior(p, state)
        z = prior.rsample(rng.standard_normal((state.rows, self.cfg.z_dim)))
        decoder, fz, modulation = self._emit(p, z, state)
        x = decoder.sample(rng)
        fx = self._feature(p, "phi_x", as_node(x))
        next_state = self._advance(p, fx, fz, state, modulation)
        return x, StepOutput(decoder, next_state, prior, None, z)
