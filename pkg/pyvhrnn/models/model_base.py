"""This module contains the parameter store, the layer helpers and the SequenceModel base class
which every model kind extends."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator, Mapping, Union

import numpy as np
from numpy.typing import ArrayLike

from pyvhrnn.cells import CellState, GateScales, GruWeights, LstmWeights, hyper_linear, linear
from pyvhrnn.distributions import BernoulliLogits, DiagGaussian, GaussMixture
from pyvhrnn.models.model_config import DecoderHeads, ModelConfig
from pyvhrnn.tensor import Node, Tensor, as_tensor, constant, leaf, ops
from pyvhrnn.utils import Logger

Params = dict[str, Node]
"""Parameters bound as graph nodes for one forward pass, keyed by their store name."""

Distribution = Union[DiagGaussian, BernoulliLogits, GaussMixture]
Modulation = tuple[Node, Node]
"""Scale d and hyper bias δ of one decoder layer."""


class ParameterStore(Mapping[str, Tensor]):
    """Named float64 parameter arrays in registration order.

    Names are stable across runs: they are derived from the architecture only, never from the
    random state.
    """

    def __init__(self) -> None:
        self._values: dict[str, Tensor] = {}

    def __getitem__(self, name: str) -> Tensor:
        return self._values[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def add(self, name: str, value: ArrayLike) -> None:
        """Registers a new parameter.

        Raises:
            ValueError: If the name is already taken.
        """
        if name in self._values:
            raise ValueError(f"Parameter {name} is already registered")
        self._values[name] = as_tensor(value)

    def assign(self, name: str, value: ArrayLike) -> None:
        """Replaces the value of an existing parameter.

        Raises:
            KeyError: If the parameter doesn't exist.
            ValueError: If the shape differs.
        """
        if name not in self._values:
            raise KeyError(f"Unknown parameter {name}")
        new = as_tensor(value)
        if new.shape != self._values[name].shape:
            raise ValueError(
                f"Parameter {name} has shape {self._values[name].shape}, got {new.shape}"
            )
        self._values[name] = new

    def count(self) -> int:
        return int(sum(value.size for value in self._values.values()))

    def bind(self, requires_grad: bool = True) -> Params:
        """Wraps every parameter in a graph node.

        Arguments:
            requires_grad (bool): Leaves for training, constants for evaluation.

        Returns:
            Params: Nodes keyed by parameter name.
        """
        make = leaf if requires_grad else constant
        return {name: make(value, name=name) for name, value in self._values.items()}

    def snapshot(self) -> dict[str, Tensor]:
        return dict(self._values)


@dataclass(frozen=True)
class ModelState:
    """Per-timestep recurrent state.

    Attributes:
        primary (CellState): h_t (and c_t) of the primary RNN.
        hyper (CellState | None): State of the recurrent hyper network θ, if any.
    """

    primary: CellState
    hyper: CellState | None = None

    @property
    def rows(self) -> int:
        return self.primary.h.shape[0]

    def take(self, indices: Any) -> ModelState:
        """Gathers rows, used when particles are resampled."""
        hyper = None if self.hyper is None else self.hyper.take(indices)
        return ModelState(self.primary.take(indices), hyper)


@dataclass(frozen=True)
class StepOutput:
    """Result of one timestep.

    Attributes:
        decoder (Distribution): The distribution over x_t.
        state (ModelState): The next state.
        prior (DiagGaussian | None): p(z_t | h_{t−1}), None without latent variables.
        posterior (DiagGaussian | None): q(z_t | x_t, h_{t−1}).
        z (Node | None): The sampled latent z_t.
    """

    decoder: Distribution
    state: ModelState
    prior: DiagGaussian | None = None
    posterior: DiagGaussian | None = None
    z: Node | None = None


# region layers


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> Tensor:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def add_linear(
    store: ParameterStore,
    name: str,
    n_in: int,
    n_out: int,
    rng: np.random.Generator,
    zero: bool = False,
) -> None:  # pylint: disable=R0913, R0917
    """Registers name.W (n_out × n_in) and name.b, uniform(±1/√n_in) or zero-initialized."""
    if zero:
        store.add(f"{name}.W", np.zeros((n_out, n_in)))
        store.add(f"{name}.b", np.zeros(n_out))
        return
    store.add(f"{name}.W", uniform_init(rng, (n_out, n_in), n_in))
    store.add(f"{name}.b", uniform_init(rng, (n_out,), n_in))


def add_hidden(
    store: ParameterStore,
    name: str,
    n_in: int,
    width: int,
    layers: int,
    rng: np.random.Generator,
) -> int:  # pylint: disable=R0913, R0917
    """Registers the hidden layers name.0 … name.{layers−1} and returns their output width."""
    size = n_in
    for index in range(layers):
        add_linear(store, f"{name}.{index}", size, width, rng)
        size = width
    return size


def add_cell(
    store: ParameterStore,
    name: str,
    cell: str,
    n_in: int,
    hidden: int,
    rng: np.random.Generator,
) -> None:  # pylint: disable=R0913, R0917
    """Registers the stacked cell weights name.W, name.U, name.b and name.b_rec."""
    rows = (4 if cell == "lstm" else 3) * hidden
    store.add(f"{name}.W", uniform_init(rng, (rows, n_in), hidden))
    store.add(f"{name}.U", uniform_init(rng, (rows, hidden), hidden))
    store.add(f"{name}.b", uniform_init(rng, (rows,), hidden))
    store.add(f"{name}.b_rec", uniform_init(rng, (rows,), hidden))


def cell_weights(p: Params, name: str, cell: str) -> LstmWeights | GruWeights:
    weights_class = LstmWeights if cell == "lstm" else GruWeights
    return weights_class(p[f"{name}.W"], p[f"{name}.U"], p[f"{name}.b"], p[f"{name}.b_rec"])


def run_linear(p: Params, name: str, x: Node, mod: Modulation | None = None) -> Node:
    if mod is None:
        return linear(x, p[f"{name}.W"], p[f"{name}.b"])
    return hyper_linear(x, p[f"{name}.W"], p[f"{name}.b"], mod[0], mod[1])


def run_hidden(
    p: Params,
    name: str,
    x: Node,
    layers: int,
    mods: Mapping[str, Modulation] | None = None,
) -> Node:
    """Applies the tanh hidden layers registered by add_hidden."""
    out = x
    for index in range(layers):
        layer = f"{name}.{index}"
        out = ops.tanh(run_linear(p, layer, out, None if mods is None else mods.get(layer)))
    return out


def scales_from(out: Node, width: int) -> GateScales:
    """Splits a hyper output of 3·width entries into d_x = 1 + Δ_x, d_h = 1 + Δ_h and the bias."""
    return GateScales(
        1.0 + ops.slice_(out, 0, width),
        1.0 + ops.slice_(out, width, 2 * width),
        ops.slice_(out, 2 * width, 3 * width),
    )


def flat_distribution(cfg: ModelConfig, out: Node) -> Distribution:
    """Builds the output distribution from a single head layer.

    Gaussian: [means, log-stds]. Bernoulli: logits. Mixture: see GaussMixture.from_flat.
    """
    if cfg.decoder == DecoderHeads.BERNOULLI:
        return BernoulliLogits(out)
    if cfg.decoder == DecoderHeads.GMM:
        return GaussMixture.from_flat(out, cfg.n_components, cfg.x_dim)
    return DiagGaussian(ops.slice_(out, 0, cfg.x_dim), ops.slice_(out, cfg.x_dim, 2 * cfg.x_dim))


# endregion


class SequenceModel:
    """Base class of the sequence models.

    A model owns its ParameterStore and exposes a single-timestep interface over rows of
    independent sequences (or particles). The graph is built from parameters bound for the pass,
    so one model can be evaluated concurrently on different bindings.

    Arguments:
        cfg (ModelConfig): The architecture.
        rng (np.random.Generator): The generator used for initialization.
        logger (Any | None): The logger to use. If not provided, a dummy logger is used.

    Attributes and Properties:
        cfg (ModelConfig): The architecture.
        params (ParameterStore): The parameters.
        has_latent (bool): Whether the model has per-step latent variables.

    Public Methods:
        initial_state: The zero cold-start state.
        step: One filtering step given x_t and the posterior noise.
        sample_step: One ancestral generation step.
    """

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator, logger: Any | None = None):
        self.cfg = cfg
        self.logger = logger or Logger(__name__)
        self.params = ParameterStore()
        self._build(rng)
        self.logger.debug(
            "Built %s with %s parameters in %s tensors", cfg.kind, self.params.count(), len(self.params)
        )

    @property
    def has_latent(self) -> bool:
        return self.cfg.has_latent

    def _build(self, rng: np.random.Generator) -> None:
        raise NotImplementedError

    def initial_state(self, rows: int) -> ModelState:
        raise NotImplementedError

    def step(
        self, x_t: Node | ArrayLike, state: ModelState, p: Params, eps: ArrayLike | None = None
    ) -> StepOutput:
        raise NotImplementedError

    def sample_step(
        self, state: ModelState, p: Params, rng: np.random.Generator
    ) -> tuple[Tensor, StepOutput]:
        raise NotImplementedError

    def check_input(self, x_t: Node, state: ModelState) -> None:
        """Validates the observation rows against the state and config.

        Raises:
            ValueError: If the dimensions don't match.
        """
        if x_t.ndim != 2 or x_t.shape[1] != self.cfg.x_dim:
            raise ValueError(f"Expected x_t of shape (rows, {self.cfg.x_dim}), got {x_t.shape}")
        if x_t.shape[0] != state.rows:
            raise ValueError(f"x_t has {x_t.shape[0]} rows, the state has {state.rows}")
