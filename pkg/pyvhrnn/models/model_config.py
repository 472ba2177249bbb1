"""This module contains the ModelConfig class which describes the architecture of a sequence model."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


# pylint: disable=too-few-public-methods
class ModelKinds:
    """Stores the supported model kinds."""

    VRNN = "vrnn"
    VHRNN = "vhrnn"
    HYPERLSTM = "hyperlstm"
    LGSSM = "lgssm"


# pylint: disable=too-few-public-methods
class HyperInputs:
    """Stores the hyper input modes, i.e. what θ and ω are fed."""

    LATENT_ONLY = "latent_only"
    HIDDEN_ONLY = "hidden_only"
    BOTH = "both"


# pylint: disable=too-few-public-methods
class DecoderHeads:
    """Stores the supported output distributions."""

    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"
    GMM = "gmm"


# pylint: disable=too-few-public-methods
class Recipes:
    """Stores the layer recipes: two hidden layers for synthetic data, one for real-world data."""

    SYNTHETIC = "synthetic"
    REAL = "real"


_RECIPE_LAYERS = {Recipes.SYNTHETIC: 2, Recipes.REAL: 1}
_RECIPE_EMBED = {Recipes.SYNTHETIC: 8, Recipes.REAL: 64}


class ModelConfig(BaseModel):
    """Architecture of a sequence model.

    Widths left as None are resolved from the recipe: primary and hyper hidden sizes and the MLP
    widths default to the latent dimension, the hidden-layer count to 2 (synthetic) or 1 (real),
    the ω embedding width to 8 (synthetic) or 64 (real).

    Attributes:
        kind (str): vrnn, vhrnn, hyperlstm or lgssm.
        cell (str): lstm or gru, for the primary and the recurrent hyper cell.
        x_dim (int): The data dimension.
        z_dim (int): The latent dimension.
        hidden_dim (int | None): The primary RNN hidden size.
        hyper_dim (int | None): The hyper RNN hidden size.
        hyper_input (str): latent_only, hidden_only or both.
        hyper_kind (str): recurrent (θ is an RNN) or feedforward (θ is an MLP).
        decoder (str): gaussian, bernoulli or gmm.
        n_components (int): The mixture component count of the gmm head.
        recipe (str): synthetic or real.
        hidden_layers (int | None): Hidden-layer count of the encoder, prior, decoder and features.
        mlp_width (int | None): Hidden width of those networks.
        embed_width (int | None): Hidden width of the ω embedding MLPs.
        transition (float): lgssm only, the state transition coefficient.
        process_std (float): lgssm only, the state noise standard deviation.
        obs_std (float): lgssm only, the observation noise standard deviation.
        proposal (str): lgssm only, bootstrap or optimal.
    """

    kind: Literal["vrnn", "vhrnn", "hyperlstm", "lgssm"] = ModelKinds.VRNN
    cell: Literal["lstm", "gru"] = "lstm"
    x_dim: int = Field(default=2, gt=0)
    z_dim: int = Field(default=4, gt=0)
    hidden_dim: int | None = Field(default=None, gt=0)
    hyper_dim: int | None = Field(default=None, gt=0)
    hyper_input: Literal["latent_only", "hidden_only", "both"] = HyperInputs.BOTH
    hyper_kind: Literal["recurrent", "feedforward"] = "recurrent"
    decoder: Literal["gaussian", "bernoulli", "gmm"] = DecoderHeads.GAUSSIAN
    n_components: int = Field(default=1, ge=1)
    recipe: Literal["synthetic", "real"] = Recipes.SYNTHETIC
    hidden_layers: int | None = Field(default=None, ge=0)
    mlp_width: int | None = Field(default=None, gt=0)
    embed_width: int | None = Field(default=None, gt=0)

    transition: float = 0.9
    process_std: float = Field(default=1.0, gt=0)
    obs_std: float = Field(default=1.0, gt=0)
    proposal: Literal["bootstrap", "optimal"] = "bootstrap"

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    @model_validator(mode="after")
    def check_kind(self) -> ModelConfig:
        """Rejects combinations the model kinds can't build.

        Raises:
            ValueError: If an lgssm is not one-dimensional.

        Returns:
            ModelConfig: The validated config.
        """
        if self.kind == ModelKinds.LGSSM and (self.x_dim != 1 or self.z_dim != 1):
            raise ValueError(
                f"lgssm is one-dimensional, got x_dim={self.x_dim}, z_dim={self.z_dim}"
            )
        return self

    @property
    def hidden(self) -> int:
        return self.hidden_dim or self.z_dim

    @property
    def hyper(self) -> int:
        return self.hyper_dim or self.z_dim

    @property
    def layers(self) -> int:
        if self.hidden_layers is not None:
            return self.hidden_layers
        return _RECIPE_LAYERS[self.recipe]

    @property
    def width(self) -> int:
        return self.mlp_width or self.z_dim

    @property
    def embed(self) -> int:
        return self.embed_width or _RECIPE_EMBED[self.recipe]

    @property
    def has_latent(self) -> bool:
        return self.kind != ModelKinds.HYPERLSTM

    @property
    def n_gates(self) -> int:
        return 4 if self.cell == "lstm" else 3

    @property
    def head_width(self) -> int:
        """The output width of the decoder head (per head layer for the Gaussian)."""
        if self.decoder == DecoderHeads.GMM:
            return self.n_components + 2 * self.n_components * self.x_dim
        return self.x_dim
