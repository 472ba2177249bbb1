"""This module contains the ObjectiveConfig and OptimConfig classes which describe the training
objective and the optimizer."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


# pylint: disable=too-few-public-methods
class Bounds:
    """Stores the supported bound estimators."""

    ELBO = "elbo"
    IWAE = "iwae"
    FIVO = "fivo"


# pylint: disable=too-few-public-methods
class ResamplePolicies:
    """Stores the resampling policies of the FIVO estimator."""

    NEVER = "never"
    ALWAYS = "always"
    ESS = "ess"


class ObjectiveConfig(BaseModel):
    """Bound estimator settings.

    Attributes:
        bound (str): elbo, iwae or fivo.
        train_particles (int): K during training.
        eval_particles (int): K during evaluation.
        resample (str): never, always or ess.
        ess_threshold (float): Resample when ESS < threshold · K.
        analytic_kl (bool): Whether the ELBO uses the closed-form KL.
    """

    bound: Literal["elbo", "iwae", "fivo"] = Bounds.FIVO
    train_particles: int = Field(default=4, ge=1)
    eval_particles: int = Field(default=128, ge=1)
    resample: Literal["never", "always", "ess"] = ResamplePolicies.ESS
    ess_threshold: float = Field(default=0.5, gt=0, le=1)
    analytic_kl: bool = True

    model_config = ConfigDict(populate_by_name=True, frozen=True)


class OptimConfig(BaseModel):
    """Adam and training-loop settings.

    Attributes:
        lr (float): The learning rate.
        beta1 (float): The first-moment decay.
        beta2 (float): The second-moment decay.
        eps (float): The denominator offset.
        clip_norm (float): The global gradient norm limit, applied before the moments.
        batch_size (int): Sequences per minibatch.
        epochs (int): The maximum number of epochs.
        patience (int): Epochs without validation improvement before stopping.
    """

    lr: float = Field(default=3e-4, ge=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    clip_norm: float = Field(default=5.0, gt=0)
    batch_size: int = Field(default=4, ge=1)
    epochs: int = Field(default=500, ge=1)
    patience: int = Field(default=50, ge=1)

    model_config = ConfigDict(populate_by_name=True, frozen=True)
