"""This module contains the per-step analysis traces of a filtering pass: posterior-prior KL,
reconstruction distance and predicted log-variance."""

from __future__ import annotations

from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, model_validator

from pyvhrnn.dataio import SequenceRecord
from pyvhrnn.distributions import gaussian_kl
from pyvhrnn.models import SequenceModel
from pyvhrnn.synthdata import SynthFields
from pyvhrnn.tensor import constant
from pyvhrnn.utils import Logger

MIN_TREND_LENGTH = 6


class TraceBundle(BaseModel):
    """Per-step series of one sequence.

    Attributes:
        kl (list[float]): KL(q_t ‖ p_t), averaged over the latent draws.
        recon_l2 (list[float]): ‖μ_t^dec − x_t‖₂, averaged over the latent draws.
        mean_logvar (list[float]): The decoder log-variance averaged over output dimensions
            and latent draws.
        observations (list[list[float]]): x_t.
        switches (list[int]): 0-based steps where the generating regime changes.
    """

    kl: list[float]
    recon_l2: list[float]
    mean_logvar: list[float]
    observations: list[list[float]]
    switches: list[int] = []

    model_config = ConfigDict(populate_by_name=True)

    @model_validator(mode="after")
    def check_lengths(self) -> TraceBundle:
        """Checks that the series are non-empty and share the sequence length, the observation rows
        share one dimension and the switches are in range.

        Raises:
            ValueError: If they don't.

        Returns:
            TraceBundle: The validated bundle.
        """
        lengths = {len(self.kl), len(self.recon_l2), len(self.mean_logvar), len(self.observations)}
        if len(lengths) != 1:
            raise ValueError(f"Series lengths differ: {sorted(lengths)}")
        if self.length == 0:
            raise ValueError("A trace needs at least one step")
        if len({len(row) for row in self.observations}) != 1 or not self.observations[0]:
            raise ValueError("Observation rows must share one non-zero dimension")
        for switch in self.switches:
            if not 0 <= switch < self.length:
                raise ValueError(f"Switch {switch} is outside the sequence of length {self.length}")
        return self

    @property
    def length(self) -> int:
        return len(self.kl)


def trace(
    model: SequenceModel,
    sequence: SequenceRecord | ArrayLike,
    rng: np.random.Generator,
    n_samples: int = 1,
    use_posterior_mean: bool = False,
    logger: Any | None = None,
) -> TraceBundle:  # pylint: disable=R0913, R0917, R0914
    """Runs the filtering pass with n_samples independent latent trajectories.

    The trajectories run side by side as rows of one pass; every step records the closed-form
    KL between posterior and prior, the distance between the decoder mean and x_t and the mean
    decoder log-variance, each averaged over the rows. Switch markers are taken from the
    record metadata when present.

    Arguments:
        model (SequenceModel): The model.
        sequence (SequenceRecord | ArrayLike): The sequence, (T, D).
        rng (np.random.Generator): The generator of the latent draws.
        n_samples (int): The number of latent trajectories.
        use_posterior_mean (bool): Use z_t = posterior mean instead of samples.
        logger (Any | None): The logger to use. If not provided, a dummy logger is used.

    Raises:
        ValueError: If n_samples < 1 or the dimension differs from the model's.

    Returns:
        TraceBundle: The traces.
    """
    logger = logger or Logger(__name__)
    if n_samples < 1:
        raise ValueError(f"n_samples must be at least 1, got {n_samples}")
    switches: list[int] = []
    if isinstance(sequence, SequenceRecord):
        switches = list(sequence.meta.get(SynthFields.SWITCHES, []))
        xs = sequence.data
    else:
        xs = np.asarray(sequence, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != model.cfg.x_dim:
        raise ValueError(f"Expected a (T, {model.cfg.x_dim}) sequence, got shape {xs.shape}")
    p = model.params.bind(requires_grad=False)
    state = model.initial_state(n_samples)
    kl, recon, logvar = [], [], []
    for x_t in xs:
        x = constant(np.repeat(x_t[None], n_samples, axis=0))
        eps = None
        if model.has_latent:
            shape = (n_samples, model.cfg.z_dim)
            eps = np.zeros(shape) if use_posterior_mean else rng.standard_normal(shape)
        out = model.step(x, state, p, eps)
        if out.posterior is not None and out.prior is not None:
            kl.append(float(np.mean(gaussian_kl(out.posterior, out.prior).value)))
        else:
            kl.append(0.0)
        mean, log_var = out.decoder.moments()
        recon.append(float(np.mean(np.linalg.norm(mean - x_t, axis=-1))))
        logvar.append(float(np.mean(log_var)))
        state = out.state
    logger.debug("Traced %s steps with %s samples", len(xs), n_samples)
    return TraceBundle(
        kl=kl, recon_l2=recon, mean_logvar=logvar, observations=xs.tolist(), switches=switches
    )


def kl_trend_stat(bundle: TraceBundle) -> tuple[float, float]:
    """Mean KL over the first and the last third of the sequence.

    Raises:
        ValueError: If the sequence has fewer than 6 steps.

    Returns:
        tuple[float, float]: (first-third mean, last-third mean).
    """
    if bundle.length < MIN_TREND_LENGTH:
        raise ValueError(f"Need at least {MIN_TREND_LENGTH} steps, got {bundle.length}")
    third = bundle.length // 3
    return float(np.mean(bundle.kl[:third])), float(np.mean(bundle.kl[-third:]))
