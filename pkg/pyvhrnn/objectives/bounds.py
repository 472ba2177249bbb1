"""This module contains the ELBO, IWAE and FIVO estimators over step-wise models.

All estimators run on a minibatch of B equal-length sequences with K particles each, the graph
rows being ordered b·K + k. At every step one standard-normal draw of shape (B·K, z_dim) is taken
from the generator, so estimators called with equally seeded generators share their noise.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray

from pyvhrnn.distributions import gaussian_kl
from pyvhrnn.models import Params, SequenceModel, StepOutput
from pyvhrnn.objectives.objective_config import Bounds, ObjectiveConfig, ResamplePolicies
from pyvhrnn.objectives.smc import ParticleEnsemble, WeightUnderflowError, ess, resample_multinomial
from pyvhrnn.tensor import Node, constant, ops

_FLOAT_MAX = float(np.finfo(np.float64).max)


def _as_batch(sequences: ArrayLike) -> tuple[NDArray[np.float64], bool]:
    xs = np.asarray(sequences, dtype=np.float64)
    single = xs.ndim == 2
    if single:
        xs = xs[None]
    if xs.ndim != 3:
        raise ValueError(f"Expected (T, D) or (B, T, D) sequences, got shape {xs.shape}")
    if xs.shape[0] == 0 or xs.shape[1] == 0:
        raise ValueError("Sequences must not be empty")
    return xs, single


def _finish(bound: Node, single: bool) -> Node:
    return ops.reshape(bound, ()) if single else bound


def _observation(xs: NDArray[np.float64], t: int, particles: int) -> Node:
    return constant(np.repeat(xs[:, t, :], particles, axis=0))


def _noise(model: SequenceModel, rows: int, rng: np.random.Generator) -> NDArray[np.float64] | None:
    if not model.has_latent:
        return None
    return rng.standard_normal((rows, model.cfg.z_dim))


def log_weight(out: StepOutput, x: Node) -> Node:
    """Incremental log-weight log p(x_t | ·) + log p(z_t | ·) − log q(z_t | ·), per row."""
    increment = out.decoder.log_prob(x)
    if out.z is None or out.prior is None or out.posterior is None:
        return increment
    return increment + out.prior.log_prob(out.z) - out.posterior.log_prob(out.z)


def _log_mean_exp(log_weights: Node) -> Node:
    particles = log_weights.shape[-1]
    return ops.add_scalar(ops.reduce_logsumexp(log_weights, axis=-1), -math.log(particles))


def _triggered(log_w: NDArray[np.float64], policy: str, threshold: float) -> NDArray[np.bool_]:
    rows, particles = log_w.shape
    if particles == 1 or policy == ResamplePolicies.NEVER:
        return np.zeros(rows, dtype=bool)
    if policy == ResamplePolicies.ALWAYS:
        return np.ones(rows, dtype=bool)
    return np.asarray(ess(log_w)) < threshold * particles


def _resample(
    ensemble: ParticleEnsemble, triggered: NDArray[np.bool_], rng: np.random.Generator
) -> None:
    ensemble.bound = ensemble.bound + _log_mean_exp(ensemble.log_weights) * constant(
        triggered.astype(np.float64)
    )
    ancestors = ensemble.identity()
    for row in np.flatnonzero(triggered):
        ancestors[row] = resample_multinomial(ensemble.log_weights.value[row], rng)
    ensemble.state = ensemble.state.take(ensemble.flat_indices(ancestors))
    keep = np.repeat((~triggered)[:, None], ensemble.n_particles, axis=1).astype(np.float64)
    # clip so that a -inf particle in a resampled row resets to 0, not nan
    bounded = ops.clip(ensemble.log_weights, -_FLOAT_MAX, _FLOAT_MAX)
    ensemble.log_weights = bounded * constant(keep)
    ensemble.ancestry.append(ancestors)


def particle_pass(
    model: SequenceModel,
    sequences: ArrayLike,
    particles: int,
    rng: np.random.Generator,
    params: Params | None = None,
    policy: str = ResamplePolicies.NEVER,
    ess_threshold: float = 0.5,
) -> ParticleEnsemble:  # pylint: disable=R0913, R0917
    """Runs the particle filter and returns the final ensemble, whose bound holds the estimate.

    The bound accumulates log-mean-exp of the weights gathered since the previous resampling at
    every resampling event, and once more after the last step. Without resampling this is
    log (1/K) Σ_k exp(Σ_t log w_t^k), the IWAE bound, computed by the same operations.

    Arguments:
        model (SequenceModel): The model.
        sequences (ArrayLike): (T, D) or (B, T, D) observations.
        particles (int): K.
        rng (np.random.Generator): The generator for the posterior noise and resampling.
        params (Params | None): Bound parameters, constants when not given.
        policy (str): never, always or ess.
        ess_threshold (float): The ESS fraction below which a sequence is resampled.

    Raises:
        ValueError: If K < 1 or the sequences are malformed.
        WeightUnderflowError: If all weights of a sequence underflow.

    Returns:
        ParticleEnsemble: The final ensemble.
    """
    if particles < 1:
        raise ValueError(f"K must be at least 1, got {particles}")
    if not model.has_latent:
        particles = 1
    xs, _ = _as_batch(sequences)
    n_sequences, steps, _ = xs.shape
    p = params if params is not None else model.params.bind(requires_grad=False)
    ensemble = ParticleEnsemble(
        n_particles=particles,
        n_sequences=n_sequences,
        state=model.initial_state(n_sequences * particles),
        log_weights=constant(np.zeros((n_sequences, particles))),
        bound=constant(np.zeros(n_sequences)),
    )
    for t in range(steps):
        x = _observation(xs, t, particles)
        out = model.step(x, ensemble.state, p, _noise(model, n_sequences * particles, rng))
        increment = ops.reshape(log_weight(out, x), (n_sequences, particles))
        ensemble.log_weights = ensemble.log_weights + increment
        ensemble.state = out.state
        dead = ~np.any(np.isfinite(ensemble.log_weights.value), axis=1)
        dead |= np.any(np.isnan(ensemble.log_weights.value), axis=1)
        if dead.any():
            raise WeightUnderflowError(t + 1, int(np.flatnonzero(dead)[0]))
        triggered = _triggered(ensemble.log_weights.value, policy, ess_threshold)
        if t < steps - 1 and triggered.any():
            _resample(ensemble, triggered, rng)
        else:
            ensemble.ancestry.append(ensemble.identity())
    ensemble.bound = ensemble.bound + _log_mean_exp(ensemble.log_weights)
    return ensemble


def elbo(
    model: SequenceModel,
    sequences: ArrayLike,
    rng: np.random.Generator,
    params: Params | None = None,
    analytic_kl: bool = True,
) -> Node:
    """Single-sample evidence lower bound Σ_t E_q[log p(x_t | ·)] − KL(q_t ‖ p_t).

    With analytic_kl the KL is the closed-form gaussian_kl value; otherwise the sampled
    log p(z_t) − log q(z_t) is used, through the code path shared with iwae and fivo.

    Arguments:
        model (SequenceModel): The model.
        sequences (ArrayLike): (T, D) or (B, T, D) observations.
        rng (np.random.Generator): The generator for the posterior noise.
        params (Params | None): Bound parameters, constants when not given.
        analytic_kl (bool): Whether to use the closed-form KL.

    Returns:
        Node: The bound, a scalar for one sequence, shape (B,) for a batch.
    """
    xs, single = _as_batch(sequences)
    if not analytic_kl or not model.has_latent:
        return _finish(particle_pass(model, xs, 1, rng, params).bound, single)
    n_sequences, steps, _ = xs.shape
    p = params if params is not None else model.params.bind(requires_grad=False)
    state = model.initial_state(n_sequences)
    bound = constant(np.zeros(n_sequences))
    for t in range(steps):
        x = _observation(xs, t, 1)
        out = model.step(x, state, p, _noise(model, n_sequences, rng))
        bound = bound + (out.decoder.log_prob(x) - gaussian_kl(out.posterior, out.prior))
        state = out.state
    return _finish(bound, single)


def iwae(
    model: SequenceModel,
    sequences: ArrayLike,
    particles: int,
    rng: np.random.Generator,
    params: Params | None = None,
) -> Node:
    """Importance-weighted bound log (1/K) Σ_k exp(Σ_t log w_t^k).

    Returns:
        Node: The bound, a scalar for one sequence, shape (B,) for a batch.
    """
    xs, single = _as_batch(sequences)
    return _finish(particle_pass(model, xs, particles, rng, params).bound, single)


def fivo(
    model: SequenceModel,
    sequences: ArrayLike,
    particles: int,
    resample_policy: str,
    rng: np.random.Generator,
    params: Params | None = None,
    ess_threshold: float = 0.5,
) -> tuple[Node, list[NDArray[np.int64]]]:  # pylint: disable=R0913, R0917
    """Filtering bound: the sum over steps of the log-mean incremental weights with multinomial
    resampling when the policy triggers. Ancestor choice carries no gradient.

    Arguments:
        model (SequenceModel): The model.
        sequences (ArrayLike): (T, D) or (B, T, D) observations.
        particles (int): K.
        resample_policy (str): never, always or ess.
        rng (np.random.Generator): The generator.
        params (Params | None): Bound parameters, constants when not given.
        ess_threshold (float): The ESS fraction below which a sequence is resampled.

    Raises:
        WeightUnderflowError: If all weights of a sequence underflow, naming the step.

    Returns:
        tuple[Node, list[NDArray[np.int64]]]: The bound and the per-step (B, K) ancestry.
    """
    xs, single = _as_batch(sequences)
    ensemble = particle_pass(model, xs, particles, rng, params, resample_policy, ess_threshold)
    return _finish(ensemble.bound, single), ensemble.ancestry


def compute_bound(
    model: SequenceModel,
    sequences: ArrayLike,
    cfg: ObjectiveConfig,
    particles: int,
    rng: np.random.Generator,
    params: Params | None = None,
) -> Node:  # pylint: disable=R0913, R0917
    """Dispatches to the estimator named by the config. Latent-free models always get their
    exact log-likelihood."""
    if cfg.bound == Bounds.ELBO:
        return elbo(model, sequences, rng, params, cfg.analytic_kl)
    if cfg.bound == Bounds.IWAE:
        return iwae(model, sequences, particles, rng, params)
    return fivo(model, sequences, particles, cfg.resample, rng, params, cfg.ess_threshold)[0]
