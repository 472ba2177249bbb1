import math

import numpy as np
import pytest
from scipy import stats

from pyvhrnn.dataio import SequenceDataset, SequenceRecord
from pyvhrnn.models import ModelConfig, build_model, generate, kalman_log_likelihood
from pyvhrnn.objectives import (
    ObjectiveConfig,
    OptimConfig,
    OptimState,
    TrainingDivergedError,
    WeightUnderflowError,
    adam_update,
    clip_by_global_norm,
    compute_bound,
    elbo,
    epoch_rng,
    ess,
    evaluate,
    fivo,
    global_norm,
    iwae,
    load_metrics,
    ratio_stderr,
    resample_multinomial,
    save_metrics,
    train,
)
from pyvhrnn.synthdata import SynthConfig, gen_dataset
from pyvhrnn.tensor import finite_difference_check

TINY_SYNTH = SynthConfig(n_train=6, n_valid=2, n_test=2, length=10, long_length=20, n_switches=1)


def _vhrnn(z_dim: int = 2, seed: int = 0):
    return build_model(ModelConfig(kind="vhrnn", z_dim=z_dim), seed)


def _sequences(batch: int = 2, steps: int = 5, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).normal(size=(batch, steps, 2))


def _lgssm(proposal: str):
    cfg = ModelConfig(
        kind="lgssm", x_dim=1, z_dim=1, transition=0.8, process_std=1.0, obs_std=0.7,
        proposal=proposal,
    )
    return build_model(cfg, 0)


# region bound identities


@pytest.mark.parametrize("particles, steps", [(1, 3), (4, 5), (7, 8)])
def test_fivo_without_resampling_is_iwae(particles, steps):
    model = _vhrnn()
    xs = _sequences(steps=steps)
    bound_iwae = iwae(model, xs, particles, np.random.default_rng(4)).value
    bound_fivo, ancestry = fivo(model, xs, particles, "never", np.random.default_rng(4))
    assert np.array_equal(bound_iwae, bound_fivo.value), f"Expected {bound_iwae}, got {bound_fivo.value}"
    assert len(ancestry) == steps, f"Expected {steps} ancestry entries, got {len(ancestry)}"
    assert all(np.array_equal(a, np.tile(np.arange(particles), (2, 1))) for a in ancestry)


@pytest.mark.parametrize("policy", ["never", "always", "ess"])
def test_single_particle_bounds_agree(policy):
    model = _vhrnn()
    xs = _sequences()
    sampled = elbo(model, xs, np.random.default_rng(1), analytic_kl=False).value
    one_iwae = iwae(model, xs, 1, np.random.default_rng(1)).value
    one_fivo = fivo(model, xs, 1, policy, np.random.default_rng(1))[0].value
    assert np.array_equal(sampled, one_iwae), f"Expected {sampled}, got {one_iwae}"
    assert np.array_equal(sampled, one_fivo), f"Expected {sampled}, got {one_fivo}"


def test_single_sequence_gives_scalar():
    model = _vhrnn()
    bound = iwae(model, _sequences(batch=1)[0], 3, np.random.default_rng(0))
    assert bound.shape == (), f"Expected a scalar, got shape {bound.shape}"
    assert math.isfinite(bound.item()), f"Expected a finite bound, got {bound.item()}"


def test_latent_free_bounds_are_exact():
    model = build_model(ModelConfig(kind="hyperlstm", x_dim=2, hidden_dim=4), 0)
    xs = _sequences(batch=1)[0]
    values = {
        name: compute_bound(model, xs, ObjectiveConfig(bound=name), 16, np.random.default_rng(seed)).item()
        for seed, name in enumerate(["elbo", "iwae", "fivo"])
    }
    assert len(set(values.values())) == 1, f"Expected identical bounds, got {values}"


def test_always_resampling_records_ancestry():
    model = _vhrnn()
    xs = _sequences(steps=6)
    _, ancestry = fivo(model, xs, 5, "always", np.random.default_rng(2))
    assert len(ancestry) == 6, f"Expected 6 entries, got {len(ancestry)}"
    assert all(a.shape == (2, 5) for a in ancestry), [a.shape for a in ancestry]
    assert np.array_equal(ancestry[-1], np.tile(np.arange(5), (2, 1))), "Expected no resampling at the end"
    assert all(np.all((a >= 0) & (a < 5)) for a in ancestry), "Expected valid ancestor indices"


def test_bounds_reject_bad_input():
    model = _vhrnn()
    with pytest.raises(ValueError):
        iwae(model, _sequences(), 0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        elbo(model, np.zeros((0, 2)), np.random.default_rng(0))
    with pytest.raises(ValueError):
        elbo(model, np.zeros(5), np.random.default_rng(0))


def test_iwae_tightens_with_particles():
    model = _vhrnn(z_dim=3, seed=1)
    xs = _sequences(batch=1, steps=6)[0]
    small = np.mean([iwae(model, xs, 1, np.random.default_rng(s)).item() for s in range(40)])
    large = np.mean([iwae(model, xs, 32, np.random.default_rng(s)).item() for s in range(40)])
    assert large > small, f"Expected K=32 ({large}) above K=1 ({small})"


# endregion
# region linear-Gaussian oracle


def test_optimal_proposal_single_step_is_exact():
    model = _lgssm("optimal")
    xs = np.array([[1.3]])
    exact = kalman_log_likelihood(xs, 0.8, 1.0, 0.49)
    for seed in range(5):
        bound = iwae(model, xs, 8, np.random.default_rng(seed)).item()
        assert bound == pytest.approx(exact, abs=1e-9), f"Expected {exact}, got {bound}"


def test_optimal_fivo_is_unbiased():
    model = _lgssm("optimal")
    xs = np.array([[0.4], [-1.1], [0.9], [2.0], [1.2]])
    exact = kalman_log_likelihood(xs, 0.8, 1.0, 0.49)
    ratios = np.array(
        [
            math.exp(fivo(model, xs, 32, "always", np.random.default_rng(seed))[0].item() - exact)
            for seed in range(200)
        ]
    )
    stderr = ratios.std(ddof=1) / math.sqrt(len(ratios))
    assert abs(ratios.mean() - 1.0) < 4 * stderr + 1e-12, f"Expected mean 1, got {ratios.mean()} ± {stderr}"


def test_bootstrap_iwae_approaches_exact():
    model = _lgssm("bootstrap")
    xs = np.array([[0.4], [-1.1], [0.9], [2.0], [1.2]])
    exact = kalman_log_likelihood(xs, 0.8, 1.0, 0.49)
    bounds = [iwae(model, xs, 256, np.random.default_rng(seed)).item() for seed in range(50)]
    mean = float(np.mean(bounds))
    assert exact - 0.3 < mean < exact + 0.1, f"Expected about {exact}, got {mean}"


def test_elbo_is_below_log_likelihood():
    model = _lgssm("bootstrap")
    xs = np.array([[0.4], [-1.1], [0.9], [2.0], [1.2]])
    exact = kalman_log_likelihood(xs, 0.8, 1.0, 0.49)
    mean = float(np.mean([elbo(model, xs, np.random.default_rng(s)).item() for s in range(50)]))
    assert mean < exact, f"Expected the ELBO ({mean}) below {exact}"


def test_kalman_errors():
    with pytest.raises(ValueError):
        kalman_log_likelihood([], 0.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        kalman_log_likelihood([1.0], 0.5, 0.0, 1.0)
    single = kalman_log_likelihood([0.0], 0.9, 1.0, 1.0)
    assert single == pytest.approx(-0.5 * math.log(2 * math.pi * 2.0)), f"Got {single}"


# endregion
# region gradients


def _randomized_vhrnn():
    model = _vhrnn(z_dim=2, seed=3)
    rng = np.random.default_rng(8)
    for name, value in model.params.snapshot().items():
        model.params.assign(name, value + rng.normal(scale=0.3, size=value.shape))
    return model


GRADIENT_TENSORS = [
    "phi_x.0.W",
    "enc.log_std.b",
    "prior.mean.W",
    "dec.mean.b",
    "cell.U",
    "theta.out.W",
    "omega.dec.1.out.b",
]


@pytest.mark.parametrize("bound", ["elbo", "elbo_sampled", "iwae", "fivo"])
def test_bound_gradients(bound):
    model = _randomized_vhrnn()
    xs = _sequences(batch=1, steps=3, seed=4)[0]

    def build(leaves):
        params = model.params.bind(requires_grad=False)
        params.update(zip(GRADIENT_TENSORS, leaves))
        rng = np.random.default_rng(0)
        if bound == "elbo":
            return elbo(model, xs, rng, params)
        if bound == "elbo_sampled":
            return elbo(model, xs, rng, params, analytic_kl=False)
        if bound == "iwae":
            return iwae(model, xs, 3, rng, params)
        return fivo(model, xs, 3, "never", rng, params)[0]

    error = finite_difference_check(build, [model.params[name] for name in GRADIENT_TENSORS])
    assert error < 1e-3, f"Expected error below 1e-3, got {error}"


# endregion
# region smc


def test_ess_values():
    assert ess(np.zeros(8)) == pytest.approx(8.0), f"Expected 8, got {ess(np.zeros(8))}"
    peaked = ess([0.0, -np.inf, -np.inf])
    assert peaked == pytest.approx(1.0), f"Expected 1, got {peaked}"
    uneven = ess(np.log([2.0, 1.0, 1.0]))
    assert uneven == pytest.approx(16.0 / 6.0), f"Expected 16/6, got {uneven}"
    rows = ess(np.zeros((3, 4)))
    assert np.allclose(rows, 4.0), f"Expected 4 per row, got {rows}"


def test_resample_multinomial_frequencies():
    probs = np.array([0.5, 0.3, 0.2])
    rng = np.random.default_rng(0)
    draws = np.concatenate([resample_multinomial(np.log(probs) + 7.0, rng) for _ in range(2000)])
    frequencies = np.bincount(draws, minlength=3) / len(draws)
    assert np.allclose(frequencies, probs, atol=0.03), f"Expected {probs}, got {frequencies}"


def test_resample_multinomial_uniform_chi_square():
    particles, rounds = 10, 10_000
    rng = np.random.default_rng(11)
    draws = np.concatenate(
        [resample_multinomial(np.full(particles, -3.0), rng) for _ in range(rounds)]
    )
    assert draws.size == 100_000, f"Expected 10⁵ draws, got {draws.size}"
    counts = np.bincount(draws, minlength=particles)
    result = stats.chisquare(counts)
    assert result.pvalue > 1e-3, f"Expected uniform ancestors, got counts {counts} (p={result.pvalue})"


def test_resample_multinomial_edge_cases():
    single = resample_multinomial([-np.inf], np.random.default_rng(0))
    assert np.array_equal(single, [0]), f"Expected [0], got {single}"
    with pytest.raises(ValueError):
        resample_multinomial([-np.inf, -np.inf], np.random.default_rng(0))
    with pytest.raises(ValueError):
        resample_multinomial([], np.random.default_rng(0))
    draws = resample_multinomial([0.0, -np.inf, -np.inf, -np.inf], np.random.default_rng(1))
    assert np.array_equal(draws, [0, 0, 0, 0]), f"Expected only particle 0, got {draws}"


def test_weight_underflow_names_step():
    error = WeightUnderflowError(3, 1)
    assert "step 3" in str(error), f"Expected the step in {error}"
    assert issubclass(WeightUnderflowError, FloatingPointError)


# endregion
# region optimizer


def test_adam_first_step_moves_by_lr():
    params = {"w": np.array([1.0, -2.0, 0.5])}
    grads = {"w": np.array([0.3, -0.01, 2.0])}
    state = OptimState.create(params, OptimConfig(lr=0.01))
    updated, state = adam_update(params, grads, state)
    expected = params["w"] - 0.01 * np.sign(grads["w"])
    assert np.allclose(updated["w"], expected, atol=1e-8), f"Expected {expected}, got {updated['w']}"
    assert state.step == 1, f"Expected step 1, got {state.step}"


def test_adam_clips_global_norm():
    grads = {"a": np.array([30.0, 0.0]), "b": np.array([40.0])}
    assert global_norm(grads) == pytest.approx(50.0)
    clipped = clip_by_global_norm(grads, 5.0)
    assert global_norm(clipped) == pytest.approx(5.0), f"Expected 5, got {global_norm(clipped)}"
    assert np.allclose(clipped["a"], [3.0, 0.0]), f"Expected [3, 0], got {clipped['a']}"
    small = clip_by_global_norm({"a": np.array([1.0])}, 5.0)
    assert np.array_equal(small["a"], [1.0]), "Expected small gradients unchanged"


def test_adam_rejects_missing_gradient():
    params = {"a": np.ones(2), "b": np.ones(1)}
    state = OptimState.create(params)
    with pytest.raises(ValueError):
        adam_update(params, {"a": np.ones(2)}, state)
    with pytest.raises(ValueError):
        adam_update(params, {"a": np.ones(3), "b": np.ones(1)}, state)


def test_optim_state_with_lr():
    state = OptimState.create({"a": np.ones(2)}, OptimConfig(lr=0.1))
    assert state.with_lr(0.5).lr == 0.5 and state.lr == 0.1


# endregion
# region evaluation


def test_evaluate_is_independent_of_workers():
    model = _vhrnn()
    dataset = gen_dataset("test", TINY_SYNTH, seed=2)
    objective = ObjectiveConfig(bound="fivo", resample="always")
    serial = evaluate(model, dataset, objective, particles=3, seed=5, workers=1)
    threaded = evaluate(model, dataset, objective, particles=3, seed=5, workers=3)
    assert serial.per_sequence == threaded.per_sequence, "Expected identical per-sequence bounds"
    assert serial.total_steps == 20, f"Expected 20 steps, got {serial.total_steps}"
    expected = sum(serial.per_sequence) / 20
    assert serial.bound_per_step == pytest.approx(expected), f"Expected {expected}, got {serial.bound_per_step}"


def test_evaluate_errors():
    model = _vhrnn()
    with pytest.raises(ValueError):
        evaluate(model, SequenceDataset(dim=2), ObjectiveConfig())
    wrong_dim = SequenceDataset(dim=3, sequences=[SequenceRecord(id="a", data=np.zeros((4, 3)))])
    with pytest.raises(ValueError):
        evaluate(model, wrong_dim, ObjectiveConfig())
    dataset = gen_dataset("test", TINY_SYNTH, seed=2)
    with pytest.raises(ValueError):
        evaluate(model, dataset, ObjectiveConfig(), workers=0)
    with pytest.raises(ValueError):
        evaluate(model, dataset, ObjectiveConfig(), particles=0)


def test_evaluate_defaults_to_eval_particles():
    model = _vhrnn()
    dataset = gen_dataset("test", TINY_SYNTH, seed=2)
    result = evaluate(model, dataset, ObjectiveConfig(bound="iwae", eval_particles=3))
    assert result.particles == 3, f"Expected 3 particles, got {result.particles}"


def test_ratio_stderr():
    assert ratio_stderr(np.array([3.0]), np.array([4.0])) == 0.0
    bounds = np.array([-10.0, -20.0, -15.0])
    lengths = np.array([10.0, 10.0, 10.0])
    expected = np.std(bounds / 10.0, ddof=1) / math.sqrt(3)
    result = ratio_stderr(bounds, lengths)
    assert result == pytest.approx(expected), f"Expected {expected}, got {result}"


# endregion
# region training


def _tiny_run(epochs: int = 1, lr: float = 1e-3, patience: int = 50, state=None, model=None):
    model = model or _vhrnn(seed=1)
    train_set = gen_dataset("train", TINY_SYNTH, seed=0)
    valid_set = gen_dataset("valid", TINY_SYNTH, seed=0)
    objective = ObjectiveConfig(bound="fivo", train_particles=2, resample="always")
    optim = OptimConfig(lr=lr, epochs=epochs, batch_size=3, patience=patience)
    return model, train(model, train_set, valid_set, objective, optim, seed=7, state=state)


def test_train_records_metrics():
    model, result = _tiny_run(epochs=2)
    assert len(result.metrics) == 4, f"Expected 4 metric rows, got {len(result.metrics)}"
    assert [row.split for row in result.metrics] == ["train", "valid", "train", "valid"]
    assert result.state.epoch == 2 and not result.stopped_early
    assert result.state.best_epoch in (1, 2), f"Got best epoch {result.state.best_epoch}"
    assert all(math.isfinite(row.bound_per_step) for row in result.metrics)
    assert set(result.state.best_params) == set(model.params)


def test_zero_learning_rate_keeps_params():
    model = _vhrnn(seed=1)
    before = model.params.snapshot()
    _tiny_run(lr=0.0, model=model)
    for name, value in before.items():
        assert np.array_equal(model.params[name], value), f"{name} changed"


def test_train_is_deterministic():
    first, _ = _tiny_run()
    second, _ = _tiny_run()
    for name in first.params:
        assert np.array_equal(first.params[name], second.params[name]), f"{name} differs"


def test_resume_matches_uninterrupted_run():
    straight, _ = _tiny_run(epochs=2)
    resumed, partial = _tiny_run(epochs=1)
    resumed, result = _tiny_run(epochs=2, state=partial.state, model=resumed)
    assert [row.epoch for row in result.metrics] == [2, 2], "Expected only epoch 2 to run"
    for name in straight.params:
        assert np.array_equal(straight.params[name], resumed.params[name]), f"{name} differs"


def test_early_stopping():
    _, result = _tiny_run(epochs=5, lr=0.0, patience=1)
    assert result.stopped_early, "Expected an early stop"
    assert result.state.epoch == 2, f"Expected to stop at epoch 2, got {result.state.epoch}"
    assert result.state.best_epoch == 1, f"Expected best epoch 1, got {result.state.best_epoch}"


def test_divergence_is_reported():
    model = _vhrnn(seed=1)
    model.params.assign("dec.mean.b", np.full(2, np.nan))
    train_set = gen_dataset("train", TINY_SYNTH, seed=0)
    with pytest.raises(TrainingDivergedError) as error:
        train(
            model, train_set, gen_dataset("valid", TINY_SYNTH, seed=0),
            ObjectiveConfig(bound="elbo"), OptimConfig(epochs=1, batch_size=3), seed=0,
        )
    assert error.value.epoch == 1 and error.value.step == 1, str(error.value)


class _SpyLogger:
    def __init__(self):
        self.warnings = []

    def debug(self, *args, **kwargs):
        pass

    def info(self, *args, **kwargs):
        pass

    def warning(self, msg, *args, **kwargs):
        self.warnings.append(msg % args)

    def error(self, *args, **kwargs):
        pass


def test_clamp_activations_are_warned():
    model = build_model(ModelConfig(kind="vrnn", z_dim=2), 1)
    model.params.assign("dec.log_std.b", np.full(2, 100.0))
    spy = _SpyLogger()
    train(
        model, gen_dataset("train", TINY_SYNTH, seed=0), gen_dataset("valid", TINY_SYNTH, seed=0),
        ObjectiveConfig(bound="elbo"), OptimConfig(lr=0.0, epochs=1, batch_size=3), seed=0,
        logger=spy,
    )
    clamped = [message for message in spy.warnings if "clamped in epoch 1" in message]
    assert len(clamped) == 1, f"Expected one clamp warning, got {spy.warnings}"


def _binary_dataset(count: int, split: str, seed: int) -> SequenceDataset:
    source = build_model(ModelConfig(kind="vrnn", z_dim=2, x_dim=3, decoder="bernoulli"), 100 + seed)
    rng = np.random.default_rng(seed)
    records = [
        SequenceRecord(id=f"{split}-{i}", data=generate(source, 8 + i % 3, rng)) for i in range(count)
    ]
    return SequenceDataset(dim=3, binary=True, split=split, sequences=records)


def test_bernoulli_model_trains_on_binary_data():
    model = build_model(ModelConfig(kind="vhrnn", z_dim=2, x_dim=3, decoder="bernoulli"), 0)
    objective = ObjectiveConfig(bound="fivo", train_particles=4, resample="ess")
    result = train(
        model, _binary_dataset(20, "train", 0), _binary_dataset(4, "valid", 1), objective,
        OptimConfig(lr=1e-2, epochs=3, batch_size=5), seed=0,
    )
    bounds = [row.bound_per_step for row in result.metrics]
    assert len(bounds) == 6, f"Expected 6 metric rows, got {len(bounds)}"
    assert all(math.isfinite(b) for b in bounds), f"Expected finite bounds, got {bounds}"
    for name in model.params:
        assert np.all(np.isfinite(model.params[name])), f"{name} is not finite"


def test_metrics_round_trip(tmp_path):
    _, result = _tiny_run()
    path = tmp_path / "metrics.csv"
    save_metrics(result.metrics, path)
    loaded = load_metrics(path)
    assert loaded == result.metrics, f"Expected {result.metrics}, got {loaded}"


def test_epoch_rng_depends_on_epoch():
    a = epoch_rng(3, 1).standard_normal(4)
    b = epoch_rng(3, 1).standard_normal(4)
    c = epoch_rng(3, 2).standard_normal(4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


# endregion
