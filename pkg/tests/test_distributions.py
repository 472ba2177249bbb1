import numpy as np
import pytest
from scipy import special, stats

from pyvhrnn.distributions import (
    LOG_STD_MAX,
    BernoulliLogits,
    DiagGaussian,
    GaussMixture,
    bernoulli_log_prob,
    clamp_monitor,
    gaussian_kl,
    gaussian_log_prob,
    gaussian_sample,
    gmm_log_prob,
)
from pyvhrnn.tensor import constant, ops

# region gaussian


def test_gaussian_log_prob_matches_scipy():
    mean = np.array([0.5, -1.0, 2.0])
    log_std = np.array([0.0, -0.7, 0.4])
    x = np.array([1.0, -0.2, 1.5])

    result = gaussian_log_prob(x, DiagGaussian(mean, log_std)).item()
    expected = stats.norm.logpdf(x, loc=mean, scale=np.exp(log_std)).sum()
    assert result == pytest.approx(expected, abs=1e-12), f"Expected {expected}, got {result}"


def test_gaussian_log_prob_rows():
    rng = np.random.default_rng(1)
    mean = rng.normal(size=(4, 2))
    log_std = rng.normal(scale=0.3, size=(4, 2))
    x = rng.normal(size=(4, 2))

    result = gaussian_log_prob(x, DiagGaussian(mean, log_std)).value
    expected = stats.norm.logpdf(x, loc=mean, scale=np.exp(log_std)).sum(axis=-1)
    assert result.shape == (4,), f"Expected shape (4,), got {result.shape}"
    assert np.allclose(result, expected), f"Expected {expected}, got {result}"


def test_gaussian_rsample():
    d = DiagGaussian([1.0, -1.0], [0.5, -0.5])
    eps = np.array([0.3, -2.0])
    result = d.rsample(eps).value
    expected = np.array([1.0, -1.0]) + np.exp([0.5, -0.5]) * eps
    assert np.allclose(result, expected, rtol=0, atol=1e-15), f"Expected {expected}, got {result}"


def test_gaussian_sample_shape_mismatch():
    d = DiagGaussian(np.zeros((3, 2)), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        gaussian_sample(d, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        gaussian_log_prob(np.zeros(3), d)
    with pytest.raises(ValueError):
        DiagGaussian(np.zeros(2), np.zeros(3))


def test_gaussian_kl_self_is_zero():
    q = DiagGaussian([0.3, -1.2], [0.1, -0.4])
    result = gaussian_kl(q, q).item()
    assert result == pytest.approx(0.0, abs=1e-15), f"Expected 0, got {result}"


def test_gaussian_kl_closed_form():
    rng = np.random.default_rng(2)
    for _ in range(20):
        mq, mp = rng.normal(size=3), rng.normal(size=3)
        sq, sp = rng.normal(scale=0.5, size=3), rng.normal(scale=0.5, size=3)
        result = gaussian_kl(DiagGaussian(mq, sq), DiagGaussian(mp, sp)).item()
        var_q, var_p = np.exp(2 * sq), np.exp(2 * sp)
        expected = np.sum(sp - sq + (var_q + (mq - mp) ** 2) / (2 * var_p) - 0.5)
        assert result >= 0.0, f"Expected a non-negative KL, got {result}"
        assert result == pytest.approx(expected, rel=1e-12), f"Expected {expected}, got {result}"


def test_gaussian_kl_shape_mismatch():
    with pytest.raises(ValueError):
        gaussian_kl(DiagGaussian(np.zeros(2), np.zeros(2)), DiagGaussian(np.zeros(3), np.zeros(3)))


def test_log_std_clamp_is_counted():
    clamp_monitor.reset()
    d = DiagGaussian([0.0, 0.0], [30.0, 0.0])
    _, log_variance = d.moments()
    assert log_variance[0] == 2 * LOG_STD_MAX, f"Expected {2 * LOG_STD_MAX}, got {log_variance[0]}"
    assert clamp_monitor.count == 1, f"Expected 1 clamped entry, got {clamp_monitor.count}"
    clamp_monitor.reset()
    assert clamp_monitor.count == 0, f"Expected 0 after reset, got {clamp_monitor.count}"


def test_gaussian_sample_statistics():
    d = DiagGaussian(np.full((20000, 1), 2.0), np.full((20000, 1), np.log(0.5)))
    draws = d.sample(np.random.default_rng(3))
    assert abs(draws.mean() - 2.0) < 0.02, f"Expected mean near 2, got {draws.mean()}"
    assert abs(draws.std() - 0.5) < 0.02, f"Expected std near 0.5, got {draws.std()}"


# endregion
# region bernoulli


def test_bernoulli_log_prob_matches_scipy():
    logits = np.array([-3.0, 0.0, 2.5, 40.0])
    x = np.array([0.0, 1.0, 1.0, 1.0])
    result = bernoulli_log_prob(x, BernoulliLogits(logits)).item()
    expected = stats.bernoulli.logpmf(x, special.expit(logits)).sum()
    assert result == pytest.approx(expected, abs=1e-12), f"Expected {expected}, got {result}"


def test_bernoulli_rejects_bad_input():
    with pytest.raises(ValueError):
        BernoulliLogits([0.0, np.inf])
    with pytest.raises(ValueError):
        bernoulli_log_prob([0.5, 1.0], BernoulliLogits([0.0, 0.0]))
    with pytest.raises(ValueError):
        bernoulli_log_prob([0.0, 1.0, 1.0], BernoulliLogits([0.0, 0.0]))


def test_bernoulli_moments():
    logits = np.array([-2.0, 0.0, 3.0])
    mean, log_variance = BernoulliLogits(logits).moments()
    p = special.expit(logits)
    assert np.allclose(mean, p), f"Expected {p}, got {mean}"
    assert np.allclose(log_variance, np.log(p * (1 - p))), f"Expected log p(1-p), got {log_variance}"


def test_bernoulli_sample_is_binary():
    draws = BernoulliLogits(np.zeros((50, 3))).sample(np.random.default_rng(4))
    assert set(np.unique(draws)) <= {0.0, 1.0}, f"Expected binary draws, got {np.unique(draws)}"


# endregion
# region mixture


def _mixture() -> GaussMixture:
    components = [
        DiagGaussian([0.0, 1.0], [0.0, -0.5]),
        DiagGaussian([2.0, -1.0], [0.3, 0.2]),
        DiagGaussian([-1.0, 0.0], [-0.2, 0.1]),
    ]
    return GaussMixture([0.5, -1.0, 0.2], components)


def test_gmm_log_prob_manual():
    m = _mixture()
    x = np.array([0.4, 0.1])
    result = gmm_log_prob(x, m).item()

    log_w = np.array([0.5, -1.0, 0.2]) - special.logsumexp([0.5, -1.0, 0.2])
    per_component = [
        stats.norm.logpdf(x, loc=c.mean.value, scale=np.exp(c.log_std.value)).sum()
        for c in m.components
    ]
    expected = special.logsumexp(log_w + np.array(per_component))
    assert result == pytest.approx(expected, abs=1e-12), f"Expected {expected}, got {result}"


def test_gmm_weights_are_normalized():
    total = special.logsumexp(_mixture().log_weights.value)
    assert total == pytest.approx(0.0, abs=1e-15), f"Expected 0, got {total}"


def test_gmm_from_flat():
    n_components, dim = 2, 3
    out = constant(np.arange(n_components + 2 * n_components * dim, dtype=float) / 10.0)
    m = GaussMixture.from_flat(out, n_components, dim)
    assert len(m.components) == 2, f"Expected 2 components, got {len(m.components)}"
    assert np.allclose(m.components[1].mean.value, [0.5, 0.6, 0.7]), m.components[1].mean.value
    assert np.allclose(m.components[0].log_std.value, [0.8, 0.9, 1.0]), m.components[0].log_std.value

    with pytest.raises(ValueError):
        GaussMixture.from_flat(ops.slice_(out, 0, 10), n_components, dim)


def test_gmm_single_component_moments():
    d = DiagGaussian([1.5, -0.5], [0.2, -0.3])
    mean, log_variance = GaussMixture([0.0], [d]).moments()
    assert np.allclose(mean, [1.5, -0.5]), f"Expected the component mean, got {mean}"
    assert np.allclose(log_variance, [0.4, -0.6]), f"Expected 2·log_std, got {log_variance}"


def test_gmm_total_variance():
    components = [DiagGaussian([-1.0], [0.0]), DiagGaussian([1.0], [0.0])]
    mean, log_variance = GaussMixture([0.0, 0.0], components).moments()
    assert mean[0] == pytest.approx(0.0, abs=1e-15), f"Expected 0, got {mean[0]}"
    assert np.exp(log_variance[0]) == pytest.approx(2.0), f"Expected 2, got {np.exp(log_variance[0])}"


def test_gmm_rejects_bad_components():
    with pytest.raises(ValueError):
        GaussMixture([0.0], [])
    with pytest.raises(ValueError):
        GaussMixture([0.0, 0.0], [DiagGaussian([0.0], [0.0])])


# endregion
