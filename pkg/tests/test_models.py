import numpy as np
import pytest
from pydantic import ValidationError

from pyvhrnn.models import (
    REFERENCE_COUNTS,
    SYMBOLS,
    HyperLstm,
    ModelConfig,
    ModelState,
    ParameterStore,
    ReconcileStatuses,
    Reconciliation,
    SymbolHomes,
    Vhrnn,
    Vrnn,
    build_model,
    generate,
    hyperlstm_step,
    param_count,
    param_report,
    reconcile_reference_counts,
    vhrnn_step,
    vrnn_step,
)

REDUCTION_SEQUENCES = 100

# region parameter counts


@pytest.mark.parametrize(
    "kind, z_dim, expected",
    [("vrnn", 4, 588), ("vrnn", 6, 1228), ("vrnn", 8, 2100), ("vhrnn", 4, 1556)],
)
def test_synthetic_recipe_counts(kind, z_dim, expected):
    model = build_model(ModelConfig(kind=kind, x_dim=2, z_dim=z_dim), 0)
    count = param_count(model)
    assert count == expected, f"Expected {expected} parameters, got {count}"


def test_reconcile_reference_counts():
    rows = reconcile_reference_counts()
    assert len(rows) == len(REFERENCE_COUNTS), f"Expected {len(REFERENCE_COUNTS)} rows, got {len(rows)}"
    for row in rows:
        assert row.within_tolerance, f"{row.kind} z={row.z_dim}: deviation {row.deviation:.3f}"
        assert row.count == sum(layer.count for layer in row.layers), "Expected itemized counts to add up"
        assert row.deviation < 0, f"Expected fewer parameters than the reference, got {row.deviation}"


def test_reconcile_flags_counts_near_the_limit():
    statuses = {(row.kind, row.z_dim): row.status for row in reconcile_reference_counts()}
    assert statuses[("vhrnn", 4)] == ReconcileStatuses.OK, f"Got {statuses}"
    for z_dim in (4, 6, 8):
        assert statuses[("vrnn", z_dim)] == ReconcileStatuses.NEAR_LIMIT, f"Got {statuses}"


def test_reconciliation_notes():
    def row(count):
        return Reconciliation(
            kind="vrnn", z_dim=4, count=count, reference=100, deviation=(count - 100) / 100, layers=[]
        )

    assert row(95).note() is None
    near = row(82).note()
    assert near is not None and "18.0% below" in near and "2.0% inside" in near, near
    outside = row(125)
    assert outside.status == ReconcileStatuses.OUTSIDE and not outside.within_tolerance
    assert "outside the 20% tolerance" in outside.note(), outside.note()


def test_param_report_layers():
    model = build_model(ModelConfig(kind="vhrnn", x_dim=2, z_dim=4), 0)
    layers = {layer.layer: layer for layer in param_report(model)}
    assert "cell" in layers and "theta.cell" in layers, f"Got layers {list(layers)}"
    assert layers["cell"].shapes == [(16, 8), (16, 4), (16,), (16,)], layers["cell"].shapes
    assert layers["omega.dec.mean.out"].count == 8 * 4 + 4, layers["omega.dec.mean.out"].count


def test_counts_do_not_depend_on_seed():
    cfg = ModelConfig(kind="vhrnn", z_dim=3)
    assert param_count(build_model(cfg, 1)) == param_count(build_model(cfg, 2))


# endregion
# region parameter store


def test_parameter_store():
    store = ParameterStore()
    store.add("a.W", np.ones((2, 3)))
    store.add("a.b", np.zeros(2))
    assert list(store) == ["a.W", "a.b"], f"Expected registration order, got {list(store)}"
    assert store.count() == 8, f"Expected 8, got {store.count()}"

    with pytest.raises(ValueError):
        store.add("a.W", np.ones(1))
    with pytest.raises(KeyError):
        store.assign("missing", np.ones(1))
    with pytest.raises(ValueError):
        store.assign("a.b", np.ones(3))

    store.assign("a.b", [1.0, 2.0])
    snapshot = store.snapshot()
    store.assign("a.b", [5.0, 6.0])
    assert np.array_equal(snapshot["a.b"], [1.0, 2.0]), f"Expected the old value, got {snapshot['a.b']}"

    bound = store.bind()
    assert bound["a.W"].requires_grad and bound["a.W"].name == "a.W"
    assert not store.bind(requires_grad=False)["a.W"].requires_grad


def test_build_is_deterministic():
    cfg = ModelConfig(kind="vhrnn", z_dim=2)
    first, second = build_model(cfg, 11), build_model(cfg, np.random.default_rng(11))
    for name in first.params:
        assert np.array_equal(first.params[name], second.params[name]), f"{name} differs"


# endregion
# region config


def test_model_config_defaults():
    cfg = ModelConfig()
    assert cfg.hidden == cfg.z_dim == 4, f"Expected hidden size 4, got {cfg.hidden}"
    assert cfg.layers == 2, f"Expected 2 layers, got {cfg.layers}"
    assert cfg.embed == 8, f"Expected embed width 8, got {cfg.embed}"

    real = ModelConfig(recipe="real", z_dim=16)
    assert real.layers == 1 and real.embed == 64, f"Got {real.layers}, {real.embed}"


def test_model_config_errors():
    with pytest.raises(ValidationError):
        ModelConfig(kind="lgssm")
    with pytest.raises(ValidationError):
        ModelConfig(z_dim=0)
    with pytest.raises(ValidationError):
        ModelConfig(kind="transformer")


# endregion
# region steps


def _run(model, xs, seed):
    rng = np.random.default_rng(seed)
    p = model.params.bind(requires_grad=False)
    state = model.initial_state(xs.shape[0])
    outputs = []
    for t in range(xs.shape[1]):
        eps = rng.standard_normal((xs.shape[0], model.cfg.z_dim))
        out = model.step(xs[:, t, :], state, p, eps)
        outputs.append(out)
        state = out.state
    return outputs


@pytest.mark.parametrize("cell", ["lstm", "gru"])
@pytest.mark.parametrize("hyper_input", ["latent_only", "hidden_only", "both"])
def test_fresh_vhrnn_reduces_to_vrnn(cell, hyper_input):
    seed = 5
    vrnn = build_model(ModelConfig(kind="vrnn", cell=cell, z_dim=3), seed)
    vhrnn = build_model(ModelConfig(kind="vhrnn", cell=cell, z_dim=3, hyper_input=hyper_input), seed)
    for name in vrnn.params:
        assert np.array_equal(vrnn.params[name], vhrnn.params[name]), f"{name} differs"

    rng = np.random.default_rng(9)
    for index in range(REDUCTION_SEQUENCES):
        xs = rng.normal(size=(1, int(rng.integers(1, 11)), 2))
        for t, (a, b) in enumerate(zip(_run(vrnn, xs, index), _run(vhrnn, xs, index))):
            where = f"sequence {index}, step {t}"
            assert np.array_equal(a.z.value, b.z.value), f"Expected equal latent samples at {where}"
            assert np.array_equal(a.decoder.mean.value, b.decoder.mean.value), f"Decoders differ at {where}"
            assert np.array_equal(a.decoder.log_std.value, b.decoder.log_std.value), where
            assert np.array_equal(a.state.primary.h.value, b.state.primary.h.value), f"States differ at {where}"


def test_feedforward_hyper_has_no_hyper_state():
    model = build_model(ModelConfig(kind="vhrnn", z_dim=2, hyper_kind="feedforward"), 0)
    assert model.initial_state(3).hyper is None, "Expected no hyper state"
    assert any(name.startswith("theta.0") for name in model.params), list(model.params)
    out = _run(model, np.zeros((3, 2, 2)), 0)[-1]
    assert out.state.primary.h.shape == (3, 2), f"Expected (3, 2), got {out.state.primary.h.shape}"


def test_step_functions_check_kind():
    vrnn = build_model(ModelConfig(kind="vrnn", z_dim=2), 0)
    vhrnn = build_model(ModelConfig(kind="vhrnn", z_dim=2), 0)
    eps = np.zeros((1, 2))
    x = np.zeros((1, 2))

    out = vhrnn_step(x, vhrnn.initial_state(1), vhrnn, eps)
    assert out.state.hyper is not None, "Expected a hyper state"
    assert vrnn_step(x, vrnn.initial_state(1), vrnn, eps).state.hyper is None
    with pytest.raises(ValueError):
        vrnn_step(x, vhrnn.initial_state(1), vhrnn, eps)
    with pytest.raises(ValueError):
        vhrnn_step(x, vrnn.initial_state(1), vrnn, eps)
    with pytest.raises(ValueError):
        hyperlstm_step(x, vrnn.initial_state(1), vrnn)


def test_step_input_errors():
    model = build_model(ModelConfig(kind="vrnn", z_dim=2), 0)
    p = model.params.bind(requires_grad=False)
    state = model.initial_state(2)
    with pytest.raises(ValueError):
        model.step(np.zeros((2, 3)), state, p, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        model.step(np.zeros((3, 2)), state, p, np.zeros((3, 2)))
    with pytest.raises(ValueError):
        model.step(np.zeros((2, 2)), state, p, None)


def test_model_state_take():
    model = build_model(ModelConfig(kind="vhrnn", z_dim=2), 0)
    out = _run(model, np.random.default_rng(0).normal(size=(3, 2, 2)), 1)[-1]
    taken = out.state.take([1, 1, 0])
    assert isinstance(taken, ModelState)
    assert np.array_equal(taken.hyper.h.value[0], out.state.hyper.h.value[1]), "Expected row 1"
    assert taken.rows == 3, f"Expected 3 rows, got {taken.rows}"


def test_hyperlstm_step():
    model = build_model(ModelConfig(kind="hyperlstm", x_dim=2, hidden_dim=5, hyper_dim=3), 0)
    assert isinstance(model, HyperLstm) and not model.has_latent
    out = hyperlstm_step(np.ones((1, 2)), model.initial_state(1), model)
    assert out.z is None and out.prior is None, "Expected no latent variables"
    assert out.state.primary.h.shape == (1, 5), f"Expected (1, 5), got {out.state.primary.h.shape}"
    assert out.state.hyper.h.shape == (1, 3), f"Expected (1, 3), got {out.state.hyper.h.shape}"


# endregion
# region generation


def test_generate_shapes():
    model = build_model(ModelConfig(kind="vhrnn", z_dim=2), 0)
    xs, means = generate(model, 7, np.random.default_rng(0), return_means=True)
    assert xs.shape == (7, 2) and means.shape == (7, 2), f"Got {xs.shape}, {means.shape}"
    again = generate(model, 7, np.random.default_rng(0))
    assert np.array_equal(xs, again), "Expected the same draws for the same seed"
    with pytest.raises(ValueError):
        generate(model, 0, np.random.default_rng(0))


def test_generate_bernoulli_is_binary():
    model = build_model(ModelConfig(kind="vrnn", z_dim=2, x_dim=3, decoder="bernoulli"), 0)
    xs = generate(model, 12, np.random.default_rng(1))
    assert set(np.unique(xs)) <= {0.0, 1.0}, f"Expected binary values, got {np.unique(xs)}"


def test_generate_hyperlstm_mixture():
    cfg = ModelConfig(kind="hyperlstm", x_dim=2, decoder="gmm", n_components=3, hidden_dim=4)
    xs = generate(build_model(cfg, 0), 5, np.random.default_rng(2))
    assert xs.shape == (5, 2), f"Expected (5, 2), got {xs.shape}"
    assert np.all(np.isfinite(xs)), "Expected finite samples"


def test_generate_lgssm():
    cfg = ModelConfig(kind="lgssm", x_dim=1, z_dim=1, transition=0.5)
    model = build_model(cfg, 0)
    assert model.params["lgssm.transition"][0] == 0.5
    assert generate(model, 4, np.random.default_rng(0)).shape == (4, 1)


# endregion
# region symbols


def _resolve(obj, path):
    for part in path.split("."):
        obj = getattr(obj, part)
    return obj


def test_symbol_table_homes_exist():
    model = build_model(ModelConfig(kind="vhrnn", z_dim=2), 0)
    out = _run(model, np.zeros((1, 1, 2)), 0)[0]
    for symbol, home in SYMBOLS.items():
        if home.home == SymbolHomes.PARAMS:
            assert any(name.startswith(home.path) for name in model.params), f"{symbol}: {home.path}"
        elif home.home == SymbolHomes.FIELD:
            assert _resolve(out, home.path) is not None, f"{symbol}: {home.path}"
        else:
            assert home.path in ModelConfig.model_fields, f"{symbol}: {home.path}"


# endregion


def test_model_classes():
    assert isinstance(build_model(ModelConfig(kind="vrnn"), 0), Vrnn)
    vhrnn = build_model(ModelConfig(kind="vhrnn"), 0)
    assert isinstance(vhrnn, Vhrnn) and isinstance(vhrnn, Vrnn)
