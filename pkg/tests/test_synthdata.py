import numpy as np
import pytest
from pydantic import ValidationError

from pyvhrnn.dataio import load_jsonl, save_jsonl
from pyvhrnn.synthdata import (
    ENTRY_BOUND,
    MIN_SEGMENT,
    SIGMA_LEVELS,
    SigmaSchedule,
    SynthConfig,
    SynthFields,
    SynthSequence,
    gen_dataset,
    gen_sequence,
    gen_sigma_schedule,
    make_matrix_bank,
    resimulate,
)

TINY_SYNTH = SynthConfig(n_train=5, n_valid=3, n_test=4, length=10, long_length=20, n_switches=1)

# region matrix bank


def test_matrix_bank_is_deterministic():
    first, second = make_matrix_bank(0), make_matrix_bank(0)
    assert first.id == second.id, f"Expected {first.id}, got {second.id}"
    assert first.matrices == second.matrices, "Expected identical matrices"
    assert len(first.id) == 12, f"Expected a 12-character id, got {first.id}"
    assert make_matrix_bank(1).id != first.id, "Expected another bank for another seed"


def test_matrix_bank_mixes_growth_and_decay():
    for seed in range(10):
        bank = make_matrix_bank(seed)
        radii = bank.radii()
        assert len(bank) == 10, f"Expected 10 matrices, got {len(bank)}"
        assert max(radii) > 1.0 > min(radii), f"Seed {seed}: radii {radii}"
        assert np.all(np.abs(bank.matrices) < ENTRY_BOUND), f"Seed {seed}: entries out of range"


def test_matrix_bank_errors():
    with pytest.raises(ValueError):
        make_matrix_bank(0, count=1)
    with pytest.raises(ValueError):
        make_matrix_bank(0).matrix(10)


# endregion
# region sigma schedules


@pytest.mark.parametrize("steps, n_switches", [(30, 2), (12, 1), (60, 3), (5, 0)])
def test_sigma_schedule_segments(steps, n_switches):
    for seed in range(50):
        schedule = gen_sigma_schedule(steps, n_switches, np.random.default_rng(seed))
        points = schedule.change_points
        assert len(schedule) == steps, f"Expected {steps} steps, got {len(schedule)}"
        assert len(points) == n_switches, f"Seed {seed}: expected {n_switches} switches, got {points}"
        edges = [0] + points + [steps]
        lengths = np.diff(edges)
        assert np.all(lengths >= MIN_SEGMENT), f"Seed {seed}: segment lengths {lengths}"
        assert set(schedule.values) <= set(SIGMA_LEVELS), f"Seed {seed}: levels {set(schedule.values)}"


def test_sigma_schedule_errors():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        gen_sigma_schedule(14, 2, rng)
    with pytest.raises(ValueError):
        gen_sigma_schedule(30, -1, rng)


def test_constant_schedule():
    schedule = SigmaSchedule.constant(4)
    assert schedule.values == [0.0] * 4 and schedule.change_points == []


# endregion
# region sequences


def test_gen_sequence_doubling():
    seq = gen_sequence(2 * np.eye(2), [1.0, 0.0], SigmaSchedule.constant(3), np.random.default_rng(0))
    expected = np.array([[2.0, 0.0], [4.0, 0.0], [8.0, 0.0]])
    assert np.array_equal(seq.data, expected), f"Expected {expected}, got {seq.data}"
    assert seq.switches == [], f"Expected no switches, got {seq.switches}"


def test_gen_sequence_errors():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        gen_sequence(np.eye(3), None, SigmaSchedule.constant(3), rng)
    with pytest.raises(ValueError):
        gen_sequence(np.eye(2), [1.0, 2.0, 3.0], SigmaSchedule.constant(3), rng)


# endregion
# region datasets


@pytest.mark.parametrize(
    "setting, count, split",
    [("train", 5, "train"), ("valid", 3, "valid"), ("test", 4, "test"), ("rand", 4, "test")],
)
def test_dataset_counts(setting, count, split):
    dataset = gen_dataset(setting, TINY_SYNTH, seed=1)
    assert len(dataset) == count, f"Expected {count} sequences, got {len(dataset)}"
    assert dataset.split == split, f"Expected split {split}, got {dataset.split}"
    assert dataset.sequences[0].id == f"{setting}-00000", dataset.sequences[0].id
    assert dataset.dim == 2


def test_dataset_is_deterministic():
    first = gen_dataset("train", TINY_SYNTH, seed=3)
    second = gen_dataset("train", TINY_SYNTH, seed=3)
    for a, b in zip(first.sequences, second.sequences):
        assert np.array_equal(a.data, b.data), f"{a.id} differs"
        assert a.meta == b.meta, f"{a.id} metadata differs"


def test_splits_differ_under_one_seed():
    train = gen_dataset("train", TINY_SYNTH, seed=3)
    valid = gen_dataset("valid", TINY_SYNTH, seed=3)
    assert not np.array_equal(train.sequences[0].data, valid.sequences[0].data)


@pytest.mark.parametrize("setting", ["train", "switch", "add", "rand", "zeroshot"])
def test_resimulate_is_exact(setting, tmp_path):
    dataset = gen_dataset(setting, TINY_SYNTH, seed=4)
    bank = make_matrix_bank(TINY_SYNTH.bank_seed + (TINY_SYNTH.zeroshot_offset if setting == "zeroshot" else 0))
    for record in dataset.sequences:
        assert np.array_equal(resimulate(record, bank), record.data), f"{record.id} differs"

    path = tmp_path / f"{setting}.jsonl"
    save_jsonl(dataset, path)
    for record in load_jsonl(path).sequences:
        assert np.array_equal(resimulate(record), record.data), f"{record.id} differs after reload"


def test_resimulate_rejects_other_bank():
    record = gen_dataset("train", TINY_SYNTH, seed=4).sequences[0]
    with pytest.raises(ValueError):
        resimulate(record, make_matrix_bank(TINY_SYNTH.bank_seed + 1))


def test_zeroshot_uses_another_bank():
    test = gen_dataset("test", TINY_SYNTH, seed=0)
    zeroshot = gen_dataset("zeroshot", TINY_SYNTH, seed=0)
    test_bank = test.sequences[0].meta[SynthFields.BANK_ID]
    zeroshot_bank = zeroshot.sequences[0].meta[SynthFields.BANK_ID]
    assert test_bank != zeroshot_bank, "Expected the zero-shot bank to differ"
    assert test_bank == make_matrix_bank(TINY_SYNTH.bank_seed).id


def test_zeroshot_offset_must_not_be_zero():
    with pytest.raises(ValidationError):
        SynthConfig(n_switches=1, zeroshot_offset=0)
    cfg = SynthConfig(n_switches=1, zeroshot_offset=-3)
    assert cfg.zeroshot_offset == -3, f"Expected -3, got {cfg.zeroshot_offset}"


@pytest.mark.parametrize(
    "fields",
    [
        {"length": 10, "n_switches": 2, "min_segment": 5},
        {"length": 30, "long_length": 15, "n_switches": 2},
        {"length": 30, "long_length": 19, "n_switches": 1, "max_rand_switches": 3},
    ],
)
def test_config_rejects_short_sequences(fields):
    with pytest.raises(ValidationError):
        SynthConfig(**fields)


def test_config_accepts_exact_fit():
    cfg = SynthConfig(length=15, long_length=20, n_switches=2, max_rand_switches=3, min_segment=5)
    assert cfg.length == 15 and cfg.long_length == 20, f"Got {cfg}"


def test_add_setting():
    for record in gen_dataset("add", TINY_SYNTH, seed=5).sequences:
        sequence = SynthSequence.from_record(record)
        segment = sequence.segments[0]
        bias = np.array(segment.bias)
        assert segment.w_index is None and set(segment.sigma) == {0.0}
        assert np.all((bias >= 0.0) & (bias < 1.0)), f"Bias out of range: {bias}"
        assert np.all(np.array(segment.x0) >= 0.0), f"Expected x0 in [0, 1], got {segment.x0}"
        assert np.allclose(record.data[0], np.array(segment.x0) + bias, rtol=0, atol=1e-12)
        diffs = np.diff(record.data, axis=0)
        assert np.allclose(diffs, bias, rtol=0, atol=1e-12), f"Expected steps of {bias}"


def test_noiseless_setting():
    for record in gen_dataset("noiseless", TINY_SYNTH, seed=6).sequences:
        segment = SynthSequence.from_record(record).segments[0]
        assert set(segment.sigma) == {0.0}, f"Expected σ ≡ 0, got {set(segment.sigma)}"
        matrix = np.array(segment.matrix)
        assert np.allclose(record.data[0], matrix @ np.array(segment.x0), rtol=0, atol=1e-12)


def test_switch_setting():
    length = TINY_SYNTH.length
    for record in gen_dataset("switch", TINY_SYNTH, seed=7).sequences:
        sequence = SynthSequence.from_record(record)
        assert record.length == 3 * length, f"Expected {3 * length} steps, got {record.length}"
        assert sequence.switches == [length, 2 * length], f"Got switches {sequence.switches}"
        indices = [segment.w_index for segment in sequence.segments]
        assert indices[0] != indices[1] and indices[1] != indices[2], f"Got matrices {indices}"


def test_long_and_rand_lengths():
    for record in gen_dataset("long", TINY_SYNTH, seed=8).sequences:
        assert record.length == TINY_SYNTH.long_length
        assert len(record.meta[SynthFields.SWITCHES]) == TINY_SYNTH.n_switches
    for record in gen_dataset("rand", TINY_SYNTH, seed=8).sequences:
        assert record.length == TINY_SYNTH.long_length
        assert len(record.meta[SynthFields.SWITCHES]) <= TINY_SYNTH.max_rand_switches


def test_unknown_setting():
    with pytest.raises(ValueError):
        gen_dataset("nope", TINY_SYNTH)


def test_from_record_requires_metadata():
    record = gen_dataset("train", TINY_SYNTH, seed=0).sequences[0].model_copy(update={"meta": {}})
    with pytest.raises(ValueError):
        SynthSequence.from_record(record)


# endregion
