"""This module contains the synthetic regime-switching generator x_t = W x_{t−1} + σ_t ε_t and the
nine dataset settings built from it: the train, valid and test splits plus the six generalization
settings of the evaluation battery."""

from __future__ import annotations

from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from pyvhrnn.dataio import SequenceDataset, SequenceRecord, Splits
from pyvhrnn.synthdata.bank import ENTRY_BOUND, STATE_DIM, MatrixBank, make_matrix_bank
from pyvhrnn.synthdata.schedule import MIN_SEGMENT, SigmaSchedule, gen_sigma_schedule
from pyvhrnn.tensor import Tensor
from pyvhrnn.utils import Logger

NOISE_SEED_LIMIT = 2**63


# pylint: disable=too-few-public-methods
class SynthSettings:
    """Stores the dataset settings."""

    TRAIN = "train"
    VALID = "valid"
    TEST = "test"
    NOISELESS = "noiseless"
    SWITCH = "switch"
    LONG = "long"
    ZEROSHOT = "zeroshot"
    ADD = "add"
    RAND = "rand"

    ALL = (TRAIN, VALID, TEST, NOISELESS, SWITCH, LONG, ZEROSHOT, ADD, RAND)
    BATTERY = (TEST, NOISELESS, SWITCH, LONG, ZEROSHOT, ADD, RAND)


# pylint: disable=too-few-public-methods
class SynthFields:
    """Stores the metadata keys of a synthetic sequence."""

    SETTING = "setting"
    BANK_ID = "bank_id"
    SEGMENTS = "segments"
    SWITCHES = "switches"


class SynthConfig(BaseModel):
    """Synthetic data settings.

    Attributes:
        bank_seed (int): The seed of the shared matrix bank.
        bank_size (int): The number of matrices in a bank.
        entry_bound (float): Matrix entries are uniform in (−bound, bound).
        length (int): The base sequence length T.
        long_length (int): The length of the long and rand settings.
        n_train (int): Sequences in the train split.
        n_valid (int): Sequences in the valid split.
        n_test (int): Sequences in the test split and in every battery setting.
        n_switches (int): σ change points of the noisy settings.
        max_rand_switches (int): Upper bound of the uniform change-point count of the rand setting.
        min_segment (int): The minimum σ segment length.
        zeroshot_offset (int): Added to bank_seed for the zero-shot bank, never 0.
    """

    bank_seed: int = 0
    bank_size: int = Field(default=10, ge=2)
    entry_bound: float = Field(default=ENTRY_BOUND, gt=0)
    length: int = Field(default=30, ge=1)
    long_length: int = Field(default=60, ge=1)
    n_train: int = Field(default=800, ge=0)
    n_valid: int = Field(default=100, ge=0)
    n_test: int = Field(default=100, ge=0)
    n_switches: int = Field(default=2, ge=0)
    max_rand_switches: int = Field(default=3, ge=0)
    min_segment: int = Field(default=MIN_SEGMENT, ge=1)
    zeroshot_offset: int = 1000

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    @field_validator("zeroshot_offset")
    def distinct_zeroshot_bank(cls, value: int) -> int:  # pylint: disable=no-self-argument
        """Rejects an offset of 0, which would give zeroshot the train bank.

        Raises:
            ValueError: If the offset is 0.

        Returns:
            int: The offset.
        """
        if value == 0:
            raise ValueError("zeroshot_offset must not be 0, zeroshot needs its own matrix bank")
        return value

    @model_validator(mode="after")
    def check_lengths(self) -> SynthConfig:
        """Checks that every noisy setting has room for its σ segments.

        Raises:
            ValueError: If length or long_length is shorter than its segments need.

        Returns:
            SynthConfig: The validated config.
        """
        needs = {
            "length": (self.length, self.n_switches),
            "long_length": (self.long_length, max(self.n_switches, self.max_rand_switches)),
        }
        for name, (steps, n_switches) in needs.items():
            if steps < (n_switches + 1) * self.min_segment:
                raise ValueError(
                    f"{name}={steps} is too short for {n_switches + 1} segments of at least "
                    f"{self.min_segment} steps"
                )
        return self


class SynthSegment(BaseModel):
    """Everything needed to re-simulate one stretch of a sequence.

    Attributes:
        matrix (list[list[float]]): W.
        w_index (int | None): The bank index of W, None for the identity.
        bias (list[float]): The additive drift b, zero except for the add setting.
        x0 (list[float]): The initial condition, not part of the observed rows.
        sigma (list[float]): σ_t for every step of the segment.
        noise_seed (int | None): The seed of the ε_t stream.
    """

    matrix: list[list[float]]
    w_index: int | None = None
    bias: list[float] = Field(default_factory=lambda: [0.0] * STATE_DIM)
    x0: list[float]
    sigma: list[float]
    noise_seed: int | None = None

    model_config = ConfigDict(populate_by_name=True)


class SynthSequence(BaseModel):
    """A generated sequence with its provenance.

    Attributes:
        setting (str): The setting tag.
        data (Tensor): Observed rows x_1 … x_T.
        segments (list[SynthSegment]): The generating segments, one except for the switch setting.
        switches (list[int]): 0-based row indices where the generating regime changes.
        bank_id (str | None): The id of the matrix bank.
    """

    setting: str = ""
    data: np.ndarray
    segments: list[SynthSegment]
    switches: list[int] = Field(default_factory=list)
    bank_id: str | None = None

    model_config = ConfigDict(populate_by_name=True, arbitrary_types_allowed=True)

    def to_record(self, sequence_id: str) -> SequenceRecord:
        meta = {
            SynthFields.SETTING: self.setting,
            SynthFields.BANK_ID: self.bank_id,
            SynthFields.SEGMENTS: [segment.model_dump() for segment in self.segments],
            SynthFields.SWITCHES: self.switches,
        }
        return SequenceRecord(id=sequence_id, data=self.data, meta=meta)

    @classmethod
    def from_record(cls, record: SequenceRecord) -> SynthSequence:
        """Rebuilds the sequence from a dataset record.

        Raises:
            ValueError: If the record carries no synthetic metadata.
        """
        if SynthFields.SEGMENTS not in record.meta:
            raise ValueError(f"Sequence {record.id} has no synthetic metadata")
        return cls(
            setting=record.meta.get(SynthFields.SETTING, ""),
            data=record.data,
            segments=[SynthSegment.model_validate(s) for s in record.meta[SynthFields.SEGMENTS]],
            switches=record.meta.get(SynthFields.SWITCHES, []),
            bank_id=record.meta.get(SynthFields.BANK_ID),
        )


def _simulate(segment: SynthSegment, eps: Tensor) -> Tensor:
    matrix = np.array(segment.matrix, dtype=np.float64)
    bias = np.array(segment.bias, dtype=np.float64)
    x = np.array(segment.x0, dtype=np.float64)
    rows = np.empty((len(segment.sigma), STATE_DIM))
    for t, sigma in enumerate(segment.sigma):
        x = matrix @ x + bias + sigma * eps[t]
        rows[t] = x
    return rows


def gen_sequence(
    matrix: ArrayLike,
    x0: ArrayLike | None,
    schedule: SigmaSchedule,
    rng: np.random.Generator,
    bias: ArrayLike | None = None,
) -> SynthSequence:
    """Runs x_t = W x_{t−1} + b + σ_t ε_t for t = 1 … T with two-dimensional standard Gaussian ε_t.

    Arguments:
        matrix (ArrayLike): W, shape (2, 2).
        x0 (ArrayLike | None): The initial condition, uniform on [−1, 1]² when not given.
        schedule (SigmaSchedule): σ_1 … σ_T.
        rng (np.random.Generator): The generator: x0 first (if drawn), then all ε_t.
        bias (ArrayLike | None): b, zero when not given.

    Raises:
        ValueError: If W, x0 or b have the wrong shape.

    Returns:
        SynthSequence: The sequence, rows x_1 … x_T.

    Examples:
        ```python
        seq = gen_sequence(2 * np.eye(2), [1.0, 0.0], SigmaSchedule.constant(3), rng)
        seq.data  # [[2, 0], [4, 0], [8, 0]]
        ```
    """
    w = np.asarray(matrix, dtype=np.float64)
    if w.shape != (STATE_DIM, STATE_DIM):
        raise ValueError(f"W must be {STATE_DIM} × {STATE_DIM}, got shape {w.shape}")
    start = rng.uniform(-1.0, 1.0, size=STATE_DIM) if x0 is None else np.asarray(x0, np.float64)
    drift = np.zeros(STATE_DIM) if bias is None else np.asarray(bias, dtype=np.float64)
    if start.shape != (STATE_DIM,) or drift.shape != (STATE_DIM,):
        raise ValueError(f"x0 and b must have {STATE_DIM} entries")
    segment = SynthSegment(
        matrix=w.tolist(), bias=drift.tolist(), x0=start.tolist(), sigma=schedule.values
    )
    eps = rng.standard_normal((len(schedule), STATE_DIM))
    return SynthSequence(
        data=_simulate(segment, eps), segments=[segment], switches=schedule.change_points
    )


def resimulate(sequence: SynthSequence | SequenceRecord, bank: MatrixBank | None = None) -> Tensor:
    """Regenerates the rows of a sequence from its metadata and noise seeds.

    Arguments:
        sequence (SynthSequence | SequenceRecord): The sequence or its dataset record.
        bank (MatrixBank | None): When given, the stored matrices are checked against it.

    Raises:
        ValueError: If the metadata lacks a noise seed or disagrees with the bank.

    Returns:
        Tensor: The regenerated rows, bit-identical to the stored ones.
    """
    if isinstance(sequence, SequenceRecord):
        sequence = SynthSequence.from_record(sequence)
    parts = []
    for segment in sequence.segments:
        if segment.noise_seed is None:
            raise ValueError("Segment has no noise seed and cannot be re-simulated")
        if bank is not None and segment.w_index is not None:
            if not np.array_equal(bank.matrix(segment.w_index), np.array(segment.matrix)):
                raise ValueError(f"Matrix {segment.w_index} differs from bank {bank.id}")
        noise = np.random.default_rng(segment.noise_seed)
        parts.append(_simulate(segment, noise.standard_normal((len(segment.sigma), STATE_DIM))))
    return np.concatenate(parts, axis=0)


class _Generator:
    """Draws the sequences of one setting from a single master stream."""

    def __init__(self, setting: str, cfg: SynthConfig, seed: int):
        self.setting = setting
        self.cfg = cfg
        self.rng = np.random.default_rng([seed, SynthSettings.ALL.index(setting)])
        bank_seed = cfg.bank_seed
        if setting == SynthSettings.ZEROSHOT:
            bank_seed += cfg.zeroshot_offset
        self.bank = make_matrix_bank(bank_seed, cfg.bank_size, cfg.entry_bound)

    def count(self) -> int:
        return {
            SynthSettings.TRAIN: self.cfg.n_train,
            SynthSettings.VALID: self.cfg.n_valid,
        }.get(self.setting, self.cfg.n_test)

    def segment(
        self,
        schedule: SigmaSchedule,
        w_index: int | None,
        low: float = -1.0,
        bias: Tensor | None = None,
    ) -> tuple[SynthSequence, SynthSegment]:
        matrix = np.eye(STATE_DIM) if w_index is None else self.bank.matrix(w_index)
        x0 = self.rng.uniform(low, 1.0, size=STATE_DIM)
        noise_seed = int(self.rng.integers(NOISE_SEED_LIMIT))
        sequence = gen_sequence(matrix, x0, schedule, np.random.default_rng(noise_seed), bias)
        segment = sequence.segments[0].model_copy(
            update={"w_index": w_index, "noise_seed": noise_seed}
        )
        return sequence, segment

    def sequence(self) -> SynthSequence:
        cfg = self.cfg
        if self.setting == SynthSettings.SWITCH:
            return self._switch()
        if self.setting == SynthSettings.ADD:
            bias = self.rng.uniform(0.0, 1.0, size=STATE_DIM)
            sequence, segment = self.segment(SigmaSchedule.constant(cfg.length), None, 0.0, bias)
        elif self.setting == SynthSettings.RAND:
            n_switches = int(self.rng.integers(cfg.max_rand_switches + 1))
            schedule = gen_sigma_schedule(cfg.long_length, n_switches, self.rng, cfg.min_segment)
            sequence, segment = self.segment(schedule, None)
        else:
            steps = cfg.long_length if self.setting == SynthSettings.LONG else cfg.length
            if self.setting == SynthSettings.NOISELESS:
                schedule = SigmaSchedule.constant(steps)
            else:
                schedule = gen_sigma_schedule(steps, cfg.n_switches, self.rng, cfg.min_segment)
            w_index = int(self.rng.integers(len(self.bank)))
            sequence, segment = self.segment(schedule, w_index)
        return sequence.model_copy(update={"segments": [segment]})

    def _switch(self) -> SynthSequence:
        # consecutive segments use different matrices so every boundary is a regime change
        parts, segments, switches = [], [], []
        w_index: int | None = None
        for index in range(3):
            choices = [i for i in range(len(self.bank)) if i != w_index]
            w_index = choices[int(self.rng.integers(len(choices)))]
            sequence, segment = self.segment(SigmaSchedule.constant(self.cfg.length), w_index)
            if index > 0:
                switches.append(index * self.cfg.length)
            parts.append(sequence.data)
            segments.append(segment)
        return SynthSequence(
            data=np.concatenate(parts, axis=0), segments=segments, switches=switches
        )


def gen_dataset(
    setting: str, cfg: SynthConfig | None = None, seed: int = 0, logger: Any | None = None
) -> SequenceDataset:
    """Generates the dataset of a setting.

    train, valid and test share the bank of cfg.bank_seed; zeroshot uses the bank of
    cfg.bank_seed + cfg.zeroshot_offset. Each setting draws from its own stream derived from
    (seed, setting), so the splits differ under one seed.

    Arguments:
        setting (str): One of SynthSettings.ALL.
        cfg (SynthConfig | None): The generation settings, defaults when not given.
        seed (int): The seed.
        logger (Any | None): The logger to use. If not provided, a dummy logger is used.

    Raises:
        ValueError: If the setting is unknown.

    Returns:
        SequenceDataset: The dataset, metadata in every record.

    Examples:
        ```python
        train = gen_dataset("train", SynthConfig(), seed=7)
        len(train)  # 800
        ```
    """
    logger = logger or Logger(__name__)
    if setting not in SynthSettings.ALL:
        raise ValueError(f"Unknown setting {setting}, expected one of {SynthSettings.ALL}")
    cfg = cfg or SynthConfig()
    generator = _Generator(setting, cfg, seed)
    records = []
    for index in range(generator.count()):
        sequence = generator.sequence().model_copy(
            update={"setting": setting, "bank_id": generator.bank.id}
        )
        records.append(sequence.to_record(f"{setting}-{index:05d}"))
    split = setting if setting in (SynthSettings.TRAIN, SynthSettings.VALID) else Splits.TEST
    logger.info(
        "Generated %s %s sequences from bank %s", len(records), setting, generator.bank.id
    )
    return SequenceDataset(dim=STATE_DIM, sequences=records, split=split)
