"""This module contains the RunConfig class, the complete description of a run, and its INI
on-disk form: one section per package, every key overridable with --set section.key=value."""

from __future__ import annotations

import configparser
from pathlib import Path
from typing import Any, Iterable

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from pyvhrnn.models import ModelConfig
from pyvhrnn.objectives import ObjectiveConfig, OptimConfig
from pyvhrnn.synthdata import SynthConfig

NONE_VALUE = "none"


# pylint: disable=too-few-public-methods
class RunFields:
    """Stores the section names and the keys of the [run] section."""

    RUN = "run"
    MODEL = "model"
    OBJECTIVE = "objective"
    OPTIM = "optim"
    DATA = "data"
    SYNTH = "synth"

    SEED = "seed"
    OUT = "out"

    SECTIONS = (RUN, MODEL, OBJECTIVE, OPTIM, DATA, SYNTH)


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class DataConfig(BaseModel):
    """Where the sequences come from.

    With no paths the synthetic train and valid settings are generated from [synth]. With
    source, one JSONL file is split by fractions. Otherwise train and valid are read from
    their own files.

    Attributes:
        train (str | None): The training JSONL file.
        valid (str | None): The validation JSONL file.
        test (str | None): The test JSONL file.
        source (str | None): A single JSONL file to split.
        fractions (list[float]): The (train, valid, test) fractions of source.
        split_seed (int): The shuffle seed of the split.
        preprocess (list[str]): Transforms applied in order, statistics fitted on train.
    """

    train: str | None = None
    valid: str | None = None
    test: str | None = None
    source: str | None = None
    fractions: list[float] = Field(default_factory=lambda: [0.8, 0.1, 0.1])
    split_seed: int = 0
    preprocess: list[str] = Field(default_factory=list)

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    @field_validator("fractions", "preprocess", mode="before")
    def decode_list(cls, value: Any) -> Any:  # pylint: disable=no-self-argument
        """Splits comma-separated strings from the INI file."""
        return _split_list(value)

    @property
    def synthetic(self) -> bool:
        return self.source is None and self.train is None


_SECTION_MODELS: dict[str, type[BaseModel]] = {
    RunFields.MODEL: ModelConfig,
    RunFields.OBJECTIVE: ObjectiveConfig,
    RunFields.OPTIM: OptimConfig,
    RunFields.DATA: DataConfig,
    RunFields.SYNTH: SynthConfig,
}


class RunConfig(BaseModel):
    """Complete description of a run.

    Attributes:
        seed (int): The run seed.
        out (str): The output directory.
        model (ModelConfig): The architecture.
        objective (ObjectiveConfig): The bound.
        optim (OptimConfig): The optimizer and loop settings.
        data (DataConfig): The data sources.
        synth (SynthConfig): The synthetic data settings.
    """

    seed: int = 0
    out: str = "runs/run"
    model: ModelConfig = Field(default_factory=ModelConfig)
    objective: ObjectiveConfig = Field(default_factory=ObjectiveConfig)
    optim: OptimConfig = Field(default_factory=OptimConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    synth: SynthConfig = Field(default_factory=SynthConfig)

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    @model_validator(mode="before")
    def decode_ini(cls, values: Any) -> Any:  # pylint: disable=no-self-argument
        """Converts a parsed INI file to nested dictionaries.

        The [run] keys become top-level fields, every other section a nested model; the string
        none stands for an unset value.

        Arguments:
            values (Any): The values to validate.

        Raises:
            ValueError: If a section or key is unknown.

        Returns:
            Any: The values to validate.
        """
        if not isinstance(values, configparser.ConfigParser):
            return values
        decoded: dict[str, Any] = {}
        for section in values.sections():
            if section not in RunFields.SECTIONS:
                raise ValueError(f"Unknown config section [{section}]")
            items = {
                key: None if value.strip().lower() == NONE_VALUE else value
                for key, value in values.items(section)
            }
            allowed = (
                (RunFields.SEED, RunFields.OUT)
                if section == RunFields.RUN
                else tuple(_SECTION_MODELS[section].model_fields)
            )
            for key in items:
                if key not in allowed:
                    raise ValueError(f"Unknown key {key} in section [{section}]")
            if section == RunFields.RUN:
                decoded.update(items)
            else:
                decoded[section] = items
        return decoded


def _parser() -> configparser.ConfigParser:
    # sections only, no DEFAULT inheritance and no interpolation of % in paths
    return configparser.ConfigParser(interpolation=None, default_section="__defaults__")


def apply_overrides(parser: configparser.ConfigParser, overrides: Iterable[str]) -> None:
    """Applies section.key=value overrides to a parsed config.

    Raises:
        ValueError: If an override is malformed or names an unknown section.
    """
    for override in overrides:
        target, sep, value = override.partition("=")
        section, dot, key = target.strip().partition(".")
        if not sep or not dot or not key:
            raise ValueError(f"Expected section.key=value, got {override}")
        if section not in RunFields.SECTIONS:
            raise ValueError(f"Unknown config section [{section}] in override {override}")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value.strip())


def load_run_config(path: str | Path | None = None, overrides: Iterable[str] = ()) -> RunConfig:
    """Reads an INI file (or starts from defaults) and applies the overrides.

    Arguments:
        path (str | Path | None): The config file.
        overrides (Iterable[str]): section.key=value strings.

    Raises:
        FileNotFoundError: If the file doesn't exist.
        ValueError: If an override is malformed or a section or key is unknown.
        pydantic.ValidationError: If a value is invalid.

    Returns:
        RunConfig: The validated config.

    Examples:
        ```python
        cfg = load_run_config("configs/vhrnn_synthetic.ini", ["model.z_dim=6"])
        ```
    """
    parser = _parser()
    if path is not None:
        with Path(path).open("r", encoding="utf-8") as f:
            parser.read_file(f)
    apply_overrides(parser, overrides)
    return RunConfig.model_validate(parser)


def _encode(value: Any) -> str:
    if value is None:
        return NONE_VALUE
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(_encode(item) for item in value)
    return str(value)


def dump_run_config(cfg: RunConfig, path: str | Path) -> None:
    """Writes the resolved config, every field included, in the form load_run_config reads."""
    parser = _parser()
    parser.add_section(RunFields.RUN)
    parser.set(RunFields.RUN, RunFields.SEED, _encode(cfg.seed))
    parser.set(RunFields.RUN, RunFields.OUT, _encode(cfg.out))
    for section in _SECTION_MODELS:
        parser.add_section(section)
        for key, value in getattr(cfg, section).model_dump().items():
            parser.set(section, key, _encode(value))
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="\n") as f:
        parser.write(f)
