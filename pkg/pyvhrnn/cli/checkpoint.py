"""This module contains the binary checkpoint format.

A checkpoint starts with an 8-byte magic and a little-endian uint32 version, followed by
records:

    tag (1 byte) | name length (uint32) | name (UTF-8) | ndim (uint32) | dims (uint32 each)
    | payload length (uint64) | payload | CRC32 of everything from tag to payload (uint32)

Array payloads are little-endian float64. The J record holds the JSON metadata (run config,
epoch, best bound, Adam scalars, normalization statistics), P records the parameters, B the
best-validation parameters, M and V the Adam moments. The file ends with an E record.
"""

from __future__ import annotations

import io
import json
import math
import os
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, BinaryIO, Mapping

import numpy as np

from pyvhrnn.cli.run_config import RunConfig
from pyvhrnn.dataio import NormStats
from pyvhrnn.models import SequenceModel, build_model
from pyvhrnn.objectives import OptimState, TrainingState
from pyvhrnn.tensor import Tensor
from pyvhrnn.utils import Logger

MAGIC = b"PYVHRNN\x00"
FORMAT_VERSION = 2


# pylint: disable=too-few-public-methods
class RecordTags:
    """Stores the record tags."""

    META = b"J"
    PARAM = b"P"
    BEST = b"B"
    MOMENT1 = b"M"
    MOMENT2 = b"V"
    END = b"E"


class CheckpointError(ValueError):
    """Raised when a checkpoint is unreadable or doesn't fit the model."""


@dataclass
class Checkpoint:
    """Contents of a checkpoint.

    Attributes:
        run (RunConfig): The run config.
        params (dict[str, Tensor]): The parameters.
        epoch (int): Completed epochs.
        state (TrainingState | None): The resumable training state, absent in best checkpoints.
        stats (list[NormStats]): The train statistics of every normalizing preprocessing mode,
            in chain order.
        version (int): The format version.
        best_bound (float | None): The validation bound per step of these parameters, if known.
    """

    run: RunConfig
    params: dict[str, Tensor]
    epoch: int = 0
    state: TrainingState | None = None
    stats: list[NormStats] = field(default_factory=list)
    version: int = FORMAT_VERSION
    best_bound: float | None = None


def _record(tag: bytes, name: str, shape: tuple[int, ...], payload: bytes) -> bytes:
    encoded = name.encode("utf-8")
    body = (
        tag
        + struct.pack("<I", len(encoded))
        + encoded
        + struct.pack("<I", len(shape))
        + struct.pack(f"<{len(shape)}I", *shape)
        + struct.pack("<Q", len(payload))
        + payload
    )
    return body + struct.pack("<I", zlib.crc32(body))


def _array_record(tag: bytes, name: str, value: Tensor) -> bytes:
    array = np.ascontiguousarray(value, dtype="<f8")
    return _record(tag, name, tuple(array.shape), array.tobytes())


def _optim_meta(optim: OptimState) -> dict[str, Any]:
    return {
        "lr": optim.lr,
        "beta1": optim.beta1,
        "beta2": optim.beta2,
        "eps": optim.eps,
        "clip_norm": optim.clip_norm,
        "step": optim.step,
    }


def _finite_or_none(value: float) -> float | None:
    return value if math.isfinite(value) else None


def checkpoint_save(checkpoint: Checkpoint, path: str | Path, logger: Any | None = None) -> None:
    """Writes the checkpoint, replacing the file atomically.

    Arguments:
        checkpoint (Checkpoint): The checkpoint.
        path (str | Path): The output file.
        logger (Any | None): The logger to use. If not provided, a dummy logger is used.
    """
    logger = logger or Logger(__name__)
    state = checkpoint.state
    meta: dict[str, Any] = {
        "run": checkpoint.run.model_dump(mode="json"),
        "epoch": checkpoint.epoch,
        "best_bound": checkpoint.best_bound,
        "stats": [stats.model_dump() for stats in checkpoint.stats],
        "state": None,
    }
    if state is not None:
        meta["state"] = {
            "epoch": state.epoch,
            "best_bound": _finite_or_none(state.best_bound),
            "best_epoch": state.best_epoch,
            "stale": state.stale,
            "optim": _optim_meta(state.optim),
        }
    chunks = [MAGIC, struct.pack("<I", checkpoint.version)]
    chunks.append(_record(RecordTags.META, "meta", (), json.dumps(meta).encode("utf-8")))
    for name, value in checkpoint.params.items():
        chunks.append(_array_record(RecordTags.PARAM, name, value))
    if state is not None:
        for tag, table in (
            (RecordTags.BEST, state.best_params),
            (RecordTags.MOMENT1, state.optim.m),
            (RecordTags.MOMENT2, state.optim.v),
        ):
            for name, value in table.items():
                chunks.append(_array_record(tag, name, value))
    chunks.append(_record(RecordTags.END, "", (), b""))
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_name(target.name + ".tmp")
    tmp.write_bytes(b"".join(chunks))
    os.replace(tmp, target)
    logger.info("Saved checkpoint of epoch %s to %s", checkpoint.epoch, target)


def _read(f: BinaryIO, size: int, what: str) -> bytes:
    data = f.read(size)
    if len(data) != size:
        raise CheckpointError(f"Truncated checkpoint: expected {size} bytes of {what}, got {len(data)}")
    return data


def _read_record(f: BinaryIO) -> tuple[bytes, str, tuple[int, ...], bytes]:
    tag = _read(f, 1, "record tag")
    raw_len = _read(f, 4, "name length")
    name = _read(f, struct.unpack("<I", raw_len)[0], "name")
    raw_ndim = _read(f, 4, "rank")
    ndim = struct.unpack("<I", raw_ndim)[0]
    raw_dims = _read(f, 4 * ndim, "shape")
    raw_size = _read(f, 8, "payload length")
    payload = _read(f, struct.unpack("<Q", raw_size)[0], "payload")
    (crc,) = struct.unpack("<I", _read(f, 4, "checksum"))
    body = tag + raw_len + name + raw_ndim + raw_dims + raw_size + payload
    label = name.decode("utf-8", errors="replace")
    if zlib.crc32(body) != crc:
        raise CheckpointError(f"Checksum mismatch in record {tag!r} {label}")
    shape = struct.unpack(f"<{ndim}I", raw_dims)
    return tag, label, shape, payload


def _array(name: str, shape: tuple[int, ...], payload: bytes) -> Tensor:
    expected = 8 * int(np.prod(shape, dtype=np.int64))
    if len(payload) != expected:
        raise CheckpointError(
            f"Parameter {name} has a payload of {len(payload)} bytes, shape {shape} needs {expected}"
        )
    return np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(shape)


def checkpoint_load(path: str | Path) -> Checkpoint:
    """Reads a checkpoint written by checkpoint_save.

    Arguments:
        path (str | Path): The checkpoint file.

    Raises:
        FileNotFoundError: If the file doesn't exist.
        CheckpointError: If the magic or version doesn't match, the file is truncated, a
            checksum fails or a payload length doesn't match its shape.

    Returns:
        Checkpoint: The checkpoint.
    """
    tables: dict[bytes, dict[str, Tensor]] = {
        RecordTags.PARAM: {},
        RecordTags.BEST: {},
        RecordTags.MOMENT1: {},
        RecordTags.MOMENT2: {},
    }
    meta: dict[str, Any] | None = None
    with io.BytesIO(Path(path).read_bytes()) as f:
        if _read(f, len(MAGIC), "magic") != MAGIC:
            raise CheckpointError(f"{path} is not a checkpoint")
        (version,) = struct.unpack("<I", _read(f, 4, "version"))
        if version != FORMAT_VERSION:
            raise CheckpointError(
                f"Unsupported checkpoint version {version}, expected {FORMAT_VERSION}"
            )
        while True:
            tag, name, shape, payload = _read_record(f)
            if tag == RecordTags.END:
                break
            if tag == RecordTags.META:
                meta = json.loads(payload.decode("utf-8"))
            elif tag in tables:
                tables[tag][name] = _array(name, shape, payload)
            else:
                raise CheckpointError(f"Unknown record tag {tag!r}")
    if meta is None:
        raise CheckpointError(f"{path} has no metadata record")
    state = None
    if meta["state"] is not None:
        saved = meta["state"]
        optim = OptimState(
            **saved["optim"], m=tables[RecordTags.MOMENT1], v=tables[RecordTags.MOMENT2]
        )
        best = saved["best_bound"]
        state = TrainingState(
            optim=optim,
            epoch=saved["epoch"],
            best_bound=-math.inf if best is None else best,
            best_epoch=saved["best_epoch"],
            best_params=tables[RecordTags.BEST],
            stale=saved["stale"],
        )
    return Checkpoint(
        run=RunConfig.model_validate(meta["run"]),
        params=tables[RecordTags.PARAM],
        epoch=meta["epoch"],
        state=state,
        stats=[NormStats.model_validate(stats) for stats in meta["stats"]],
        version=version,
        best_bound=meta["best_bound"],
    )


def load_params(model: SequenceModel, params: Mapping[str, Tensor]) -> None:
    """Assigns checkpoint parameters to a model.

    Raises:
        CheckpointError: Naming the first model parameter the table lacks, the first name the
            model doesn't have, or a shape mismatch.
    """
    for name in model.params:
        if name not in params:
            raise CheckpointError(f"Checkpoint is missing parameter {name}")
    for name in params:
        if name not in model.params:
            raise CheckpointError(f"Checkpoint has unknown parameter {name}")
    for name, value in params.items():
        if value.shape != model.params[name].shape:
            raise CheckpointError(
                f"Parameter {name} has shape {value.shape}, the model expects {model.params[name].shape}"
            )
        model.params.assign(name, value)


def restore_model(checkpoint: Checkpoint, logger: Any | None = None) -> SequenceModel:
    """Builds the model of the checkpoint's run config and loads its parameters."""
    model = build_model(checkpoint.run.model, checkpoint.run.seed, logger)
    load_params(model, checkpoint.params)
    return model
