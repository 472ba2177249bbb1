"""This module contains the weight, scale and state containers shared by the recurrent cells."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from pyvhrnn.tensor import Node, ShapeError, constant, ops


# pylint: disable=too-few-public-methods
class Gates:
    """Stores the gate order of the stacked weight blocks."""

    LSTM = ("i", "f", "g", "o")
    GRU = ("r", "u", "n")


@dataclass(frozen=True)
class CellState:
    """Recurrent state of a cell. Rows are independent (batch or particles).

    Attributes:
        h (Node): The hidden vector(s).
        c (Node | None): The cell vector(s), None for the GRU.
    """

    h: Node
    c: Node | None = None

    @property
    def size(self) -> int:
        return self.h.shape[-1]

    @classmethod
    def zeros(cls, rows: int, size: int, with_cell: bool = True) -> CellState:
        """Creates the zero cold-start state.

        Arguments:
            rows (int): The number of rows.
            size (int): The hidden size.
            with_cell (bool): Whether to allocate the LSTM cell vector.

        Returns:
            CellState: The zero state.
        """
        h = constant(np.zeros((rows, size)))
        c = constant(np.zeros((rows, size))) if with_cell else None
        return cls(h, c)

    def take(self, indices: Any) -> CellState:
        """Gathers rows, used when particles are resampled."""
        c = None if self.c is None else ops.take(self.c, indices)
        return CellState(ops.take(self.h, indices), c)


class _StackedWeights:
    """Input matrix, recurrent matrix and two bias vectors with the gates stacked along rows."""

    GATES: tuple[str, ...] = ()

    def __init__(self, W: Node, U: Node, b: Node, b_rec: Node):  # pylint: disable=invalid-name
        n_gates = len(self.GATES)
        if W.ndim != 2 or W.shape[0] % n_gates:
            raise ShapeError(f"W must have {n_gates}·H rows, got shape {W.shape}")
        hidden = W.shape[0] // n_gates
        if U.shape != (n_gates * hidden, hidden):
            raise ShapeError(f"U must have shape {(n_gates * hidden, hidden)}, got {U.shape}")
        for name, bias in (("b", b), ("b_rec", b_rec)):
            if bias.shape != (n_gates * hidden,):
                raise ShapeError(f"{name} must have shape {(n_gates * hidden,)}, got {bias.shape}")
        self.W = W  # pylint: disable=invalid-name
        self.U = U  # pylint: disable=invalid-name
        self.b = b
        self.b_rec = b_rec

    @property
    def hidden_size(self) -> int:
        return self.U.shape[1]

    @property
    def input_size(self) -> int:
        return self.W.shape[1]

    def gate(self, name: str) -> tuple[Node, Node, Node]:
        """Returns the (W, U, b) block of a single gate.

        Arguments:
            name (str): The gate name, one of GATES.

        Raises:
            ValueError: If the gate name is unknown.

        Returns:
            tuple[Node, Node, Node]: The input matrix, recurrent matrix and bias of the gate.
        """
        if name not in self.GATES:
            raise ValueError(f"Unknown gate {name}, expected one of {self.GATES}")
        k = self.GATES.index(name)
        start, stop = k * self.hidden_size, (k + 1) * self.hidden_size
        return (
            ops.slice_(self.W, start, stop, axis=0),
            ops.slice_(self.U, start, stop, axis=0),
            ops.slice_(self.b, start, stop),
        )


class LstmWeights(_StackedWeights):
    """Weights of an LSTM cell, gates stacked in the order i, f, g, o.

    Arguments:
        W (Node): Input weights, shape (4H, input size).
        U (Node): Recurrent weights, shape (4H, H).
        b (Node): Input-path bias, shape (4H,).
        b_rec (Node): Recurrent-path bias, shape (4H,).

    Raises:
        ShapeError: If the shapes are inconsistent.
    """

    GATES = Gates.LSTM


class GruWeights(_StackedWeights):
    """Weights of a GRU cell, gates stacked in the order r (reset), u (update), n (candidate).

    Arguments:
        W (Node): Input weights, shape (3H, input size).
        U (Node): Recurrent weights, shape (3H, H).
        b (Node): Input-path bias, shape (3H,).
        b_rec (Node): Recurrent-path bias, shape (3H,). The candidate block sits inside the
            reset-gated term.

    Raises:
        ShapeError: If the shapes are inconsistent.
    """

    GATES = Gates.GRU


@dataclass(frozen=True)
class GateScales:
    """Per-step modulation of a cell produced by a hyper network.

    All three blocks have the gate count times the hidden size on their last axis, stacked in the
    cell's gate order. A leading row axis makes the modulation differ per particle.

    Attributes:
        d_x (Node): Scaling of the input path, d_xi, d_xf, d_xg, d_xo for the LSTM.
        d_h (Node): Scaling of the recurrent path, d_hi, d_hf, d_hg, d_ho for the LSTM.
        bias (Node): Hyper gate biases, added to the base biases.
    """

    d_x: Node
    d_h: Node
    bias: Node

    def __post_init__(self) -> None:
        if not self.d_x.shape == self.d_h.shape == self.bias.shape:
            raise ShapeError(
                f"GateScales blocks differ: {self.d_x.shape}, {self.d_h.shape}, {self.bias.shape}"
            )

    @classmethod
    def identity(cls, width: int, rows: int | None = None) -> GateScales:
        """Unit scales and zero biases, which leave a cell unmodulated.

        Arguments:
            width (int): The gate count times the hidden size.
            rows (int | None): Optional leading row count.

        Returns:
            GateScales: The neutral modulation.
        """
        shape = (width,) if rows is None else (rows, width)
        ones = constant(np.ones(shape))
        return cls(ones, ones, constant(np.zeros(shape)))


def check_state(y: Node, s: CellState, w: _StackedWeights, with_cell: bool) -> None:
    """Validates the input and state against the weights.

    Raises:
        ShapeError: If a dimension doesn't match.
    """
    if y.shape[-1] != w.input_size:
        raise ShapeError(f"Cell input has shape {y.shape}, weights expect {w.input_size} columns")
    if s.h.shape[-1] != w.hidden_size:
        raise ShapeError(f"Hidden state has shape {s.h.shape}, weights expect {w.hidden_size}")
    if with_cell and (s.c is None or s.c.shape != s.h.shape):
        shape = None if s.c is None else s.c.shape
        raise ShapeError(f"Cell vector has shape {shape}, expected {s.h.shape}")


def projections(
    y: Node, s: CellState, w: _StackedWeights, m: GateScales | None
) -> tuple[Node, Node]:
    """Computes the stacked input-path and recurrent-path pre-activations.

    Input path: d_x ∘ (W y) + b + hyper bias. Recurrent path: d_h ∘ (U h) + b_rec.
    Without modulation the scalings and the hyper bias are skipped, which keeps a plain cell
    bitwise equal to a hyper cell with unit scales and zero hyper biases.
    """
    x_proj = ops.matmul(y, w.W, transpose_b=True)
    h_proj = ops.matmul(s.h, w.U, transpose_b=True)
    if m is not None:
        width = len(w.GATES) * w.hidden_size
        if m.d_x.shape[-1] != width:
            raise ShapeError(f"GateScales width {m.d_x.shape[-1]} doesn't match {width}")
        x_proj = m.d_x * x_proj
        h_proj = m.d_h * h_proj
    x_part = x_proj + w.b
    if m is not None:
        x_part = x_part + m.bias
    return x_part, h_proj + w.b_rec
