"""This module contains the LSTM update and its hyper-modulated counterpart."""

from __future__ import annotations

from pyvhrnn.cells.cell_base import CellState, GateScales, LstmWeights, check_state, projections
from pyvhrnn.tensor import Node, ops


def _lstm(y: Node, s: CellState, w: LstmWeights, m: GateScales | None) -> CellState:
    check_state(y, s, w, with_cell=True)
    x_part, h_part = projections(y, s, w, m)
    pre = x_part + h_part
    hidden = w.hidden_size
    i = ops.sigmoid(ops.slice_(pre, 0, hidden))
    f = ops.sigmoid(ops.slice_(pre, hidden, 2 * hidden))
    g = ops.tanh(ops.slice_(pre, 2 * hidden, 3 * hidden))
    o = ops.sigmoid(ops.slice_(pre, 3 * hidden, 4 * hidden))
    c = f * s.c + i * g
    return CellState(o * ops.tanh(c), c)


def lstm_step(y: Node, s: CellState, w: LstmWeights) -> CellState:
    """Standard LSTM update.

    i = σ(W_i y + U_i h + b_i), f, o likewise, g = tanh(W_g y + U_g h + b_g),
    c' = f ∘ c + i ∘ g, h' = o ∘ tanh(c').

    Arguments:
        y (Node): The input, a vector or one row per sequence/particle.
        s (CellState): The previous state.
        w (LstmWeights): The weights.

    Raises:
        ShapeError: If the shapes are inconsistent.

    Returns:
        CellState: The next state.
    """
    return _lstm(y, s, w, None)


def hyper_lstm_step(y: Node, s: CellState, w: LstmWeights, m: GateScales) -> CellState:
    """LSTM update with Hadamard-scaled gate paths.

    Every gate pre-activation is d_x ∘ (W y) + d_h ∘ (U h) + b + b_rec + hyper bias. With unit
    scales and zero hyper biases the result is bitwise equal to lstm_step.

    Arguments:
        y (Node): The input.
        s (CellState): The previous state.
        w (LstmWeights): The base weights.
        m (GateScales): The modulation generated for this step.

    Raises:
        ShapeError: If the shapes are inconsistent.

    Returns:
        CellState: The next state.

    Examples:
        ```python
        scales = GateScales.identity(4 * hidden)
        hyper_lstm_step(y, state, weights, scales)  # same as lstm_step(y, state, weights)
        ```
    """
    return _lstm(y, s, w, m)
