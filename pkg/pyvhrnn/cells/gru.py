"""This module contains the GRU update and its hyper-modulated counterpart."""

from __future__ import annotations

from pyvhrnn.cells.cell_base import CellState, GateScales, GruWeights, check_state, projections
from pyvhrnn.tensor import Node, ops


def _gru(y: Node, s: CellState, w: GruWeights, m: GateScales | None) -> CellState:
    check_state(y, s, w, with_cell=False)
    x_part, h_part = projections(y, s, w, m)
    hidden = w.hidden_size
    r = ops.sigmoid(ops.slice_(x_part, 0, hidden) + ops.slice_(h_part, 0, hidden))
    u = ops.sigmoid(ops.slice_(x_part, hidden, 2 * hidden) + ops.slice_(h_part, hidden, 2 * hidden))
    n = ops.tanh(
        ops.slice_(x_part, 2 * hidden, 3 * hidden) + r * ops.slice_(h_part, 2 * hidden, 3 * hidden)
    )
    h = (1.0 - u) * n + u * s.h
    return CellState(h)


def gru_step(y: Node, s: CellState, w: GruWeights) -> CellState:
    """Standard GRU update.

    r = σ(W_r y + b_r + U_r h + b'_r), u likewise, n = tanh(W_n y + b_n + r ∘ (U_n h + b'_n)),
    h' = (1 − u) ∘ n + u ∘ h.

    Arguments:
        y (Node): The input.
        s (CellState): The previous state, its cell vector is ignored.
        w (GruWeights): The weights.

    Raises:
        ShapeError: If the shapes are inconsistent.

    Returns:
        CellState: The next state, without a cell vector.
    """
    return _gru(y, s, w, None)


def hyper_gru_step(y: Node, s: CellState, w: GruWeights, m: GateScales) -> CellState:
    """GRU update with the input and recurrent paths of all three gates Hadamard-scaled.

    The hyper bias joins the input path, so for the candidate gate it stays outside the
    reset-gated term.

    Arguments:
        y (Node): The input.
        s (CellState): The previous state.
        w (GruWeights): The base weights.
        m (GateScales): The modulation, width 3·H.

    Raises:
        ShapeError: If the shapes are inconsistent.

    Returns:
        CellState: The next state.
    """
    return _gru(y, s, w, m)
