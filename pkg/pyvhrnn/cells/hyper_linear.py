"""This module contains the affine layer and its hyper-modulated form used by the decoder."""

from __future__ import annotations

from pyvhrnn.tensor import Node, ShapeError, ops


def linear(x: Node, W: Node, b: Node) -> Node:  # pylint: disable=invalid-name
    """Affine map W x + b, applied to a vector or to every row of x."""
    return ops.matmul(x, W, transpose_b=True) + b


def hyper_linear(x: Node, W: Node, b: Node, d: Node, delta: Node) -> Node:  # pylint: disable=invalid-name
    """Scaled affine map d ∘ (W x) + b + δ.

    Arguments:
        x (Node): The input vector or rows.
        W (Node): The weights, shape (out, in).
        b (Node): The base bias, shape (out,).
        d (Node): The scale vector(s), out entries on the last axis.
        delta (Node): The hyper bias vector(s), same shape as d.

    Raises:
        ShapeError: If d or δ don't match the output dimension.

    Returns:
        Node: The output.

    Examples:
        ```python
        hyper_linear(x, W, b, ones, zeros)  # same as linear(x, W, b)
        ```
    """
    if d.shape[-1] != W.shape[0] or delta.shape != d.shape:
        raise ShapeError(
            f"Scale {d.shape} and bias {delta.shape} must have {W.shape[0]} outputs"
        )
    return d * ops.matmul(x, W, transpose_b=True) + b + delta
