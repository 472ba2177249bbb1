"""This module contains the Node class, a value participating in a reverse-mode computation graph,
and the helpers used to create graph leaves."""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

Tensor = NDArray[np.float64]
"""Dense row-major float64 array. Tensors held by nodes are read-only."""


class ShapeError(ValueError):
    """Raised when operand shapes are not compatible with an op's shape rule."""


def as_tensor(data: ArrayLike) -> Tensor:
    """Converts the data to a read-only float64 tensor.

    Arguments:
        data (ArrayLike): Scalar, nested list or array.

    Returns:
        Tensor: A float64 array which can't be modified in place.
    """
    array = np.array(data, dtype=np.float64)
    array.flags.writeable = False
    return array


# pylint: disable=too-few-public-methods
class Node:
    """A value in the computation graph together with the op which produced it.

    Arguments:
        value (Tensor): The forward value.
        op (str): The op tag, "leaf" or "constant" for graph inputs.
        parents (Sequence[Node]): The operands of the op.
        attrs (dict[str, Any] | None): Static attributes of the op (axis, bounds, indices...).
        requires_grad (bool | None): Whether gradients flow into this node. When None it is
            inherited from the parents.

    Attributes and Properties:
        value (Tensor): The forward value.
        op (str): The op tag.
        parents (tuple[Node, ...]): The operands.
        grad (Tensor | None): The gradient set by the last backward pass.
        name (str | None): Optional name, used for parameters.
        shape (tuple[int, ...]): The shape of the value.
    """

    __slots__ = ("value", "op", "parents", "attrs", "requires_grad", "grad", "name")

    def __init__(
        self,
        value: Tensor,
        op: str,
        parents: Sequence[Node] = (),
        attrs: dict[str, Any] | None = None,
        requires_grad: bool | None = None,
        name: str | None = None,
    ):  # pylint: disable=R0913, R0917
        self.value = value
        self.op = op
        self.parents = tuple(parents)
        self.attrs = attrs or {}
        if requires_grad is None:
            requires_grad = any(p.requires_grad for p in self.parents)
        self.requires_grad = requires_grad
        self.grad: Tensor | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        """The shape of the value.

        Returns:
            tuple[int, ...]: The shape of the value."""
        return self.value.shape

    @property
    def ndim(self) -> int:
        """The number of dimensions of the value.

        Returns:
            int: The number of dimensions."""
        return self.value.ndim

    def item(self) -> float:
        """Returns the value of a single-element node as a Python float.

        Raises:
            ShapeError: If the node holds more than one element.

        Returns:
            float: The scalar value."""
        if self.value.size != 1:
            raise ShapeError(f"item() requires a single element, got shape {self.shape}")
        return float(self.value.reshape(()))

    def __repr__(self) -> str:
        label = self.name or self.op
        return f"Node({label}, shape={self.shape})"

    def __add__(self, other: Any) -> Node:
        if _is_scalar(other):
            return ops.add_scalar(self, float(other))
        return ops.add(self, as_node(other))

    def __radd__(self, other: Any) -> Node:
        if _is_scalar(other):
            return ops.add_scalar(self, float(other))
        return ops.add(as_node(other), self)

    def __sub__(self, other: Any) -> Node:
        if _is_scalar(other):
            return ops.add_scalar(self, -float(other))
        return ops.sub(self, as_node(other))

    def __rsub__(self, other: Any) -> Node:
        if _is_scalar(other):
            return ops.add_scalar(ops.neg(self), float(other))
        return ops.sub(as_node(other), self)

    def __mul__(self, other: Any) -> Node:
        if _is_scalar(other):
            return ops.scale(self, float(other))
        return ops.hadamard(self, as_node(other))

    def __rmul__(self, other: Any) -> Node:
        if _is_scalar(other):
            return ops.scale(self, float(other))
        return ops.hadamard(as_node(other), self)

    def __neg__(self) -> Node:
        return ops.neg(self)

    def __matmul__(self, other: Any) -> Node:
        return ops.matmul(self, as_node(other))


def constant(data: ArrayLike, name: str | None = None) -> Node:
    """Creates a graph input which never receives gradients.

    Arguments:
        data (ArrayLike): The value.
        name (str | None): Optional name.

    Returns:
        Node: The constant node.
    """
    return Node(as_tensor(data), "constant", requires_grad=False, name=name)


def leaf(data: ArrayLike, name: str | None = None) -> Node:
    """Creates a trainable graph input which receives gradients in backward().

    Arguments:
        data (ArrayLike): The value.
        name (str | None): Optional name, parameters use their store name.

    Returns:
        Node: The leaf node.
    """
    return Node(as_tensor(data), "leaf", requires_grad=True, name=name)


def as_node(data: Node | ArrayLike) -> Node:
    """Returns the argument if it already is a node, otherwise wraps it as a constant.

    Arguments:
        data (Node | ArrayLike): A node or array-like value.

    Returns:
        Node: The node.
    """
    if isinstance(data, Node):
        return data
    return constant(data)


def _is_scalar(value: Any) -> bool:
    return isinstance(value, (int, float, np.floating, np.integer)) and not isinstance(value, bool)


# pylint: disable=wrong-import-position, cyclic-import
from pyvhrnn.tensor import ops  # noqa: E402
