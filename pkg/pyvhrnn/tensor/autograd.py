"""This module contains the reverse-mode backward pass and the central-difference gradient check."""

from __future__ import annotations

from typing import Callable, Iterator, Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike

from pyvhrnn.tensor.node import Node, ShapeError, Tensor, leaf
from pyvhrnn.tensor.ops import rule_for


class Gradients(Mapping[int, Tensor]):
    """Gradients of a scalar root, keyed by node id.

    Indexing with a Node returns its gradient, or zeros of its shape when the node is not
    reachable from the root.
    """

    def __init__(self, grads: dict[int, Tensor]):
        self._grads = grads

    def __getitem__(self, key: int | Node) -> Tensor:
        if isinstance(key, Node):
            grad = self._grads.get(id(key))
            return np.zeros(key.shape) if grad is None else grad
        return self._grads[key]

    def __iter__(self) -> Iterator[int]:
        return iter(self._grads)

    def __len__(self) -> int:
        return len(self._grads)


def _topological_order(root: Node) -> list[Node]:
    order: list[Node] = []
    visited: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(root: Node) -> Gradients:
    """Runs the reverse pass from a scalar root.

    Every node which requires gradients and is reachable from the root receives
    ∂root/∂node, contributions of all paths being accumulated. The gradient is also stored
    on each node's `grad` attribute.

    Arguments:
        root (Node): The scalar-valued output.

    Raises:
        ShapeError: If the root is not scalar-valued.

    Returns:
        Gradients: Gradients keyed by node id.

    Examples:
        ```python
        from pyvhrnn.tensor import backward, leaf, ops

        x = leaf([1.0, 2.0])
        grads = backward(ops.reduce_sum(x * x))
        grads[x]  # array([2., 4.])
        ```
    """
    if root.value.size != 1:
        raise ShapeError(f"backward() needs a scalar root, got shape {root.shape}")
    grads: dict[int, Tensor] = {id(root): np.ones(root.shape)}
    if not root.requires_grad:
        return Gradients({})
    for node in reversed(_topological_order(root)):
        grad = grads.get(id(node))
        if grad is None:
            continue
        node.grad = grad
        if not node.parents:
            continue
        needs = [parent.requires_grad for parent in node.parents]
        rule = rule_for(node.op)
        parent_grads = rule.vjp(grad, node.value, [p.value for p in node.parents], node.attrs, needs)
        for parent, parent_grad, need in zip(node.parents, parent_grads, needs):
            if not need or parent_grad is None:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + parent_grad
            else:
                grads[key] = np.asarray(parent_grad, dtype=np.float64)
    return Gradients(grads)


def finite_difference_check(
    build: Callable[[Sequence[Node]], Node],
    values: Sequence[ArrayLike],
    eps: float = 1e-5,
) -> float:
    """Compares backward() against central differences.

    The graph is rebuilt from fresh leaves for every perturbed evaluation. For every leaf the
    relative error is ‖analytic − numeric‖∞ / (‖numeric‖∞ + 1e-8); the maximum over leaves is
    returned.

    Arguments:
        build (Callable[[Sequence[Node]], Node]): Builds the scalar output from the leaves.
        values (Sequence[ArrayLike]): The leaf values.
        eps (float): The perturbation size.

    Raises:
        ValueError: If eps is not positive.

    Returns:
        float: The maximum relative error over leaves.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    base = [np.array(v, dtype=np.float64) for v in values]
    leaves = [leaf(v) for v in base]
    grads = backward(build(leaves))
    worst = 0.0
    for index, value in enumerate(base):
        numeric = np.zeros_like(value)
        for position in np.ndindex(value.shape):
            plus = [v.copy() for v in base]
            minus = [v.copy() for v in base]
            plus[index][position] += eps
            minus[index][position] -= eps
            f_plus = build([leaf(v) for v in plus]).item()
            f_minus = build([leaf(v) for v in minus]).item()
            numeric[position] = (f_plus - f_minus) / (2.0 * eps)
        analytic = grads[leaves[index]]
        error = np.max(np.abs(analytic - numeric), initial=0.0) / (
            np.max(np.abs(numeric), initial=0.0) + 1e-8
        )
        worst = max(worst, float(error))
    return worst
