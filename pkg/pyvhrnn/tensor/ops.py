"""This module contains the op registry of the computation graph: for every op kind a shape rule,
the forward computation and the vector-Jacobian product used by backward()."""

from __future__ import annotations

from typing import Any, Callable, Sequence

import numpy as np
from scipy import special

from pyvhrnn.tensor.node import Node, ShapeError, Tensor


# pylint: disable=too-few-public-methods
class OpKinds:
    """Stores the tags of all supported ops."""

    MATMUL = "matmul"
    ADD = "add"
    SUB = "sub"
    HADAMARD = "hadamard"
    NEG = "neg"
    SCALE = "scale"
    ADD_SCALAR = "add_scalar"
    CONCAT = "concat"
    SLICE = "slice"
    TAKE = "take"
    RESHAPE = "reshape"
    TRANSPOSE = "transpose"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    SOFTPLUS = "softplus"
    EXP = "exp"
    LOG = "log"
    SQUARE = "square"
    CLIP = "clip"
    REDUCE_SUM = "reduce_sum"
    REDUCE_LOGSUMEXP = "reduce_logsumexp"
    LOG_SOFTMAX = "log_softmax"
    BROADCAST = "broadcast"


Vjp = Callable[[Tensor, Tensor, Sequence[Tensor], dict[str, Any], Sequence[bool]], list]


class OpRule:
    """Shape rule, forward and vector-Jacobian product of a single op kind.

    Arguments:
        arity (int | None): The number of operands, None for variadic ops.
        forward (Callable[..., Tensor]): Computes the value from operand values and attributes.
        vjp (Vjp): Maps the output gradient to one gradient (or None) per operand.
        check (Callable[..., None] | None): Raises ShapeError when operands are incompatible.
    """

    def __init__(
        self,
        arity: int | None,
        forward: Callable[..., Tensor],
        vjp: Vjp,
        check: Callable[..., None] | None = None,
    ):
        self.arity = arity
        self.forward = forward
        self.vjp = vjp
        self.check = check


_RULES: dict[str, OpRule] = {}


def register(kind: str, rule: OpRule) -> None:
    """Registers the rule of an op kind.

    Arguments:
        kind (str): The op tag.
        rule (OpRule): The rule.
    """
    _RULES[kind] = rule


def rule_for(kind: str) -> OpRule:
    """Returns the rule of an op kind.

    Arguments:
        kind (str): The op tag.

    Raises:
        ValueError: If the op kind is unknown.

    Returns:
        OpRule: The registered rule.
    """
    rule = _RULES.get(kind)
    if rule is None:
        raise ValueError(f"Unknown op kind: {kind}")
    return rule


def apply(op_kind: str, operands: Sequence[Node], **attrs: Any) -> Node:
    """Applies an op to the operands and records it in the graph.

    Arguments:
        op_kind (str): One of the OpKinds tags.
        operands (Sequence[Node]): The operand nodes.
        **attrs (Any): Static attributes of the op (axis, bounds, indices, shape...).

    Raises:
        ValueError: If the op kind is unknown or the operand count is wrong.
        ShapeError: If the operand shapes are incompatible.

    Returns:
        Node: The node holding the exact forward result.
    """
    rule = rule_for(op_kind)
    if rule.arity is not None and len(operands) != rule.arity:
        raise ValueError(f"{op_kind} takes {rule.arity} operands, got {len(operands)}")
    values = [node.value for node in operands]
    if rule.check is not None:
        rule.check(*values, **attrs)
    out = rule.forward(*values, **attrs)
    out = np.asarray(out, dtype=np.float64)
    out.flags.writeable = False
    return Node(out, op_kind, operands, attrs)


# region shape rules


def _broadcast_shape(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...] | None:
    if a == b:
        return a
    if b == ():
        return a
    if a == ():
        return b
    if len(b) == 1 and len(a) >= 1 and a[-1] == b[0]:
        return a
    if len(a) == 1 and len(b) >= 1 and b[-1] == a[0]:
        return b
    return None


def _check_binary(a: Tensor, b: Tensor, **_: Any) -> None:
    if _broadcast_shape(a.shape, b.shape) is None:
        raise ShapeError(
            f"Incompatible shapes {a.shape} and {b.shape}: only equal shapes, scalars and "
            "row-vector broadcasting are supported"
        )


def _unbroadcast(grad: Tensor, shape: tuple[int, ...]) -> Tensor:
    if grad.shape == shape:
        return grad
    if shape == ():
        return np.asarray(grad.sum())
    return grad.reshape(-1, shape[0]).sum(axis=0)


def _effective_b(b: Tensor, transpose_b: bool) -> Tensor:
    return b.T if transpose_b and b.ndim == 2 else b


def _check_matmul(a: Tensor, b: Tensor, transpose_b: bool = False) -> None:
    if a.ndim not in (1, 2) or b.ndim not in (1, 2) or (a.ndim == 1 and b.ndim == 1):
        raise ShapeError(f"matmul expects a matrix operand, got shapes {a.shape} and {b.shape}")
    eff = _effective_b(b, transpose_b)
    if a.shape[-1] != eff.shape[0]:
        raise ShapeError(
            f"matmul inner dimensions differ: {a.shape} and {b.shape} (transpose_b={transpose_b})"
        )


def _check_concat(*values: Tensor, axis: int = -1) -> None:
    if not values:
        raise ShapeError("concat needs at least one operand")
    first = values[0]
    ax = axis % first.ndim if first.ndim else 0
    for value in values[1:]:
        same_rank = value.ndim == first.ndim
        rest = [d for i, d in enumerate(value.shape) if i != ax]
        first_rest = [d for i, d in enumerate(first.shape) if i != ax]
        if not same_rank or rest != first_rest:
            raise ShapeError(f"concat shapes {first.shape} and {value.shape} differ off axis {axis}")


def _check_slice(a: Tensor, start: int, stop: int, axis: int = -1) -> None:
    if a.ndim == 0 or not 0 <= start < stop <= a.shape[axis]:
        raise ShapeError(f"slice [{start}:{stop}] on axis {axis} is out of range for {a.shape}")


def _check_reshape(a: Tensor, shape: tuple[int, ...]) -> None:
    if int(np.prod(shape)) != a.size:
        raise ShapeError(f"Cannot reshape {a.shape} to {shape}")


def _check_transpose(a: Tensor) -> None:
    if a.ndim != 2:
        raise ShapeError(f"transpose expects a matrix, got shape {a.shape}")


def _check_take(a: Tensor, indices: Any) -> None:
    idx = np.asarray(indices)
    if a.ndim == 0 or (idx.size and (idx.min() < 0 or idx.max() >= a.shape[0])):
        raise ShapeError(f"take indices out of range for shape {a.shape}")


def _check_broadcast(a: Tensor, shape: tuple[int, ...]) -> None:
    try:
        np.broadcast_shapes(a.shape, tuple(shape))
    except ValueError as e:
        raise ShapeError(f"Cannot broadcast {a.shape} to {tuple(shape)}") from e


def _check_clip(a: Tensor, low: float, high: float) -> None:  # pylint: disable=unused-argument
    if low > high:
        raise ValueError(f"clip bounds are inverted: [{low}, {high}]")


# endregion
# region forward and vjp


def _matmul_forward(a: Tensor, b: Tensor, transpose_b: bool = False) -> Tensor:
    return a @ _effective_b(b, transpose_b)


def _matmul_vjp(g, out, values, attrs, needs):  # pylint: disable=unused-argument
    a, b = values
    transpose_b = attrs.get("transpose_b", False)
    eff = _effective_b(b, transpose_b)
    ga = gb = None
    if needs[0]:
        if a.ndim == 2 and eff.ndim == 2:
            ga = g @ eff.T
        elif a.ndim == 2:
            ga = np.outer(g, eff)
        else:
            ga = eff @ g
    if needs[1]:
        if a.ndim == 2:
            geff = a.T @ g
        else:
            geff = np.outer(a, g)
        gb = geff.T if transpose_b and b.ndim == 2 else geff
    return [ga, gb]


def _add_vjp(g, out, values, attrs, needs):  # pylint: disable=unused-argument
    return [
        _unbroadcast(g, values[0].shape) if needs[0] else None,
        _unbroadcast(g, values[1].shape) if needs[1] else None,
    ]


def _sub_vjp(g, out, values, attrs, needs):  # pylint: disable=unused-argument
    return [
        _unbroadcast(g, values[0].shape) if needs[0] else None,
        _unbroadcast(-g, values[1].shape) if needs[1] else None,
    ]


def _hadamard_vjp(g, out, values, attrs, needs):  # pylint: disable=unused-argument
    a, b = values
    return [
        _unbroadcast(g * b, a.shape) if needs[0] else None,
        _unbroadcast(g * a, b.shape) if needs[1] else None,
    ]


def _concat_forward(*values: Tensor, axis: int = -1) -> Tensor:
    return np.concatenate(values, axis=axis)


def _concat_vjp(g, out, values, attrs, needs):  # pylint: disable=unused-argument
    axis = attrs.get("axis", -1)
    bounds = np.cumsum([v.shape[axis] for v in values])[:-1]
    parts = np.split(g, bounds, axis=axis)
    return [part if need else None for part, need in zip(parts, needs)]


def _slice_index(ndim: int, start: int, stop: int, axis: int) -> tuple:
    index: list[Any] = [slice(None)] * ndim
    index[axis] = slice(start, stop)
    return tuple(index)


def _slice_forward(a: Tensor, start: int, stop: int, axis: int = -1) -> Tensor:
    return a[_slice_index(a.ndim, start, stop, axis)]


def _slice_vjp(g, out, values, attrs, needs):  # pylint: disable=unused-argument
    (a,) = values
    grad = np.zeros_like(a)
    grad[_slice_index(a.ndim, attrs["start"], attrs["stop"], attrs.get("axis", -1))] = g
    return [grad]


def _take_forward(a: Tensor, indices: Any) -> Tensor:
    return np.take(a, np.asarray(indices, dtype=np.int64), axis=0)


def _take_vjp(g, out, values, attrs, needs):  # pylint: disable=unused-argument
    (a,) = values
    grad = np.zeros_like(a)
    np.add.at(grad, np.asarray(attrs["indices"], dtype=np.int64), g)
    return [grad]


def _logsumexp_vjp(g, out, values, attrs, needs):  # pylint: disable=unused-argument
    (a,) = values
    axis = attrs.get("axis")
    if not attrs.get("keepdims", False) and axis is not None:
        g = np.expand_dims(g, axis)
        out = np.expand_dims(out, axis)
    return [g * np.exp(a - out)]


def _reduce_sum_vjp(g, out, values, attrs, needs):  # pylint: disable=unused-argument
    (a,) = values
    axis = attrs.get("axis")
    if not attrs.get("keepdims", False) and axis is not None:
        g = np.expand_dims(g, axis)
    return [np.broadcast_to(g, a.shape).copy()]


def _log_softmax_forward(a: Tensor, axis: int = -1) -> Tensor:
    return a - special.logsumexp(a, axis=axis, keepdims=True)


def _log_softmax_vjp(g, out, values, attrs, needs):  # pylint: disable=unused-argument
    axis = attrs.get("axis", -1)
    return [g - np.exp(out) * g.sum(axis=axis, keepdims=True)]


def _broadcast_vjp(g, out, values, attrs, needs):  # pylint: disable=unused-argument
    (a,) = values
    extra = g.ndim - a.ndim
    grad = g.sum(axis=tuple(range(extra))) if extra else g
    axes = tuple(i for i, d in enumerate(a.shape) if d == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return [grad.reshape(a.shape)]


def _softplus_forward(a: Tensor) -> Tensor:
    return np.maximum(a, 0.0) + np.log1p(np.exp(-np.abs(a)))


def _clip_vjp(g, out, values, attrs, needs):  # pylint: disable=unused-argument
    (a,) = values
    inside = (a >= attrs["low"]) & (a <= attrs["high"])
    return [g * inside]


def _unary(forward: Callable[..., Tensor], derivative: Callable[[Tensor, Tensor], Tensor]) -> OpRule:
    def vjp(g, out, values, attrs, needs):  # pylint: disable=unused-argument
        return [g * derivative(values[0], out)]

    return OpRule(1, forward, vjp)


register(OpKinds.MATMUL, OpRule(2, _matmul_forward, _matmul_vjp, _check_matmul))
register(OpKinds.ADD, OpRule(2, lambda a, b: a + b, _add_vjp, _check_binary))
register(OpKinds.SUB, OpRule(2, lambda a, b: a - b, _sub_vjp, _check_binary))
register(OpKinds.HADAMARD, OpRule(2, lambda a, b: a * b, _hadamard_vjp, _check_binary))
register(OpKinds.NEG, _unary(lambda a: -a, lambda a, out: -np.ones_like(a)))
register(
    OpKinds.SCALE,
    OpRule(
        1,
        lambda a, factor: a * factor,
        lambda g, out, values, attrs, needs: [g * attrs["factor"]],
    ),
)
register(
    OpKinds.ADD_SCALAR,
    OpRule(1, lambda a, value: a + value, lambda g, out, values, attrs, needs: [g]),
)
register(OpKinds.CONCAT, OpRule(None, _concat_forward, _concat_vjp, _check_concat))
register(OpKinds.SLICE, OpRule(1, _slice_forward, _slice_vjp, _check_slice))
register(OpKinds.TAKE, OpRule(1, _take_forward, _take_vjp, _check_take))
register(
    OpKinds.RESHAPE,
    OpRule(
        1,
        lambda a, shape: a.reshape(shape),
        lambda g, out, values, attrs, needs: [g.reshape(values[0].shape)],
        _check_reshape,
    ),
)
register(
    OpKinds.TRANSPOSE,
    OpRule(1, lambda a: a.T, lambda g, out, values, attrs, needs: [g.T], _check_transpose),
)
register(OpKinds.SIGMOID, _unary(special.expit, lambda a, out: out * (1.0 - out)))
register(OpKinds.TANH, _unary(np.tanh, lambda a, out: 1.0 - out * out))
register(OpKinds.SOFTPLUS, _unary(_softplus_forward, lambda a, out: special.expit(a)))
register(OpKinds.EXP, _unary(np.exp, lambda a, out: out))
register(OpKinds.LOG, _unary(np.log, lambda a, out: 1.0 / a))
register(OpKinds.SQUARE, _unary(np.square, lambda a, out: 2.0 * a))
register(
    OpKinds.CLIP,
    OpRule(1, lambda a, low, high: np.clip(a, low, high), _clip_vjp, _check_clip),
)
register(
    OpKinds.REDUCE_SUM,
    OpRule(1, lambda a, axis=None, keepdims=False: a.sum(axis=axis, keepdims=keepdims), _reduce_sum_vjp),
)
register(
    OpKinds.REDUCE_LOGSUMEXP,
    OpRule(
        1,
        lambda a, axis=None, keepdims=False: special.logsumexp(a, axis=axis, keepdims=keepdims),
        _logsumexp_vjp,
    ),
)
register(OpKinds.LOG_SOFTMAX, OpRule(1, _log_softmax_forward, _log_softmax_vjp))
register(
    OpKinds.BROADCAST,
    OpRule(
        1,
        lambda a, shape: np.broadcast_to(a, tuple(shape)).copy(),
        _broadcast_vjp,
        _check_broadcast,
    ),
)

# endregion
# region functional helpers


def matmul(a: Node, b: Node, transpose_b: bool = False) -> Node:
    """Matrix product a·b, or a·bᵀ when transpose_b is set."""
    return apply(OpKinds.MATMUL, [a, b], transpose_b=transpose_b)


def add(a: Node, b: Node) -> Node:
    """Elementwise sum with scalar or row-vector broadcasting."""
    return apply(OpKinds.ADD, [a, b])


def sub(a: Node, b: Node) -> Node:
    """Elementwise difference with scalar or row-vector broadcasting."""
    return apply(OpKinds.SUB, [a, b])


def hadamard(a: Node, b: Node) -> Node:
    """Elementwise product with scalar or row-vector broadcasting."""
    return apply(OpKinds.HADAMARD, [a, b])


def neg(a: Node) -> Node:
    return apply(OpKinds.NEG, [a])


def scale(a: Node, factor: float) -> Node:
    return apply(OpKinds.SCALE, [a], factor=factor)


def add_scalar(a: Node, value: float) -> Node:
    return apply(OpKinds.ADD_SCALAR, [a], value=value)


def concat(nodes: Sequence[Node], axis: int = -1) -> Node:
    return apply(OpKinds.CONCAT, list(nodes), axis=axis)


def slice_(a: Node, start: int, stop: int, axis: int = -1) -> Node:
    return apply(OpKinds.SLICE, [a], start=start, stop=stop, axis=axis)


def take(a: Node, indices: Any) -> Node:
    """Gathers rows of a. Gradients flow into the gathered values, never into the indices."""
    return apply(OpKinds.TAKE, [a], indices=np.asarray(indices, dtype=np.int64))


def reshape(a: Node, shape: tuple[int, ...]) -> Node:
    return apply(OpKinds.RESHAPE, [a], shape=tuple(shape))


def transpose(a: Node) -> Node:
    return apply(OpKinds.TRANSPOSE, [a])


def sigmoid(a: Node) -> Node:
    return apply(OpKinds.SIGMOID, [a])


def tanh(a: Node) -> Node:
    return apply(OpKinds.TANH, [a])


def softplus(a: Node) -> Node:
    """Softplus computed as max(x, 0) + log1p(exp(-|x|))."""
    return apply(OpKinds.SOFTPLUS, [a])


def exp(a: Node) -> Node:
    return apply(OpKinds.EXP, [a])


def log(a: Node) -> Node:
    return apply(OpKinds.LOG, [a])


def square(a: Node) -> Node:
    return apply(OpKinds.SQUARE, [a])


def clip(a: Node, low: float, high: float) -> Node:
    """Clamps a to [low, high]; clamped entries get zero gradient."""
    return apply(OpKinds.CLIP, [a], low=low, high=high)


def reduce_sum(a: Node, axis: int | None = None, keepdims: bool = False) -> Node:
    return apply(OpKinds.REDUCE_SUM, [a], axis=axis, keepdims=keepdims)


def reduce_logsumexp(a: Node, axis: int | None = None, keepdims: bool = False) -> Node:
    return apply(OpKinds.REDUCE_LOGSUMEXP, [a], axis=axis, keepdims=keepdims)


def log_softmax(a: Node, axis: int = -1) -> Node:
    return apply(OpKinds.LOG_SOFTMAX, [a], axis=axis)


def broadcast(a: Node, shape: tuple[int, ...]) -> Node:
    """Explicit numpy-style broadcast; implicit broadcasting is limited to scalars and rows."""
    return apply(OpKinds.BROADCAST, [a], shape=tuple(shape))


def stack_last(nodes: Sequence[Node]) -> Node:
    """Stacks equally shaped nodes along a new trailing axis."""
    expanded = [reshape(node, node.shape + (1,)) for node in nodes]
    return concat(expanded, axis=-1)


# endregion
