# pylint: disable=missing-module-docstring
# isort: off
# node must be imported before ops, ops depends on it
from pyvhrnn.tensor.node import Node, ShapeError, Tensor, as_node, as_tensor, constant, leaf
from pyvhrnn.tensor import ops
from pyvhrnn.tensor.autograd import Gradients, backward, finite_difference_check
from pyvhrnn.tensor.ops import OpKinds, apply
