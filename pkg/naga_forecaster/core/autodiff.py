"""
Reverse-mode differentiation over a recorded tape.

Operations executed inside an active ``GradTape`` append one node per result.
Because nodes are appended in execution order, walking the tape backwards is
already a valid reverse topological order.
"""

import numpy as np

from .errors import DimensionError, MissingParameterError
from .tensor import Tensor

_ACTIVE_TAPES = []


class _Node:
    __slots__ = ("output", "inputs", "backward")

    def __init__(self, output, inputs, backward):
        self.output = output
        self.inputs = inputs
        self.backward = backward


class GradTape:
    """
    Records forward operations and the parameters gradients are wanted for.

    Usage::

        tape = GradTape()
        with tape:
            w = tape.watch("w", w)
            loss = ...
        result = grads(tape, loss)
    """

    def __init__(self):
        self._nodes = []
        self._params = {}

    def __enter__(self):
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _ACTIVE_TAPES.remove(self)
        return False

    @property
    def params(self):
        return dict(self._params)

    def __len__(self):
        return len(self._nodes)

    def watch(self, name, tensor):
        """
        Register a parameter under a name.

        Args:
            name (str): Parameter name used as key in the gradient map
            tensor (Tensor): Parameter value

        Returns:
            Tensor: The same tensor, for chaining
        """
        if not isinstance(tensor, Tensor):
            raise TypeError(f"Parameter '{name}' must be a Tensor")
        self._params[name] = tensor
        return tensor

    def watch_all(self, params):
        for name, tensor in params.items():
            self.watch(name, tensor)
        return params

    def record(self, output, inputs, backward):
        self._nodes.append(_Node(output, inputs, backward))


def record(output, inputs, backward):
    """Append a node to the innermost active tape, if any."""
    if _ACTIVE_TAPES:
        _ACTIVE_TAPES[-1].record(output, inputs, backward)
    return output


def grads(tape, loss, params=None):
    """
    Compute dL/dθ for watched parameters.

    Args:
        tape (GradTape): Tape the forward pass was recorded on
        loss (Tensor): Scalar tensor produced on the tape
        params (list, optional): Parameter names; defaults to all watched

    Returns:
        dict: Parameter name -> gradient Tensor (same shape as parameter)
    """
    if loss.shape != ():
        raise DimensionError(f"grads needs a scalar loss, got shape {loss.shape}")

    names = list(params) if params is not None else list(tape.params)
    missing = [name for name in names if name not in tape.params]
    if missing:
        raise MissingParameterError(f"Parameters not recorded on tape: {missing}")

    adjoints = {id(loss): np.ones(())}
    for node in reversed(tape._nodes):
        upstream = adjoints.pop(id(node.output), None)
        if upstream is None:
            continue
        for inp, contribution in zip(node.inputs, node.backward(upstream)):
            if contribution is None:
                continue
            key = id(inp)
            if key in adjoints:
                adjoints[key] = adjoints[key] + contribution
            else:
                adjoints[key] = contribution

    watched = tape.params
    result = {}
    for name in names:
        param = watched[name]
        grad = adjoints.get(id(param))
        result[name] = Tensor(np.zeros(param.shape) if grad is None else grad)
    return result


def finite_diff(f, x, h=1e-5):
    """
    Central-difference gradient estimate of a scalar function.

    Args:
        f (callable): Maps a Tensor shaped like ``x`` to a scalar (float/Tensor)
        x (Tensor): Evaluation point
        h (float): Step size, > 0

    Returns:
        Tensor: (f(x+h·e) - f(x-h·e)) / 2h for every coordinate e
    """
    if h <= 0:
        raise ValueError(f"Finite difference step must be positive, got {h}")

    base = x.numpy()
    flat = base.reshape(-1)
    estimate = np.zeros(flat.shape)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        upper = _scalar(f(Tensor(base)))
        flat[i] = original - h
        lower = _scalar(f(Tensor(base)))
        flat[i] = original
        estimate[i] = (upper - lower) / (2.0 * h)
    return Tensor(estimate.reshape(x.shape))


def _scalar(value):
    if isinstance(value, Tensor):
        return float(value.data)
    return float(value)
