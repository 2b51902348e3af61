"""
Differentiable operations on Tensors.

Each op validates shapes, computes its result with numpy and, when a tape is
active, records a backward closure mapping the upstream gradient to one
gradient per input (None for inputs that need none). Leading batch axes are
supported where the model needs them; there is no general broadcasting.
"""

import numpy as np

from .autodiff import record
from .errors import DimensionError
from .tensor import Tensor


def _check_same_shape(name, a, b):
    if a.shape != b.shape:
        raise DimensionError(
            f"{name}: shapes {a.shape} and {b.shape} must be identical"
        )


def matmul(a, b):
    """
    Matrix product over the last axis of ``a`` and the first axis of ``b``.

    Args:
        a (Tensor): Shape (..., m, k) or (k,)
        b (Tensor): Shape (k, n)

    Returns:
        Tensor: Shape (..., m, n)
    """
    if b.ndim != 2 or a.ndim < 1 or a.shape[-1] != b.shape[0]:
        raise DimensionError(
            f"matmul: cannot multiply shapes {a.shape} and {b.shape}"
        )
    k, n = b.shape
    out = Tensor(a.data @ b.data)

    def backward(g):
        grad_a = g @ b.data.T
        grad_b = a.data.reshape(-1, k).T @ g.reshape(-1, n)
        return grad_a, grad_b

    return record(out, (a, b), backward)


def hadamard(a, b):
    """Elementwise product of equally shaped tensors."""
    _check_same_shape("hadamard", a, b)
    out = Tensor(a.data * b.data)

    def backward(g):
        return g * b.data, g * a.data

    return record(out, (a, b), backward)


def add(a, b):
    """
    Sum of equally shaped tensors, or ``a`` plus a feature bias ``b``.

    Args:
        a (Tensor): Any shape
        b (Tensor): Same shape as ``a``, or a vector matching a's last axis
    """
    if a.shape == b.shape:
        out = Tensor(a.data + b.data)

        def backward(g):
            return g, g

    elif b.ndim == 1 and a.ndim >= 1 and a.shape[-1] == b.shape[0]:
        width = b.shape[0]
        out = Tensor(a.data + b.data)

        def backward(g):
            return g, g.reshape(-1, width).sum(axis=0)

    else:
        raise DimensionError(f"add: cannot add shapes {a.shape} and {b.shape}")
    return record(out, (a, b), backward)


def sub(a, b):
    _check_same_shape("sub", a, b)
    out = Tensor(a.data - b.data)

    def backward(g):
        return g, -g

    return record(out, (a, b), backward)


def scale(a, factor):
    factor = float(factor)
    out = Tensor(a.data * factor)

    def backward(g):
        return (g * factor,)

    return record(out, (a,), backward)


def sum_all(a):
    """Sum of all entries as a rank-0 tensor."""
    out = Tensor(np.sum(a.data))

    def backward(g):
        return (np.full(a.shape, float(g)),)

    return record(out, (a,), backward)


def flip_time(x):
    """
    Reverse the time axis (second to last); features keep their order.

    Row t of the result is row T-t+1 of the input (1-indexed).
    """
    if x.ndim < 2:
        raise DimensionError(f"flip_time needs a (..., T, d) tensor, got {x.shape}")
    out = Tensor(np.flip(x.data, axis=-2))

    def backward(g):
        return (np.flip(g, axis=-2),)

    return record(out, (x,), backward)


def _sigmoid(values):
    return 0.5 * (1.0 + np.tanh(0.5 * values))


def silu(x):
    """Elementwise x * sigmoid(x)."""
    sig = _sigmoid(x.data)
    out = Tensor(x.data * sig)

    def backward(g):
        return (g * (sig + x.data * sig * (1.0 - sig)),)

    return record(out, (x,), backward)


def layernorm_feature(x, eps):
    """
    Standardize every position over the feature (last) axis.

    Uses the population variance (divisor d) and no affine parameters:
    y = (x - mean) / sqrt(var + eps).
    """
    if eps < 0:
        raise ValueError(f"layernorm epsilon must be non-negative, got {eps}")
    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    variance = np.mean(centered**2, axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(variance + eps)
    normalized = centered * inv_std
    out = Tensor(normalized)

    def backward(g):
        mean_g = g.mean(axis=-1, keepdims=True)
        mean_gy = np.mean(g * normalized, axis=-1, keepdims=True)
        return (inv_std * (g - mean_g - normalized * mean_gy),)

    return record(out, (x,), backward)


def causal_conv1d(x, weight, bias):
    """
    Dense causal convolution over time.

    The input is left-padded with k-1 zero rows and tap j multiplies the row
    k-1-j steps in the past (cross-correlation layout), so
    out[t] = sum_j x[t-(k-1)+j] @ W[j] + b and nothing after t is read.

    Args:
        x (Tensor): Shape (..., T, c_in)
        weight (Tensor): Shape (k, c_in, c_out)
        bias (Tensor): Shape (c_out,)

    Returns:
        Tensor: Shape (..., T, c_out)
    """
    if weight.ndim != 3 or x.ndim < 2 or weight.shape[1] != x.shape[-1]:
        raise DimensionError(
            f"causal_conv1d: input {x.shape} does not fit kernel {weight.shape}"
        )
    k, c_in, c_out = weight.shape
    if bias.shape != (c_out,):
        raise DimensionError(
            f"causal_conv1d: bias {bias.shape} does not match {c_out} channels"
        )
    steps = x.shape[-2]
    pad = [(0, 0)] * (x.ndim - 2) + [(k - 1, 0), (0, 0)]
    padded = np.pad(x.data, pad)

    result = np.zeros(x.shape[:-1] + (c_out,))
    for j in range(k):
        result += padded[..., j : j + steps, :] @ weight.data[j]
    out = Tensor(result + bias.data)

    def backward(g):
        grad_padded = np.zeros(padded.shape)
        grad_weight = np.zeros(weight.shape)
        flat_g = g.reshape(-1, c_out)
        for j in range(k):
            window = padded[..., j : j + steps, :]
            grad_padded[..., j : j + steps, :] += g @ weight.data[j].T
            grad_weight[j] = window.reshape(-1, c_in).T @ flat_g
        return grad_padded[..., k - 1 :, :], grad_weight, flat_g.sum(axis=0)

    return record(out, (x, weight, bias), backward)


def slice_features(x, start, stop):
    """Contiguous slice [start, stop) of the feature axis."""
    width = x.shape[-1]
    if not 0 <= start < stop <= width:
        raise DimensionError(
            f"slice_features: [{start}, {stop}) is outside feature width {width}"
        )
    out = Tensor(x.data[..., start:stop])

    def backward(g):
        grad = np.zeros(x.shape)
        grad[..., start:stop] = g
        return (grad,)

    return record(out, (x,), backward)


def last_step(x):
    """
    Final time step of a (..., T, c) tensor.

    Returns:
        Tensor: Shape (..., c), the row at t = T
    """
    if x.ndim < 2:
        raise DimensionError(f"last_step needs a (..., T, c) tensor, got {x.shape}")
    out = Tensor(x.data[..., -1, :])

    def backward(g):
        grad = np.zeros(x.shape)
        grad[..., -1, :] = g
        return (grad,)

    return record(out, (x,), backward)
