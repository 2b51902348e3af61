"""
Mamba2 processing stage as written for the Naga cell.

Z = H W_in + b_in is split into (z, x_bc, dt); only x_bc continues through
a causal convolution, SiLU and feature layernorm, and the first d_inner/2
channels of the result form the cell output. z and dt are produced but not
consumed, and no selective scan is applied.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .ops import (
    add,
    causal_conv1d,
    last_step,
    layernorm_feature,
    matmul,
    silu,
    slice_features,
)
from .tensor import Tensor

__all__ = [
    "Mamba2Params",
    "SplitViews",
    "project_in",
    "split3",
    "mamba2_forward",
    "last_step",
]


@dataclass(frozen=True)
class Mamba2Params:
    """Projection, convolution and normalization parameters of one block."""

    W_in: Tensor
    b_in: Tensor
    W_c: Tensor
    b_c: Tensor
    d_inner: int
    d_state: int
    h_head: int
    eps: float = 1e-5

    def __post_init__(self):
        if self.d_inner <= 0 or self.d_inner % 2:
            raise ValueError(
                f"d_inner must be a positive even number, got {self.d_inner}"
            )
        if self.eps <= 0:
            raise ValueError(f"Layernorm epsilon must be positive, got {self.eps}")
        width = self.projection_width
        if self.W_in.ndim != 2 or self.W_in.shape[1] != width:
            raise DimensionError(
                f"W_in has shape {self.W_in.shape}, expected (d_model, {width})"
            )
        if self.b_in.shape != (width,):
            raise DimensionError(
                f"b_in has shape {self.b_in.shape}, expected ({width},)"
            )
        if self.W_c.ndim != 3 or self.W_c.shape[1:] != (self.d_inner, self.d_inner):
            raise DimensionError(
                f"W_c has shape {self.W_c.shape}, expected (k, {self.d_inner}, "
                f"{self.d_inner})"
            )
        if self.b_c.shape != (self.d_inner,):
            raise DimensionError(
                f"b_c has shape {self.b_c.shape}, expected ({self.d_inner},)"
            )

    @property
    def projection_width(self):
        return 2 * self.d_inner + 2 * self.d_state + self.h_head

    @property
    def split_dims(self):
        return (self.d_inner, self.d_inner, 2 * self.d_state + self.h_head)

    @property
    def d_model(self):
        return self.W_in.shape[0]

    @property
    def kernel_size(self):
        return self.W_c.shape[0]

    @property
    def d_out(self):
        return self.d_inner // 2

    @classmethod
    def initialize(cls, d_model, d_inner, d_state, h_head, kernel_size, eps, rng):
        width = 2 * d_inner + 2 * d_state + h_head
        in_bound = 1.0 / np.sqrt(d_model)
        conv_bound = 1.0 / np.sqrt(kernel_size * d_inner)
        return cls(
            W_in=Tensor(rng.uniform(-in_bound, in_bound, (d_model, width))),
            b_in=Tensor(np.zeros(width)),
            W_c=Tensor(
                rng.uniform(-conv_bound, conv_bound, (kernel_size, d_inner, d_inner))
            ),
            b_c=Tensor(np.zeros(d_inner)),
            d_inner=d_inner,
            d_state=d_state,
            h_head=h_head,
            eps=eps,
        )

    def tensors(self):
        return {"W_in": self.W_in, "b_in": self.b_in, "W_c": self.W_c, "b_c": self.b_c}

    def replace(self, **tensors):
        values = {**self.tensors(), **tensors}
        return Mamba2Params(
            d_inner=self.d_inner,
            d_state=self.d_state,
            h_head=self.h_head,
            eps=self.eps,
            **values,
        )


@dataclass(frozen=True)
class SplitViews:
    z: Tensor
    x_bc: Tensor
    dt: Tensor


def project_in(H, params):
    """Affine input projection Z = H W_in + b_in, applied row-wise."""
    if H.ndim < 2 or H.shape[-1] != params.d_model:
        raise DimensionError(
            f"project_in: input {H.shape} does not match d_model={params.d_model}"
        )
    return add(matmul(H, params.W_in), params.b_in)


def split3(Z, dims):
    """
    Partition the feature axis into (z, x_bc, dt) in that order.

    Args:
        Z (Tensor): Projection output (..., T, sum(dims))
        dims (tuple): Widths (d_inner, d_inner, 2*d_state + h_head)

    Returns:
        SplitViews: Contiguous views of Z
    """
    if len(dims) != 3 or Z.shape[-1] != sum(dims):
        raise DimensionError(
            f"split3: feature width {Z.shape[-1]} does not equal sum of {tuple(dims)}"
        )
    first, second, _ = dims
    return SplitViews(
        z=slice_features(Z, 0, first),
        x_bc=slice_features(Z, first, first + second),
        dt=slice_features(Z, first + second, Z.shape[-1]),
    )


def mamba2_forward(H, params):
    """
    Run the block and return the first d_inner/2 normalized channels.

    Args:
        H (Tensor): Encoded sequence (..., T, d_model)
        params (Mamba2Params): Block parameters

    Returns:
        Tensor: Shape (..., T, d_inner/2)
    """
    views = split3(project_in(H, params), params.split_dims)
    activated = silu(causal_conv1d(views.x_bc, params.W_c, params.b_c))
    hidden = layernorm_feature(activated, params.eps)
    return slice_features(hidden, 0, params.d_out)
