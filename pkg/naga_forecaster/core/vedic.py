"""
Vedic bilinear encoding.

Pairs every time step t with its mirror T-t+1 through two affine projections
and a Hadamard product: H = (X W1 + b1) ⊙ (flip(X) W2 + b2) ⊙ D. Also holds
the closed-form W1/W2 gradients of the encoder and the diagonal three-stage
decomposition used to explain it.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .ops import add, flip_time, hadamard, matmul
from .tensor import Tensor


@dataclass(frozen=True)
class VedicParams:
    """Projection weights (d_in × d_hidden), biases (d_hidden) and dropout p."""

    W1: Tensor
    W2: Tensor
    b1: Tensor
    b2: Tensor
    p: float = 0.0

    def __post_init__(self):
        if self.W1.ndim != 2 or self.W1.shape != self.W2.shape:
            raise DimensionError(
                f"W1 {self.W1.shape} and W2 {self.W2.shape} must share a 2-D shape"
            )
        hidden = self.W1.shape[1]
        for name, bias in (("b1", self.b1), ("b2", self.b2)):
            if bias.shape != (hidden,):
                raise DimensionError(
                    f"{name} has shape {bias.shape}, expected ({hidden},)"
                )
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"Dropout probability must be in [0, 1), got {self.p}")

    @property
    def d_in(self):
        return self.W1.shape[0]

    @property
    def d_hidden(self):
        return self.W1.shape[1]

    @classmethod
    def initialize(cls, d_in, d_hidden, p, rng):
        bound = 1.0 / np.sqrt(d_in)
        return cls(
            W1=Tensor(rng.uniform(-bound, bound, (d_in, d_hidden))),
            W2=Tensor(rng.uniform(-bound, bound, (d_in, d_hidden))),
            b1=Tensor(np.zeros(d_hidden)),
            b2=Tensor(np.zeros(d_hidden)),
            p=p,
        )

    def tensors(self):
        return {"W1": self.W1, "W2": self.W2, "b1": self.b1, "b2": self.b2}

    def replace(self, **tensors):
        values = {**self.tensors(), **tensors}
        return VedicParams(p=self.p, **values)


@dataclass(frozen=True)
class DropoutMask:
    """
    Inverted-dropout multiplier.

    ``D`` holds 0 or 1/(1-p); ``pattern`` keeps the raw {0, 1} draw.
    """

    D: Tensor
    pattern: np.ndarray = field(repr=False)
    p: float = 0.0

    @classmethod
    def ones(cls, shape):
        return cls(D=Tensor(np.ones(shape)), pattern=np.ones(shape), p=0.0)

    @classmethod
    def sample(cls, shape, p, rng):
        """
        Draw an i.i.d. Bernoulli(1-p) keep pattern.

        Args:
            shape (tuple): Mask shape, (T, d_hidden) or (B, T, d_hidden)
            p (float): Drop probability in [0, 1)
            rng (Rng): Random stream

        Returns:
            DropoutMask: All-ones when p == 0
        """
        if not 0.0 <= p < 1.0:
            raise ValueError(f"Dropout probability must be in [0, 1), got {p}")
        if p == 0.0:
            return cls.ones(shape)
        pattern = rng.bernoulli(1.0 - p, shape)
        return cls(D=Tensor(pattern / (1.0 - p)), pattern=pattern, p=p)


def vedic_encode(X, params, mask, use_flip=True):
    """
    Encode a sequence with mirrored bilinear features.

    Args:
        X (Tensor): Input of shape (T, d_in) or (B, T, d_in)
        params (VedicParams): Encoder parameters
        mask (DropoutMask): Multiplier shaped like the output
        use_flip (bool): Pair t with T-t+1 when on; with t itself when off

    Returns:
        Tensor: Shape (..., T, d_hidden)
    """
    if X.ndim < 2 or X.shape[-1] != params.d_in:
        raise DimensionError(
            f"vedic_encode: input {X.shape} does not match d_in={params.d_in}"
        )
    expected = X.shape[:-1] + (params.d_hidden,)
    if mask.D.shape != expected:
        raise DimensionError(
            f"vedic_encode: mask {mask.D.shape} does not match output {expected}"
        )
    x1 = add(matmul(X, params.W1), params.b1)
    source = flip_time(X) if use_flip else X
    x2 = add(matmul(source, params.W2), params.b2)
    return hadamard(hadamard(x1, x2), mask.D)


def _check_closed_form_inputs(X, params, mask, delta):
    if np.any(params.b1.data != 0.0) or np.any(params.b2.data != 0.0):
        raise ValueError("Closed-form encoder gradients require b1 = b2 = 0")
    if X.ndim != 2 or X.shape[1] != params.d_in:
        raise DimensionError(f"Expected X of shape (T, {params.d_in}), got {X.shape}")
    expected = (X.shape[0], params.d_hidden)
    if delta.shape != expected or mask.D.shape != expected:
        raise DimensionError(
            f"delta {delta.shape} and mask {mask.D.shape} must both be {expected}"
        )


def lemma2_grad_w1(X, params, mask, delta):
    """
    Closed-form dL/dW1 of the flip-on encoder.

    Entry (a, i) = Σ_t δ[t,i] · D[t,i] · (Σ_b W2[b,i] · x[T-t+1, b]) · x[t, a].

    Args:
        X (Tensor): Input (T, d_in)
        params (VedicParams): Encoder parameters with zero biases
        mask (DropoutMask): Multiplier used in the forward pass
        delta (Tensor): dL/dH at the encoder output, (T, d_hidden)

    Returns:
        Tensor: Gradient of shape (d_in, d_hidden)
    """
    _check_closed_form_inputs(X, params, mask, delta)
    mirrored = np.flip(X.data, axis=0) @ params.W2.data
    return Tensor(X.data.T @ (delta.data * mask.D.data * mirrored))


def lemma2_grad_w2(X, params, mask, delta):
    """
    Closed-form dL/dW2 of the flip-on encoder.

    Entry (b, i) = Σ_t δ[t,i] · D[t,i] · (Σ_a W1[a,i] · x[t, a]) · x[T-t+1, b].
    """
    _check_closed_form_inputs(X, params, mask, delta)
    flipped = np.flip(X.data, axis=0)
    direct = X.data @ params.W1.data
    return Tensor(flipped.T @ (delta.data * mask.D.data * direct))


def diag_vedic(x, y, w_diag, v_diag):
    """
    Three-stage Vedic product with diagonal projections.

    Stage 1 projects x by diag(w); stage 2 projects rev(y) by diag(v); stage 3
    multiplies elementwise, so H_i = (x_i · w_ii) · (y_{d-i+1} · v_ii).
    """
    shapes = {x.shape, y.shape, w_diag.shape, v_diag.shape}
    if len(shapes) != 1 or x.ndim != 1:
        raise DimensionError(
            f"diag_vedic needs four equal-length vectors, got {shapes}"
        )
    projected_x = x.data * w_diag.data
    projected_y = y.data[::-1] * v_diag.data
    return Tensor(projected_x * projected_y)
