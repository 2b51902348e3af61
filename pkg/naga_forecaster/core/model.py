"""
Naga model assembly.

A model is a stack of cells (optional Vedic encoding followed by the Mamba2
stage) and a linear head on the last time step. Cells after the first read
the previous cell's output through a learned bridge back to d_in features.
Models are immutable: training produces new models via ``with_parameters``.
"""

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from config import (
    DEFAULT_D_HIDDEN,
    DEFAULT_D_INNER,
    DEFAULT_D_STATE,
    DEFAULT_DROPOUT_P,
    DEFAULT_H_HEAD,
    DEFAULT_KERNEL_SIZE,
    DEFAULT_LN_EPS,
    DEFAULT_MASK_PROB,
    DEFAULT_NUM_CELLS,
)

from .errors import DimensionError, InputError
from .mamba2 import Mamba2Params, mamba2_forward
from .ops import add, hadamard, last_step, matmul
from .tensor import Tensor
from .vedic import DropoutMask, VedicParams, vedic_encode

TRAIN = "train"
EVAL = "eval"


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and ablation switches."""

    d_in: int
    pred_len: int
    d_hidden: int = DEFAULT_D_HIDDEN
    d_inner: int = DEFAULT_D_INNER
    d_state: int = DEFAULT_D_STATE
    h_head: int = DEFAULT_H_HEAD
    kernel_size: int = DEFAULT_KERNEL_SIZE
    num_cells: int = DEFAULT_NUM_CELLS
    use_vedic: bool = True
    use_flip: bool = True
    mask_prob: float = DEFAULT_MASK_PROB
    dropout_p: float = DEFAULT_DROPOUT_P
    ln_eps: float = DEFAULT_LN_EPS

    def __post_init__(self):
        for name in (
            "d_in",
            "pred_len",
            "d_hidden",
            "d_inner",
            "d_state",
            "h_head",
            "kernel_size",
            "num_cells",
        ):
            if int(getattr(self, name)) <= 0:
                raise ValueError(f"{name} must be a positive integer")
        if self.d_inner % 2:
            raise ValueError(f"d_inner must be even, got {self.d_inner}")
        if not 0.0 <= self.mask_prob < 1.0:
            raise ValueError(f"mask_prob must be in [0, 1), got {self.mask_prob}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if self.ln_eps <= 0:
            raise ValueError(f"ln_eps must be positive, got {self.ln_eps}")

    @property
    def d_out(self):
        return self.d_inner // 2

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class HeadParams:
    W_head: Tensor
    b_head: Tensor

    def __post_init__(self):
        if self.W_head.ndim != 2 or self.b_head.shape != (self.W_head.shape[1],):
            raise DimensionError(
                f"Head shapes {self.W_head.shape} / {self.b_head.shape} do not match"
            )


@dataclass(frozen=True)
class CellParams:
    """One Naga cell; ``bridge_W``/``bridge_b`` exist for every cell but the first."""

    mamba: Mamba2Params
    vedic: Optional[VedicParams] = None
    bridge_W: Optional[Tensor] = None
    bridge_b: Optional[Tensor] = None


@dataclass(frozen=True)
class ForwardNoise:
    """Input mask and per-cell dropout masks for one forward pass."""

    input_mask: Optional[Tensor]
    dropout: tuple = field(default_factory=tuple)


def _uniform(rng, fan_in, shape):
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, shape))


class NagaModel:
    """Stacked Naga cells with a linear forecasting head."""

    def __init__(self, config, cells, head):
        if len(cells) != config.num_cells:
            raise ValueError(
                f"Expected {config.num_cells} cells, got {len(cells)}"
            )
        self.config = config
        self.cells = tuple(cells)
        self.head = head

    @classmethod
    def initialize(cls, config, rng):
        """
        Build a freshly initialized model.

        Weights are drawn uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases are
        zero.

        Args:
            config (ModelConfig): Architecture
            rng (Rng): Random stream for the weights

        Returns:
            NagaModel: New model
        """
        cells = []
        for index in range(config.num_cells):
            bridge_W = bridge_b = None
            if index > 0:
                bridge_W = _uniform(rng, config.d_out, (config.d_out, config.d_in))
                bridge_b = Tensor(np.zeros(config.d_in))
            vedic = None
            d_model = config.d_in
            if config.use_vedic:
                vedic = VedicParams.initialize(
                    config.d_in, config.d_hidden, config.dropout_p, rng
                )
                d_model = config.d_hidden
            mamba = Mamba2Params.initialize(
                d_model,
                config.d_inner,
                config.d_state,
                config.h_head,
                config.kernel_size,
                config.ln_eps,
                rng,
            )
            cells.append(CellParams(mamba, vedic, bridge_W, bridge_b))
        head = HeadParams(
            W_head=_uniform(rng, config.d_out, (config.d_out, config.pred_len)),
            b_head=Tensor(np.zeros(config.pred_len)),
        )
        return cls(config, cells, head)

    def parameters(self):
        """Flat name -> Tensor map in a fixed order."""
        params = {}
        for index, cell in enumerate(self.cells):
            prefix = f"cells.{index}"
            if cell.bridge_W is not None:
                params[f"{prefix}.bridge.W"] = cell.bridge_W
                params[f"{prefix}.bridge.b"] = cell.bridge_b
            if cell.vedic is not None:
                for name, tensor in cell.vedic.tensors().items():
                    params[f"{prefix}.vedic.{name}"] = tensor
            for name, tensor in cell.mamba.tensors().items():
                params[f"{prefix}.mamba.{name}"] = tensor
        params["head.W_head"] = self.head.W_head
        params["head.b_head"] = self.head.b_head
        return params

    def with_parameters(self, updates):
        """
        Return a copy with some or all parameters replaced.

        Args:
            updates (dict): Parameter name -> Tensor (same shape)

        Returns:
            NagaModel: New model sharing untouched tensors
        """
        current = self.parameters()
        unknown = set(updates) - set(current)
        if unknown:
            raise KeyError(f"Unknown parameters: {sorted(unknown)}")
        for name, tensor in updates.items():
            if tensor.shape != current[name].shape:
                raise DimensionError(
                    f"Parameter {name}: shape {tensor.shape} != {current[name].shape}"
                )
        merged = {**current, **updates}

        cells = []
        for index, cell in enumerate(self.cells):
            prefix = f"cells.{index}"
            vedic = None
            if cell.vedic is not None:
                vedic = cell.vedic.replace(
                    **{
                        name: merged[f"{prefix}.vedic.{name}"]
                        for name in cell.vedic.tensors()
                    }
                )
            mamba = cell.mamba.replace(
                **{
                    name: merged[f"{prefix}.mamba.{name}"]
                    for name in cell.mamba.tensors()
                }
            )
            bridge_W = merged.get(f"{prefix}.bridge.W")
            bridge_b = merged.get(f"{prefix}.bridge.b")
            cells.append(CellParams(mamba, vedic, bridge_W, bridge_b))
        head = HeadParams(merged["head.W_head"], merged["head.b_head"])
        return NagaModel(self.config, cells, head)

    def parameter_count(self):
        return sum(tensor.size for tensor in self.parameters().values())

    def sample_noise(self, batch_shape, rng):
        """
        Draw the training-mode input mask and dropout masks up front.

        Args:
            batch_shape (tuple): (B, T) of the input batch
            rng (Rng): Random stream

        Returns:
            ForwardNoise: Noise that ``forward`` replays exactly
        """
        batch, steps = batch_shape
        config = self.config
        input_mask = None
        if config.mask_prob > 0.0:
            input_mask = Tensor(
                rng.bernoulli(1.0 - config.mask_prob, (batch, steps, config.d_in))
            )
        dropout = []
        for cell in self.cells:
            if cell.vedic is None:
                dropout.append(None)
            else:
                dropout.append(
                    DropoutMask.sample(
                        (batch, steps, config.d_hidden), cell.vedic.p, rng
                    )
                )
        return ForwardNoise(input_mask, tuple(dropout))

    def forward(self, X, mode=EVAL, rng=None, noise=None):
        """
        Forecast ``pred_len`` values for every sequence in the batch.

        Args:
            X (Tensor): Input batch (B, T, d_in)
            mode (str): "train" applies input masking and dropout; "eval" does not
            rng (Rng, optional): Stream for train-mode noise
            noise (ForwardNoise, optional): Pre-drawn train-mode noise

        Returns:
            Tensor: Predictions (B, pred_len)
        """
        config = self.config
        if X.ndim != 3 or X.shape[-1] != config.d_in:
            raise DimensionError(
                f"forward expects (B, T, {config.d_in}) input, got {X.shape}"
            )
        if not X.is_finite():
            raise InputError("Model input contains NaN or infinite values")
        if mode not in (TRAIN, EVAL):
            raise ValueError(f"Unknown mode '{mode}'")

        if mode == TRAIN and noise is None:
            if rng is None:
                raise ValueError("Train mode needs an rng or pre-drawn noise")
            noise = self.sample_noise(X.shape[:2], rng)
        if mode == EVAL:
            noise = None

        hidden = X
        if noise is not None and noise.input_mask is not None:
            hidden = hadamard(hidden, noise.input_mask)

        for index, cell in enumerate(self.cells):
            if cell.bridge_W is not None:
                hidden = add(matmul(hidden, cell.bridge_W), cell.bridge_b)
            if cell.vedic is not None:
                if noise is not None:
                    mask = noise.dropout[index]
                else:
                    mask = DropoutMask.ones(hidden.shape[:-1] + (config.d_hidden,))
                hidden = vedic_encode(hidden, cell.vedic, mask, config.use_flip)
            hidden = mamba2_forward(hidden, cell.mamba)

        return add(matmul(last_step(hidden), self.head.W_head), self.head.b_head)


def analytic_parameter_count(config):
    """
    Hand formula for the number of scalar parameters of a configuration.

    Args:
        config (ModelConfig): Architecture

    Returns:
        int: Total parameter count
    """
    width = 2 * config.d_inner + 2 * config.d_state + config.h_head
    d_model = config.d_hidden if config.use_vedic else config.d_in
    vedic = 2 * config.d_in * config.d_hidden + 2 * config.d_hidden
    mamba = (
        d_model * width
        + width
        + config.kernel_size * config.d_inner * config.d_inner
        + config.d_inner
    )
    bridge = config.d_out * config.d_in + config.d_in
    head = config.d_out * config.pred_len + config.pred_len

    per_cell = mamba + (vedic if config.use_vedic else 0)
    return config.num_cells * per_cell + (config.num_cells - 1) * bridge + head
