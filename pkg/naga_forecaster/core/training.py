"""
Training loop for the Naga model.
Handles the MSE objective, Adam updates, early stopping and evaluation.
"""

import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from config import (
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_EPS,
    DEFAULT_BATCH_SIZE,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MAX_EPOCHS,
    DEFAULT_MIN_DELTA,
    DEFAULT_PATIENCE,
    DEFAULT_SEED,
    DEFAULT_WEIGHT_DECAY,
    EVAL_BATCH_SIZE,
)

from .autodiff import GradTape, grads
from .errors import DimensionError, NonFiniteLossError
from .model import EVAL, TRAIN
from .ops import hadamard, scale, sub, sum_all
from .rng import Rng
from .tensor import Tensor


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and early-stopping settings."""

    lr: float = DEFAULT_LEARNING_RATE
    weight_decay: float = DEFAULT_WEIGHT_DECAY
    batch_size: int = DEFAULT_BATCH_SIZE
    seed: int = DEFAULT_SEED
    patience: int = DEFAULT_PATIENCE
    min_delta: float = DEFAULT_MIN_DELTA
    max_epochs: int = DEFAULT_MAX_EPOCHS
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    adam_eps: float = ADAM_EPS

    def __post_init__(self):
        if self.lr <= 0 or self.adam_eps <= 0:
            raise ValueError("Learning rate and Adam epsilon must be positive")
        if self.weight_decay < 0 or self.min_delta < 0:
            raise ValueError("Weight decay and min_delta must be non-negative")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("batch_size, max_epochs and patience must be >= 1")
        if self.seed < 0:
            raise ValueError("Seed must be non-negative")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("Adam betas must be in [0, 1)")


class Metrics(NamedTuple):
    mse: float
    mae: float
    rmse: float


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_mse: float


@dataclass
class TrainReport:
    """Outcome of one training run; ``model`` holds the restored best weights."""

    history: list
    stop_epoch: int
    best_epoch: int
    runtime_seconds: float
    test: Metrics
    parameter_count: int
    model: object = field(default=None, repr=False)

    @property
    def train_losses(self):
        return [record.train_loss for record in self.history]

    @property
    def val_losses(self):
        return [record.val_mse for record in self.history]


@dataclass
class AdamState:
    step: int
    m: dict
    v: dict

    @classmethod
    def zeros(cls, params):
        return cls(
            step=0,
            m={name: np.zeros(t.shape) for name, t in params.items()},
            v={name: np.zeros(t.shape) for name, t in params.items()},
        )


def mse_loss(yhat, y):
    """
    Batch mean of squared Euclidean errors: (1/B) Σ_i ||ŷ_i - y_i||².

    Args:
        yhat (Tensor): Predictions (B, pred_len)
        y (Tensor): Targets (B, pred_len)

    Returns:
        Tensor: Scalar loss
    """
    if yhat.shape != y.shape:
        raise DimensionError(f"mse_loss: shapes {yhat.shape} and {y.shape} differ")
    diff = sub(yhat, y)
    batch = yhat.shape[0] if yhat.ndim > 1 else 1
    return scale(sum_all(hadamard(diff, diff)), 1.0 / batch)


def metrics(yhat, y):
    """
    Per-element error summary.

    MSE is additionally divided by pred_len so values compare across
    horizons; RMSE is its square root.

    Args:
        yhat (Tensor | ndarray): Predictions
        y (Tensor | ndarray): Targets of the same shape

    Returns:
        Metrics: (mse, mae, rmse)
    """
    predicted = yhat.data if isinstance(yhat, Tensor) else np.asarray(yhat, float)
    actual = y.data if isinstance(y, Tensor) else np.asarray(y, float)
    if predicted.shape != actual.shape:
        raise DimensionError(
            f"metrics: shapes {predicted.shape} and {actual.shape} differ"
        )
    errors = predicted - actual
    mse = float(np.mean(errors**2))
    mae = float(np.mean(np.abs(errors)))
    return Metrics(mse=mse, mae=mae, rmse=float(np.sqrt(mse)))


def adam_step(params, gradients, state, cfg):
    """
    One bias-corrected Adam update with L2 weight decay folded into the gradient.

    Args:
        params (dict): Name -> Tensor
        gradients (dict): Name -> Tensor, same keys
        state (AdamState): Moments from the previous step
        cfg (TrainConfig): Optimizer settings

    Returns:
        tuple: (new_params, new_state)
    """
    step = state.step + 1
    correction1 = 1.0 - cfg.beta1**step
    correction2 = 1.0 - cfg.beta2**step
    new_params, new_m, new_v = {}, {}, {}
    for name, param in params.items():
        grad = gradients[name].data + cfg.weight_decay * param.data
        m = cfg.beta1 * state.m[name] + (1.0 - cfg.beta1) * grad
        v = cfg.beta2 * state.v[name] + (1.0 - cfg.beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        new_params[name] = Tensor(
            param.data - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        )
        new_m[name] = m
        new_v[name] = v
    return new_params, AdamState(step=step, m=new_m, v=new_v)


class EarlyStopping:
    """
    Stop when the validation loss has not improved by more than ``min_delta``
    for ``patience`` consecutive epochs.
    """

    def __init__(self, patience=DEFAULT_PATIENCE, min_delta=DEFAULT_MIN_DELTA):
        self.patience = patience
        self.min_delta = min_delta
        self.counter = 0
        self.best_loss = None
        self.best_epoch = None
        self.should_stop = False

    def update(self, val_loss, epoch):
        """
        Record one epoch's validation loss.

        Returns:
            bool: True when this epoch is the new best
        """
        if self.best_loss is None or self.best_loss - val_loss > self.min_delta:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.counter = 0
            return True
        self.counter += 1
        if self.counter >= self.patience:
            self.should_stop = True
        return False


def loss_and_grads(model, X, y, rng=None, noise=None):
    """
    Training-mode loss and gradients for every model parameter.

    Args:
        model (NagaModel): Current model
        X (Tensor): Inputs (B, T, d_in)
        y (Tensor): Targets (B, pred_len)
        rng (Rng, optional): Stream for input masking / dropout
        noise (ForwardNoise, optional): Frozen noise instead of ``rng``

    Returns:
        tuple: (loss value, dict of gradients)
    """
    tape = GradTape()
    with tape:
        tape.watch_all(model.parameters())
        loss = mse_loss(model.forward(X, TRAIN, rng=rng, noise=noise), y)
    return loss.item(), grads(tape, loss)


def predict(model, split, batch_size=EVAL_BATCH_SIZE):
    """Eval-mode predictions for every window of a split, shape (n, pred_len)."""
    outputs = []
    for begin in range(0, len(split), batch_size):
        indices = np.arange(begin, min(begin + batch_size, len(split)))
        X, _ = split.batch(indices)
        outputs.append(model.forward(Tensor(X), EVAL).data)
    return np.concatenate(outputs, axis=0)


def evaluate(model, split, batch_size=EVAL_BATCH_SIZE):
    return metrics(predict(model, split, batch_size), split.targets())


def train(model, data, cfg, verbose=False):
    """
    Fit a model with minibatch Adam and early stopping on validation MSE.

    The best-validation parameters are restored before the test split is
    scored. Runtime covers the epoch loop only.

    Args:
        model (NagaModel): Initial model
        data (WindowedDataset): Train / validation / test windows
        cfg (TrainConfig): Optimizer and stopping settings
        verbose (bool): Print one line per epoch

    Returns:
        TrainReport: History, stop epoch, runtime and test metrics
    """
    if len(data.train) == 0 or len(data.val) == 0:
        raise ValueError("Training needs non-empty train and validation splits")

    root = Rng(cfg.seed)
    shuffle_rng = root.spawn(0)
    noise_rng = root.spawn(1)

    params = model.parameters()
    state = AdamState.zeros(params)
    stopper = EarlyStopping(cfg.patience, cfg.min_delta)
    best_model = model
    history = []
    epoch = 0

    started = time.perf_counter()
    for epoch in range(1, cfg.max_epochs + 1):
        order = shuffle_rng.permutation(len(data.train))
        batch_losses = []
        for batch_index, begin in enumerate(range(0, len(order), cfg.batch_size)):
            X, y = data.train.batch(order[begin : begin + cfg.batch_size])
            loss, gradients = loss_and_grads(model, Tensor(X), Tensor(y), noise_rng)
            if not np.isfinite(loss):
                raise NonFiniteLossError(epoch, batch_index, loss)
            params, state = adam_step(params, gradients, state, cfg)
            model = model.with_parameters(params)
            batch_losses.append(loss)

        val_mse = evaluate(model, data.val).mse
        history.append(EpochRecord(epoch, float(np.mean(batch_losses)), val_mse))
        if stopper.update(val_mse, epoch):
            best_model = model
        if verbose:
            marker = " ✓" if stopper.best_epoch == epoch else ""
            print(
                f"Epoch {epoch:>3}/{cfg.max_epochs}"
                f" | train {history[-1].train_loss:.6f} | val {val_mse:.6f}{marker}"
            )
        if stopper.should_stop:
            if verbose:
                print(
                    f"ℹ️  Early stopping at epoch {epoch} "
                    f"(best epoch {stopper.best_epoch})"
                )
            break
    runtime = time.perf_counter() - started

    return TrainReport(
        history=history,
        stop_epoch=epoch,
        best_epoch=stopper.best_epoch,
        runtime_seconds=runtime,
        test=evaluate(best_model, data.test),
        parameter_count=best_model.parameter_count(),
        model=best_model,
    )
