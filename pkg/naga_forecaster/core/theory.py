"""
Executable capacity and exact-recovery results for the Vedic encoder.

Covers the rank factorization of a bilinear target, the explicit encoder that
reproduces a mirrored quadratic target exactly, the error floor when the
encoder is too narrow, and the trained comparison against an affine encoder.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError, UnsupportedTargetError
from .model import NagaModel
from .rng import Rng
from .tensor import Tensor
from .training import train
from .vedic import DropoutMask, VedicParams, vedic_encode

RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BilinearTarget:
    """
    y = x_t^T C x_t' + Σ ell ⊙ X over a window of length T.

    Positions are 1-indexed.
    """

    C: np.ndarray
    t: int
    t_prime: int
    ell: np.ndarray

    def __post_init__(self):
        d = self.C.shape[0]
        if self.C.shape != (d, d):
            raise DimensionError(f"C must be square, got {self.C.shape}")
        if self.ell.ndim != 2 or self.ell.shape[1] != d:
            raise DimensionError(f"ell must be (T, {d}), got {self.ell.shape}")
        for pos in (self.t, self.t_prime):
            if not 1 <= pos <= self.window:
                raise ValueError(f"Position {pos} outside window 1..{self.window}")

    @property
    def window(self):
        return self.ell.shape[0]

    @property
    def d(self):
        return self.C.shape[0]

    @property
    def rank(self):
        singular = np.linalg.svd(self.C, compute_uv=False)
        if singular.size == 0 or singular[0] == 0.0:
            return 0
        return int(np.sum(singular > RANK_TOL * singular[0]))

    @property
    def is_mirrored(self):
        return self.t_prime == self.window - self.t + 1

    def evaluate(self, X):
        """
        Direct evaluation on windows.

        Args:
            X (ndarray): (T, d) or (B, T, d)

        Returns:
            ndarray: Scalar or (B,) targets
        """
        X = np.asarray(X, dtype=np.float64)
        x_t = X[..., self.t - 1, :]
        x_tp = X[..., self.t_prime - 1, :]
        bilinear = np.einsum("...a,ab,...b->...", x_t, self.C, x_tp)
        return bilinear + np.sum(self.ell * X, axis=(-2, -1))

    @classmethod
    def from_table(cls, table):
        """Target stored in the ``meta`` of a ``synth_bilinear`` table."""
        meta = table.meta
        return cls(
            C=meta["C"], t=meta["position"], t_prime=meta["mirror"], ell=meta["ell"]
        )


@dataclass(frozen=True, eq=False)
class RankFactorization:
    """C ≈ Σ_i alpha_i u_i v_i^T; columns of U and V are u_i and v_i."""

    U: np.ndarray
    V: np.ndarray
    alpha: np.ndarray

    @property
    def rank(self):
        return self.alpha.shape[0]

    def reconstruct(self):
        return (self.U * self.alpha) @ self.V.T


@dataclass(frozen=True, eq=False)
class Readout:
    """Full-time linear readout: Σ_t,i hidden[t,i] h[t,i] + Σ_t,a linear[t,a] x[t,a]."""

    hidden: np.ndarray
    linear: np.ndarray
    bias: float = 0.0


def random_bilinear_target(d, rank, T, rng, position=None, linear=True):
    """
    Random mirrored target with an exactly rank-``rank`` C.

    Args:
        d (int): Feature count
        rank (int): Rank of C
        T (int): Window length
        rng (Rng): Random stream
        position (int, optional): t; drawn uniformly when omitted
        linear (bool): Include a random linear part over the whole window

    Returns:
        BilinearTarget: Target with t' = T - t + 1
    """
    C = rng.normal((d, rank)) @ rng.normal((rank, d))
    t = int(rng.permutation(T)[0]) + 1 if position is None else position
    ell = rng.normal((T, d)) if linear else np.zeros((T, d))
    return BilinearTarget(C=C, t=t, t_prime=T - t + 1, ell=ell)


def svd_factorize(C, r):
    """
    Best rank-r factorization via singular value decomposition.

    Signs are normalized so the largest-magnitude entry of every u_i is
    positive.

    Args:
        C (ndarray | Tensor): Square matrix
        r (int): Number of terms, 0 <= r <= d

    Returns:
        RankFactorization: Leading r singular triplets
    """
    C = C.data if isinstance(C, Tensor) else np.asarray(C, dtype=np.float64)
    if C.ndim != 2:
        raise DimensionError(f"svd_factorize needs a matrix, got shape {C.shape}")
    if not 0 <= r <= min(C.shape):
        raise ValueError(f"Rank {r} exceeds the matrix dimension {min(C.shape)}")
    U, S, Vt = np.linalg.svd(C)
    U = U[:, :r]
    V = Vt[:r].T
    pivots = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pivots, np.arange(r)])
    signs[signs == 0] = 1.0
    return RankFactorization(U=U * signs, V=V * signs, alpha=S[:r].copy())


def build_exact_vedic(target, d_h):
    """
    Encoder weights and readout that reproduce a mirrored quadratic target.

    Column i of W1 is u_i and column i of W2 is v_i; the readout weights
    hidden coordinate i at time t by alpha_i and carries ell on the inputs.
    Extra columns beyond the rank stay zero.

    Args:
        target (BilinearTarget): Target with t' = T - t + 1
        d_h (int): Hidden width, at least rank(C)

    Returns:
        tuple: (VedicParams, Readout)
    """
    if not target.is_mirrored:
        raise UnsupportedTargetError(
            f"Positions ({target.t}, {target.t_prime}) are not mirrored in a window "
            f"of {target.window}; the encoder only forms x_t · x_(T-t+1) products"
        )
    rank = target.rank
    if d_h < rank:
        raise ValueError(f"Hidden width {d_h} is below the target rank {rank}")
    return _encoder_from_factorization(target, svd_factorize(target.C, rank), d_h)


def _encoder_from_factorization(target, factors, d_h):
    W1 = np.zeros((target.d, d_h))
    W2 = np.zeros((target.d, d_h))
    W1[:, : factors.rank] = factors.U
    W2[:, : factors.rank] = factors.V
    hidden = np.zeros((target.window, d_h))
    hidden[target.t - 1, : factors.rank] = factors.alpha
    params = VedicParams(
        W1=Tensor(W1),
        W2=Tensor(W2),
        b1=Tensor(np.zeros(d_h)),
        b2=Tensor(np.zeros(d_h)),
        p=0.0,
    )
    return params, Readout(hidden=hidden, linear=target.ell.copy())


def evaluate_readout(X, params, readout):
    """
    Readout over the flip-on encoding of X, dropout off.

    Args:
        X (ndarray): (T, d) or (B, T, d)
        params (VedicParams): Encoder
        readout (Readout): Readout weights

    Returns:
        ndarray: Scalar or (B,) predictions
    """
    X = np.asarray(X, dtype=np.float64)
    mask = DropoutMask.ones(X.shape[:-1] + (params.d_hidden,))
    encoded = vedic_encode(Tensor(X), params, mask, use_flip=True).data
    return (
        np.sum(readout.hidden * encoded, axis=(-2, -1))
        + np.sum(readout.linear * X, axis=(-2, -1))
        + readout.bias
    )


def rank_deficit_error(target, d_h):
    """
    Smallest RMS error any d_h-column encoder can reach.

    With independent standard-normal x_t and x_t', E[(x^T (C - B) y)^2] equals
    ||C - B||_F^2, minimized over rank-d_h B by the truncated SVD; the result
    is the norm of the discarded singular values.
    """
    singular = np.linalg.svd(target.C, compute_uv=False)
    return float(np.sqrt(np.sum(singular[d_h:] ** 2)))


def truncated_recovery_error(target, d_h, n_samples, rng):
    """Empirical RMS error of the best d_h-term encoder on fresh inputs."""
    params, readout = _encoder_from_factorization(
        target, svd_factorize(target.C, min(d_h, target.d)), d_h
    )
    X = rng.normal((n_samples, target.window, target.d))
    residual = evaluate_readout(X, params, readout) - target.evaluate(X)
    return float(np.sqrt(np.mean(residual**2)))


def exact_readout_mse(table):
    """
    MSE of the exact construction on every raw window of a synthetic table.

    Args:
        table (SeriesTable): Output of ``synth_bilinear``

    Returns:
        float: Mean squared error against the stored target column
    """
    target = BilinearTarget.from_table(table)
    d_in = target.d
    params, readout = build_exact_vedic(target, max(target.rank, 1))
    T = target.window
    starts = np.arange(len(table) - T)
    windows = table.values[starts[:, None] + np.arange(T), :d_in]
    actual = table.values[starts + T, table.target_column]
    predicted = evaluate_readout(windows, params, readout)
    return float(np.mean((predicted - actual) ** 2))


@dataclass(frozen=True)
class CapacityGap:
    linear_best_mse: float
    vedic_best_mse: float

    @property
    def ratio(self):
        if self.linear_best_mse == 0.0:
            return float("inf") if self.vedic_best_mse > 0 else 1.0
        return self.vedic_best_mse / self.linear_best_mse


def capacity_gap(dataset, model_config, train_config, verbose=False):
    """
    Train an affine-encoder model and a Vedic model under identical budgets.

    Both models share every setting and seed; only ``use_vedic`` differs.

    Args:
        dataset (WindowedDataset): Windows from a bilinear synthetic series
        model_config (ModelConfig): Architecture of the Vedic model
        train_config (TrainConfig): Shared optimizer budget
        verbose (bool): Print training progress

    Returns:
        CapacityGap: Best validation MSE of each model
    """
    results = {}
    for use_vedic in (False, True):
        config = replace(model_config, use_vedic=use_vedic)
        model = NagaModel.initialize(config, Rng(train_config.seed))
        report = train(model, dataset, train_config, verbose=verbose)
        results[use_vedic] = min(report.val_losses)
    return CapacityGap(linear_best_mse=results[False], vedic_best_mse=results[True])


__all__ = [
    "BilinearTarget",
    "RankFactorization",
    "Readout",
    "CapacityGap",
    "random_bilinear_target",
    "svd_factorize",
    "build_exact_vedic",
    "evaluate_readout",
    "rank_deficit_error",
    "truncated_recovery_error",
    "exact_readout_mse",
    "capacity_gap",
]
