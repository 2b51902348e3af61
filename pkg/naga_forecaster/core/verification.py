"""
Verification battery run by ``naga verify``.

Each check returns a CheckResult with the observed value and the tolerance it
was held to. The closed-form encoder gradients are injectable so a corrupted
implementation can be shown to fail.
"""

from dataclasses import asdict, dataclass

import numpy as np

from config import (
    CENTERING_TOL,
    DEFAULT_SEED,
    EXACT_RECOVERY_ABS_TOL,
    GRAD_CHECK_REL_FLOOR,
    GRAD_CHECK_REL_TOL,
    GRAD_CHECK_STEP,
    CLOSED_FORM_GRAD_ABS_TOL,
    RANK_DEFICIT_MIN_ERROR,
)

from .autodiff import GradTape, finite_diff, grads
from .mamba2 import Mamba2Params, mamba2_forward, project_in, split3
from .model import TRAIN, ModelConfig, NagaModel
from .ops import causal_conv1d, hadamard, layernorm_feature, sum_all
from .rng import Rng
from .tensor import Tensor
from .theory import (
    build_exact_vedic,
    evaluate_readout,
    random_bilinear_target,
    rank_deficit_error,
    svd_factorize,
)
from .training import EarlyStopping, mse_loss
from .vedic import (
    DropoutMask,
    VedicParams,
    diag_vedic,
    lemma2_grad_w1,
    lemma2_grad_w2,
    vedic_encode,
)

GRAD_CHECK_CONFIG = ModelConfig(
    d_in=3,
    pred_len=2,
    d_hidden=8,
    d_inner=8,
    d_state=2,
    h_head=2,
    kernel_size=2,
    num_cells=2,
    mask_prob=0.1,
    dropout_p=0.1,
)
GRAD_CHECK_WINDOW = 8
GRAD_CHECK_BATCH = 2
CLOSED_FORM_INSTANCES = 100
EXACT_RECOVERY_TARGETS = 50
DROPOUT_SAMPLE_SHAPE = (200, 64, 8)
DROPOUT_MEAN_TOL = 1e-2
SVD_RECONSTRUCTION_TOL = 1e-10


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    observed: float
    tolerance: float
    detail: str = ""


@dataclass(frozen=True)
class VerificationSummary:
    seed: int
    results: tuple

    @property
    def total(self):
        return len(self.results)

    @property
    def passed(self):
        return sum(1 for result in self.results if result.passed)

    @property
    def failed(self):
        return self.total - self.passed

    @property
    def ok(self):
        return self.failed == 0

    def failures(self):
        return [result for result in self.results if not result.passed]

    def to_dict(self):
        return {
            "seed": self.seed,
            "total": self.total,
            "passed": self.passed,
            "failed": self.failed,
            "checks": [asdict(result) for result in self.results],
        }


def _at_most(name, observed, tolerance, detail=""):
    passed = bool(observed <= tolerance)
    return CheckResult(name, passed, float(observed), tolerance, detail)


def _relative_error(analytic, numeric):
    denominator = np.maximum(
        np.maximum(np.abs(analytic), np.abs(numeric)), GRAD_CHECK_REL_FLOOR
    )
    return float(np.max(np.abs(analytic - numeric) / denominator))


def check_model_gradients(rng):
    """Every parameter of a two-cell model against central differences."""
    model = NagaModel.initialize(GRAD_CHECK_CONFIG, rng.spawn(0))
    shape = (GRAD_CHECK_BATCH, GRAD_CHECK_WINDOW, GRAD_CHECK_CONFIG.d_in)
    X = Tensor(rng.spawn(1).normal(shape))
    y = Tensor(rng.spawn(2).normal((GRAD_CHECK_BATCH, GRAD_CHECK_CONFIG.pred_len)))
    noise = model.sample_noise(shape[:2], rng.spawn(3))

    tape = GradTape()
    with tape:
        tape.watch_all(model.parameters())
        loss = mse_loss(model.forward(X, TRAIN, noise=noise), y)
    analytic = grads(tape, loss)

    worst, worst_name = 0.0, ""
    for name, param in model.parameters().items():

        def objective(value, name=name):
            perturbed = model.with_parameters({name: value})
            return mse_loss(perturbed.forward(X, TRAIN, noise=noise), y)

        numeric = finite_diff(objective, param, GRAD_CHECK_STEP)
        error = _relative_error(analytic[name].data, numeric.data)
        if error > worst:
            worst, worst_name = error, name
    return _at_most(
        "model_gradients", worst, GRAD_CHECK_REL_TOL, f"worst parameter: {worst_name}"
    )


def _closed_form_instance(rng):
    T = int(rng.permutation(7)[0]) + 2
    d_in = int(rng.permutation(4)[0]) + 1
    d_h = int(rng.permutation(6)[0]) + 1
    params = VedicParams(
        W1=Tensor(rng.normal((d_in, d_h))),
        W2=Tensor(rng.normal((d_in, d_h))),
        b1=Tensor(np.zeros(d_h)),
        b2=Tensor(np.zeros(d_h)),
        p=0.2,
    )
    X = Tensor(rng.normal((T, d_in)))
    mask = DropoutMask.sample((T, d_h), 0.2, rng)
    delta = Tensor(rng.normal((T, d_h)))
    return X, params, mask, delta


def _encoder_autodiff(X, params, mask, delta):
    tape = GradTape()
    with tape:
        tape.watch_all(params.tensors())
        loss = sum_all(hadamard(vedic_encode(X, params, mask), delta))
    return grads(tape, loss, ["W1", "W2"])


def check_closed_form_grad(rng, weight, closed_form):
    """Closed-form encoder gradient for ``weight`` against autodiff."""
    worst = 0.0
    for index in range(CLOSED_FORM_INSTANCES):
        X, params, mask, delta = _closed_form_instance(rng.spawn(index))
        expected = _encoder_autodiff(X, params, mask, delta)[weight].data
        observed = closed_form(X, params, mask, delta).data
        worst = max(worst, float(np.max(np.abs(observed - expected))))
    return _at_most(
        f"lemma2_grad_{weight.lower()}",
        worst,
        CLOSED_FORM_GRAD_ABS_TOL,
        f"{CLOSED_FORM_INSTANCES} random instances",
    )


def check_exact_recovery(rng):
    """The explicit encoder reproduces random mirrored quadratic targets."""
    worst = 0.0
    for index in range(EXACT_RECOVERY_TARGETS):
        stream = rng.spawn(index)
        d = int(stream.permutation(6)[0]) + 1
        rank = int(stream.permutation(min(3, d))[0]) + 1
        T = int(stream.permutation(10)[0]) + 1
        target = random_bilinear_target(d, rank, T, stream)
        params, readout = build_exact_vedic(target, rank + index % 3)
        X = stream.normal((16, T, d))
        predicted = evaluate_readout(X, params, readout)
        error = np.max(np.abs(predicted - target.evaluate(X)))
        worst = max(worst, float(error))
    return _at_most(
        "exact_recovery",
        worst,
        EXACT_RECOVERY_ABS_TOL,
        f"{EXACT_RECOVERY_TARGETS} targets",
    )


def check_rank_condition(rng):
    """One column short of the rank leaves an error bounded away from zero."""
    smallest = np.inf
    for index in range(10):
        stream = rng.spawn(index)
        rank = 2 + index % 2
        target = random_bilinear_target(rank + 1, rank, 6, stream, position=2)
        smallest = min(smallest, rank_deficit_error(target, rank - 1))
    return CheckResult(
        "rank_condition",
        bool(smallest > RANK_DEFICIT_MIN_ERROR),
        float(smallest),
        RANK_DEFICIT_MIN_ERROR,
        "minimum error with d_h = rank - 1 (must exceed tolerance)",
    )


def _small_block(rng, d_model=5, d_inner=8, d_state=2, h_head=3, kernel_size=3):
    return Mamba2Params.initialize(
        d_model, d_inner, d_state, h_head, kernel_size, 1e-5, rng
    )


def check_unused_branches(rng):
    """Zeroing the z and dt projections leaves the block output untouched."""
    params = _small_block(rng.spawn(0))
    H = Tensor(rng.spawn(1).normal((2, 7, params.d_model)))
    z_width, x_width, _ = params.split_dims
    W_in = params.W_in.numpy()
    b_in = params.b_in.numpy()
    keep = np.zeros(params.projection_width, dtype=bool)
    keep[z_width : z_width + x_width] = True
    W_in[:, ~keep] = 0.0
    b_in[~keep] = 0.0
    zeroed = params.replace(W_in=Tensor(W_in), b_in=Tensor(b_in))
    original = mamba2_forward(H, params).data
    diff = np.max(np.abs(original - mamba2_forward(H, zeroed).data))
    return _at_most("unused_branches", diff, 1e-12)


def check_shapes(rng):
    """Split widths and head shape follow the configuration."""
    config = ModelConfig(d_in=3, pred_len=5, d_hidden=4, d_inner=6, d_state=2, h_head=3)
    model = NagaModel.initialize(config, rng)
    block = model.cells[0].mamba
    projected = project_in(Tensor(np.ones((4, config.d_hidden))), block)
    views = split3(projected, block.split_dims)
    widths = (views.z.shape[-1], views.x_bc.shape[-1], views.dt.shape[-1])
    expected = (config.d_inner, config.d_inner, 2 * config.d_state + config.h_head)
    head_ok = model.head.W_head.shape == (config.d_inner // 2, config.pred_len)
    mismatches = int(widths != expected) + int(not head_ok)
    return CheckResult(
        "split_widths_and_head",
        mismatches == 0,
        float(mismatches),
        0.0,
        f"widths {widths}, head {model.head.W_head.shape}",
    )


def check_causality(rng):
    """Outputs before a perturbed step do not move (convolution and block)."""
    params = _small_block(rng.spawn(0))
    T, t0 = 9, 5
    H = rng.spawn(1).normal((T, params.d_model))
    bumped = H.copy()
    bumped[t0:] += rng.spawn(2).normal((T - t0, params.d_model))

    def conv(values):
        channels = Tensor(values @ params.W_in.data[:, : params.d_inner])
        return causal_conv1d(channels, params.W_c, params.b_c).data

    def block(values):
        return mamba2_forward(Tensor(values), params).data

    leak = max(
        float(np.max(np.abs(fn(H)[:t0] - fn(bumped)[:t0]))) for fn in (conv, block)
    )
    return _at_most("causality", leak, 1e-12)


def check_centering(rng):
    """Feature layernorm leaves every position with zero mean."""
    x = Tensor(rng.normal((3, 11, 16), scale=4.0) + 2.5)
    means = np.mean(layernorm_feature(x, 1e-5).data, axis=-1)
    return _at_most("layernorm_centering", float(np.max(np.abs(means))), CENTERING_TOL)


def check_svd(rng):
    """Rank-2 matrices are rebuilt by their two-term factorization."""
    worst = 0.0
    for index in range(10):
        stream = rng.spawn(index)
        C = stream.normal((5, 2)) @ stream.normal((2, 5))
        rebuilt = svd_factorize(C, 2).reconstruct()
        worst = max(worst, float(np.linalg.norm(rebuilt - C) / np.linalg.norm(C)))
    return _at_most("svd_reconstruction", worst, SVD_RECONSTRUCTION_TOL)


def check_diagonal_form(rng):
    """The diagonal three-stage product matches the matrix form and the encoder."""
    d = 7
    x, y, w, v = (Tensor(rng.spawn(i).normal(d)) for i in range(4))
    staged = diag_vedic(x, y, w, v).data
    matrix_form = (np.diag(w.data) @ x.data) * (np.diag(v.data) @ y.data[::-1])

    w0, v0 = float(w.data[0]), float(v.data[0])
    constant = diag_vedic(x, x, Tensor(np.full(d, w0)), Tensor(np.full(d, v0))).data
    scalar_encoder = VedicParams(
        W1=Tensor([[w0]]),
        W2=Tensor([[v0]]),
        b1=Tensor(np.zeros(1)),
        b2=Tensor(np.zeros(1)),
    )
    encoded = vedic_encode(
        Tensor(x.data[:, None]), scalar_encoder, DropoutMask.ones((d, 1))
    ).data[:, 0]

    diff = max(
        float(np.max(np.abs(staged - matrix_form))),
        float(np.max(np.abs(constant - encoded))),
    )
    return _at_most("diagonal_form", diff, 1e-12)


def check_dropout_expectation(rng):
    """Inverted dropout keeps the mean multiplier at one."""
    mask = DropoutMask.sample(DROPOUT_SAMPLE_SHAPE, 0.1, rng)
    return _at_most(
        "dropout_expectation", abs(float(np.mean(mask.D.data)) - 1.0), DROPOUT_MEAN_TOL
    )


def check_plateau_stop(rng):
    """A flat validation curve stops exactly ``patience`` epochs after the first."""
    del rng
    stopper = EarlyStopping(patience=5, min_delta=1e-4)
    epoch = 0
    while not stopper.should_stop and epoch < 100:
        epoch += 1
        stopper.update(1.0, epoch)
    return CheckResult(
        "plateau_stop", epoch == 6, float(epoch), 6.0, "expected epoch 6"
    )


def run_verification(
    seed=DEFAULT_SEED, lemma2_w1=lemma2_grad_w1, lemma2_w2=lemma2_grad_w2
):
    """
    Run every check.

    Args:
        seed (int): Root seed; each check draws from its own spawned stream
        lemma2_w1 (callable): Closed-form dL/dW1 implementation under test
        lemma2_w2 (callable): Closed-form dL/dW2 implementation under test

    Returns:
        VerificationSummary: One result per check
    """
    root = Rng(seed)
    checks = [
        ("model_gradients", check_model_gradients),
        ("lemma2_grad_w1", lambda rng: check_closed_form_grad(rng, "W1", lemma2_w1)),
        ("lemma2_grad_w2", lambda rng: check_closed_form_grad(rng, "W2", lemma2_w2)),
        ("exact_recovery", check_exact_recovery),
        ("rank_condition", check_rank_condition),
        ("unused_branches", check_unused_branches),
        ("split_widths_and_head", check_shapes),
        ("causality", check_causality),
        ("layernorm_centering", check_centering),
        ("svd_reconstruction", check_svd),
        ("diagonal_form", check_diagonal_form),
        ("dropout_expectation", check_dropout_expectation),
        ("plateau_stop", check_plateau_stop),
    ]
    results = []
    for index, (name, check) in enumerate(checks):
        try:
            results.append(check(root.spawn(index)))
        except Exception as exc:  # pylint: disable=broad-except
            nan = float("nan")
            results.append(CheckResult(name, False, nan, nan, str(exc)))
    return VerificationSummary(seed=seed, results=tuple(results))
