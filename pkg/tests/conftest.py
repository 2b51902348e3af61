"""Shared fixtures: tiny models, a small synthetic series and a gradient checker."""

import numpy as np
import pytest

from naga_forecaster.core.autodiff import GradTape, finite_diff, grads
from naga_forecaster.core.data import SplitSpec, build_windowed_dataset, synth_bilinear
from naga_forecaster.core.model import ModelConfig
from naga_forecaster.core.rng import Rng
from naga_forecaster.core.training import TrainConfig

TINY_CONFIG_TEXT = """\
# tiny synthetic experiment
synth = bilinear
synth_rows = 120
synth_window = 4
synth_features = 2
lookback = 4
pred_len = 2
repeats = 1
d_hidden = 4
d_inner = 4
d_state = 1
h_head = 1
kernel_size = 2
max_epochs = 2
batch_size = 32
"""


@pytest.fixture
def rng():
    return Rng(1234)


@pytest.fixture
def tiny_config():
    return ModelConfig(
        d_in=3,
        pred_len=2,
        d_hidden=4,
        d_inner=4,
        d_state=1,
        h_head=1,
        kernel_size=2,
        num_cells=2,
        dropout_p=0.1,
    )


@pytest.fixture(scope="session")
def synth_table():
    return synth_bilinear(T=4, d_in=2, rank=1, noise=0.0, seed=3, n_rows=120)


@pytest.fixture(scope="session")
def tiny_dataset(synth_table):
    return build_windowed_dataset(
        synth_table, SplitSpec.ratio(0.7, 0.15, 0.15), lookback=4, horizon=2
    )


@pytest.fixture
def fast_train_config():
    return TrainConfig(max_epochs=2, batch_size=32, patience=2)


@pytest.fixture
def tiny_config_file(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY_CONFIG_TEXT, encoding="utf-8")
    return path


@pytest.fixture
def check_gradient():
    """Compare the taped gradient of ``build_loss`` at ``x`` with finite differences."""

    def check(build_loss, x, tol=1e-6):
        tape = GradTape()
        with tape:
            tape.watch("x", x)
            loss = build_loss(x)
        analytic = grads(tape, loss)["x"].data
        numeric = finite_diff(build_loss, x).data
        denominator = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-3)
        assert np.max(np.abs(analytic - numeric) / denominator) < tol

    return check
