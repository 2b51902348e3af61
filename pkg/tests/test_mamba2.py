import numpy as np
import numpy.testing as npt
import pytest

from naga_forecaster.core.errors import DimensionError
from naga_forecaster.core.mamba2 import Mamba2Params, mamba2_forward, project_in, split3
from naga_forecaster.core.ops import causal_conv1d, layernorm_feature, silu
from naga_forecaster.core.tensor import Tensor


def make_block(rng, d_model=5, d_inner=6, d_state=2, h_head=3, kernel_size=3):
    params = Mamba2Params.initialize(
        d_model, d_inner, d_state, h_head, kernel_size, 1e-5, rng
    )
    # Non-zero biases so every term of the block is exercised.
    return params.replace(
        b_in=Tensor(rng.normal(params.projection_width)),
        b_c=Tensor(rng.normal(d_inner)),
    )


def test_projection_width_and_split(rng):
    params = make_block(rng)
    assert params.projection_width == 2 * 6 + 2 * 2 + 3
    Z = project_in(Tensor(rng.normal((4, 5))), params)
    views = split3(Z, params.split_dims)
    assert views.z.shape == (4, 6)
    assert views.x_bc.shape == (4, 6)
    assert views.dt.shape == (4, 7)
    npt.assert_array_equal(views.x_bc.data, Z.data[:, 6:12])


def test_split_rejects_wrong_widths(rng):
    with pytest.raises(DimensionError):
        split3(Tensor(np.ones((2, 10))), (4, 4, 3))


def test_project_in_rejects_wrong_width(rng):
    params = make_block(rng)
    with pytest.raises(DimensionError):
        project_in(Tensor(np.ones((3, 4))), params)


def test_forward_shape(rng):
    params = make_block(rng)
    assert mamba2_forward(Tensor(rng.normal((2, 7, 5))), params).shape == (2, 7, 3)
    assert mamba2_forward(Tensor(rng.normal((7, 5))), params).shape == (7, 3)


def test_forward_matches_manual_pipeline(rng):
    params = make_block(rng)
    H = rng.normal((7, 5))
    Z = H @ params.W_in.data + params.b_in.data
    x_bc = Tensor(Z[:, 6:12])
    conv = causal_conv1d(x_bc, params.W_c, params.b_c)
    expected = layernorm_feature(silu(conv), 1e-5).data[:, :3]
    npt.assert_allclose(mamba2_forward(Tensor(H), params).data, expected)


def test_z_and_dt_do_not_influence_output(rng):
    params = make_block(rng)
    H = Tensor(rng.normal((2, 6, 5)))
    W_in = params.W_in.numpy()
    b_in = params.b_in.numpy()
    W_in[:, :6] = rng.normal((5, 6))
    W_in[:, 12:] = 0.0
    b_in[12:] = 100.0
    changed = params.replace(W_in=Tensor(W_in), b_in=Tensor(b_in))
    npt.assert_allclose(
        mamba2_forward(H, params).data, mamba2_forward(H, changed).data, atol=1e-12
    )


def test_block_is_causal(rng):
    params = make_block(rng)
    H = rng.normal((9, 5))
    bumped = H.copy()
    bumped[6:] = rng.normal((3, 5))
    before = mamba2_forward(Tensor(H), params).data
    after = mamba2_forward(Tensor(bumped), params).data
    npt.assert_allclose(before[:6], after[:6], atol=1e-12)


def test_odd_inner_width_rejected(rng):
    with pytest.raises(ValueError):
        Mamba2Params.initialize(4, 5, 2, 2, 3, 1e-5, rng)


def test_conv_weight_shape_checked(rng):
    params = make_block(rng)
    with pytest.raises(DimensionError):
        params.replace(W_c=Tensor(np.zeros((3, 6, 4))))
