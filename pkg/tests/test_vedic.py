import numpy as np
import numpy.testing as npt
import pytest

from naga_forecaster.core.autodiff import GradTape, grads
from naga_forecaster.core.errors import DimensionError
from naga_forecaster.core.ops import hadamard, sum_all
from naga_forecaster.core.rng import Rng
from naga_forecaster.core.tensor import Tensor
from naga_forecaster.core.vedic import (
    DropoutMask,
    VedicParams,
    diag_vedic,
    lemma2_grad_w1,
    lemma2_grad_w2,
    vedic_encode,
)


def make_params(rng, d_in=3, d_hidden=4, biases=True, p=0.0):
    def bias():
        return rng.normal(d_hidden) if biases else np.zeros(d_hidden)

    return VedicParams(
        W1=Tensor(rng.normal((d_in, d_hidden))),
        W2=Tensor(rng.normal((d_in, d_hidden))),
        b1=Tensor(bias()),
        b2=Tensor(bias()),
        p=p,
    )


class TestEncode:
    def test_mirrored_product(self, rng):
        params = make_params(rng)
        X = rng.normal((5, 3))
        out = vedic_encode(Tensor(X), params, DropoutMask.ones((5, 4))).data
        expected = (X @ params.W1.data + params.b1.data) * (
            X[::-1] @ params.W2.data + params.b2.data
        )
        npt.assert_allclose(out, expected)

    def test_flip_off_pairs_each_step_with_itself(self, rng):
        params = make_params(rng)
        X = rng.normal((5, 3))
        out = vedic_encode(
            Tensor(X), params, DropoutMask.ones((5, 4)), use_flip=False
        ).data
        expected = (X @ params.W1.data + params.b1.data) * (
            X @ params.W2.data + params.b2.data
        )
        npt.assert_allclose(out, expected)

    def test_mask_multiplies_output(self, rng):
        params = make_params(rng, p=0.5)
        X = Tensor(rng.normal((6, 3)))
        mask = DropoutMask.sample((6, 4), 0.5, rng)
        plain = vedic_encode(X, params, DropoutMask.ones((6, 4))).data
        masked = vedic_encode(X, params, mask).data
        npt.assert_allclose(masked, plain * mask.D.data)

    def test_batch_matches_single_sequences(self, rng):
        params = make_params(rng)
        X = rng.normal((3, 5, 3))
        batched = vedic_encode(Tensor(X), params, DropoutMask.ones((3, 5, 4))).data
        for b in range(3):
            single = vedic_encode(Tensor(X[b]), params, DropoutMask.ones((5, 4))).data
            npt.assert_allclose(batched[b], single)

    def test_single_step_squares_the_projection(self, rng):
        params = make_params(rng, biases=False)
        x = rng.normal((1, 3))
        out = vedic_encode(Tensor(x), params, DropoutMask.ones((1, 4))).data
        npt.assert_allclose(out, (x @ params.W1.data) * (x @ params.W2.data))

    def test_input_width_mismatch(self, rng):
        params = make_params(rng)
        with pytest.raises(DimensionError):
            vedic_encode(Tensor(np.ones((5, 2))), params, DropoutMask.ones((5, 4)))

    def test_mask_shape_mismatch(self, rng):
        params = make_params(rng)
        with pytest.raises(DimensionError):
            vedic_encode(Tensor(np.ones((5, 3))), params, DropoutMask.ones((4, 4)))

    def test_params_validation(self, rng):
        with pytest.raises(DimensionError):
            VedicParams(
                W1=Tensor(np.ones((3, 4))),
                W2=Tensor(np.ones((3, 5))),
                b1=Tensor(np.zeros(4)),
                b2=Tensor(np.zeros(4)),
            )
        with pytest.raises(ValueError):
            make_params(rng, p=1.0)

    def test_degree_two_homogeneity(self, rng):
        params = make_params(rng, biases=False)
        X = rng.normal((2, 5, 3))
        mask = DropoutMask.ones((2, 5, 4))
        base = vedic_encode(Tensor(X), params, mask).data
        for c in (-1.5, 0.3, 4.0):
            scaled = vedic_encode(Tensor(c * X), params, mask).data
            npt.assert_allclose(scaled, c**2 * base, rtol=1e-12, atol=1e-12)

    def test_flip_is_invisible_on_a_constant_sequence(self, rng):
        params = make_params(rng)
        X = Tensor(np.tile(rng.normal((1, 3)), (6, 1)))
        mask = DropoutMask.ones((6, 4))
        npt.assert_array_equal(
            vedic_encode(X, params, mask).data,
            vedic_encode(X, params, mask, use_flip=False).data,
        )

    def test_two_step_example(self):
        params = VedicParams(
            W1=Tensor([[1.0]]),
            W2=Tensor([[1.0]]),
            b1=Tensor(np.zeros(1)),
            b2=Tensor(np.zeros(1)),
        )
        out = vedic_encode(Tensor([[2.0], [3.0]]), params, DropoutMask.ones((2, 1)))
        npt.assert_array_equal(out.data, [[6.0], [6.0]])

    def test_matches_scalar_loops(self):
        draw = np.random.default_rng(2024)
        for instance in range(200):
            T, d_in, d_hidden = (int(n) for n in draw.integers(1, [9, 6, 6]))
            stream = Rng(instance)
            params = make_params(stream, d_in, d_hidden, p=0.3)
            X = stream.normal((T, d_in))
            mask = DropoutMask.sample((T, d_hidden), 0.3, stream)
            out = vedic_encode(Tensor(X), params, mask).data

            W1, W2 = params.W1.data, params.W2.data
            b1, b2 = params.b1.data, params.b2.data
            expected = np.zeros((T, d_hidden))
            for t in range(T):
                for j in range(d_hidden):
                    left = b1[j]
                    right = b2[j]
                    for i in range(d_in):
                        left += X[t, i] * W1[i, j]
                        right += X[T - 1 - t, i] * W2[i, j]
                    expected[t, j] = left * right * mask.D.data[t, j]
            npt.assert_allclose(out, expected, rtol=1e-12, atol=1e-12)


class TestDropoutMask:
    def test_zero_probability_is_identity(self, rng):
        mask = DropoutMask.sample((4, 3), 0.0, rng)
        npt.assert_array_equal(mask.D.data, np.ones((4, 3)))

    def test_values_are_zero_or_rescaled(self, rng):
        mask = DropoutMask.sample((50, 20), 0.25, rng)
        assert set(np.unique(mask.D.data)) <= {0.0, 1.0 / 0.75}
        npt.assert_allclose(mask.D.data, mask.pattern / 0.75)

    def test_mean_multiplier_is_one(self, rng):
        mask = DropoutMask.sample((200, 64, 8), 0.1, rng)
        assert abs(mask.D.data.mean() - 1.0) < 1e-2

    @pytest.mark.parametrize("p", [-0.1, 1.0])
    def test_invalid_probability(self, rng, p):
        with pytest.raises(ValueError):
            DropoutMask.sample((2, 2), p, rng)

    def test_masked_output_is_unbiased(self, rng):
        params = make_params(rng, p=0.5)
        X = rng.normal((4, 3))
        draws = 100_000
        mask = DropoutMask.sample((draws, 4, 4), 0.5, rng)
        batch = Tensor(np.broadcast_to(X, (draws, 4, 3)))
        masked = vedic_encode(batch, params, mask).data
        plain = vedic_encode(Tensor(X), params, DropoutMask.ones((4, 4))).data
        npt.assert_allclose(masked.mean(axis=0), plain, rtol=0.02)


class TestClosedFormGradients:
    def _autodiff(self, X, params, mask, delta):
        tape = GradTape()
        with tape:
            tape.watch_all(params.tensors())
            loss = sum_all(hadamard(vedic_encode(X, params, mask), delta))
        return grads(tape, loss, ["W1", "W2"])

    @pytest.mark.parametrize("T,d_in,d_hidden", [(1, 1, 1), (4, 3, 2), (7, 2, 5)])
    def test_matches_autodiff(self, rng, T, d_in, d_hidden):
        params = make_params(rng, d_in, d_hidden, biases=False, p=0.2)
        X = Tensor(rng.normal((T, d_in)))
        mask = DropoutMask.sample((T, d_hidden), 0.2, rng)
        delta = Tensor(rng.normal((T, d_hidden)))
        expected = self._autodiff(X, params, mask, delta)
        npt.assert_allclose(
            lemma2_grad_w1(X, params, mask, delta).data,
            expected["W1"].data,
            atol=1e-10,
        )
        npt.assert_allclose(
            lemma2_grad_w2(X, params, mask, delta).data,
            expected["W2"].data,
            atol=1e-10,
        )

    def test_entry_formula(self, rng):
        params = make_params(rng, 2, 3, biases=False)
        X = rng.normal((4, 2))
        delta = rng.normal((4, 3))
        mask = DropoutMask.ones((4, 3))
        grad = lemma2_grad_w1(Tensor(X), params, mask, Tensor(delta)).data
        W2 = params.W2.data
        a, i = 1, 2
        expected = sum(
            delta[t, i] * (W2[:, i] @ X[3 - t]) * X[t, a] for t in range(4)
        )
        npt.assert_allclose(grad[a, i], expected)

    def test_requires_zero_biases(self, rng):
        params = make_params(rng, biases=True)
        X = Tensor(rng.normal((3, 3)))
        with pytest.raises(ValueError):
            lemma2_grad_w1(X, params, DropoutMask.ones((3, 4)), Tensor(np.ones((3, 4))))

    def test_delta_shape_checked(self, rng):
        params = make_params(rng, biases=False)
        X = Tensor(rng.normal((3, 3)))
        with pytest.raises(DimensionError):
            lemma2_grad_w2(X, params, DropoutMask.ones((3, 4)), Tensor(np.ones((3, 2))))


class TestDiagonalForm:
    def test_staged_product(self, rng):
        x, y, w, v = (rng.normal(5) for _ in range(4))
        out = diag_vedic(Tensor(x), Tensor(y), Tensor(w), Tensor(v)).data
        npt.assert_allclose(out, (x * w) * (y[::-1] * v))

    def test_matches_scalar_encoder_on_one_sequence(self, rng):
        x = rng.normal(6)
        w0, v0 = 0.7, -1.3
        staged = diag_vedic(
            Tensor(x), Tensor(x), Tensor(np.full(6, w0)), Tensor(np.full(6, v0))
        ).data
        params = VedicParams(
            W1=Tensor([[w0]]),
            W2=Tensor([[v0]]),
            b1=Tensor(np.zeros(1)),
            b2=Tensor(np.zeros(1)),
        )
        encoded = vedic_encode(
            Tensor(x[:, None]), params, DropoutMask.ones((6, 1))
        ).data[:, 0]
        npt.assert_allclose(staged, encoded)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            diag_vedic(
                Tensor(np.ones(3)),
                Tensor(np.ones(3)),
                Tensor(np.ones(2)),
                Tensor(np.ones(3)),
            )
