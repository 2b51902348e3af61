import math
from dataclasses import replace

import numpy as np
import numpy.testing as npt
import pytest

from naga_forecaster.core.data import SplitSpec, build_windowed_dataset, synth_bilinear
from naga_forecaster.core.errors import UnsupportedTargetError
from naga_forecaster.core.model import ModelConfig
from naga_forecaster.core.rng import Rng
from naga_forecaster.core.theory import (
    BilinearTarget,
    CapacityGap,
    build_exact_vedic,
    capacity_gap,
    evaluate_readout,
    exact_readout_mse,
    random_bilinear_target,
    rank_deficit_error,
    svd_factorize,
    truncated_recovery_error,
)
from naga_forecaster.core.training import TrainConfig

SMALL_CONFIG = ModelConfig(
    d_in=4,
    pred_len=1,
    d_hidden=8,
    d_inner=8,
    d_state=2,
    h_head=2,
    kernel_size=2,
    num_cells=1,
    dropout_p=0.0,
)


class TestSvdFactorize:
    def test_rank_two_reconstruction(self, rng):
        C = rng.normal((5, 2)) @ rng.normal((2, 5))
        factors = svd_factorize(C, 2)
        assert factors.rank == 2
        npt.assert_allclose(factors.reconstruct(), C, atol=1e-10)

    def test_sign_convention(self, rng):
        factors = svd_factorize(rng.normal((4, 4)), 4)
        for i in range(4):
            column = factors.U[:, i]
            assert column[np.argmax(np.abs(column))] > 0

    def test_singular_values_descend(self, rng):
        alpha = svd_factorize(rng.normal((5, 5)), 5).alpha
        assert np.all(np.diff(alpha) <= 0)

    def test_truncation_is_best_approximation(self, rng):
        C = rng.normal((4, 4))
        singular = np.linalg.svd(C, compute_uv=False)
        residual = C - svd_factorize(C, 2).reconstruct()
        assert np.linalg.norm(residual) == pytest.approx(
            math.sqrt(np.sum(singular[2:] ** 2))
        )

    def test_zero_terms(self, rng):
        npt.assert_array_equal(svd_factorize(rng.normal((3, 3)), 0).reconstruct(), 0.0)

    def test_rank_out_of_range(self, rng):
        with pytest.raises(ValueError):
            svd_factorize(rng.normal((3, 3)), 4)


class TestBilinearTarget:
    def test_rank_and_mirror(self, rng):
        target = random_bilinear_target(5, 2, 6, rng, position=2)
        assert target.rank == 2
        assert target.t_prime == 5
        assert target.is_mirrored

    def test_evaluate_matches_formula(self, rng):
        target = random_bilinear_target(3, 1, 4, rng, position=1)
        X = rng.normal((4, 3))
        expected = X[0] @ target.C @ X[3] + np.sum(target.ell * X)
        assert target.evaluate(X) == pytest.approx(expected)
        assert target.evaluate(X[None]).shape == (1,)

    def test_from_synthetic_table(self, synth_table):
        target = BilinearTarget.from_table(synth_table)
        assert target.window == 4
        assert (target.t, target.t_prime) == (1, 4)
        assert target.rank == 1

    def test_position_outside_window(self):
        with pytest.raises(ValueError):
            BilinearTarget(C=np.eye(2), t=1, t_prime=5, ell=np.zeros((4, 2)))


class TestExactConstruction:
    @pytest.mark.parametrize(
        "d,rank,T,extra", [(1, 1, 1, 0), (4, 2, 5, 1), (6, 3, 10, 2)]
    )
    def test_reproduces_target(self, d, rank, T, extra):
        stream = Rng(d * 100 + T)
        target = random_bilinear_target(d, rank, T, stream)
        params, readout = build_exact_vedic(target, rank + extra)
        assert params.d_hidden == rank + extra
        X = stream.normal((32, T, d))
        npt.assert_allclose(
            evaluate_readout(X, params, readout), target.evaluate(X), atol=1e-8
        )

    def test_weights_hold_the_factors(self, rng):
        target = random_bilinear_target(4, 2, 5, rng, position=2)
        params, readout = build_exact_vedic(target, 3)
        factors = svd_factorize(target.C, 2)
        npt.assert_allclose(params.W1.data[:, :2], factors.U)
        npt.assert_allclose(params.W2.data[:, :2], factors.V)
        npt.assert_array_equal(params.W1.data[:, 2], 0.0)
        npt.assert_allclose(readout.hidden[1, :2], factors.alpha)
        assert np.count_nonzero(readout.hidden) == 2

    def test_non_mirrored_pair_is_unsupported(self):
        target = BilinearTarget(C=np.eye(2), t=1, t_prime=2, ell=np.zeros((4, 2)))
        with pytest.raises(UnsupportedTargetError):
            build_exact_vedic(target, 2)

    def test_width_below_rank(self, rng):
        with pytest.raises(ValueError):
            build_exact_vedic(random_bilinear_target(4, 3, 5, rng), 2)

    def test_synthetic_table_recovered_exactly(self, synth_table):
        assert exact_readout_mse(synth_table) < 1e-16

    def test_linear_synthetic_table(self):
        table = synth_bilinear(T=4, d_in=2, rank=0, noise=0.0, seed=1, n_rows=40)
        assert exact_readout_mse(table) < 1e-16


class TestRankCondition:
    def test_no_deficit_at_full_width(self, rng):
        target = random_bilinear_target(4, 3, 5, rng)
        assert rank_deficit_error(target, 3) < 1e-10

    def test_deficit_is_the_dropped_singular_value(self, rng):
        target = random_bilinear_target(4, 3, 5, rng, position=1)
        singular = np.linalg.svd(target.C, compute_uv=False)
        assert rank_deficit_error(target, 2) == pytest.approx(singular[2])
        assert rank_deficit_error(target, 2) > 1e-3

    def test_empirical_error_matches_bound(self):
        stream = Rng(21)
        target = random_bilinear_target(3, 2, 4, stream, position=1)
        bound = rank_deficit_error(target, 1)
        empirical = truncated_recovery_error(target, 1, 20000, stream)
        assert empirical == pytest.approx(bound, rel=0.1)

    def test_full_width_recovery_is_exact(self):
        stream = Rng(22)
        target = random_bilinear_target(3, 2, 4, stream, position=1)
        assert truncated_recovery_error(target, 2, 100, stream) < 1e-10


class TestCapacityGap:
    def test_ratio(self):
        assert CapacityGap(2.0, 0.5).ratio == 0.25
        assert CapacityGap(0.0, 0.0).ratio == 1.0
        assert math.isinf(CapacityGap(0.0, 0.1).ratio)

    def test_trains_both_encoders(self, tiny_config, tiny_dataset):
        gap = capacity_gap(
            tiny_dataset, tiny_config, TrainConfig(max_epochs=1, batch_size=32)
        )
        assert gap.linear_best_mse > 0
        assert gap.vedic_best_mse > 0
        assert gap.linear_best_mse != gap.vedic_best_mse


    def test_vedic_beats_linear_on_a_mirrored_target(self):
        ratios = []
        for seed in range(5):
            table = synth_bilinear(
                T=8, d_in=3, rank=1, noise=0.01, seed=seed, n_rows=800
            )
            dataset = build_windowed_dataset(
                table, SplitSpec.ratio(0.7, 0.15, 0.15), lookback=8, horizon=1
            )
            gap = capacity_gap(
                dataset,
                SMALL_CONFIG,
                TrainConfig(
                    max_epochs=40, patience=40, batch_size=32, lr=0.01, seed=seed
                ),
            )
            assert gap.vedic_best_mse < gap.linear_best_mse, f"seed {seed}"
            ratios.append(gap.ratio)
        assert np.mean(ratios) <= 0.5

    def test_linear_target_is_fit_by_both_encoders(self):
        table = synth_bilinear(T=4, d_in=2, rank=0, noise=0.0, seed=4, n_rows=400)
        dataset = build_windowed_dataset(
            table, SplitSpec.ratio(0.7, 0.15, 0.15), lookback=4, horizon=1
        )
        gap = capacity_gap(
            dataset,
            replace(SMALL_CONFIG, d_in=3),
            TrainConfig(max_epochs=200, patience=200, lr=0.01, weight_decay=0.0),
        )
        assert gap.linear_best_mse < 1e-3
        assert gap.vedic_best_mse < 1e-3
