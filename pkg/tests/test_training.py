from dataclasses import replace

import numpy as np
import numpy.testing as npt
import pytest

from naga_forecaster.core.data import SplitSpec, build_windowed_dataset, synth_bilinear
from naga_forecaster.core.errors import DimensionError, NonFiniteLossError
from naga_forecaster.core.model import ModelConfig, NagaModel
from naga_forecaster.core.rng import Rng
from naga_forecaster.core.tensor import Tensor
from naga_forecaster.core.training import (
    AdamState,
    EarlyStopping,
    TrainConfig,
    adam_step,
    evaluate,
    loss_and_grads,
    metrics,
    mse_loss,
    predict,
    train,
)


class TestLossAndMetrics:
    def test_mse_loss_is_batch_mean_of_squared_norms(self):
        loss = mse_loss(Tensor(np.zeros((2, 3))), Tensor(np.ones((2, 3))))
        assert loss.shape == ()
        assert loss.item() == pytest.approx(3.0)

    def test_mse_loss_shape_mismatch(self):
        with pytest.raises(DimensionError):
            mse_loss(Tensor(np.zeros((2, 3))), Tensor(np.zeros((3, 2))))

    def test_metrics_are_per_element(self):
        result = metrics(np.array([[1.0, 3.0]]), np.array([[0.0, 0.0]]))
        assert result.mse == pytest.approx(5.0)
        assert result.mae == pytest.approx(2.0)
        assert result.rmse == pytest.approx(np.sqrt(5.0))

    def test_perfect_prediction(self):
        y = Tensor(np.arange(6.0).reshape(3, 2))
        assert metrics(y, y) == (0.0, 0.0, 0.0)


class TestAdam:
    def test_first_step_moves_by_learning_rate(self):
        cfg = TrainConfig(lr=0.01, weight_decay=0.0)
        params = {"w": Tensor([1.0, -2.0, 0.5])}
        gradients = {"w": Tensor([0.3, -4.0, 2.0])}
        new_params, state = adam_step(params, gradients, AdamState.zeros(params), cfg)
        g = gradients["w"].data
        npt.assert_allclose(
            new_params["w"].data, params["w"].data - 0.01 * g / (np.abs(g) + 1e-8)
        )
        assert state.step == 1

    def test_weight_decay_is_added_to_the_gradient(self):
        cfg = TrainConfig(lr=0.1, weight_decay=1e-2)
        params = {"w": Tensor([2.0, -3.0])}
        gradients = {"w": Tensor([0.0, 0.0])}
        new_params, _ = adam_step(params, gradients, AdamState.zeros(params), cfg)
        npt.assert_allclose(new_params["w"].data, [1.9, -2.9], atol=1e-6)

    def test_moments_update(self):
        cfg = TrainConfig(weight_decay=0.0)
        params = {"w": Tensor([1.0])}
        state = AdamState.zeros(params)
        for _ in range(3):
            params, state = adam_step(params, {"w": Tensor([2.0])}, state, cfg)
        assert state.step == 3
        npt.assert_allclose(state.m["w"], 2.0 * (1 - 0.9**3))
        npt.assert_allclose(state.v["w"], 4.0 * (1 - 0.999**3))

    @pytest.mark.parametrize(
        "changes", [{"lr": 0.0}, {"batch_size": 0}, {"patience": 0}, {"seed": -1}]
    )
    def test_config_validation(self, changes):
        with pytest.raises(ValueError):
            TrainConfig(**changes)


class TestEarlyStopping:
    def test_plateau_stops_after_patience(self):
        stopper = EarlyStopping(patience=5, min_delta=1e-4)
        epoch = 0
        while not stopper.should_stop:
            epoch += 1
            stopper.update(1.0, epoch)
        assert epoch == 6
        assert stopper.best_epoch == 1

    def test_improvement_resets_counter(self):
        stopper = EarlyStopping(patience=2, min_delta=0.0)
        assert stopper.update(1.0, 1)
        assert not stopper.update(1.0, 2)
        assert stopper.update(0.5, 3)
        assert stopper.counter == 0
        assert not stopper.should_stop

    def test_improvement_below_min_delta_does_not_count(self):
        stopper = EarlyStopping(patience=1, min_delta=0.1)
        stopper.update(1.0, 1)
        assert not stopper.update(0.95, 2)
        assert stopper.should_stop
        assert stopper.best_loss == 1.0


class TestTraining:
    def test_loss_and_grads_cover_every_parameter(self, tiny_config, tiny_dataset):
        model = NagaModel.initialize(tiny_config, Rng(0))
        X, y = tiny_dataset.train.batch(np.arange(8))
        loss, gradients = loss_and_grads(model, Tensor(X), Tensor(y), Rng(1))
        assert np.isfinite(loss)
        assert set(gradients) == set(model.parameters())

    def test_predict_shape(self, tiny_config, tiny_dataset):
        model = NagaModel.initialize(tiny_config, Rng(0))
        out = predict(model, tiny_dataset.val, batch_size=5)
        assert out.shape == (len(tiny_dataset.val), 2)
        npt.assert_allclose(out, predict(model, tiny_dataset.val))

    def test_report_structure(self, tiny_config, tiny_dataset, fast_train_config):
        model = NagaModel.initialize(tiny_config, Rng(0))
        report = train(model, tiny_dataset, fast_train_config)
        assert 1 <= report.stop_epoch <= fast_train_config.max_epochs
        assert len(report.history) == report.stop_epoch
        assert report.best_epoch <= report.stop_epoch
        assert report.runtime_seconds >= 0.0
        assert report.parameter_count == model.parameter_count()
        assert report.test == evaluate(report.model, tiny_dataset.test)

    def test_same_seed_is_bit_identical(
        self, tiny_config, tiny_dataset, fast_train_config
    ):
        reports = [
            train(
                NagaModel.initialize(tiny_config, Rng(7)),
                tiny_dataset,
                fast_train_config,
            )
            for _ in range(2)
        ]
        assert reports[0].train_losses == reports[1].train_losses
        assert reports[0].val_losses == reports[1].val_losses
        assert reports[0].test == reports[1].test

    def test_different_seed_changes_the_run(
        self, tiny_config, tiny_dataset, fast_train_config
    ):
        first = train(
            NagaModel.initialize(tiny_config, Rng(7)), tiny_dataset, fast_train_config
        )
        second = train(
            NagaModel.initialize(tiny_config, Rng(7)),
            tiny_dataset,
            replace(fast_train_config, seed=8),
        )
        assert first.train_losses != second.train_losses

    def test_flat_validation_stops_after_patience(self, tiny_config, tiny_dataset):
        cfg = TrainConfig(lr=1e-12, max_epochs=20, batch_size=64)
        report = train(NagaModel.initialize(tiny_config, Rng(0)), tiny_dataset, cfg)
        assert report.stop_epoch == cfg.patience + 1
        assert report.best_epoch == 1

    def test_training_reduces_loss(self, tiny_config, tiny_dataset):
        cfg = TrainConfig(lr=0.01, max_epochs=6, patience=6, batch_size=16)
        report = train(NagaModel.initialize(tiny_config, Rng(0)), tiny_dataset, cfg)
        assert min(report.train_losses[1:]) < report.train_losses[0]

    def test_verbose_prints_epochs(self, tiny_config, tiny_dataset, capsys):
        cfg = TrainConfig(max_epochs=1)
        model = NagaModel.initialize(tiny_config, Rng(0))
        train(model, tiny_dataset, cfg, verbose=True)
        assert "Epoch   1/1" in capsys.readouterr().out

    def test_linear_target_is_learned(self):
        table = synth_bilinear(T=4, d_in=2, rank=0, noise=0.0, seed=4, n_rows=400)
        dataset = build_windowed_dataset(
            table, SplitSpec.ratio(0.7, 0.15, 0.15), lookback=4, horizon=1
        )
        config = ModelConfig(
            d_in=3,
            pred_len=1,
            d_hidden=8,
            d_inner=8,
            d_state=2,
            h_head=2,
            kernel_size=2,
            num_cells=1,
            dropout_p=0.0,
        )
        cfg = TrainConfig(lr=0.01, weight_decay=0.0, max_epochs=200, patience=200)
        report = train(NagaModel.initialize(config, Rng(0)), dataset, cfg)
        assert min(report.train_losses) < 1e-3

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_diverging_run_reports_where_the_loss_broke(
        self, tiny_config, tiny_dataset
    ):
        cfg = TrainConfig(lr=1e200, weight_decay=0.0, batch_size=32)
        model = NagaModel.initialize(tiny_config, Rng(0))
        with pytest.raises(NonFiniteLossError) as exc:
            train(model, tiny_dataset, cfg)
        assert exc.value.epoch == 1
        assert exc.value.batch_index == 1
        assert not np.isfinite(exc.value.loss)
