import json
from dataclasses import replace

import numpy.testing as npt
import pytest

from naga_forecaster.core.model import NagaModel
from naga_forecaster.core.rng import Rng
from naga_forecaster.core.tensor import Tensor
from naga_forecaster.utils.checkpoint import (
    describe_checkpoint,
    get_config_fingerprint,
    load_checkpoint,
    model_from_parameters,
    save_checkpoint,
)


@pytest.fixture
def model(tiny_config):
    return NagaModel.initialize(tiny_config, Rng(3))


def test_reload_is_bit_exact(model, tmp_path, rng):
    path = str(tmp_path / "model.json")
    save_checkpoint(path, model)
    loaded = load_checkpoint(path)
    assert loaded.config == model.config
    for name, tensor in model.parameters().items():
        npt.assert_array_equal(loaded.parameters()[name].data, tensor.data)
    X = Tensor(rng.normal((2, 5, 3)))
    npt.assert_array_equal(loaded.forward(X).data, model.forward(X).data)


def test_creates_parent_directories(model, tmp_path):
    path = tmp_path / "nested" / "dir" / "model.json"
    save_checkpoint(str(path), model)
    assert path.exists()


def test_fingerprint_is_stable_and_config_sensitive(tiny_config):
    assert get_config_fingerprint(tiny_config) == get_config_fingerprint(
        replace(tiny_config)
    )
    assert 0 <= get_config_fingerprint(tiny_config) < 1000000
    assert get_config_fingerprint(tiny_config) != get_config_fingerprint(
        replace(tiny_config, d_hidden=8)
    )


def test_tampered_fingerprint_is_rejected(model, tmp_path):
    path = tmp_path / "model.json"
    save_checkpoint(str(path), model)
    document = json.loads(path.read_text(encoding="utf-8"))
    document["fingerprint"] = (document["fingerprint"] + 1) % 1000000
    path.write_text(json.dumps(document), encoding="utf-8")
    with pytest.raises(ValueError, match="Fingerprint"):
        load_checkpoint(str(path))


def test_foreign_file_is_rejected(tmp_path):
    path = tmp_path / "other.json"
    path.write_text(json.dumps({"format": "something-else"}), encoding="utf-8")
    with pytest.raises(ValueError):
        load_checkpoint(str(path))


def test_model_from_parameters_checks_names(model):
    arrays = {name: t.numpy() for name, t in model.parameters().items()}
    rebuilt = model_from_parameters(model.config, arrays)
    npt.assert_array_equal(
        rebuilt.parameters()["head.W_head"].data, arrays["head.W_head"]
    )
    del arrays["head.b_head"]
    with pytest.raises(ValueError):
        model_from_parameters(model.config, arrays)


def test_describe_checkpoint(model, tmp_path):
    path = str(tmp_path / "model.json")
    save_checkpoint(path, model)
    info = describe_checkpoint(path)
    assert info["parameter_count"] == model.parameter_count()
    assert info["config"]["d_hidden"] == 4
    assert info["fingerprint"] == get_config_fingerprint(model.config)


def test_describe_missing_or_corrupt(tmp_path, capsys):
    assert describe_checkpoint(str(tmp_path / "absent.json")) is None
    corrupt = tmp_path / "corrupt.json"
    corrupt.write_text("{not json", encoding="utf-8")
    assert describe_checkpoint(str(corrupt)) is None
    assert "Could not read checkpoint" in capsys.readouterr().out
