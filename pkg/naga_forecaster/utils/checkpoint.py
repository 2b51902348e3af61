"""
Checkpoint persistence for the Naga forecaster.
Stores trained parameters as versioned JSON so a model reloads bit-exactly.
"""

import hashlib
import json
import os

import numpy as np

from config import CHECKPOINT_FORMAT, CHECKPOINT_VERSION

from ..core.model import ModelConfig, NagaModel
from ..core.rng import Rng
from ..core.tensor import Tensor


def get_config_fingerprint(config):
    """
    Generate a stable fingerprint for a model configuration.

    Uses SHA-256 over the sorted JSON form, so it does not depend on the
    session like the built-in hash() does.

    Args:
        config (ModelConfig): Architecture

    Returns:
        int: Stable hash-based fingerprint (6 digits)
    """
    payload = json.dumps(config.to_dict(), sort_keys=True)
    sha256_hash = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    return int(sha256_hash, 16) % 1000000


def model_from_parameters(config, arrays):
    """
    Build a model of ``config`` holding the given parameter arrays.

    Args:
        config (ModelConfig): Architecture
        arrays (dict): Parameter name -> ndarray, one entry per parameter

    Returns:
        NagaModel: Model with exactly these values
    """
    skeleton = NagaModel.initialize(config, Rng(0))
    expected = skeleton.parameters()
    if set(arrays) != set(expected):
        raise ValueError(
            "Parameters do not match the configuration: "
            f"{sorted(set(arrays) ^ set(expected))}"
        )
    return skeleton.with_parameters(
        {name: Tensor(values) for name, values in arrays.items()}
    )


def save_checkpoint(path, model):
    """
    Write a model to ``path``.

    Floats are written with Python's shortest round-trip repr.

    Args:
        path (str): Destination file
        model (NagaModel): Model to store
    """
    document = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "fingerprint": get_config_fingerprint(model.config),
        "config": model.config.to_dict(),
        "parameters": {
            name: {"shape": list(tensor.shape), "data": tensor.data.ravel().tolist()}
            for name, tensor in model.parameters().items()
        },
    }
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f)


def _read_document(path):
    with open(path, "r", encoding="utf-8") as f:
        document = json.load(f)
    if document.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"'{path}' is not a {CHECKPOINT_FORMAT} file")
    if document.get("version") != CHECKPOINT_VERSION:
        raise ValueError(
            f"Unsupported checkpoint version {document.get('version')} "
            f"(expected {CHECKPOINT_VERSION})"
        )
    return document


def load_checkpoint(path):
    """
    Rebuild a model saved by ``save_checkpoint``.

    Args:
        path (str): Checkpoint file

    Returns:
        NagaModel: Model with the stored parameters
    """
    document = _read_document(path)
    config = ModelConfig(**document["config"])
    if get_config_fingerprint(config) != document.get("fingerprint"):
        raise ValueError(f"Fingerprint mismatch in '{path}'")

    arrays = {
        name: np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in document["parameters"].items()
    }
    return model_from_parameters(config, arrays)


def describe_checkpoint(path):
    """
    Get summary information about a checkpoint without rebuilding it.

    Returns:
        dict: Summary or None if missing/unreadable
    """
    try:
        if os.path.exists(path):
            document = _read_document(path)
            return {
                "fingerprint": document["fingerprint"],
                "config": document["config"],
                "parameter_count": sum(
                    int(np.prod(entry["shape"]))
                    for entry in document["parameters"].values()
                ),
            }
    except (OSError, ValueError, KeyError) as e:
        print(f"⚠️  Warning: Could not read checkpoint: {e}")
    return None
