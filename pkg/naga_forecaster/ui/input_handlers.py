"""
Input handlers for the Naga forecaster.
Reads experiment configuration files and command-line overrides and
validates them into an ExperimentConfig.

Configuration files use one ``key = value`` pair per line; ``#`` starts a
comment and blank lines are ignored. Example::

    data = ETTh1.csv
    target = OT
    split = 0.7, 0.15, 0.15
    lookback = 96
    pred_len = 96
    repeats = 3
"""

import os

from config import DEFAULT_SPLIT_RATIOS

from ..core.data import SplitSpec
from ..core.errors import ConfigError
from ..core.experiment import ExperimentConfig, SynthSpec
from ..core.training import TrainConfig

TRUE_WORDS = ("1", "true", "yes", "on")
FALSE_WORDS = ("0", "false", "no", "off")

ARCHITECTURE_KEYS = {
    "d_hidden": int,
    "d_inner": int,
    "d_state": int,
    "h_head": int,
    "kernel_size": int,
    "num_cells": int,
    "use_vedic": bool,
    "use_flip": bool,
    "mask_prob": float,
    "dropout_p": float,
    "ln_eps": float,
}
TRAIN_KEYS = {
    "lr": float,
    "weight_decay": float,
    "batch_size": int,
    "seed": int,
    "patience": int,
    "min_delta": float,
    "max_epochs": int,
    "beta1": float,
    "beta2": float,
    "adam_eps": float,
}
SYNTH_KEYS = {
    "synth_rows": ("rows", int),
    "synth_window": ("window", int),
    "synth_features": ("features", int),
    "synth_rank": ("rank", int),
    "synth_noise": ("noise", float),
    "synth_seed": ("seed", int),
    "synth_position": ("position", int),
}
EXPERIMENT_KEYS = {
    "label": str,
    "data": str,
    "target": str,
    "synth": str,
    "split": str,
    "split_mode": str,
    "lookback": int,
    "pred_len": int,
    "repeats": int,
    "out": str,
}
KNOWN_KEYS = (
    set(ARCHITECTURE_KEYS) | set(TRAIN_KEYS) | set(SYNTH_KEYS) | set(EXPERIMENT_KEYS)
)


def parse_config_file(path):
    """
    Read a ``key = value`` configuration file.

    Args:
        path (str): Configuration file path

    Returns:
        dict: Key -> raw string value
    """
    try:
        with open(os.path.expanduser(path), "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise ConfigError(f"Could not read config file '{path}': {e}") from e

    values = {}
    for number, line in enumerate(lines, start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError(f"{path}, line {number}: expected 'key = value'")
        key, value = (part.strip() for part in content.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{path}, line {number}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"{path}, line {number}: duplicate key '{key}'")
        values[key] = value
    return values


def parse_override(text):
    """
    Split a ``--set key=value`` argument.

    Returns:
        tuple: (key, value)
    """
    if "=" not in text:
        raise ConfigError(f"Override '{text}' must look like key=value")
    key, value = (part.strip() for part in text.split("=", 1))
    if key not in KNOWN_KEYS:
        raise ConfigError(f"Unknown override key '{key}'")
    return key, value


def _convert(key, raw, kind):
    if kind is bool:
        word = raw.strip().lower()
        if word in TRUE_WORDS:
            return True
        if word in FALSE_WORDS:
            return False
        raise ConfigError(f"'{key}' expects true/false, got '{raw}'")
    try:
        return kind(raw)
    except ValueError as e:
        raise ConfigError(f"'{key}' expects {kind.__name__}, got '{raw}'") from e


def parse_number_list(text, kind=float, name="value"):
    """
    Parse a comma-separated list such as ``96,192,336``.

    Returns:
        list: Converted numbers (at least one)
    """
    items = [item.strip() for item in str(text).split(",") if item.strip()]
    if not items:
        raise ConfigError(f"Expected a comma-separated list of {name}s")
    return [_convert(name, item, kind) for item in items]


def validate_split(mode, values):
    """
    Check a split description without raising.

    Returns:
        tuple: (is_valid, error_message)
    """
    try:
        SplitSpec(mode, tuple(values))
    except ValueError as e:
        return False, str(e)
    return True, ""


def _build_split(values):
    mode = values.get("split_mode", "ratio").strip().lower()
    if "split" not in values:
        parts = DEFAULT_SPLIT_RATIOS if mode == "ratio" else None
        if parts is None:
            raise ConfigError(f"split_mode '{mode}' needs an explicit 'split' value")
    else:
        kind = float if mode == "ratio" else int
        parts = parse_number_list(values["split"], kind, "split")
    is_valid, error_message = validate_split(mode, parts)
    if not is_valid:
        raise ConfigError(error_message)
    return SplitSpec(mode, tuple(parts))


def _build_synth(values):
    settings = {"kind": values["synth"].strip().lower()}
    for key, (name, kind) in SYNTH_KEYS.items():
        if key in values:
            settings[name] = _convert(key, values[key], kind)
    return SynthSpec(**settings)


def build_experiment_config(
    values, overrides=None, seed=None, out=None, base_dir=None
):
    """
    Turn raw configuration values into a validated ExperimentConfig.

    Args:
        values (dict): Output of ``parse_config_file``
        overrides (list, optional): ``key=value`` strings from ``--set``
        seed (int, optional): ``--seed`` value; wins over the file
        out (str, optional): ``--out`` directory; wins over the file
        base_dir (str, optional): Relative data paths resolve against this

    Returns:
        ExperimentConfig: Validated configuration
    """
    values = dict(values)
    for text in overrides or ():
        key, value = parse_override(text)
        values[key] = value
    if seed is not None:
        values["seed"] = str(seed)
    if out is not None:
        values["out"] = out

    typed = {
        field_name: _convert(key, values[key], int)
        for key, field_name in (
            ("lookback", "lookback"),
            ("pred_len", "horizon"),
            ("repeats", "repeats"),
        )
        if key in values
    }
    architecture = {
        key: _convert(key, raw, ARCHITECTURE_KEYS[key])
        for key, raw in values.items()
        if key in ARCHITECTURE_KEYS
    }
    train_settings = {
        key: _convert(key, raw, TRAIN_KEYS[key])
        for key, raw in values.items()
        if key in TRAIN_KEYS
    }

    data_path = values.get("data")
    if data_path and base_dir and not os.path.isabs(data_path):
        data_path = os.path.join(base_dir, os.path.expanduser(data_path))

    try:
        train_config = TrainConfig(**train_settings)
        synth = _build_synth(values) if "synth" in values else None
        config = ExperimentConfig(
            label=values.get("label", "Naga"),
            data_path=data_path,
            synth=synth,
            target=values.get("target"),
            split=_build_split(values),
            architecture=architecture,
            train=train_config,
            out_dir=values.get("out", "."),
            **typed,
        )
        config.model_config(1)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
    return config


def load_experiment_config(path, overrides=None, seed=None, out=None):
    """Read, override and validate a configuration file in one step."""
    values = parse_config_file(path)
    base_dir = os.path.dirname(os.path.abspath(os.path.expanduser(path)))
    return build_experiment_config(values, overrides, seed, out, base_dir)


__all__ = [
    "parse_config_file",
    "parse_override",
    "parse_number_list",
    "validate_split",
    "build_experiment_config",
    "load_experiment_config",
]
