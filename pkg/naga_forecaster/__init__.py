"""
Naga Forecaster Package
Vedic bilinear encoding with a Mamba2-style block for long time series
forecasting, plus the training harness and the theory verification suite.
"""

from config import APP_VERSION

__version__ = APP_VERSION
__author__ = "Naga Forecaster"

from .core.data import (
    SplitSpec,
    build_windowed_dataset,
    load_csv,
    make_windows,
    split_series,
    synth_bilinear,
)
from .core.experiment import (
    ExperimentConfig,
    run_ablation,
    run_bench,
    run_experiment,
)
from .core.model import ModelConfig, NagaModel
from .core.theory import build_exact_vedic, capacity_gap, svd_factorize
from .core.training import TrainConfig, evaluate, train
from .core.verification import run_verification
from .ui.input_handlers import load_experiment_config, parse_config_file
from .ui.output_handlers import emit_report
from .utils.checkpoint import (
    describe_checkpoint,
    get_config_fingerprint,
    load_checkpoint,
    save_checkpoint,
)

__all__ = [
    "SplitSpec",
    "load_csv",
    "split_series",
    "make_windows",
    "build_windowed_dataset",
    "synth_bilinear",
    "ModelConfig",
    "NagaModel",
    "TrainConfig",
    "train",
    "evaluate",
    "svd_factorize",
    "build_exact_vedic",
    "capacity_gap",
    "run_verification",
    "ExperimentConfig",
    "run_experiment",
    "run_ablation",
    "run_bench",
    "parse_config_file",
    "load_experiment_config",
    "emit_report",
    "save_checkpoint",
    "load_checkpoint",
    "describe_checkpoint",
    "get_config_fingerprint",
]
