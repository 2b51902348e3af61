"""
Experiment orchestration for the Naga forecaster.
Turns an ExperimentConfig into independent training jobs, aggregates the
repeats and derives ablation and benchmark rows.
"""

import math
import os
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from config import (
    ABLATION_MASK_PROBS,
    DEFAULT_LOOKBACK,
    DEFAULT_PRED_LEN,
    DEFAULT_REPEATS,
    DEFAULT_SPLIT_RATIOS,
    SYNTH_DEFAULT_D_IN,
    SYNTH_DEFAULT_NOISE,
    SYNTH_DEFAULT_RANK,
    SYNTH_DEFAULT_ROWS,
    SYNTH_DEFAULT_WINDOW,
)

from .data import CsvSchema, SplitSpec, build_windowed_dataset, load_csv, synth_bilinear
from .errors import ConfigError
from .model import ModelConfig, NagaModel
from .rng import Rng
from .training import TrainConfig, train

SYNTH_KINDS = ("bilinear", "linear")
BASELINE_LABEL = "Naga (baseline)"


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a generated series; ``linear`` forces rank 0."""

    kind: str = "bilinear"
    rows: int = SYNTH_DEFAULT_ROWS
    window: int = SYNTH_DEFAULT_WINDOW
    features: int = SYNTH_DEFAULT_D_IN
    rank: int = SYNTH_DEFAULT_RANK
    noise: float = SYNTH_DEFAULT_NOISE
    seed: int = 0
    position: int = 1

    def __post_init__(self):
        if self.kind not in SYNTH_KINDS:
            raise ConfigError(
                f"Unknown synthetic kind '{self.kind}' (use {SYNTH_KINDS})"
            )

    def build(self):
        return synth_bilinear(
            T=self.window,
            d_in=self.features,
            rank=0 if self.kind == "linear" else self.rank,
            noise=self.noise,
            seed=self.seed,
            n_rows=self.rows,
            position=self.position,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything one ``naga train`` invocation needs.

    ``architecture`` holds ModelConfig fields except d_in and pred_len, which
    come from the data and ``horizon``.
    """

    label: str = "Naga"
    data_path: Optional[str] = None
    synth: Optional[SynthSpec] = None
    target: Optional[str] = None
    split: SplitSpec = field(
        default_factory=lambda: SplitSpec.ratio(*DEFAULT_SPLIT_RATIOS)
    )
    lookback: int = DEFAULT_LOOKBACK
    horizon: int = DEFAULT_PRED_LEN
    architecture: dict = field(default_factory=dict)
    train: TrainConfig = field(default_factory=TrainConfig)
    repeats: int = DEFAULT_REPEATS
    out_dir: str = "."

    def __post_init__(self):
        if (self.data_path is None) == (self.synth is None):
            raise ConfigError("Exactly one of 'data' and 'synth' must be set")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        if self.lookback < 1 or self.horizon < 1:
            raise ConfigError("lookback and pred_len must be >= 1")
        unknown = set(self.architecture) - set(ModelConfig.__dataclass_fields__)
        unknown |= set(self.architecture) & {"d_in", "pred_len"}
        if unknown:
            raise ConfigError(f"Unknown architecture settings: {sorted(unknown)}")

    @property
    def dataset_name(self):
        if self.data_path is not None:
            return os.path.splitext(os.path.basename(self.data_path))[0]
        return f"synth-{self.synth.kind}"

    def model_config(self, d_in, **changes):
        settings = {**self.architecture, **changes}
        return ModelConfig(d_in=d_in, pred_len=self.horizon, **settings)

    def load_table(self):
        """
        Returns:
            tuple: (SeriesTable, IngestionReport or None for synthetic data)
        """
        if self.synth is not None:
            return self.synth.build(), None
        return load_csv(self.data_path, CsvSchema(target=self.target))

    def build_dataset(self, table, horizon=None):
        return build_windowed_dataset(
            table, self.split, self.lookback, horizon or self.horizon
        )


@dataclass(frozen=True)
class TrainingJob:
    label: str
    repeat: int
    model_config: ModelConfig
    train_config: TrainConfig
    dataset: object = field(repr=False)
    verbose: bool = False


@dataclass(frozen=True)
class RunResult:
    """Outcome of one job; ``parameters`` maps names to plain arrays."""

    label: str
    repeat: int
    stop_epoch: int
    runtime_seconds: float
    mse: float
    mae: float
    rmse: float
    parameters: dict = field(default_factory=dict, repr=False)


@dataclass(frozen=True)
class ResultRow:
    label: str
    repeats: int
    epochs: float
    runtime_seconds: float
    mse: float
    mae: float
    rmse: float
    mse_std: float = 0.0
    mae_std: float = 0.0
    rmse_std: float = 0.0
    delta_rmse: Optional[float] = None
    delta_mae: Optional[float] = None
    is_baseline: bool = False
    is_best: bool = False


@dataclass(frozen=True)
class BenchRow:
    dataset: str
    pred_len: int
    epochs: float
    runtime_seconds: float
    mse: float
    mae: float


def run_job(job):
    """
    Train one model from scratch.

    Module-level so a process pool can pickle it.
    """
    model = NagaModel.initialize(job.model_config, Rng(job.train_config.seed))
    report = train(model, job.dataset, job.train_config, verbose=job.verbose)
    return RunResult(
        label=job.label,
        repeat=job.repeat,
        stop_epoch=report.stop_epoch,
        runtime_seconds=report.runtime_seconds,
        mse=report.test.mse,
        mae=report.test.mae,
        rmse=report.test.rmse,
        parameters={name: t.numpy() for name, t in report.model.parameters().items()},
    )


def make_jobs(config, dataset, label=None, verbose=False, **changes):
    """One job per repeat; repeat i trains with seed = base seed + i."""
    model_config = config.model_config(dataset.n_features, **changes)
    return [
        TrainingJob(
            label=label or config.label,
            repeat=index,
            model_config=model_config,
            train_config=replace(config.train, seed=config.train.seed + index),
            dataset=dataset,
            verbose=verbose,
        )
        for index in range(config.repeats)
    ]


def aggregate(results, label=None):
    """
    Mean (and population std) of a group of repeats.

    Args:
        results (list): RunResults of one configuration
        label (str, optional): Row label; defaults to the results' label

    Returns:
        ResultRow: Aggregated row without relative changes
    """
    if not results:
        raise ValueError("Cannot aggregate an empty result list")

    def column(name):
        return np.array([getattr(r, name) for r in results], dtype=float)

    return ResultRow(
        label=label or results[0].label,
        repeats=len(results),
        epochs=float(np.mean(column("stop_epoch"))),
        runtime_seconds=float(np.mean(column("runtime_seconds"))),
        mse=float(np.mean(column("mse"))),
        mae=float(np.mean(column("mae"))),
        rmse=float(np.mean(column("rmse"))),
        mse_std=float(np.std(column("mse"))),
        mae_std=float(np.std(column("mae"))),
        rmse_std=float(np.std(column("rmse"))),
    )


def relative_change(baseline, value):
    """
    Percent change against a baseline; degradations are negative.

    (baseline - value) / baseline * 100, NaN when the baseline is zero.
    """
    if baseline == 0:
        return math.nan
    return (baseline - value) / baseline * 100.0


def with_relative_changes(rows, baseline_label):
    """Fill ΔRMSE% / ΔMAE% against the named row and mark the lowest RMSE."""
    baseline = next((row for row in rows if row.label == baseline_label), None)
    if baseline is None:
        raise ValueError(f"Baseline row '{baseline_label}' not found")
    best = min(rows, key=lambda row: row.rmse)
    return [
        replace(
            row,
            delta_rmse=relative_change(baseline.rmse, row.rmse),
            delta_mae=relative_change(baseline.mae, row.mae),
            is_baseline=row.label == baseline_label,
            is_best=row is best,
        )
        for row in rows
    ]


def _sequential(fn, jobs):
    return [fn(job) for job in jobs]


def _group(results):
    groups = {}
    for result in sorted(results, key=lambda r: (r.label, r.repeat)):
        groups.setdefault(result.label, []).append(result)
    return groups


def run_experiment(config, dataset, run_all=_sequential, verbose=False):
    """
    Train ``config.repeats`` models and aggregate them.

    Args:
        config (ExperimentConfig): Experiment settings
        dataset (WindowedDataset): Prepared windows
        run_all (callable): (fn, jobs) -> results, e.g. a worker pool map
        verbose (bool): Print per-epoch training progress

    Returns:
        tuple: (ResultRow, list of RunResult sorted by repeat)
    """
    jobs = make_jobs(config, dataset, verbose=verbose)
    results = _group(run_all(run_job, jobs))[config.label]
    return aggregate(results), results


def ablation_variants(mask_probs=ABLATION_MASK_PROBS):
    """
    Ordered (label, ModelConfig changes) pairs of the ablation grid.

    Baseline first, then Vedic removed, a single cell, the flip removed and
    one row per input-masking probability.
    """
    variants = [
        (BASELINE_LABEL, {}),
        ("Without Vedic", {"use_vedic": False}),
        ("Single Naga cell", {"num_cells": 1}),
        ("No Flip", {"use_flip": False}),
    ]
    for prob in mask_probs:
        variants.append((f"Mask={prob:g}", {"mask_prob": float(prob)}))
    return variants


def run_ablation(config, dataset, mask_probs=ABLATION_MASK_PROBS, run_all=_sequential):
    """
    Run the baseline and every ablation variant.

    Returns:
        list: ResultRows in variant order with relative changes filled in
    """
    variants = ablation_variants(mask_probs)
    jobs = []
    for label, changes in variants:
        jobs.extend(make_jobs(config, dataset, label=label, **changes))
    groups = _group(run_all(run_job, jobs))
    rows = [aggregate(groups[label]) for label, _ in variants]
    return with_relative_changes(rows, BASELINE_LABEL)


def run_bench(config, table, pred_lens, run_all=_sequential):
    """
    Train once per prediction length on the same table.

    Returns:
        list: BenchRows in the order of ``pred_lens``
    """
    rows = []
    for pred_len in pred_lens:
        horizon_config = replace(config, horizon=int(pred_len))
        row, _ = run_experiment(
            horizon_config, horizon_config.build_dataset(table), run_all
        )
        rows.append(
            BenchRow(
                dataset=config.dataset_name,
                pred_len=int(pred_len),
                epochs=row.epochs,
                runtime_seconds=row.runtime_seconds,
                mse=row.mse,
                mae=row.mae,
            )
        )
    return rows
