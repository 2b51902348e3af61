"""
Data pipeline for forecasting experiments.
Handles CSV ingestion, chronological splits, train-statistics normalization,
look-back/horizon windowing and synthetic bilinear series.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from config import (
    SPLIT_ROUNDING_SLACK,
    SYNTH_DEFAULT_ROWS,
)

from .errors import IngestionError, SplitError, WindowError
from .rng import Rng


@dataclass(frozen=True, eq=False)
class SeriesTable:
    """Ordered multivariate series; ``values`` is (N, n_features) float64."""

    timestamps: np.ndarray
    values: np.ndarray
    feature_names: tuple
    target_index: int = -1
    row_offset: int = 0
    fill_count: int = 0
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.values.ndim != 2 or len(self.timestamps) != self.values.shape[0]:
            raise ValueError(
                f"values {self.values.shape} and {len(self.timestamps)} timestamps "
                "do not line up"
            )
        if len(self.feature_names) != self.values.shape[1]:
            raise ValueError("One feature name per column is required")

    def __len__(self):
        return self.values.shape[0]

    @property
    def n_features(self):
        return self.values.shape[1]

    @property
    def target_column(self):
        return self.target_index % self.n_features


@dataclass(frozen=True)
class CsvSchema:
    """Which column is the target; None keeps the last column."""

    target: object = None


@dataclass(frozen=True)
class IngestionReport:
    path: str
    rows: int
    features: int
    fills: int
    target: str

    def as_text(self):
        return "\n".join(
            [
                f"path: {self.path}",
                f"rows: {self.rows}",
                f"features: {self.features}",
                f"fills: {self.fills}",
                f"target: {self.target}",
            ]
        )


def _parse_timestamps(column):
    as_int = pd.to_numeric(column, errors="coerce")
    if as_int.notna().all() and np.all(np.mod(as_int, 1) == 0):
        return as_int.to_numpy(dtype=np.int64)
    parsed = pd.to_datetime(column, errors="coerce")
    bad = np.flatnonzero(parsed.isna().to_numpy())
    if bad.size:
        raise IngestionError(
            f"Unparseable timestamp '{column.iloc[bad[0]]}' on line {bad[0] + 2}"
        )
    return parsed.to_numpy()


def load_csv(path, schema=None):
    """
    Read a header-first CSV whose first column is a timestamp or integer index.

    Blank or non-numeric cells are forward-filled and counted.

    Args:
        path (str): CSV file path
        schema (CsvSchema, optional): Target column selection

    Returns:
        tuple: (SeriesTable, IngestionReport)
    """
    schema = schema or CsvSchema()
    try:
        frame = pd.read_csv(path, skipinitialspace=True, encoding="utf-8")
    except UnicodeDecodeError as e:
        raise IngestionError(f"'{path}' is not valid UTF-8: {e}") from e
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise IngestionError(f"Could not read '{path}': {e}") from e

    if frame.shape[1] < 2 or frame.shape[0] == 0:
        raise IngestionError(f"'{path}' has no numeric columns or no rows")

    timestamps = _parse_timestamps(frame.iloc[:, 0])
    not_increasing = np.flatnonzero(timestamps[1:] <= timestamps[:-1])
    if not_increasing.size:
        raise IngestionError(
            f"Timestamps are not strictly increasing at line {not_increasing[0] + 3}"
        )

    numeric = frame.iloc[:, 1:].apply(pd.to_numeric, errors="coerce")
    all_missing = [name for name in numeric.columns if numeric[name].isna().all()]
    if all_missing:
        raise IngestionError(f"Columns without numeric values: {all_missing}")
    missing = numeric.isna().to_numpy()
    if missing[0].any():
        raise IngestionError(
            "Cannot forward-fill a missing value on the first data row (line 2)"
        )
    fills = int(missing.sum())
    numeric = numeric.ffill()

    names = tuple(str(name) for name in numeric.columns)
    target_index = len(names) - 1
    if schema.target is not None:
        if isinstance(schema.target, int):
            target_index = schema.target % len(names)
        elif schema.target in names:
            target_index = names.index(schema.target)
        else:
            raise IngestionError(f"Target column '{schema.target}' not in {names}")

    table = SeriesTable(
        timestamps=timestamps,
        values=numeric.to_numpy(dtype=np.float64),
        feature_names=names,
        target_index=target_index,
        fill_count=fills,
    )
    report = IngestionReport(
        path=str(path),
        rows=len(table),
        features=table.n_features,
        fills=fills,
        target=names[target_index],
    )
    return table, report


def _slice_table(table, start, stop):
    return replace(
        table,
        timestamps=table.timestamps[start:stop],
        values=table.values[start:stop],
        row_offset=table.row_offset + start,
    )


@dataclass(frozen=True)
class SplitSpec:
    """
    Chronological split.

    ``ratio`` takes three fractions summing to 1 (boundaries rounded down),
    ``index`` takes strictly increasing cumulative end rows and ``count``
    takes segment lengths.
    """

    mode: str
    values: tuple

    def __post_init__(self):
        if self.mode not in ("ratio", "index", "count"):
            raise SplitError(f"Unknown split mode '{self.mode}'")
        if len(self.values) != 3:
            raise SplitError("A split needs exactly three values")
        if self.mode == "ratio":
            if any(v <= 0 for v in self.values) or abs(sum(self.values) - 1) > 1e-9:
                raise SplitError(
                    f"Split ratios must be positive and sum to 1: {self.values}"
                )
        elif self.mode == "index":
            a, b, c = self.values
            if not 0 < a < b < c:
                raise SplitError(f"Split indices must be increasing: {self.values}")
        elif any(int(v) <= 0 for v in self.values):
            raise SplitError(f"Split counts must be positive: {self.values}")

    @classmethod
    def ratio(cls, train, val, test):
        return cls("ratio", (float(train), float(val), float(test)))

    @classmethod
    def index(cls, train_end, val_end, test_end):
        return cls("index", (int(train_end), int(val_end), int(test_end)))

    @classmethod
    def count(cls, n_train, n_val, n_test):
        return cls("count", (int(n_train), int(n_val), int(n_test)))

    def boundaries(self, n_rows):
        """(train_end, val_end, test_end) row indices for a table of n_rows."""
        if self.mode == "ratio":
            train, val, _ = self.values
            train_end = math.floor(n_rows * train + SPLIT_ROUNDING_SLACK)
            val_end = math.floor(n_rows * (train + val) + SPLIT_ROUNDING_SLACK)
            return train_end, val_end, n_rows
        if self.mode == "index":
            return tuple(int(v) for v in self.values)
        a, b, c = (int(v) for v in self.values)
        return a, a + b, a + b + c


def split_series(table, spec):
    """
    Cut a table into contiguous train / validation / test segments.

    Returns:
        tuple: (train, val, test) SeriesTables
    """
    train_end, val_end, test_end = spec.boundaries(len(table))
    if test_end > len(table):
        raise SplitError(
            f"Split needs {test_end} rows but the table has only {len(table)}"
        )
    segments = (
        _slice_table(table, 0, train_end),
        _slice_table(table, train_end, val_end),
        _slice_table(table, val_end, test_end),
    )
    for name, segment in zip(("train", "validation", "test"), segments):
        if len(segment) == 0:
            raise SplitError(f"The {name} segment of the split is empty")
    return segments


@dataclass(frozen=True, eq=False)
class NormStats:
    mean: np.ndarray
    std: np.ndarray
    clamped: tuple = ()


def fit_norm(train):
    """
    Per-feature mean and population std of the training segment.

    Zero-variance features get std = 1 and are listed in ``clamped``.
    """
    if len(train) == 0:
        raise ValueError("Cannot fit normalization on an empty table")
    mean = train.values.mean(axis=0)
    std = train.values.std(axis=0)
    clamped = tuple(int(i) for i in np.flatnonzero(std == 0.0))
    std = np.where(std == 0.0, 1.0, std)
    return NormStats(mean=mean, std=std, clamped=clamped)


def apply_norm(table, stats):
    return replace(table, values=(table.values - stats.mean) / stats.std)


def invert_norm(values, stats, feature_idx=None):
    """
    Undo ``apply_norm`` on raw arrays.

    Args:
        values (ndarray): Normalized values, all features or one feature
        stats (NormStats): Statistics used for normalization
        feature_idx (int, optional): Feature the values belong to

    Returns:
        ndarray: Values on the original scale
    """
    if feature_idx is None:
        return values * stats.std + stats.mean
    return values * stats.std[feature_idx] + stats.mean[feature_idx]


@dataclass(frozen=True, eq=False)
class WindowSplit:
    """
    Stride-1 windows over one segment, materialised on demand.

    Window i reads rows starts[i] .. starts[i]+lookback-1 (all features) and
    predicts the target at the following ``horizon`` rows.
    """

    values: np.ndarray = field(repr=False)
    target: np.ndarray = field(repr=False)
    starts: np.ndarray = field(repr=False)
    lookback: int
    horizon: int
    row_offset: int = 0

    def __len__(self):
        return len(self.starts)

    def batch(self, indices):
        """
        Materialise windows.

        Args:
            indices (array-like): Window indices

        Returns:
            tuple: (X of shape (b, lookback, n), y of shape (b, horizon))
        """
        starts = self.starts[np.asarray(indices, dtype=np.int64)]
        steps = np.arange(self.lookback)
        future = np.arange(self.lookback, self.lookback + self.horizon)
        rows = starts[:, None]
        return self.values[rows + steps], self.target[rows + future]

    def targets(self):
        return self.batch(np.arange(len(self)))[1]

    def raw_rows(self, index):
        """Original table rows touched by window ``index``."""
        start = self.row_offset + int(self.starts[index])
        return range(start, start + self.lookback + self.horizon)


def make_windows(table, d, h, target_idx=None):
    """
    Slide a look-back/horizon window over one segment.

    Args:
        table (SeriesTable): One split
        d (int): Look-back length
        h (int): Horizon
        target_idx (int, optional): Target feature; defaults to the table's

    Returns:
        WindowSplit: len(table) - d - h + 1 windows
    """
    if d < 1 or h < 1:
        raise WindowError(f"Look-back and horizon must be >= 1, got d={d}, h={h}")
    if len(table) < d + h:
        raise WindowError(
            f"Segment of {len(table)} rows is too short: at least d + h = {d + h} "
            "rows are required"
        )
    column = table.target_column
    if target_idx is not None:
        column = target_idx % table.n_features
    return WindowSplit(
        values=table.values,
        target=table.values[:, column],
        starts=np.arange(len(table) - d - h + 1),
        lookback=d,
        horizon=h,
        row_offset=table.row_offset,
    )


@dataclass(frozen=True, eq=False)
class WindowedDataset:
    train: WindowSplit
    val: WindowSplit
    test: WindowSplit
    lookback: int
    horizon: int
    target_index: int
    stats: NormStats
    feature_names: tuple
    split_lengths: tuple

    @property
    def n_features(self):
        return len(self.feature_names)


def build_windowed_dataset(table, split_spec, lookback, horizon, target_idx=None):
    """
    Split, normalize with training statistics and window every segment.

    Args:
        table (SeriesTable): Full series
        split_spec (SplitSpec): Chronological split
        lookback (int): Look-back d
        horizon (int): Horizon h
        target_idx (int, optional): Target feature; defaults to the table's

    Returns:
        WindowedDataset: Normalized windows per split
    """
    segments = split_series(table, split_spec)
    stats = fit_norm(segments[0])
    target = table.target_column
    if target_idx is not None:
        target = target_idx % table.n_features
    train, val, test = (
        make_windows(apply_norm(segment, stats), lookback, horizon, target)
        for segment in segments
    )
    return WindowedDataset(
        train=train,
        val=val,
        test=test,
        lookback=lookback,
        horizon=horizon,
        target_index=target,
        stats=stats,
        feature_names=table.feature_names,
        split_lengths=tuple(len(segment) for segment in segments),
    )


def synth_bilinear(
    T,
    d_in,
    rank,
    noise,
    seed,
    n_rows=SYNTH_DEFAULT_ROWS,
    position=1,
    linear_scale=1.0,
):
    """
    Synthetic series with a mirrored cross-time bilinear target.

    Features are i.i.d. standard normal. For every row s >= T the target is
    computed from the T rows before it (window positions 1..T):
    y = x_t^T C x_t' + ℓ(window) + noise, with t = ``position`` and
    t' = T - t + 1. C = U V^T has rank ``rank``; ℓ is a random linear
    functional on the last window row, scaled by ``linear_scale``.

    Args:
        T (int): Window length the target depends on
        d_in (int): Number of input features
        rank (int): Rank of C (0 disables the bilinear part)
        noise (float): Std of additive Gaussian noise
        seed (int): Seed for features, C, ℓ and noise
        n_rows (int): Series length
        position (int): 1-indexed t of the bilinear pair
        linear_scale (float): Scale of ℓ (0 disables it)

    Returns:
        SeriesTable: Columns x0..x{d_in-1} then y; ``meta`` holds C, U, V, ell
    """
    if not 0 <= rank <= d_in:
        raise ValueError(f"rank must be in [0, {d_in}], got {rank}")
    if not 1 <= position <= T:
        raise ValueError(f"position must be in [1, {T}], got {position}")
    if n_rows <= T:
        raise ValueError(f"n_rows must exceed the window length {T}")

    rng = Rng(seed)
    features = rng.normal((n_rows, d_in))
    U = rng.normal((d_in, rank))
    V = rng.normal((d_in, rank))
    C = U @ V.T
    ell = np.zeros((T, d_in))
    ell[-1] = linear_scale * rng.normal(d_in)
    noise_draw = rng.normal(n_rows, scale=noise) if noise > 0 else np.zeros(n_rows)

    mirror = T - position + 1
    target = np.zeros(n_rows)
    for s in range(T, n_rows):
        window = features[s - T : s]
        x_t = window[position - 1]
        x_mirror = window[mirror - 1]
        target[s] = x_t @ C @ x_mirror + np.sum(ell * window) + noise_draw[s]

    names = tuple(f"x{i}" for i in range(d_in)) + ("y",)
    return SeriesTable(
        timestamps=np.arange(n_rows),
        values=np.column_stack([features, target]),
        feature_names=names,
        target_index=d_in,
        meta={
            "C": C,
            "U": U,
            "V": V,
            "ell": ell,
            "window": T,
            "position": position,
            "mirror": mirror,
            "seed": seed,
            "noise": noise,
        },
    )


def table_to_frame(table):
    """DataFrame view with the timestamp column first, for CSV export."""
    frame = pd.DataFrame(table.values, columns=list(table.feature_names))
    frame.insert(0, "index", table.timestamps)
    return frame
