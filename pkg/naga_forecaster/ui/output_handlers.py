"""
Output handlers for the Naga forecaster.
Handles console messages and report / data file writing.
"""

import math
import os

import pandas as pd

from config import (
    APP_VERSION,
    BENCH_COLUMNS,
    INGESTION_REPORT_FILE,
    METRIC_DECIMALS,
    PERCENT_DECIMALS,
    REPORT_COLUMNS,
    RUNTIME_DECIMALS,
)

from ..core.data import table_to_frame

REPORT_FORMATS = ("csv", "markdown")


def print_banner():
    """Print the tool banner."""
    banner = f"""
╔══════════════════════════════════════════╗
║          Naga Forecaster  v{APP_VERSION:<14}║
║   Vedic encoding + Mamba2 time series    ║
╚══════════════════════════════════════════╝
    """
    print(banner)


def display_success_message(message):
    print(f"\n✓ {message}")


def display_info_message(message):
    print(f"ℹ️  {message}")


def display_error_message(error_msg):
    """Display formatted error message."""
    print(f"\n❌ Error: {error_msg}")


def display_warning_message(warning_msg):
    """Display formatted warning message."""
    print(f"\n⚠️  Warning: {warning_msg}")


def display_progress(done, total):
    print(f"  … {done}/{total} runs finished")


def display_dataset_summary(dataset, name):
    """
    Display the split layout of a windowed dataset.

    Args:
        dataset (WindowedDataset): Prepared windows
        name (str): Dataset label
    """
    train_rows, val_rows, test_rows = dataset.split_lengths
    print(f"\n📋 Dataset: {name}")
    print("-" * 40)
    target = dataset.feature_names[dataset.target_index]
    print(f"Features: {dataset.n_features} (target: {target})")
    print(f"Look-back / horizon: {dataset.lookback} / {dataset.horizon}")
    print(f"Rows train / val / test: {train_rows} / {val_rows} / {test_rows}")
    windows = (len(dataset.train), len(dataset.val), len(dataset.test))
    print("Windows train / val / test: %d / %d / %d" % windows)
    if dataset.stats.clamped:
        clamped = list(dataset.stats.clamped)
        print(f"⚠️  Constant features (std clamped to 1): {clamped}")
    print("-" * 40)


def display_result_row(row):
    """Display one aggregated training result."""
    print(f"\n📊 {row.label} ({row.repeats} run{'s' if row.repeats != 1 else ''}):")
    print("-" * 40)
    print(f"Epochs (mean): {row.epochs:g}")
    print(f"Runtime (mean): {row.runtime_seconds:.{RUNTIME_DECIMALS}f} s")
    for name in ("mse", "mae", "rmse"):
        mean = getattr(row, name)
        std = getattr(row, f"{name}_std")
        print(f"{name.upper()}: {mean:.{METRIC_DECIMALS}f} ± {std:.{METRIC_DECIMALS}f}")
    print("-" * 40)


def display_verification_summary(summary):
    """
    Display every verification check and the totals.

    Args:
        summary (VerificationSummary): Result of ``run_verification``
    """
    print("\n🔍 Verification checks:")
    print("-" * 60)
    for result in summary.results:
        marker = "✅" if result.passed else "❌"
        print(
            f"{marker} {result.name:<24} observed {result.observed:.3e}"
            f"  tolerance {result.tolerance:.1e}"
        )
        if result.detail and not result.passed:
            print(f"     {result.detail}")
    print("-" * 60)
    print(f"Total: {summary.total}  Passed: {summary.passed}  Failed: {summary.failed}")


def _number(value, decimals):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return f"{value:.{decimals}f}"


def _metric_cell(mean, std, repeats, markdown):
    text = _number(mean, METRIC_DECIMALS)
    if markdown and repeats > 1:
        text += f" ± {_number(std, METRIC_DECIMALS)}"
    return text


def format_report_rows(rows, markdown=False):
    """
    Format result rows into string cells in REPORT_COLUMNS order.

    The baseline's relative changes are 0.00 in CSV and "--" in markdown;
    the best (lowest RMSE) row is bold in markdown.

    Args:
        rows (list): ResultRows
        markdown (bool): Markdown cell conventions

    Returns:
        list: One list of strings per row
    """
    cells = []
    for row in rows:
        if row.is_baseline and markdown:
            deltas = ["--", "--"]
        else:
            deltas = [
                _number(0.0 if row.is_baseline else row.delta_rmse, PERCENT_DECIMALS),
                _number(0.0 if row.is_baseline else row.delta_mae, PERCENT_DECIMALS),
            ]
        label = row.label
        rmse = _metric_cell(row.rmse, row.rmse_std, row.repeats, markdown)
        if markdown and row.is_best:
            label = f"**{label}**"
            rmse = f"**{rmse}**"
        cells.append(
            [
                label,
                f"{row.epochs:g}",
                _number(row.runtime_seconds, RUNTIME_DECIMALS),
                _metric_cell(row.mse, row.mse_std, row.repeats, markdown),
                _metric_cell(row.mae, row.mae_std, row.repeats, markdown),
                rmse,
                *deltas,
            ]
        )
    return cells


def format_bench_rows(rows):
    return [
        [
            row.dataset,
            str(row.pred_len),
            f"{row.epochs:g}",
            _number(row.runtime_seconds, RUNTIME_DECIMALS),
            _number(row.mse, METRIC_DECIMALS),
            _number(row.mae, METRIC_DECIMALS),
        ]
        for row in rows
    ]


def render_markdown(columns, cells):
    """Pipe table with a header separator line."""
    lines = [
        "| " + " | ".join(columns) + " |",
        "|" + "|".join("---" for _ in columns) + "|",
    ]
    lines.extend("| " + " | ".join(row) + " |" for row in cells)
    return "\n".join(lines) + "\n"


def _ensure_parent(path):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def _write_table(columns, cells, fmt, path):
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"Unknown report format '{fmt}' (use {REPORT_FORMATS})")
    _ensure_parent(path)
    if fmt == "csv":
        pd.DataFrame(cells, columns=list(columns)).to_csv(
            path, index=False, encoding="utf-8", lineterminator="\n"
        )
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(render_markdown(columns, cells))
    return path


def emit_report(rows, fmt, path):
    """
    Write an ablation / training report.

    Args:
        rows (list): At least one ResultRow
        fmt (str): "csv" or "markdown"
        path (str): Destination file

    Returns:
        str: The written path
    """
    if not rows:
        raise ValueError("A report needs at least one row")
    cells = format_report_rows(rows, markdown=fmt == "markdown")
    return _write_table(REPORT_COLUMNS, cells, fmt, path)


def emit_bench_report(rows, fmt, path):
    """Write a per-horizon benchmark table (Dataset, Pred. length, ...)."""
    if not rows:
        raise ValueError("A report needs at least one row")
    return _write_table(BENCH_COLUMNS, format_bench_rows(rows), fmt, path)


def write_ingestion_report(report, out_dir):
    """
    Save the ingestion summary as ``key: value`` lines.

    Returns:
        str: Path of the written file
    """
    path = os.path.join(out_dir, INGESTION_REPORT_FILE)
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        f.write(report.as_text() + "\n")
    return path


def save_series_csv(table, path):
    """Write a series table (e.g. synthetic data) as CSV with an index column."""
    _ensure_parent(path)
    table_to_frame(table).to_csv(path, index=False, lineterminator="\n")
    return path


def display_completion_message():
    """Display final completion message."""
    print("\nDone.")
