"""
Command-line interface for the Naga forecaster.

Subcommands: train, ablate, bench, verify and synth. Exit codes are 0 on
success, 2 for configuration errors and 1 for any other failure.
"""

import argparse
import json
import os
import sys

from config import (
    ABLATION_MASK_PROBS,
    APP_VERSION,
    DEFAULT_SEED,
    RESULTS_CSV_FILE,
    RESULTS_MARKDOWN_FILE,
    SYNTH_DEFAULT_D_IN,
    SYNTH_DEFAULT_NOISE,
    SYNTH_DEFAULT_RANK,
    SYNTH_DEFAULT_ROWS,
    SYNTH_DEFAULT_WINDOW,
)

from ..core.errors import ConfigError
from ..core.experiment import (
    SYNTH_KINDS,
    SynthSpec,
    run_ablation,
    run_bench,
    run_experiment,
)
from ..core.verification import run_verification
from ..utils.checkpoint import model_from_parameters, save_checkpoint
from .input_handlers import load_experiment_config, parse_number_list
from .output_handlers import (
    display_completion_message,
    display_dataset_summary,
    display_error_message,
    display_info_message,
    display_progress,
    display_result_row,
    display_success_message,
    display_verification_summary,
    emit_bench_report,
    emit_report,
    print_banner,
    save_series_csv,
    write_ingestion_report,
)
from .workers.experiment_worker import ExperimentWorker

CHECKPOINT_FILE = "checkpoint.json"
BENCH_CSV_FILE = "bench.csv"
BENCH_MARKDOWN_FILE = "bench.md"
ABLATION_CSV_FILE = "ablation.csv"
ABLATION_MARKDOWN_FILE = "ablation.md"


def _add_experiment_arguments(parser, out_required=False):
    parser.add_argument("--config", required=True, help="key = value config file")
    parser.add_argument("--seed", type=int, help="Base seed (overrides the file)")
    parser.add_argument(
        "--out", required=out_required, help="Output directory (overrides the file)"
    )
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override one configuration key; repeatable",
    )
    parser.add_argument(
        "--threads", type=int, help="Worker processes (default: $NAGA_THREADS or 1)"
    )
    parser.add_argument(
        "--verbose", action="store_true", help="Print job progress and epoch losses"
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="naga", description="Naga time series forecaster and theory bench"
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {APP_VERSION}"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    train_parser = commands.add_parser(
        "train", help="Train and report one configuration"
    )
    _add_experiment_arguments(train_parser)

    ablate_parser = commands.add_parser("ablate", help="Run the ablation grid")
    _add_experiment_arguments(ablate_parser, out_required=True)
    ablate_parser.add_argument(
        "--mask-probs",
        default=",".join(f"{p:g}" for p in ABLATION_MASK_PROBS),
        help="Comma-separated input masking probabilities (default: %(default)s)",
    )

    bench_parser = commands.add_parser(
        "bench", help="Train once per prediction length"
    )
    _add_experiment_arguments(bench_parser)
    bench_parser.add_argument(
        "--pred-lens", required=True, help="Comma-separated horizons, e.g. 96,192"
    )

    verify_parser = commands.add_parser("verify", help="Run the verification battery")
    verify_parser.add_argument("--json", action="store_true", help="JSON summary only")
    verify_parser.add_argument("--seed", type=int, default=DEFAULT_SEED)

    synth_parser = commands.add_parser("synth", help="Write a synthetic series CSV")
    synth_parser.add_argument("--kind", choices=SYNTH_KINDS, default="bilinear")
    synth_parser.add_argument("--out", required=True, help="Destination CSV file")
    synth_parser.add_argument("--rows", type=int, default=SYNTH_DEFAULT_ROWS)
    synth_parser.add_argument("--window", type=int, default=SYNTH_DEFAULT_WINDOW)
    synth_parser.add_argument("--features", type=int, default=SYNTH_DEFAULT_D_IN)
    synth_parser.add_argument("--rank", type=int, default=SYNTH_DEFAULT_RANK)
    synth_parser.add_argument("--noise", type=float, default=SYNTH_DEFAULT_NOISE)
    synth_parser.add_argument("--position", type=int, default=1)
    synth_parser.add_argument("--seed", type=int, default=0)
    return parser


def _prepare(args):
    config = load_experiment_config(args.config, args.overrides, args.seed, args.out)
    table, report = config.load_table()
    if report is not None:
        path = write_ingestion_report(report, config.out_dir)
        display_info_message(f"Ingestion report: {path}")
        if report.fills:
            display_info_message(f"Forward-filled {report.fills} missing values")
    worker = ExperimentWorker(
        args.threads, display_progress if args.verbose else None
    )
    return config, table, worker


def cmd_train(args):
    config, table, worker = _prepare(args)
    dataset = config.build_dataset(table)
    display_dataset_summary(dataset, config.dataset_name)

    row, results = run_experiment(config, dataset, worker.run, args.verbose)
    display_result_row(row)

    csv_path = emit_report([row], "csv", os.path.join(config.out_dir, RESULTS_CSV_FILE))
    md_path = emit_report(
        [row], "markdown", os.path.join(config.out_dir, RESULTS_MARKDOWN_FILE)
    )
    model = model_from_parameters(
        config.model_config(dataset.n_features), results[0].parameters
    )
    checkpoint_path = os.path.join(config.out_dir, CHECKPOINT_FILE)
    save_checkpoint(checkpoint_path, model)

    display_success_message(f"Reports saved to: {csv_path}, {md_path}")
    display_success_message(f"Checkpoint (repeat 0) saved to: {checkpoint_path}")
    return 0


def cmd_ablate(args):
    mask_probs = parse_number_list(args.mask_probs, float, "mask probability")
    config, table, worker = _prepare(args)
    dataset = config.build_dataset(table)
    display_dataset_summary(dataset, config.dataset_name)

    rows = run_ablation(config, dataset, mask_probs, worker.run)
    for row in rows:
        display_result_row(row)

    csv_path = emit_report(
        rows, "csv", os.path.join(config.out_dir, ABLATION_CSV_FILE)
    )
    md_path = emit_report(
        rows, "markdown", os.path.join(config.out_dir, ABLATION_MARKDOWN_FILE)
    )
    display_success_message(f"Ablation table saved to: {csv_path}, {md_path}")
    return 0


def cmd_bench(args):
    pred_lens = parse_number_list(args.pred_lens, int, "prediction length")
    if any(length < 1 for length in pred_lens):
        raise ConfigError("Prediction lengths must be positive")
    config, table, worker = _prepare(args)

    rows = run_bench(config, table, pred_lens, worker.run)
    csv_path = emit_bench_report(
        rows, "csv", os.path.join(config.out_dir, BENCH_CSV_FILE)
    )
    md_path = emit_bench_report(
        rows, "markdown", os.path.join(config.out_dir, BENCH_MARKDOWN_FILE)
    )
    display_success_message(f"Benchmark table saved to: {csv_path}, {md_path}")
    return 0


def cmd_verify(args):
    summary = run_verification(args.seed)
    if args.json:
        print(json.dumps(summary.to_dict(), indent=2))
    else:
        display_verification_summary(summary)
    return 0 if summary.ok else 1


def cmd_synth(args):
    try:
        spec = SynthSpec(
            kind=args.kind,
            rows=args.rows,
            window=args.window,
            features=args.features,
            rank=args.rank,
            noise=args.noise,
            seed=args.seed,
            position=args.position,
        )
        table = spec.build()
    except ValueError as e:
        raise ConfigError(str(e)) from e
    path = save_series_csv(table, args.out)
    display_success_message(
        f"Synthetic {args.kind} series ({len(table)} rows) saved to: {path}"
    )
    return 0


COMMANDS = {
    "train": cmd_train,
    "ablate": cmd_ablate,
    "bench": cmd_bench,
    "verify": cmd_verify,
    "synth": cmd_synth,
}


def main(argv=None):
    """
    Parse arguments and run one subcommand.

    Returns:
        int: Process exit code
    """
    args = build_parser().parse_args(argv)
    quiet = args.command == "verify" and args.json
    if not quiet:
        print_banner()

    try:
        code = COMMANDS[args.command](args)
        if code == 0 and not quiet:
            display_completion_message()
        return code
    except ConfigError as e:
        display_error_message(e)
        return 2
    except KeyboardInterrupt:
        print("\n\nOperation cancelled by user.")
        return 1
    except Exception as e:  # pylint: disable=broad-except
        display_error_message(e)
        return 1


def run():
    """Console-script entry point."""
    sys.exit(main())
