"""
Configuration constants for the Naga forecaster
Contains all global defaults: training hyper-parameters, desk-scale dimensions,
data protocol, report formatting and verification tolerances.
"""

# Training Protocol (Adam, early stopping)
DEFAULT_LEARNING_RATE = 0.003581  # Adam learning rate used for every run
DEFAULT_WEIGHT_DECAY = 1e-4  # L2 term added to the gradient
DEFAULT_BATCH_SIZE = 64  # Windows per minibatch
DEFAULT_SEED = 42  # Base seed for all random streams
DEFAULT_PATIENCE = 5  # Epochs without improvement before stopping
DEFAULT_MIN_DELTA = 1e-4  # Minimum validation improvement that counts
DEFAULT_MAX_EPOCHS = 100  # Hard epoch cap
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
EVAL_BATCH_SIZE = 256  # Windows per batch during validation / test passes

# Architecture Defaults (desk scale)
DEFAULT_D_HIDDEN = 64  # Vedic encoding width
DEFAULT_D_INNER = 128  # Mamba2 inner width (must be even)
DEFAULT_D_STATE = 16
DEFAULT_H_HEAD = 8
DEFAULT_KERNEL_SIZE = 4  # Causal conv taps
DEFAULT_LN_EPS = 1e-5  # Feature layernorm epsilon
DEFAULT_NUM_CELLS = 2  # Stacked Naga cells
DEFAULT_DROPOUT_P = 0.1  # Vedic dropout probability
DEFAULT_MASK_PROB = 0.0  # Input masking probability during training

# Data Protocol
DEFAULT_LOOKBACK = 96  # Look-back window length d
DEFAULT_PRED_LEN = 96  # Forecast horizon h
DEFAULT_SPLIT_RATIOS = (0.7, 0.15, 0.15)  # train / val / test
SPLIT_ROUNDING_SLACK = 1e-9  # Guards floor() against 0.7 * 100 = 69.999...

# Synthetic Data Defaults
SYNTH_DEFAULT_ROWS = 2000
SYNTH_DEFAULT_WINDOW = 8
SYNTH_DEFAULT_D_IN = 3
SYNTH_DEFAULT_RANK = 1
SYNTH_DEFAULT_NOISE = 0.01

# Experiment Harness
DEFAULT_REPEATS = 10  # Every configuration is repeated this many times
THREADS_ENV_VAR = "NAGA_THREADS"  # Caps the worker pool
DEFAULT_THREADS = 1
ABLATION_MASK_PROBS = (0.1,)  # One ablation row per input masking probability

# Report Formatting
METRIC_DECIMALS = 4
PERCENT_DECIMALS = 2
RUNTIME_DECIMALS = 2
REPORT_COLUMNS = (
    "Configuration",
    "Epochs",
    "Runtime[s]",
    "MSE",
    "MAE",
    "RMSE",
    "ΔRMSE%",
    "ΔMAE%",
)
BENCH_COLUMNS = ("Dataset", "Pred. length", "Epochs", "Runtime[s]", "MSE", "MAE")

# File Names
CHECKPOINT_FORMAT = "naga-checkpoint"
CHECKPOINT_VERSION = 1
INGESTION_REPORT_FILE = "ingestion_report.txt"
RESULTS_CSV_FILE = "results.csv"
RESULTS_MARKDOWN_FILE = "results.md"

# Verification Tolerances
GRAD_CHECK_STEP = 1e-5  # Central difference step
GRAD_CHECK_REL_TOL = 1e-5  # Max relative error, model gradients
GRAD_CHECK_REL_FLOOR = 1e-3  # Denominator floor for near-zero gradients
CLOSED_FORM_GRAD_ABS_TOL = 1e-10
EXACT_RECOVERY_ABS_TOL = 1e-8
RANK_DEFICIT_MIN_ERROR = 1e-3
CENTERING_TOL = 1e-12

# Version
APP_VERSION = "0.3.0"
