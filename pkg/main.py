#!/usr/bin/env python3
"""
Naga Forecaster - command-line launcher
Trains, ablates and benchmarks the Naga model and runs its verification suite.

Requirements:
    pip install -r requirements.txt

Usage:
    python main.py verify
    python main.py synth --kind bilinear --out synth.csv
    python main.py train --config experiment.cfg --out results/
"""

import sys

from naga_forecaster.ui.cli import main

if __name__ == "__main__":
    sys.exit(main())
