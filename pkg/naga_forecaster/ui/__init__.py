"""Command-line components for the Naga forecaster."""
