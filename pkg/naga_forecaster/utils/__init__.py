"""Utility functions for the Naga forecaster."""
