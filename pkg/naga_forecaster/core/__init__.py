"""Core numerical and modelling logic for the Naga forecaster."""
