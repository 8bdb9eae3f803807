"""Shared constants: channel names, split dates, hyperparameter tables."""
