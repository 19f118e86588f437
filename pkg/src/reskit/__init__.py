"""Transmission resilience events: extraction, Poisson outage/restore models,
duration metrics and their sampling variability."""

__version__ = "0.1.0"
