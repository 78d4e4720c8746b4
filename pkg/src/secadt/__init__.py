"""Threat modelling with attack-defense trees, security test generation and
security-pattern verification on method-call traces."""

__version__ = "0.1.0"
