"""Spiking-network phase design for reflecting surfaces, with ANN and oracle baselines."""

__version__ = "0.1.0"
