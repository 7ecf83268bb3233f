"""Simulator of heralded teleportation from a two-color photonic qubit to a
quantum-dot electron spin: photon sources, beam-splitter interference,
heralding, spin echo, coincidence statistics."""

__version__ = "0.1.0"

from .kernels import BACKEND as kernel_backend  # noqa: F401
