"""Numerical laboratory for guided local Hamiltonian problems."""

from __future__ import annotations

__version__ = "0.1.0"

from . import (
    amplify,
    circuits,
    clock,
    dense,
    errors,
    hamiltonian,
    pcp,
    signpoly,
    states,
    synth,
)

__all__ = [
    "amplify",
    "circuits",
    "clock",
    "dense",
    "errors",
    "hamiltonian",
    "pcp",
    "signpoly",
    "states",
    "synth",
    "__version__",
]
