"""Steady-state photon transport through a driven-dissipative Bose-Hubbard chain."""

from .lattice_model import ChainParams, FockBasis, build_basis, build_hamiltonian
from .liouvillian import build_liouvillian, collapse_ops, steady_state
from .spectroscopy import SweepGrid, SpectrumTable, TransmissionSolver, sweep
from .linear_analytics import linear_s21

__version__ = "0.1.0"

__all__ = [
    "ChainParams",
    "FockBasis",
    "build_basis",
    "build_hamiltonian",
    "build_liouvillian",
    "collapse_ops",
    "steady_state",
    "SweepGrid",
    "SpectrumTable",
    "TransmissionSolver",
    "sweep",
    "linear_s21",
]
