"""Input-output transmission from the Lindblad steady state and (omega_d, Omega) sweeps.

``S21 = 2 sqrt(gamma_1 gamma_N) Tr[rho_ss b_N^dagger] / (i Omega)``, which
follows from ``sqrt(gamma_1) <b_in^dagger> = i Omega / 2`` and
``b_out^dagger = sqrt(gamma_N) b_N^dagger``.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from .lattice_model import ChainParams, FockBasis, hamiltonian_parts, raising_op
from .liouvillian import (
    SingularSystem,
    build_liouvillian,
    collapse_ops,
    expectation,
    fill_reducing_ordering,
    steady_state,
)

__all__ = [
    "SweepGrid",
    "SpectrumTable",
    "TransmissionSolver",
    "s21_point",
    "sweep",
]

logger = logging.getLogger(__name__)


def _check_s21_params(params: ChainParams):
    if params.gamma[0] <= 0 or params.gamma[-1] <= 0:
        raise ValueError("S21 needs gamma_1 > 0 and gamma_N > 0")


class TransmissionSolver:
    """Steady-state transmission of one chain at arbitrary ``(omega_d, Omega)``.

    The Liouvillian is affine in both sweep variables,
    ``L = L_static - omega_d L_N + Omega L_X``; the three parts and the LU
    fill-reducing ordering are built once. ``params.omega_d`` and
    ``params.Omega`` are ignored.
    """

    def __init__(self, params: ChainParams, basis: FockBasis):
        _check_s21_params(params)
        self.params = params
        self.basis = basis
        H0, N, X = hamiltonian_parts(params, basis)
        self.L_static = build_liouvillian(H0, collapse_ops(params, basis))
        eye = sps.identity(basis.dim, dtype=complex, format="csr")
        self.L_number = (-1j * (sps.kron(eye, N) - sps.kron(N.T, eye))).tocsr()
        self.L_drive = (-1j * (sps.kron(eye, X) - sps.kron(X.T, eye))).tocsr()
        self.readout = raising_op(basis, basis.n_sites)
        # pattern of the driven generator is a superset of every other point's
        self.ordering = fill_reducing_ordering(self.liouvillian(1.0, 1.0))
        self.prefactor = 2.0 * np.sqrt(params.gamma[0] * params.gamma[-1])

    def liouvillian(self, omega_d: float, Omega: float) -> sps.csr_matrix:
        L = self.L_static - omega_d * self.L_number + Omega * self.L_drive
        return L.tocsr()

    def steady_state(self, omega_d: float, Omega: float, return_info: bool = False):
        return steady_state(self.liouvillian(omega_d, Omega), return_info=return_info, ordering=self.ordering)

    def s21(self, omega_d: float, Omega: float, return_info: bool = False):
        if Omega == 0:
            raise ValueError("S21 is undefined at zero drive amplitude")
        rho, info = self.steady_state(omega_d, Omega, return_info=True)
        value = self.prefactor * expectation(rho, self.readout) / (1j * Omega)
        return (value, info) if return_info else value


def s21_point(params: ChainParams, basis: FockBasis) -> complex:
    """Transmission at ``params.omega_d`` and ``params.Omega``."""
    if params.Omega == 0:
        raise ValueError("S21 is undefined at zero drive amplitude")
    return TransmissionSolver(params, basis).s21(params.omega_d, params.Omega)


@dataclass(frozen=True)
class SweepGrid:
    """Drive frequencies and amplitudes (rad/s), each strictly increasing."""

    omega_d: np.ndarray
    Omega: np.ndarray

    def __post_init__(self):
        for name in ("omega_d", "Omega"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if arr.ndim != 1 or arr.size == 0:
                raise ValueError(f"{name} must be a non-empty 1-D sequence")
            if np.any(np.diff(arr) <= 0):
                raise ValueError(f"{name} must be strictly increasing")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self):
        return (self.Omega.size, self.omega_d.size)

    def cells(self):
        """Grid points in table order: amplitude-major, frequency-minor."""
        return [(wd, Om) for Om in self.Omega for wd in self.omega_d]


@dataclass
class SpectrumTable:
    """Sweep results in cell order; ``residual`` is ``|L rho|`` relative to ``max|L|``."""

    omega_d: np.ndarray
    Omega: np.ndarray
    s21: np.ndarray
    residual: np.ndarray
    solve_time: np.ndarray
    errors: list = field(default_factory=list)

    def __len__(self):
        return len(self.s21)

    def magnitude_map(self, grid: SweepGrid) -> np.ndarray:
        """``|S21|`` reshaped to ``(len(Omega), len(omega_d))``."""
        return np.abs(self.s21).reshape(grid.shape)


_worker_solver = None


def _init_worker(solver):
    global _worker_solver
    _worker_solver = solver


def _solve_cell(cell):
    omega_d, Omega = cell
    t0 = time.perf_counter()
    try:
        value, info = _worker_solver.s21(omega_d, Omega, return_info=True)
        return value, info.residual / info.scale, time.perf_counter() - t0, ""
    except (SingularSystem, ValueError) as exc:
        return complex(np.nan, np.nan), np.nan, time.perf_counter() - t0, f"{type(exc).__name__}: {exc}"


def sweep(params: ChainParams, basis: FockBasis, grid: SweepGrid, workers: int = 1,
          progress=None) -> SpectrumTable:
    """Transmission on every grid cell.

    Cells are distributed over ``workers`` processes; results land in slots
    indexed by cell, so the table does not depend on scheduling. A failing cell
    is recorded as NaN with its error message instead of aborting the sweep.
    """
    solver = TransmissionSolver(params, basis)
    cells = grid.cells()
    if workers <= 1:
        _init_worker(solver)
        results = []
        for k, cell in enumerate(cells):
            results.append(_solve_cell(cell))
            if progress:
                progress(k + 1, len(cells))
    else:
        results = [None] * len(cells)
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(solver,)) as pool:
            for k, res in enumerate(pool.map(_solve_cell, cells, chunksize=max(1, len(cells) // (8 * workers)))):
                results[k] = res
                if progress:
                    progress(k + 1, len(cells))
    values, residuals, times, errors = zip(*results)
    for (wd, Om), err in zip(cells, errors):
        if err:
            logger.warning("cell omega_d=%.6g Omega=%.6g failed: %s", wd, Om, err)
    return SpectrumTable(
        omega_d=np.array([c[0] for c in cells]),
        Omega=np.array([c[1] for c in cells]),
        s21=np.array(values, dtype=complex),
        residual=np.array(residuals, dtype=float),
        solve_time=np.array(times, dtype=float),
        errors=list(errors),
    )
