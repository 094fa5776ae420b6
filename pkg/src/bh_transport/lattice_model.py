"""Truncated Fock space and operators of the driven Bose-Hubbard chain.

The rotating-frame Hamiltonian is

.. math::
    H/\\hbar = \\sum_i (\\omega_i - \\omega_d) n_i + \\frac{\\alpha_i}{2} n_i (n_i - 1)
        + J \\sum_i (b^\\dagger_{i+1} b_i + b^\\dagger_i b_{i+1})
        + \\frac{\\Omega}{2} (b^\\dagger_1 + b_1)

with the drive on the first site and the readout on the last one.
All frequencies are angular (rad/s); relaxation and dephasing rates are in 1/s.
Operators are ``scipy.sparse.csr_matrix`` objects on the basis of a :class:`FockBasis`.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from itertools import product

import numpy as np
import scipy.sparse as sps

__all__ = [
    "ChainParams",
    "FockBasis",
    "build_basis",
    "lowering_op",
    "raising_op",
    "number_op",
    "total_number_op",
    "build_hamiltonian",
    "hamiltonian_parts",
]


def _site_array(value, n_sites: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n_sites, float(arr))
    if arr.shape != (n_sites,):
        raise ValueError(f"{name} must have length n_sites={n_sites}, got shape {arr.shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ChainParams:
    """Physical parameters of the chain.

    Scalars given for per-site quantities are broadcast to all sites.

    Parameters
    ----------
    n_sites : int
        Number of sites.
    omega : float | array
        Site frequencies, rad/s.
    alpha : float | array
        On-site interaction (anharmonicity), rad/s.
    J : float
        Nearest-neighbour tunnelling rate, rad/s.
    Omega : float
        Drive amplitude (Rabi frequency) on site 1, rad/s.
    omega_d : float
        Drive frequency, rad/s.
    gamma : float | array
        Relaxation rates, 1/s.
    gamma_phi : float | array
        Pure-dephasing rates, 1/s.
    """

    n_sites: int
    omega: np.ndarray
    alpha: np.ndarray
    J: float
    Omega: float = 0.0
    omega_d: float = 0.0
    gamma: np.ndarray = 0.0
    gamma_phi: np.ndarray = 0.0

    def __post_init__(self):
        n = self.n_sites
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ValueError(f"n_sites must be a positive integer, got {n!r}")
        object.__setattr__(self, "n_sites", int(n))
        for name in ("omega", "alpha", "gamma", "gamma_phi"):
            object.__setattr__(self, name, _site_array(getattr(self, name), n, name))
        for name in ("J", "Omega", "omega_d"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if np.any(self.gamma < 0) or np.any(self.gamma_phi < 0):
            raise ValueError("relaxation and dephasing rates must be non-negative")
        if not all(np.all(np.isfinite(getattr(self, k))) for k in ("omega", "alpha", "gamma", "gamma_phi")):
            raise ValueError("parameters must be finite")

    def replace(self, **changes) -> "ChainParams":
        return dataclasses.replace(self, **changes)

    @property
    def is_degenerate(self) -> bool:
        return bool(np.all(self.omega == self.omega[0]))

    def __eq__(self, other):
        if not isinstance(other, ChainParams):
            return NotImplemented
        return (
            self.n_sites == other.n_sites
            and all(np.array_equal(getattr(self, k), getattr(other, k))
                    for k in ("omega", "alpha", "gamma", "gamma_phi"))
            and (self.J, self.Omega, self.omega_d) == (other.J, other.Omega, other.omega_d)
        )

    __hash__ = None


@dataclass(frozen=True)
class FockBasis:
    """Occupation-number basis with a per-site and a total excitation cap.

    States are ordered by total excitation number and lexicographically within
    each sector, so every sector occupies a contiguous block of indices.
    """

    n_sites: int
    per_site_cap: int
    total_cap: int
    states: tuple
    index: dict = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    def __len__(self):
        return len(self.states)

    @property
    def occupations(self) -> np.ndarray:
        """``(dim, n_sites)`` integer array of occupations."""
        return np.array(self.states, dtype=int).reshape(self.dim, self.n_sites)

    @property
    def totals(self) -> np.ndarray:
        return self.occupations.sum(axis=1)

    def sector_slice(self, n: int) -> slice:
        """Index range of the states with exactly ``n`` excitations."""
        totals = self.totals
        idx = np.flatnonzero(totals == n)
        if idx.size == 0:
            return slice(0, 0)
        return slice(int(idx[0]), int(idx[-1]) + 1)

    @property
    def sectors(self) -> list:
        return sorted(set(int(t) for t in self.totals))


def build_basis(n_sites: int, per_site_cap: int, total_cap: int) -> FockBasis:
    """Enumerate all occupation tuples obeying both caps."""
    for name, v in (("n_sites", n_sites), ("per_site_cap", per_site_cap), ("total_cap", total_cap)):
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be a positive integer, got {v!r}")
    n_sites, per_site_cap, total_cap = int(n_sites), int(per_site_cap), int(total_cap)
    cap = min(per_site_cap, total_cap)
    states = [s for s in product(range(cap + 1), repeat=n_sites) if sum(s) <= total_cap]
    # product() is already lexicographic; a stable sort by total keeps it within sectors
    states.sort(key=sum)
    states = tuple(states)
    index = {s: k for k, s in enumerate(states)}
    return FockBasis(n_sites, per_site_cap, total_cap, states, index)


def _check_site(basis: FockBasis, site: int):
    if not 1 <= site <= basis.n_sites:
        raise IndexError(f"site must be in 1..{basis.n_sites}, got {site}")


def lowering_op(basis: FockBasis, site: int) -> sps.csr_matrix:
    """Annihilation operator ``b_site`` (sites are 1-based)."""
    _check_site(basis, site)
    i = site - 1
    rows, cols, vals = [], [], []
    for col, s in enumerate(basis.states):
        n = s[i]
        if n == 0:
            continue
        target = s[:i] + (n - 1,) + s[i + 1:]
        rows.append(basis.index[target])
        cols.append(col)
        vals.append(np.sqrt(n))
    return sps.csr_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(basis.dim, basis.dim))


def raising_op(basis: FockBasis, site: int) -> sps.csr_matrix:
    # projection onto the truncated space makes this exactly the adjoint of b
    return lowering_op(basis, site).conj().T.tocsr()


def number_op(basis: FockBasis, site: int) -> sps.csr_matrix:
    _check_site(basis, site)
    return sps.diags(basis.occupations[:, site - 1].astype(complex), format="csr")


def total_number_op(basis: FockBasis) -> sps.csr_matrix:
    return sps.diags(basis.totals.astype(complex), format="csr")


def hamiltonian_parts(params: ChainParams, basis: FockBasis):
    """Split the Hamiltonian as ``H = H_static - omega_d * N + Omega * X``.

    Returns
    -------
    H_static, N, X : csr_matrix
        Undriven lab-frame Hamiltonian, total number operator and
        the drive operator ``(b_1 + b_1^dagger)/2``.
    """
    if params.n_sites != basis.n_sites:
        raise ValueError(f"params describe {params.n_sites} sites but basis has {basis.n_sites}")
    occ = basis.occupations.astype(float)
    diag = occ @ params.omega + 0.5 * (occ * (occ - 1)) @ params.alpha
    H = sps.diags(diag.astype(complex), format="csr")
    lowers = [lowering_op(basis, s) for s in range(1, basis.n_sites + 1)]
    if params.J != 0.0:
        for i in range(basis.n_sites - 1):
            hop = lowers[i + 1].conj().T @ lowers[i]
            H = H + params.J * (hop + hop.conj().T)
    X = 0.5 * (lowers[0] + lowers[0].conj().T)
    return H.tocsr(), total_number_op(basis), X.tocsr()


def build_hamiltonian(params: ChainParams, basis: FockBasis) -> sps.csr_matrix:
    """Rotating-frame Hamiltonian (in units of hbar, rad/s)."""
    H0, N, X = hamiltonian_parts(params, basis)
    H = H0 - params.omega_d * N + params.Omega * X
    H.sum_duplicates()
    return H.tocsr()
