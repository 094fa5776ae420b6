"""Lindblad generator on column-stacked density matrices and its steady state.

Convention: ``vec`` stacks columns, so ``vec(A X B) = (B^T kron A) vec(X)`` and

    L = -i (I kron H - H^T kron I)
        + sum_k [ conj(O_k) kron O_k - 1/2 I kron O_k^dag O_k - 1/2 (O_k^dag O_k)^T kron I ]
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
from scipy.sparse.csgraph import reverse_cuthill_mckee
from scipy.sparse.linalg import splu

try:
    import pymetis
except ImportError:  # pragma: no cover
    pymetis = None

from .lattice_model import ChainParams, FockBasis, lowering_op, number_op

__all__ = [
    "SingularSystem",
    "SolveInfo",
    "collapse_ops",
    "build_liouvillian",
    "dissipator",
    "steady_state",
    "expectation",
    "vec",
    "unvec",
    "check_density_matrix",
    "fill_reducing_ordering",
]

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-8
POSITIVITY_SLACK = 1e-8


class SingularSystem(RuntimeError):
    """The trace-constrained steady-state system has no unique solution."""


@dataclass
class SolveInfo:
    residual: float
    scale: float
    pivot_ratio: float


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape((dim, dim), order="F")


def collapse_ops(params: ChainParams, basis: FockBasis) -> list:
    """Relaxation ``sqrt(gamma_i) b_i`` and dephasing ``sqrt(gamma_phi_i) n_i`` operators.

    Channels with zero rate are skipped.
    """
    ops = []
    for i in range(params.n_sites):
        if params.gamma[i] > 0:
            ops.append(np.sqrt(params.gamma[i]) * lowering_op(basis, i + 1))
    for i in range(params.n_sites):
        if params.gamma_phi[i] > 0:
            ops.append(np.sqrt(params.gamma_phi[i]) * number_op(basis, i + 1))
    return ops


def _hamiltonian_super(H) -> sps.csr_matrix:
    H = sps.csr_matrix(H)
    eye = sps.identity(H.shape[0], dtype=complex, format="csr")
    return -1j * (sps.kron(eye, H) - sps.kron(H.T, eye))


def dissipator(O) -> sps.csr_matrix:
    """Superoperator of ``rho -> O rho O^dag - 1/2 {O^dag O, rho}``."""
    O = sps.csr_matrix(O)
    eye = sps.identity(O.shape[0], dtype=complex, format="csr")
    OdO = (O.conj().T @ O).tocsr()
    return sps.kron(O.conj(), O) - 0.5 * sps.kron(eye, OdO) - 0.5 * sps.kron(OdO.T, eye)


def build_liouvillian(H, collapse=()) -> sps.csr_matrix:
    """Sparse generator acting on ``vec(rho)``."""
    dim = H.shape[0]
    if H.shape != (dim, dim):
        raise ValueError(f"Hamiltonian must be square, got {H.shape}")
    L = _hamiltonian_super(H)
    for k, O in enumerate(collapse):
        if O.shape != (dim, dim):
            raise ValueError(f"collapse operator {k} has shape {O.shape}, expected {(dim, dim)}")
        L = L + dissipator(O)
    L = L.tocsr()
    L.sum_duplicates()
    L.eliminate_zeros()
    return L


def _trace_row(dim: int) -> np.ndarray:
    return np.arange(dim) * (dim + 1)


def _constrained_system(L, dim):
    """``L`` with its ``(0, 0)`` row replaced by the trace functional."""
    n2 = dim * dim
    keep = np.ones(n2)
    keep[0] = 0.0
    trace = sps.csr_matrix((np.ones(dim, dtype=complex), (np.zeros(dim, dtype=int), _trace_row(dim))),
                           shape=(n2, n2))
    return (sps.diags(keep) @ L + trace).tocsr()


def fill_reducing_ordering(L) -> np.ndarray:
    """Symmetric permutation limiting LU fill-in for the trace-constrained system.

    Nested dissection (METIS) when available, reverse Cuthill-McKee otherwise.
    The ordering depends only on the sparsity pattern, so it can be reused for
    every point of a sweep.
    """
    n2 = L.shape[0]
    dim = int(round(np.sqrt(n2)))
    A = _constrained_system(sps.csr_matrix(L), dim)
    G = (abs(A) + abs(A.T)).tocsr()
    G.setdiag(0)
    G.eliminate_zeros()
    if pymetis is not None and n2 > 64:
        perm, _ = pymetis.nested_dissection(pymetis.CSRAdjacency(G.indptr, G.indices))
        return np.asarray(perm, dtype=np.int64)
    return np.asarray(reverse_cuthill_mckee(G, symmetric_mode=True), dtype=np.int64)


# diagonal pivoting first (much less fill); partial pivoting only if that fails
_PIVOT_THRESHOLDS = (0.0, 0.1, 1.0)


def steady_state(L, return_info: bool = False, tol: float = RESIDUAL_TOL, ordering=None):
    """Unique unit-trace null vector of ``L`` as a Hermitian density matrix.

    The equation for the ``(0, 0)`` element is linearly dependent on the other
    population equations (trace preservation), so that row is replaced by the
    trace functional before a sparse LU solve.

    Parameters
    ----------
    L : sparse matrix
        Liouvillian from :func:`build_liouvillian`.
    return_info : bool
        Also return a :class:`SolveInfo`.
    tol : float
        Accepted residual ``max|L vec(rho)|`` relative to ``max|L_ij|``.
    ordering : array, optional
        Precomputed :func:`fill_reducing_ordering` of ``L``'s pattern.

    Raises
    ------
    SingularSystem
        If ``L`` has no dissipative part, or no factorisation yields a
        residual within ``tol``, which signals an undamped or decoupled subspace.
    """
    L = sps.csr_matrix(L)
    n2 = L.shape[0]
    dim = int(round(np.sqrt(n2)))
    if dim * dim != n2 or L.shape != (n2, n2):
        raise ValueError(f"Liouvillian shape {L.shape} is not (d^2, d^2)")
    scale = float(np.max(np.abs(L.data))) if L.nnz else 0.0
    if scale == 0.0:
        raise SingularSystem("zero Liouvillian")
    # a purely Hamiltonian generator is anti-Hermitian and has no unique steady state
    if abs(L + L.conj().T).max() <= 1e-14 * scale:
        raise SingularSystem("Liouvillian has no dissipative part")
    perm = fill_reducing_ordering(L) if ordering is None else np.asarray(ordering)
    A = _constrained_system(L, dim)[perm][:, perm].tocsc()
    b = np.zeros(n2, dtype=complex)
    b[0] = 1.0
    b = b[perm]

    failure = "no factorisation attempted"
    for thresh in _PIVOT_THRESHOLDS:
        try:
            lu = splu(A, permc_spec="NATURAL", diag_pivot_thresh=thresh)
        except RuntimeError as exc:
            failure = f"LU factorisation failed: {exc}"
            continue
        x = np.empty(n2, dtype=complex)
        x[perm] = lu.solve(b)
        if not np.all(np.isfinite(x)):
            failure = "non-finite steady state"
            continue
        rho = unvec(x, dim)
        rho = 0.5 * (rho + rho.conj().T)
        rho = rho / np.trace(rho).real
        residual = float(np.max(np.abs(L @ vec(rho))))
        if residual <= tol * scale:
            break
        failure = f"steady-state residual {residual:.3e} exceeds {tol:.1e} x {scale:.3e}"
        logger.debug("pivot threshold %g rejected: %s", thresh, failure)
    else:
        raise SingularSystem(failure)

    if return_info:
        udiag = np.abs(lu.U.diagonal())
        info = SolveInfo(residual=residual, scale=scale, pivot_ratio=float(udiag.min() / udiag.max()))
        return rho, info
    return rho


def expectation(rho: np.ndarray, A) -> complex:
    """``Tr(rho A)``."""
    if rho.shape != A.shape:
        raise ValueError(f"dimension mismatch: rho {rho.shape} vs operator {A.shape}")
    if sps.issparse(A):
        A = A.tocoo()
        return complex(np.sum(rho[A.col, A.row] * A.data))
    return complex(np.sum(rho.T * A))


def check_density_matrix(rho: np.ndarray, herm_tol=1e-10, trace_tol=1e-10, pos_tol=POSITIVITY_SLACK):
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit-trace and positive."""
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise ValueError(f"not Hermitian: {herm:.2e}")
    tr = abs(np.trace(rho) - 1)
    if tr > trace_tol:
        raise ValueError(f"trace deviates from 1 by {tr:.2e}")
    lam = np.linalg.eigvalsh(rho).min()
    if lam < -pos_tol:
        raise ValueError(f"negative eigenvalue {lam:.2e}")
