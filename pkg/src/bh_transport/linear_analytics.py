"""Closed-form and weak-drive references for the chain transmission.

Contents
--------
* linearised Langevin transmission of an arbitrary chain and the degenerate
  five-site closed form;
* Lorentzian width extraction for the normal-mode peaks;
* the open-chain dispersion relation;
* dressed single-excitation modes of the five-qubit XY chain and their
  saturable (Maxwell-Bloch) transmission;
* the weak-drive series and the excitation-sector resonances of two coupled
  qutrits.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import OptimizeWarning, brentq, curve_fit, minimize_scalar

from .lattice_model import ChainParams

__all__ = [
    "linear_s21",
    "degenerate_closed_form_s21",
    "find_peaks",
    "linear_peak_positions",
    "fit_lorentzian_width",
    "degenerate_peak_widths",
    "dispersion",
    "DressedMode",
    "dressed_modes",
    "maxwell_bloch_s21",
    "two_qutrit_series",
    "series_parameters",
    "two_qutrit_sector_hamiltonian",
    "two_qutrit_sector_resonances",
]

SQ3 = np.sqrt(3.0)


def linear_s21(params: ChainParams, delta) -> np.ndarray:
    """Weak-drive transmission from the linearised Langevin equations.

    Parameters
    ----------
    params : ChainParams
        Chain description; ``Omega`` is ignored.
    delta : float | array
        Drive detuning from ``params.omega_d``, i.e. the probe frequency is
        ``params.omega_d + delta``.

    Returns
    -------
    complex ndarray with the shape of ``delta``.

    Notes
    -----
    The steady-state equations for ``<b_i^dagger>`` read
    ``0 = [i(w_i - w_d) - (g_i + g_phi_i)/2] b_i^+ + iJ (b_{i-1}^+ + b_{i+1}^+) + delta_{i1} sqrt(g_1) b_in^+``
    and ``S21 = sqrt(g_N) b_N^+ / b_in^+``. This convention matches
    ``2 sqrt(g_1 g_N) Tr[rho b_N^+] / (i Omega)`` of the master equation.
    """
    N = params.n_sites
    if N < 2:
        raise ValueError("linear_s21 needs at least two sites")
    if params.gamma[0] <= 0 or params.gamma[-1] <= 0:
        raise ValueError("edge relaxation rates gamma_1 and gamma_N must be positive")
    delta = np.asarray(delta, dtype=float)
    wd = params.omega_d + delta.reshape(-1)
    M = np.zeros((wd.size, N, N), dtype=complex)
    idx = np.arange(N)
    M[:, idx, idx] = 1j * (params.omega[None, :] - wd[:, None]) - 0.5 * (params.gamma + params.gamma_phi)[None, :]
    M[:, idx[:-1], idx[1:]] = 1j * params.J
    M[:, idx[1:], idx[:-1]] = 1j * params.J
    rhs = np.zeros((wd.size, N, 1), dtype=complex)
    rhs[:, 0, 0] = -np.sqrt(params.gamma[0])
    b = np.linalg.solve(M, rhs)[:, :, 0]
    s21 = np.sqrt(params.gamma[-1]) * b[:, -1]
    return s21.reshape(delta.shape)


def degenerate_closed_form_s21(delta, J, Gamma):
    """Closed-form transmission of the degenerate five-site chain with edge-only loss.

    ``delta = omega_d - omega``. The printed expression is written with the
    opposite detuning sign relative to the Langevin system it solves, so it is
    evaluated at ``-delta`` here; magnitudes are unaffected.
    """
    d = -np.asarray(delta, dtype=float)
    num = 4j * J**4 * Gamma
    den = (1j * d * Gamma + 2 * d**2 - 2 * J**2) * (1j * d**2 * Gamma - 2j * J**2 * Gamma + 2 * d**3 - 6 * d * J**2)
    return num / den


def find_peaks(f, grid, xatol=None):
    """Local maxima of a smooth real function, located on ``grid`` and refined.

    Returns the refined abscissae in ascending order.
    """
    grid = np.asarray(grid, dtype=float)
    y = f(grid)
    inner = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])) + 1
    if xatol is None:
        xatol = 1e-12 * np.max(np.abs(grid))
    peaks = []
    for k in inner:
        res = minimize_scalar(lambda x: -f(np.array([x]))[0], bounds=(grid[k - 1], grid[k + 1]),
                              method="bounded", options={"xatol": xatol, "maxiter": 500})
        peaks.append(res.x)
    return np.array(peaks)


def linear_peak_positions(params: ChainParams, span: float, n_grid: int = 4001, xatol=None):
    """Drive detunings (from ``params.omega_d``) of the maxima of ``|S21|``."""
    grid = np.linspace(-span, span, n_grid)
    return find_peaks(lambda x: np.abs(linear_s21(params, x)), grid, xatol=xatol)


def _lorentzian(x, height, center, fwhm):
    return height / (1.0 + 4.0 * ((x - center) / fwhm) ** 2)


def fit_lorentzian_width(f, center, search: float, iterations: int = 2, n_points: int = 201):
    """FWHM of a peak of ``f`` (e.g. ``|S21|^2``) by local Lorentzian least squares.

    The initial guess comes from the half-maximum crossings; the fit window is
    then ``center +- 3 * width`` and is updated from each fit.
    """
    top = f(np.array([center]))[0]
    half = lambda x: f(np.array([x]))[0] - 0.5 * top
    try:
        left = brentq(half, center - search, center)
        right = brentq(half, center, center + search)
        width = right - left
    except ValueError as exc:
        raise RuntimeError(f"no half-maximum crossing within {search:g} of {center:g}") from exc
    c = center
    for _ in range(iterations):
        x = np.linspace(c - 3 * width, c + 3 * width, n_points)
        with warnings.catch_warnings():
            # an exact Lorentzian leaves the covariance undefined
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, _ = curve_fit(_lorentzian, x, f(x), p0=(top, c, width))
        _, c, width = popt
        width = abs(width)
    return width, c


def degenerate_peak_widths(J, Gamma, iterations: int = 2):
    """Fitted ``|S21|^2`` widths of the five normal-mode peaks, ascending in detuning."""
    if J / Gamma < 100:
        raise ValueError("width extraction assumes J/Gamma >= 100")
    params = ChainParams(5, omega=0.0, alpha=0.0, J=J, gamma=[Gamma, 0, 0, 0, Gamma])
    power = lambda x: np.abs(linear_s21(params, x)) ** 2
    widths = []
    for center in (-SQ3 * J, -J, 0.0, J, SQ3 * J):
        peak = minimize_scalar(lambda x: -power(np.array([x]))[0],
                               bounds=(center - 0.1 * J, center + 0.1 * J), method="bounded",
                               options={"xatol": 1e-9 * J})
        width, _ = fit_lorentzian_width(power, peak.x, search=0.2 * J, iterations=iterations)
        widths.append(width)
    return np.array(widths)


def dispersion(N: int, m: int, J: float = 1.0) -> float:
    """Single-excitation energy ``2 J sin(k/2)`` of an open chain, ``k = 2 pi m / (N + 1)``.

    Only odd ``N`` is accepted: for even ``N`` this momentum set does not
    reproduce the open-chain eigenvalues ``2 J cos(pi j / (N + 1))``.
    """
    if N < 1 or N % 2 == 0:
        raise ValueError(f"dispersion is defined here for odd N, got {N}")
    if abs(m) > N // 2:
        raise ValueError(f"|m| must be <= {N // 2} for N={N}, got {m}")
    k = 2 * np.pi * m / (N + 1)
    return 2 * J * np.sin(k / 2)


@dataclass(frozen=True)
class DressedMode:
    index: int
    energy: float
    amplitudes: np.ndarray
    rate: float
    drive: float


_MODE_SHIFTS = (-SQ3, -1.0, 0.0, 1.0, SQ3)
_MODE_AMPLITUDES = (
    (1 / (2 * SQ3), -0.5, 1 / SQ3, -0.5, 1 / (2 * SQ3)),
    (0.5, -0.5, 0.0, 0.5, -0.5),
    (1 / SQ3, 0.0, -1 / SQ3, 0.0, 1 / SQ3),
    (0.5, 0.5, 0.0, -0.5, -0.5),
    (1 / (2 * SQ3), 0.5, 1 / SQ3, 0.5, 1 / (2 * SQ3)),
)


def dressed_modes(J, Gamma, Omega, omega=0.0) -> list:
    """Single-excitation eigenmodes of the five-qubit XY chain with edge loss ``Gamma``.

    ``rate`` is ``Gamma * (|c_1|^2 + |c_5|^2)`` and ``drive`` is ``Omega * c_1``.
    """
    modes = []
    for n, (shift, amp) in enumerate(zip(_MODE_SHIFTS, _MODE_AMPLITUDES), start=1):
        a = np.array(amp)
        a.setflags(write=False)
        modes.append(DressedMode(n, omega + shift * J, a, Gamma * (a[0] ** 2 + a[-1] ** 2), Omega * a[0]))
    return modes


def maxwell_bloch_s21(delta_w, Omega, J, Gamma):
    """Saturable five-mode transmission of the qubit chain.

    Parameters
    ----------
    delta_w : float | array
        ``omega - omega_d`` (note the sign).
    Omega : float
        Drive amplitude as it enters the saturation terms.
    J : float
    Gamma : float
        Edge relaxation rate of the Lindblad model.

    Notes
    -----
    The five-term sum is evaluated as written for the dressed-qubit
    Maxwell-Bloch picture, in which ``Gamma`` plays the role of the coherence
    damping. Passing the Lindblad rate, whose coherence damping is
    ``Gamma / 2``, the sum is evaluated at ``Gamma / 2`` so that the weak-drive
    peaks carry the widths of the linear model.
    """
    dw = np.asarray(delta_w, dtype=float)
    G = 0.5 * Gamma
    total = np.zeros(dw.shape, dtype=complex)
    for weight, shift in ((1 / 6, -SQ3 * J), (-1 / 2, -J), (2 / 3, 0.0), (-1 / 2, J), (1 / 6, SQ3 * J)):
        g_n = abs(weight) * G
        x = dw + shift
        sat = 1.0 / (1.0 + 0.5 * Omega**2 * g_n / (x**2 + g_n**2))
        total += weight * G / (1j * x + g_n) * sat
    return total


def two_qutrit_series(delta, Omega, J, Gamma, alpha):
    """First- and third-order terms of the weak-drive expansion of ``<sigma_2^->``.

    Evaluated exactly as written, with ``delta = omega_d - omega``. In those
    formulas the drive enters as ``Omega (b_1 + b_1^dagger)`` and ``Gamma`` is
    twice the Lindblad relaxation rate of each qutrit; use
    :func:`series_parameters` to convert. The third-order expression keeps
    every density-matrix element only at its own leading order, so it is not
    the full ``Omega^3`` coefficient; it is used for its pole structure.
    """
    d = np.asarray(delta, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        first = -16 * Omega * J / (16 * J**2 + (Gamma - 4j * d) ** 2)
        third = -(4096 * Omega**3 * J**3 * (alpha - 1j * Gamma - 4 * d)) / (
            (2 * alpha - 1j * Gamma - 4 * d)
            * (16 * J**2 + (Gamma - 4j * d) ** 2)
            * (16 * J**2 + (Gamma + 4j * d) ** 2)
            * (16 * J**2 + (Gamma - 4j * d) * (2j * alpha + Gamma - 4j * d))
        )
    if np.any(~np.isfinite(first)) or np.any(~np.isfinite(third)):
        raise ZeroDivisionError("series evaluated on a pole")
    return first, third


def series_parameters(Omega, gamma):
    """Map a Rabi drive ``(Omega/2)(b + b^dagger)`` and Lindblad rate to series variables."""
    return 0.5 * Omega, 2.0 * gamma


def two_qutrit_sector_hamiltonian(n: int, delta, J, alpha) -> np.ndarray:
    """Rotating-frame Hamiltonian of two qutrits restricted to ``n`` excitations."""
    d, s2 = float(delta), np.sqrt(2.0)
    if n == 1:
        return np.array([[-d, J], [J, -d]])
    if n == 2:
        return np.array([[alpha - 2 * d, s2 * J, 0.0], [s2 * J, -2 * d, s2 * J], [0.0, s2 * J, alpha - 2 * d]])
    if n == 3:
        return np.array([[alpha - 3 * d, 2 * J], [2 * J, alpha - 3 * d]])
    if n == 4:
        return np.array([[2 * alpha - 4 * d]])
    raise ValueError(f"two qutrits have sectors 1..4, got {n}")


def two_qutrit_sector_resonances(J, alpha) -> dict:
    """Drive detunings of the ``n``-photon resonances, ascending for each ``n``."""
    root = np.sqrt(16 * J**2 + alpha**2)
    return {
        1: sorted([-J, J]),
        2: sorted([(alpha - root) / 4, (alpha + root) / 4, alpha / 2]),
        3: sorted([(alpha - 2 * J) / 3, (alpha + 2 * J) / 3]),
        4: [alpha / 2],
    }
