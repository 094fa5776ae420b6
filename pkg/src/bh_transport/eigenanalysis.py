"""Sector-resolved spectrum of the undriven chain.

Provides the many-body levels per excitation number, the multiphoton drive
frequencies they imply, projections of eigenstates on occupation tuples, and
nearest-neighbour spacing statistics.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .lattice_model import ChainParams, FockBasis, build_hamiltonian

__all__ = [
    "EigenSpectrum",
    "SpacingStats",
    "sector_eigensolve",
    "multiphoton_lines",
    "global_levels",
    "eigenstate_projection",
    "spacing_statistics",
    "level_spacing_stats",
    "occupation_pattern",
    "pattern_bands",
    "densest_band",
    "wigner_dyson_cdf",
    "poisson_cdf",
]


@dataclass
class EigenSpectrum:
    """Eigenpairs of each excitation sector.

    ``sectors[n] = (energies, vectors)`` where ``vectors[:, k]`` is expressed on
    the block ``basis.sector_slice(n)``. Energies are in the frame rotating at
    ``omega_d``; the vacuum has energy 0.
    """

    basis: FockBasis
    omega_d: float
    sectors: dict

    def energies(self, n: int) -> np.ndarray:
        return self.sectors[n][0]

    def lab_energies(self, n: int) -> np.ndarray:
        return self.sectors[n][0] + n * self.omega_d


def _solve_block(H_block):
    E, V = np.linalg.eigh(H_block)
    return E, V


def sector_eigensolve(params: ChainParams, basis: FockBasis, workers: int | None = None) -> EigenSpectrum:
    """Dense Hermitian eigensolve of every excitation-number block."""
    if params.Omega != 0.0:
        raise ValueError("sector decomposition requires an undriven Hamiltonian (Omega = 0)")
    H = build_hamiltonian(params, basis).toarray()
    sectors = basis.sectors
    blocks = []
    for n in sectors:
        sl = basis.sector_slice(n)
        blocks.append(H[sl, sl])
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(_solve_block, blocks))
    else:
        results = [_solve_block(b) for b in blocks]
    return EigenSpectrum(basis=basis, omega_d=params.omega_d, sectors=dict(zip(sectors, results)))


def multiphoton_lines(spectrum: EigenSpectrum, max_n: int) -> list:
    """``(n, omega_d)`` pairs with ``omega_d = E_n / n`` for every ``n``-excitation level.

    ``E_n`` is the lab-frame energy, so the result does not depend on the frame
    the spectrum was computed in.
    """
    lines = []
    for n in range(1, max_n + 1):
        if n not in spectrum.sectors:
            continue
        for E in spectrum.lab_energies(n):
            lines.append((n, float(E / n)))
    return lines


def global_levels(spectrum: EigenSpectrum):
    """All levels ordered by lab-frame energy.

    Returns ``(sector, k, energy)`` arrays; entry 0 is the vacuum.
    """
    sec, kk, en = [], [], []
    for n in sorted(spectrum.sectors):
        E = spectrum.lab_energies(n)
        sec.extend([n] * len(E))
        kk.extend(range(len(E)))
        en.extend(E)
    sec, kk, en = np.array(sec), np.array(kk), np.array(en)
    order = np.lexsort((kk, sec, en))
    return sec[order], kk[order], en[order]


def eigenstate_projection(spectrum: EigenSpectrum, index: int, tol: float = 0.0) -> list:
    """Amplitudes of the ``index``-th level (global energy order) on occupation tuples.

    Returns ``[(occupations, amplitude), ...]`` sorted by decreasing magnitude,
    dropping amplitudes with magnitude ``<= tol``. The global sign is fixed so
    that the largest amplitude is positive.
    """
    sec, kk, _ = global_levels(spectrum)
    if not 0 <= index < len(sec):
        raise IndexError(f"state index must be in 0..{len(sec) - 1}, got {index}")
    n, k = int(sec[index]), int(kk[index])
    v = spectrum.sectors[n][1][:, k]
    sl = spectrum.basis.sector_slice(n)
    states = spectrum.basis.states[sl]
    order = np.argsort(-np.abs(v), kind="stable")
    phase = np.exp(-1j * np.angle(v[order[0]]))
    v = v * phase
    if np.allclose(v.imag, 0.0, atol=1e-12):
        v = v.real
    return [(states[i], v[i]) for i in order if abs(v[i]) > tol]


def wigner_dyson_cdf(s):
    """CDF of the GOE surmise ``(pi s / 2) exp(-pi s^2 / 4)``."""
    s = np.asarray(s, dtype=float)
    return np.where(s > 0, 1.0 - np.exp(-np.pi * s**2 / 4), 0.0)


def poisson_cdf(s):
    s = np.asarray(s, dtype=float)
    return np.where(s > 0, 1.0 - np.exp(-s), 0.0)


@dataclass
class SpacingStats:
    spacings: np.ndarray
    ks_wigner_dyson: float
    ks_poisson: float


def spacing_statistics(levels) -> SpacingStats:
    """Mean-normalised nearest-neighbour spacings and KS distances to both surmises.

    No unfolding is applied.
    """
    E = np.sort(np.asarray(levels, dtype=float))
    if E.size < 3:
        raise ValueError(f"need at least 3 levels, got {E.size}")
    s = np.diff(E)
    mean = s.mean()
    if mean <= 0:
        raise ValueError("levels are fully degenerate")
    s = s / mean
    ks_wd = stats.kstest(s, wigner_dyson_cdf).statistic
    ks_p = stats.kstest(s, poisson_cdf).statistic
    return SpacingStats(spacings=s, ks_wigner_dyson=float(ks_wd), ks_poisson=float(ks_p))


def level_spacing_stats(spectrum: EigenSpectrum, sector: int) -> SpacingStats:
    if sector not in spectrum.sectors:
        raise ValueError(f"no sector {sector} in spectrum")
    return spacing_statistics(spectrum.energies(sector))


def occupation_pattern(state) -> tuple:
    """Site-independent occupation pattern, e.g. ``(0, 2, 1, 0, 1) -> (2, 1, 1)``."""
    return tuple(sorted((n for n in state if n), reverse=True))


def pattern_bands(spectrum: EigenSpectrum, sector: int) -> dict:
    """Group the levels of a sector by the occupation pattern carrying most of their weight.

    For attractive interactions these groups are the doublon, triplon, ...
    bands. Returns ``{pattern: lab-frame energies (ascending)}``.
    """
    E, V = spectrum.sectors[sector]
    sl = spectrum.basis.sector_slice(sector)
    patterns = [occupation_pattern(s) for s in spectrum.basis.states[sl]]
    keys = sorted(set(patterns), reverse=True)
    member = np.array([[p == k for p in patterns] for k in keys], dtype=float)
    weight = member @ (np.abs(V) ** 2)
    owner = np.argmax(weight, axis=0)
    lab = E + sector * spectrum.omega_d
    return {keys[i]: np.sort(lab[owner == i]) for i in range(len(keys)) if np.any(owner == i)}


def densest_band(spectrum: EigenSpectrum, min_levels: int = 10):
    """Pattern band with the largest level density ``(count - 1) / bandwidth``.

    Returns ``(sector, pattern, energies)``.
    """
    best = None
    for n in sorted(spectrum.sectors):
        for pattern, E in pattern_bands(spectrum, n).items():
            if len(E) < min_levels or E[-1] == E[0]:
                continue
            density = (len(E) - 1) / (E[-1] - E[0])
            if best is None or density > best[0]:
                best = (density, n, pattern, E)
    if best is None:
        raise ValueError(f"no band with at least {min_levels} levels")
    return best[1], best[2], best[3]
