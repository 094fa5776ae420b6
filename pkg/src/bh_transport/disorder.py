"""Gaussian site-frequency disorder and ensemble-averaged transmission.

Every realization is a pure function of ``(seed, realization)``: the deviates
come from a Philox counter-based generator keyed by the seed, with the
realization index in the counter, so parallel or reordered execution draws
exactly the same numbers.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .lattice_model import ChainParams, FockBasis
from .liouvillian import SingularSystem
from .linear_analytics import linear_s21
from .spectroscopy import TransmissionSolver

__all__ = [
    "DisorderSpec",
    "EnsembleResult",
    "sample_realization",
    "realization_deviates",
    "ensemble_transmission",
    "brightest_peak_prominence",
    "prominence_distribution",
    "PROMINENCE_WINDOW",
]

logger = logging.getLogger(__name__)

PROMINENCE_WINDOW = 10
TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class DisorderSpec:
    """Disorder ensemble.

    ``sigma`` is the standard deviation of the ordinary site frequency (Hz);
    the angular shift of each site is ``2 pi sigma z`` with ``z ~ N(0, 1)``.
    ``base_omega`` (rad/s), when given, replaces the base chain frequencies.
    """

    sigma: float
    n_realizations: int
    seed: int = 0
    base_omega: float | None = None

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")
        if self.n_realizations < 1:
            raise ValueError(f"n_realizations must be >= 1, got {self.n_realizations}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


def realization_deviates(seed: int, realization: int, n_sites: int) -> np.ndarray:
    """Standard normal deviates of one realization, one per site."""
    bitgen = np.random.Philox(key=int(seed), counter=[0, int(realization), 0, 0])
    return np.random.Generator(bitgen).standard_normal(n_sites)


def sample_realization(spec: DisorderSpec, base: ChainParams, realization: int) -> ChainParams:
    if not 0 <= realization < spec.n_realizations:
        raise IndexError(f"realization must be in 0..{spec.n_realizations - 1}, got {realization}")
    omega = base.omega if spec.base_omega is None else np.full(base.n_sites, spec.base_omega)
    if spec.sigma == 0:
        return base.replace(omega=omega)
    z = realization_deviates(spec.seed, realization, base.n_sites)
    return base.replace(omega=omega + TWO_PI * spec.sigma * z)


@dataclass
class EnsembleResult:
    """Per-realization curves and their complex average.

    ``curves`` has shape ``(n_realizations, len(delta))``; failed realizations
    are NaN rows and are excluded from ``averaged``.
    """

    delta: np.ndarray
    curves: np.ndarray
    averaged: np.ndarray
    n_failed: int = 0
    errors: dict = field(default_factory=dict)

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.curves)

    @property
    def mean_magnitude(self) -> np.ndarray:
        """Average of ``|S21|`` (as opposed to ``|<S21>|``)."""
        return np.nanmean(np.abs(self.curves), axis=0)


def _realization_curve(args):
    spec, base, basis, delta, engine, Omega, k = args
    params = sample_realization(spec, base, k)
    if engine == "linear":
        return linear_s21(params, delta), ""
    solver = TransmissionSolver(params, basis)
    out = np.empty(len(delta), dtype=complex)
    try:
        for j, d in enumerate(delta):
            out[j] = solver.s21(base.omega_d + d, Omega)
    except SingularSystem as exc:
        return np.full(len(delta), np.nan + 1j * np.nan), str(exc)
    return out, ""


def ensemble_transmission(spec: DisorderSpec, base: ChainParams, delta, engine: str = "linear",
                          Omega: float | None = None, basis: FockBasis | None = None,
                          workers: int = 1) -> EnsembleResult:
    """Transmission curves of every realization and the magnitude-ready complex mean.

    Parameters
    ----------
    delta : array
        Drive detunings from ``base.omega_d``.
    engine : {"linear", "quantum"}
        ``"quantum"`` solves the master equation on ``basis`` at drive ``Omega``.
    """
    delta = np.asarray(delta, dtype=float)
    if delta.ndim != 1 or delta.size == 0:
        raise ValueError("delta grid must be a non-empty 1-D array")
    if engine not in ("linear", "quantum"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "quantum" and (basis is None or not Omega):
        raise ValueError("the quantum engine needs a basis and a non-zero Omega")
    jobs = [(spec, base, basis, delta, engine, Omega, k) for k in range(spec.n_realizations)]
    if workers > 1 and engine == "quantum":
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_realization_curve, jobs))
    else:
        results = [_realization_curve(job) for job in jobs]
    curves = np.array([r[0] for r in results])
    errors = {k: r[1] for k, r in enumerate(results) if r[1]}
    for k, msg in errors.items():
        logger.warning("realization %d failed: %s", k, msg)
    ok = np.array([not r[1] for r in results])
    averaged = curves[ok].mean(axis=0) if ok.any() else np.full(delta.size, np.nan + 0j)
    # triangle inequality |<S21>| <= <|S21|>, checked on every run
    if ok.any() and np.any(np.abs(averaged) > np.abs(curves[ok]).mean(axis=0) * (1 + 1e-12)):
        raise RuntimeError("ensemble average violates |<S21>| <= <|S21|>")
    return EnsembleResult(delta=delta, curves=curves, averaged=averaged, n_failed=int((~ok).sum()), errors=errors)


def brightest_peak_prominence(curve) -> float:
    """Mean of the 10 samples centred on the maximum of ``curve``.

    The window ``[argmax - 5, argmax + 5)`` is shifted inwards at the edges so
    that it always holds 10 samples.
    """
    y = np.asarray(curve, dtype=float)
    if y.ndim != 1 or y.size < PROMINENCE_WINDOW:
        raise ValueError(f"curve must hold at least {PROMINENCE_WINDOW} samples")
    k = int(np.argmax(y))
    start = min(max(k - PROMINENCE_WINDOW // 2, 0), y.size - PROMINENCE_WINDOW)
    return float(np.mean(y[start:start + PROMINENCE_WINDOW]))


def prominence_distribution(specs, base: ChainParams, delta, bins=None, **ensemble_kwargs) -> dict:
    """Brightest-peak prominences of every realization, per disorder strength.

    Returns ``{sigma: {"samples": array, "counts": array, "edges": array, "result": EnsembleResult}}``.
    The default histogram uses 20 fixed bins on ``[0, 1]``.
    """
    if bins is None:
        bins = np.linspace(0.0, 1.0, 21)
    out = {}
    for spec in specs:
        res = ensemble_transmission(spec, base, delta, **ensemble_kwargs)
        samples = np.array([brightest_peak_prominence(c) for c in np.abs(res.curves) if np.all(np.isfinite(c))])
        counts, edges = np.histogram(np.clip(samples, bins[0], bins[-1]), bins=bins)
        out[spec.sigma] = {"samples": samples, "counts": counts, "edges": edges, "result": res}
    return out
