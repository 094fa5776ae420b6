"""JSON run configuration in laboratory units.

Frequencies are ordinary frequencies (GHz for site and drive frequencies, MHz
for ``alpha``, ``J``, drive amplitudes and disorder widths). Rates are in
inverse microseconds. Conversion to the internal angular units happens only
here::

    omega [rad/s] = 2 pi * 1e9 * omega_GHz
    J [rad/s]     = 2 pi * 1e6 * J_MHz
    gamma [1/s]   = 1e6 * gamma_per_us

Unknown keys are rejected so that typos do not silently fall back to defaults.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lattice_model import ChainParams, FockBasis, build_basis

__all__ = [
    "ConfigError",
    "RunConfig",
    "DEFAULTS",
    "load_config",
    "parse_config",
    "params_to_lab",
    "GHZ",
    "MHZ",
    "PER_US",
]

GHZ = 2 * math.pi * 1e9
MHZ = 2 * math.pi * 1e6
PER_US = 1e6

DEFAULTS = {
    "chain": {
        "n_sites": 5,
        "omega_GHz": 3.9,
        "alpha_MHz": [-188.0, -178.0, -178.0, -178.0, -188.0],
        "J_MHz": 41.0,
        "gamma_per_us": [16.0, 6.0, 0.1, 3.0, 16.0],
        "gamma_phi_per_us": 0.0,
    },
    "basis": {"per_site_cap": 3, "total_cap": 4},
    "linear": {"center_GHz": 3.9, "span_MHz": 150.0, "n_points": 3001},
    "sweep": {
        "omega_d_GHz": {"start": 3.7975, "stop": 4.0025, "num": 61},
        "Omega_MHz": [0.6366, 1.2732, 2.5465, 5.093, 10.186, 20.372],
    },
    "levels": {"max_photons": 4, "sector": None, "projections": [0, 1, 2, 3, 4, 5]},
    "disorder": {
        "sigma_MHz": [4.1, 20.5, 41.0, 82.0],
        "n_realizations": 100,
        "center_GHz": 3.9,
        "span_MHz": 150.0,
        "n_points": 601,
        "engine": "linear",
        "Omega_MHz": None,
        "base_omega_GHz": None,
        "bins": 20,
    },
    "workers": 1,
    "seed": 0,
    "output_dir": "out",
}


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every violation found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _merge(base: dict, override: dict, path: str, errors: list) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            errors.append(f"{where}: unknown key")
        elif isinstance(base[key], dict) and key != "omega_d_GHz":
            if not isinstance(value, dict):
                errors.append(f"{where}: expected an object")
            else:
                out[key] = _merge(base[key], value, where, errors)
        else:
            out[key] = value
    return out


def _number(value, where, errors, positive=False, nonneg=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{where}: expected a number, got {value!r}")
        return None
    if integer and not float(value).is_integer():
        errors.append(f"{where}: expected an integer, got {value!r}")
        return None
    if not math.isfinite(value):
        errors.append(f"{where}: must be finite")
        return None
    if positive and value <= 0:
        errors.append(f"{where}: must be > 0, got {value!r}")
        return None
    if nonneg and value < 0:
        errors.append(f"{where}: must be >= 0, got {value!r}")
        return None
    return int(value) if integer else float(value)


def _site_values(value, n_sites, where, errors, nonneg=False):
    """Scalar or per-site list -> float array, or None after recording errors."""
    if isinstance(value, list):
        if n_sites is not None and len(value) != n_sites:
            errors.append(f"{where}: expected {n_sites} values, got {len(value)}")
            return None
        items = [_number(v, f"{where}[{i}]", errors, nonneg=nonneg) for i, v in enumerate(value)]
        return None if any(v is None for v in items) else np.array(items)
    v = _number(value, where, errors, nonneg=nonneg)
    if v is None or n_sites is None:
        return None
    return np.full(n_sites, v)


def _grid(value, where, errors, positive=False):
    """Either a list of values or ``{"start", "stop", "num"}``; strictly increasing."""
    if isinstance(value, dict):
        missing = [k for k in ("start", "stop", "num") if k not in value]
        extra = sorted(set(value) - {"start", "stop", "num"})
        if missing or extra:
            errors.append(f"{where}: needs exactly start/stop/num (missing {missing}, unknown {extra})")
            return None
        start = _number(value["start"], f"{where}.start", errors)
        stop = _number(value["stop"], f"{where}.stop", errors)
        num = _number(value["num"], f"{where}.num", errors, positive=True, integer=True)
        if None in (start, stop, num):
            return None
        arr = np.linspace(start, stop, num)
    elif isinstance(value, list) and value:
        items = [_number(v, f"{where}[{i}]", errors) for i, v in enumerate(value)]
        if any(v is None for v in items):
            return None
        arr = np.array(items)
    else:
        errors.append(f"{where}: expected a non-empty list or a start/stop/num object")
        return None
    if np.any(np.diff(arr) <= 0):
        errors.append(f"{where}: values must be strictly increasing")
        return None
    if positive and np.any(arr <= 0):
        errors.append(f"{where}: values must be > 0")
        return None
    return arr


@dataclass
class RunConfig:
    """Validated configuration; frequencies already converted to rad/s.

    ``raw`` keeps the merged JSON document (lab units) for provenance.
    """

    raw: dict
    params: ChainParams
    per_site_cap: int
    total_cap: int
    linear_delta: np.ndarray
    linear_center: float
    sweep_omega_d: np.ndarray
    sweep_Omega: np.ndarray
    lab: dict
    max_photons: int
    sector: int | None
    projections: list
    disorder_sigma: np.ndarray
    n_realizations: int
    disorder_center: float
    disorder_delta: np.ndarray
    engine: str
    disorder_Omega: float | None
    base_omega: float | None
    bins: int
    workers: int
    seed: int
    output_dir: Path

    def basis(self) -> FockBasis:
        return build_basis(self.params.n_sites, self.per_site_cap, self.total_cap)

    def with_overrides(self, workers=None, seed=None, output_dir=None) -> "RunConfig":
        doc = copy.deepcopy(self.raw)
        if workers is not None:
            doc["workers"] = workers
        if seed is not None:
            doc["seed"] = seed
        if output_dir is not None:
            doc["output_dir"] = str(output_dir)
        return parse_config(doc)


def parse_config(doc: dict) -> RunConfig:
    """Validate a configuration document and convert it to internal units.

    Raises
    ------
    ConfigError
        Listing every violation, not only the first.
    """
    errors: list = []
    if not isinstance(doc, dict):
        raise ConfigError(["top level: expected a JSON object"])
    cfg = _merge(DEFAULTS, doc, "", errors)

    ch = cfg["chain"]
    n_sites = _number(ch["n_sites"], "chain.n_sites", errors, integer=True)
    if n_sites is not None and n_sites < 2:
        errors.append("chain.n_sites: need at least 2 sites")
        n_sites = None
    omega = _site_values(ch["omega_GHz"], n_sites, "chain.omega_GHz", errors)
    alpha = _site_values(ch["alpha_MHz"], n_sites, "chain.alpha_MHz", errors)
    J = _number(ch["J_MHz"], "chain.J_MHz", errors)
    gamma = _site_values(ch["gamma_per_us"], n_sites, "chain.gamma_per_us", errors, nonneg=True)
    gamma_phi = _site_values(ch["gamma_phi_per_us"], n_sites, "chain.gamma_phi_per_us", errors, nonneg=True)
    if gamma is not None and (gamma[0] <= 0 or gamma[-1] <= 0):
        errors.append("chain.gamma_per_us: first and last sites need a non-zero rate for transmission")

    bs = cfg["basis"]
    per_site = _number(bs["per_site_cap"], "basis.per_site_cap", errors, positive=True, integer=True)
    total = _number(bs["total_cap"], "basis.total_cap", errors, positive=True, integer=True)

    lin = cfg["linear"]
    lin_center = _number(lin["center_GHz"], "linear.center_GHz", errors, positive=True)
    lin_span = _number(lin["span_MHz"], "linear.span_MHz", errors, positive=True)
    lin_n = _number(lin["n_points"], "linear.n_points", errors, integer=True)
    if lin_n is not None and lin_n < 3:
        errors.append("linear.n_points: need at least 3 points")

    sw = cfg["sweep"]
    wd = _grid(sw["omega_d_GHz"], "sweep.omega_d_GHz", errors, positive=True)
    Om = _grid(sw["Omega_MHz"], "sweep.Omega_MHz", errors, positive=True)

    lv = cfg["levels"]
    max_photons = _number(lv["max_photons"], "levels.max_photons", errors, positive=True, integer=True)
    sector = lv["sector"]
    if sector is not None:
        sector = _number(sector, "levels.sector", errors, positive=True, integer=True)
    projections = lv["projections"]
    if not isinstance(projections, list) or any(
            isinstance(k, bool) or not isinstance(k, int) or k < 0 for k in projections):
        errors.append("levels.projections: expected a list of non-negative integers")
        projections = []

    ds = cfg["disorder"]
    sigma = _grid(ds["sigma_MHz"], "disorder.sigma_MHz", errors)
    if sigma is not None and np.any(sigma < 0):
        errors.append("disorder.sigma_MHz: values must be >= 0")
    n_real = _number(ds["n_realizations"], "disorder.n_realizations", errors, positive=True, integer=True)
    d_center = _number(ds["center_GHz"], "disorder.center_GHz", errors, positive=True)
    d_span = _number(ds["span_MHz"], "disorder.span_MHz", errors, positive=True)
    d_n = _number(ds["n_points"], "disorder.n_points", errors, integer=True)
    if d_n is not None and d_n < 10:
        errors.append("disorder.n_points: need at least 10 points for the peak prominence")
    engine = ds["engine"]
    if engine not in ("linear", "quantum"):
        errors.append(f"disorder.engine: expected 'linear' or 'quantum', got {engine!r}")
    d_Omega = ds["Omega_MHz"]
    if d_Omega is not None:
        d_Omega = _number(d_Omega, "disorder.Omega_MHz", errors, positive=True)
    if engine == "quantum" and ds["Omega_MHz"] is None:
        errors.append("disorder.Omega_MHz: required by the quantum engine")
    base_omega = ds["base_omega_GHz"]
    if base_omega is not None:
        base_omega = _number(base_omega, "disorder.base_omega_GHz", errors, positive=True)
    bins = _number(ds["bins"], "disorder.bins", errors, positive=True, integer=True)

    workers = _number(cfg["workers"], "workers", errors, positive=True, integer=True)
    seed = _number(cfg["seed"], "seed", errors, nonneg=True, integer=True)
    if seed is not None and seed >= 2**64:
        errors.append("seed: must fit in 64 bits")
    if not isinstance(cfg["output_dir"], str) or not cfg["output_dir"]:
        errors.append("output_dir: expected a non-empty string")

    params = None
    if not errors:
        try:
            params = ChainParams(n_sites, omega=omega * GHZ, alpha=alpha * MHZ, J=J * MHZ,
                                 gamma=gamma * PER_US, gamma_phi=gamma_phi * PER_US,
                                 omega_d=lin_center * GHZ)
        except ValueError as exc:
            errors.append(f"chain: {exc}")
    if errors:
        raise ConfigError(errors)

    # grids in lab units, written verbatim to the CSV files
    lab = {
        "linear_GHz": np.round(lin_center + np.linspace(-lin_span, lin_span, lin_n) * 1e-3, 12),
        "sweep_omega_d_GHz": wd,
        "sweep_Omega_MHz": Om,
        "disorder_GHz": np.round(d_center + np.linspace(-d_span, d_span, d_n) * 1e-3, 12),
        "sigma_MHz": sigma,
    }
    return RunConfig(
        raw=cfg,
        lab=lab,
        params=params,
        per_site_cap=per_site,
        total_cap=total,
        linear_center=lin_center * GHZ,
        linear_delta=np.linspace(-lin_span, lin_span, lin_n) * MHZ,
        sweep_omega_d=wd * GHZ,
        sweep_Omega=Om * MHZ,
        max_photons=max_photons,
        sector=sector,
        projections=list(projections),
        disorder_sigma=sigma * 1e6,
        n_realizations=n_real,
        disorder_center=d_center * GHZ,
        disorder_delta=np.linspace(-d_span, d_span, d_n) * MHZ,
        engine=engine,
        disorder_Omega=None if d_Omega is None else d_Omega * MHZ,
        base_omega=None if base_omega is None else base_omega * GHZ,
        bins=bins,
        workers=workers,
        seed=seed,
        output_dir=Path(cfg["output_dir"]),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError([f"{path}: file not found"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc})"]) from None
    return parse_config(doc)


def params_to_lab(params: ChainParams) -> dict:
    """Inverse of the chain conversion: lab-unit ``chain`` section of a config."""
    return {
        "n_sites": params.n_sites,
        "omega_GHz": (params.omega / GHZ).tolist(),
        "alpha_MHz": (params.alpha / MHZ).tolist(),
        "J_MHz": params.J / MHZ,
        "gamma_per_us": (params.gamma / PER_US).tolist(),
        "gamma_phi_per_us": (params.gamma_phi / PER_US).tolist(),
    }
