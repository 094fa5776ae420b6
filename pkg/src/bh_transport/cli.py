"""Command-line front end: ``bh-transport <linear|sweep|levels|disorder> --config run.json``.

Data go to CSV/JSON files in the output directory, progress and diagnostics to
stderr. On failure a JSON error report is printed to stderr and the exit code
is non-zero (2 for configuration errors, 1 otherwise).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import GHZ, MHZ, ConfigError, RunConfig, load_config
from .disorder import DisorderSpec, prominence_distribution
from .eigenanalysis import (
    densest_band,
    eigenstate_projection,
    global_levels,
    level_spacing_stats,
    multiphoton_lines,
    sector_eigensolve,
    spacing_statistics,
)
from .linear_analytics import find_peaks, fit_lorentzian_width, linear_s21
from .spectroscopy import SweepGrid, sweep

__all__ = ["main", "cmd_linear", "cmd_sweep", "cmd_levels", "cmd_disorder", "SCHEMAS"]

logger = logging.getLogger("bh_transport")

SCHEMAS = {
    "linear_spectrum.csv": ["omega_d_GHz", "re_S21", "im_S21", "abs_S21"],
    "linear_peaks.csv": ["omega_d_GHz", "detuning_MHz", "abs_S21", "fwhm_MHz"],
    "spectrum.csv": ["omega_d_GHz", "Omega_MHz", "re_S21", "im_S21", "abs_S21", "residual"],
    "levels.csv": ["sector", "index", "E_over_2pi_GHz"],
    "lines.csv": ["n_photons", "omega_d_GHz"],
    "projections.csv": ["state", "sector", "E_over_2pi_GHz", "occupations", "amplitude"],
    "disorder_*.csv": ["realization", "omega_d_GHz", "re_S21", "im_S21", "abs_S21"],
    "averaged.csv": ["sigma_MHz", "omega_d_GHz", "re_S21", "im_S21", "abs_S21", "mean_abs_S21"],
    "prominence.csv": ["sigma_MHz", "realization", "prominence"],
    "histogram.csv": ["sigma_MHz", "bin_low", "bin_high", "count"],
}


def fmt(x) -> str:
    """Shortest round-trip representation; identical inputs give identical bytes."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, name: str, rows) -> Path:
    header = SCHEMAS["disorder_*.csv"] if name.startswith("disorder_") else SCHEMAS[name]
    target = path / name
    with open(target, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([r if isinstance(r, str) else fmt(r) for r in row])
    return target


def write_json(path: Path, name: str, obj) -> Path:
    target = path / name
    target.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return target


def _progress(label):
    def report(done, total):
        if done == total or done % max(1, total // 20) == 0:
            print(f"{label}: {done}/{total}", file=sys.stderr, flush=True)
    return report


def cmd_linear(cfg: RunConfig) -> list:
    """Weak-drive spectrum around ``linear.center_GHz`` plus peak positions and widths."""
    out = cfg.output_dir
    params = cfg.params.replace(omega_d=cfg.linear_center)
    delta = cfg.linear_delta
    s = linear_s21(params, delta)
    wd = cfg.lab["linear_GHz"]
    files = [write_csv(out, "linear_spectrum.csv", zip(wd, s.real, s.imag, np.abs(s)))]

    mag = lambda x: np.abs(linear_s21(params, x))
    power = lambda x: mag(x) ** 2
    step = delta[1] - delta[0]
    peaks = find_peaks(mag, delta, xatol=1e-9 * max(abs(params.J), step))
    rows, failures = [], []
    for c in peaks:
        try:
            width, _ = fit_lorentzian_width(power, c, search=0.5 * abs(params.J) or 50 * step)
        except (RuntimeError, ValueError) as exc:
            width = float("nan")
            failures.append({"detuning_MHz": c / MHZ, "error": str(exc)})
        rows.append(((cfg.linear_center + c) / GHZ, c / MHZ, mag(np.array([c]))[0], width / MHZ))
    files.append(write_csv(out, "linear_peaks.csv", rows))
    for f in failures:
        logger.warning("width fit failed at %.6g MHz: %s", f["detuning_MHz"], f["error"])
    files.append(write_json(out, "linear_report.json", {"n_peaks": len(rows), "width_failures": failures}))
    return files


def _line_rows(cfg: RunConfig):
    spec = sector_eigensolve(cfg.params, cfg.basis())
    lines = multiphoton_lines(spec, min(cfg.max_photons, cfg.total_cap))
    return spec, [(n, w / GHZ) for n, w in lines]


def cmd_sweep(cfg: RunConfig) -> list:
    """Master-equation transmission over the (omega_d, Omega) grid and the multiphoton lines."""
    out = cfg.output_dir
    basis = cfg.basis()
    grid = SweepGrid(cfg.sweep_omega_d, cfg.sweep_Omega)
    print(f"sweep: {basis.dim} states, {len(grid.cells())} cells, {cfg.workers} worker(s)", file=sys.stderr)
    table = sweep(cfg.params, basis, grid, workers=cfg.workers, progress=_progress("sweep"))
    s = table.s21
    # cells are amplitude-major, see SweepGrid.cells
    n_wd = len(cfg.sweep_omega_d)
    wd_lab = np.tile(cfg.lab["sweep_omega_d_GHz"], len(cfg.sweep_Omega))
    om_lab = np.repeat(cfg.lab["sweep_Omega_MHz"], n_wd)
    files = [write_csv(out, "spectrum.csv", zip(wd_lab, om_lab, s.real, s.imag, np.abs(s), table.residual))]
    _, lines = _line_rows(cfg)
    files.append(write_csv(out, "lines.csv", lines))
    failed = [{"omega_d_GHz": float(wd), "Omega_MHz": float(Om), "error": e}
              for wd, Om, e in zip(wd_lab, om_lab, table.errors) if e]
    files.append(write_json(out, "sweep_report.json", {"basis_dim": basis.dim, "cells": len(table),
                                                        "failed": failed}))
    return files


def cmd_levels(cfg: RunConfig) -> list:
    """Sector spectra, multiphoton lines, spacing statistics and eigenstate projections."""
    out = cfg.output_dir
    spec, lines = _line_rows(cfg)
    rows = []
    for n in sorted(spec.sectors):
        for k, E in enumerate(spec.lab_energies(n)):
            rows.append((n, k, E / GHZ))
    files = [write_csv(out, "levels.csv", rows), write_csv(out, "lines.csv", lines)]

    stats = {}
    sectors = [cfg.sector] if cfg.sector is not None else sorted(spec.sectors)
    for n in sectors:
        if n not in spec.sectors:
            raise ValueError(f"levels.sector={n} is not in the basis (total cap {cfg.total_cap})")
        if len(spec.energies(n)) < 3:
            continue
        st = level_spacing_stats(spec, n)
        stats[str(n)] = {"levels": len(st.spacings) + 1, "ks_wigner_dyson": st.ks_wigner_dyson,
                         "ks_poisson": st.ks_poisson}
    report = {"sectors": stats}
    try:
        n, pattern, E = densest_band(spec)
        st = spacing_statistics(E)
        report["densest_band"] = {"sector": n, "pattern": list(pattern), "levels": len(E),
                                  "ks_wigner_dyson": st.ks_wigner_dyson, "ks_poisson": st.ks_poisson}
    except ValueError as exc:
        report["densest_band"] = {"error": str(exc)}
    files.append(write_json(out, "spacing.json", report))

    sec, kk, en = global_levels(spec)
    prow = []
    for idx in cfg.projections:
        if idx >= len(sec):
            raise ValueError(f"levels.projections: state {idx} out of range (0..{len(sec) - 1})")
        for occ, amp in eigenstate_projection(spec, idx, tol=1e-3):
            prow.append((idx, int(sec[idx]), en[idx] / GHZ, "".join(map(str, occ)), float(np.real(amp))))
    files.append(write_csv(out, "projections.csv", prow))
    return files


def cmd_disorder(cfg: RunConfig) -> list:
    """Disorder ensembles: per-realization curves, averages, prominences and histograms."""
    out = cfg.output_dir
    base = cfg.params.replace(omega_d=cfg.disorder_center)
    specs = [DisorderSpec(sigma=float(s), n_realizations=cfg.n_realizations, seed=cfg.seed,
                          base_omega=cfg.base_omega) for s in cfg.disorder_sigma]
    kwargs = {"engine": cfg.engine, "workers": cfg.workers}
    if cfg.engine == "quantum":
        kwargs.update(Omega=cfg.disorder_Omega, basis=cfg.basis())
    bins = np.linspace(0.0, 1.0, cfg.bins + 1)
    dist = prominence_distribution(specs, base, cfg.disorder_delta, bins=bins, **kwargs)
    wd = cfg.lab["disorder_GHz"]
    files, avg_rows, prom_rows, hist_rows, summary = [], [], [], [], {}
    for spec, sig_mhz in zip(specs, cfg.lab["sigma_MHz"]):
        d = dist[spec.sigma]
        res = d["result"]
        rows = [(k, w, v.real, v.imag, abs(v)) for k, curve in enumerate(res.curves) for w, v in zip(wd, curve)]
        files.append(write_csv(out, f"disorder_sigma{sig_mhz:g}MHz.csv", rows))
        mean_abs = res.mean_magnitude
        avg_rows += [(sig_mhz, w, v.real, v.imag, abs(v), m) for w, v, m in zip(wd, res.averaged, mean_abs)]
        ok = [k for k in range(spec.n_realizations) if k not in res.errors]
        prom_rows += [(sig_mhz, k, p) for k, p in zip(ok, d["samples"])]
        hist_rows += [(sig_mhz, lo, hi, c) for lo, hi, c in zip(d["edges"][:-1], d["edges"][1:], d["counts"])]
        summary[f"{sig_mhz:g}"] = {"n_failed": res.n_failed, "peak_abs_averaged": float(np.max(np.abs(res.averaged))),
                                   "median_prominence": float(np.median(d["samples"])) if len(d["samples"]) else None}
        print(f"disorder: sigma={sig_mhz:g} MHz done ({res.n_failed} failed)", file=sys.stderr, flush=True)
    files.append(write_csv(out, "averaged.csv", avg_rows))
    files.append(write_csv(out, "prominence.csv", prom_rows))
    files.append(write_csv(out, "histogram.csv", hist_rows))
    files.append(write_json(out, "disorder_report.json", {"engine": cfg.engine, "seed": cfg.seed, "sigma": summary}))
    return files


COMMANDS = {"linear": cmd_linear, "sweep": cmd_sweep, "levels": cmd_levels, "disorder": cmd_disorder}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bh-transport", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", help="output directory (overrides output_dir)")
    parser.add_argument("--workers", type=int, help="worker processes (overrides workers)")
    parser.add_argument("--seed", type=int, help="disorder seed (overrides seed)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _fail(kind: str, messages, code: int) -> int:
    print(json.dumps({"status": "error", "kind": kind, "errors": list(messages)}, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config).with_overrides(workers=args.workers, seed=args.seed, output_dir=args.out)
    except ConfigError as exc:
        return _fail("config", exc.errors, 2)
    try:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        write_json(cfg.output_dir, "config_used.json", cfg.raw)
        files = COMMANDS[args.command](cfg)
    except Exception as exc:  # reported, not swallowed: exit code is non-zero
        logger.debug("command failed", exc_info=True)
        return _fail(type(exc).__name__, [str(exc)], 1)
    for f in files:
        print(f"wrote {f}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
