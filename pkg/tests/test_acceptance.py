"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Frozen reference numbers (marked ORACLE) come from independent runs described
next to each constant; they are not produced by the code under test.
"""

import time

import numpy as np
import pytest

from bh_transport.disorder import DisorderSpec, prominence_distribution
from bh_transport.eigenanalysis import densest_band, multiphoton_lines, sector_eigensolve, spacing_statistics
from bh_transport.lattice_model import ChainParams, build_basis, build_hamiltonian, lowering_op
from bh_transport.liouvillian import (
    build_liouvillian,
    check_density_matrix,
    collapse_ops,
    expectation,
    steady_state,
    unvec,
)
from bh_transport.linear_analytics import (
    degenerate_closed_form_s21,
    degenerate_peak_widths,
    dressed_modes,
    linear_peak_positions,
    linear_s21,
    maxwell_bloch_s21,
    series_parameters,
    two_qutrit_sector_hamiltonian,
    two_qutrit_sector_resonances,
    two_qutrit_series,
)
from bh_transport.spectroscopy import SweepGrid, TransmissionSolver, sweep

from conftest import FIT_ALPHA, FIT_GAMMA, FIT_J, FIT_OMEGA, GHZ, MHZ

SQ3 = np.sqrt(3.0)
NORMAL_MODES = np.array([-SQ3, -1.0, 0.0, 1.0, SQ3])


def degenerate_chain(J, Gamma, **kw):
    return ChainParams(5, omega=0.0, alpha=0.0, J=J, gamma=[Gamma, 0, 0, 0, Gamma], **kw)


def fitted_chain(**kw):
    return ChainParams(5, omega=FIT_OMEGA, alpha=FIT_ALPHA, J=FIT_J, gamma=FIT_GAMMA, **kw)


def test_criterion_1_peak_positions(acceptance):
    t0 = time.perf_counter()
    J = 1.0
    peaks = linear_peak_positions(degenerate_chain(J, J / 500), 2.5 * J, xatol=1e-12)
    err = np.max(np.abs(peaks - NORMAL_MODES * J)) / J if peaks.size == 5 else np.inf
    elapsed = time.perf_counter() - t0
    ok = err < 1e-6 and elapsed < 1.0
    assert acceptance(1, ok, f"five peaks, max error {err:.1e} J", elapsed)


def test_criterion_2_peak_widths(acceptance):
    t0 = time.perf_counter()
    G = 1.0
    w = degenerate_peak_widths(500 * G, G)
    expected = np.array([1 / 6, 1 / 2, 2 / 3, 1 / 2, 1 / 6]) * G
    rel = np.max(np.abs(w / expected - 1))
    total = abs(w.sum() / (2 * G) - 1)
    elapsed = time.perf_counter() - t0
    ok = rel < 0.02 and total < 0.02 and elapsed < 5.0
    assert acceptance(2, ok, f"width error {rel:.2%}, sum error {total:.2%}", elapsed)


def test_criterion_3_closed_form(acceptance):
    t0 = time.perf_counter()
    J, G = 1.0, 0.05
    d = np.linspace(-2.5 * J, 2.5 * J, 1001)
    ref = degenerate_closed_form_s21(d, J, G)
    dev = np.max(np.abs(linear_s21(degenerate_chain(J, G), d) - ref) / np.abs(ref))
    elapsed = time.perf_counter() - t0
    ok = dev < 1e-10 and elapsed < 1.0
    assert acceptance(3, ok, f"max relative deviation {dev:.1e}", elapsed)


def test_criterion_4_quantum_linear(acceptance):
    t0 = time.perf_counter()
    p = fitted_chain(omega_d=3.9 * GHZ)
    basis = build_basis(5, 3, 2)
    Gamma = FIT_GAMMA[0]
    d = np.linspace(-2.5, 2.5, 41) * FIT_J
    solver = TransmissionSolver(p, basis)
    quantum = np.array([solver.s21(p.omega_d + x, Gamma / 50) for x in d])
    lin = linear_s21(p, d)
    dev = np.max(np.abs(np.abs(quantum) - np.abs(lin)) / np.abs(lin))
    elapsed = time.perf_counter() - t0
    ok = basis.dim == 21 and dev < 0.02 and elapsed < 120
    assert acceptance(4, ok, f"{basis.dim} states, max |S21| deviation {dev:.2%}", elapsed)


# two-qutrit setting
J5 = 50 * MHZ
ALPHA5 = -181 * MHZ
GAMMA5 = 3.2e6
G5 = 2 * GAMMA5


@pytest.fixture(scope="module")
def qutrit_pair():
    p = ChainParams(2, omega=0.0, alpha=ALPHA5, J=J5, gamma=GAMMA5)
    basis = build_basis(2, 2, 4)
    solver = TransmissionSolver(p, basis)
    b2 = lowering_op(basis, 2)

    def site2(delta, Omega):
        # frame with omega = 0, so delta is the drive frequency itself
        return expectation(solver.steady_state(delta, Omega), b2)

    return site2


def interior_extrema(y):
    return [i for i in range(1, len(y) - 1) if (y[i] - y[i - 1]) * (y[i + 1] - y[i]) < 0]


def test_criterion_5_two_qutrit_series(acceptance, qutrit_pair):
    t0 = time.perf_counter()
    Oms = np.geomspace(G5 / 100, G5 / 10, 7)
    slopes = []
    for delta in np.array([0.3, -1.3, 0.05, 0.8, -0.54]) * J5:
        resid = []
        for Om in Oms:
            Om_s, G_s = series_parameters(Om, GAMMA5)
            first, _ = two_qutrit_series(delta, Om_s, J5, G_s, ALPHA5)
            resid.append(abs(qutrit_pair(delta, Om) - first))
        slopes.append(np.polyfit(np.log(Oms), np.log(resid), 1)[0])
    slopes_ok = all(abs(s - 3) <= 0.3 for s in slopes)

    resonances = sorted({float(x) for v in two_qutrit_sector_resonances(J5, ALPHA5).values() for x in v})
    # each line may need a different drive strength to show up
    ladder = np.array([1, 3, 10, 20]) * G5
    found = {}
    for r in resonances:
        d = np.linspace(r - 2 * G5, r + 2 * G5, 81)
        for Om in ladder:
            y = np.abs([qutrit_pair(x, Om) for x in d])
            if any(abs(d[i] - r) <= G5 for i in interior_extrema(y)):
                found[r] = float(Om / G5)
                break
    elapsed = time.perf_counter() - t0
    ok = slopes_ok and len(found) == len(resonances) == 7 and elapsed < 300
    detail = (f"slopes {np.round(slopes, 3).tolist()}, extrema at {len(found)}/{len(resonances)} resonances "
              f"(drive/G {[found.get(r) for r in resonances]})")
    assert acceptance(5, ok, detail, elapsed)


def test_criterion_6_sector_resonances(acceptance):
    t0 = time.perf_counter()
    res = two_qutrit_sector_resonances(J5, ALPHA5)
    err = 0.0
    for n in (1, 2, 3, 4):
        ev = np.sort(np.linalg.eigvalsh(two_qutrit_sector_hamiltonian(n, 0.0, J5, ALPHA5))) / n
        err = max(err, np.max(np.abs(np.sort(res[n]) - ev)) / abs(ALPHA5))
    hidden = np.min(np.abs(np.asarray(res[2]) - res[4][0])) / abs(ALPHA5)
    elapsed = time.perf_counter() - t0
    ok = err < 1e-12 and hidden < 1e-12 and elapsed < 1.0
    assert acceptance(6, ok, f"max relative error {err:.1e}, n=4 line on n=2 list to {hidden:.1e}", elapsed)


def test_criterion_7_dressed_modes(acceptance):
    t0 = time.perf_counter()
    G, Om = 0.3, 0.7
    modes = dressed_modes(1.0, G, Om)
    printed = np.array([
        [1 / (2 * SQ3), -1 / 2, 1 / SQ3, -1 / 2, 1 / (2 * SQ3)],
        [1 / 2, -1 / 2, 0, 1 / 2, -1 / 2],
        [1 / SQ3, 0, -1 / SQ3, 0, 1 / SQ3],
        [1 / 2, 1 / 2, 0, -1 / 2, -1 / 2],
        [1 / (2 * SQ3), 1 / 2, 1 / SQ3, 1 / 2, 1 / (2 * SQ3)],
    ])
    amps = np.array([m.amplitudes * np.sign(m.amplitudes @ ref) for m, ref in zip(modes, printed)])
    amp_err = np.max(np.abs(amps - printed))
    weights = np.array([1 / (2 * SQ3), 1 / 2, 1 / SQ3, 1 / 2, 1 / (2 * SQ3)])
    rate_err = np.max(np.abs([m.rate for m in modes] - weights**2 * 2 * G))
    drive_err = np.max(np.abs(np.abs([m.drive for m in modes]) - weights * Om))
    J, Gam = 1.0, 1 / 500
    d = np.linspace(-2.5, 2.5, 2001)
    lin = linear_s21(degenerate_chain(J, Gam), d)
    mb = maxwell_bloch_s21(-d, 1e-6 * Gam, J, Gam)
    mb_dev = np.max(np.abs(np.abs(mb) - np.abs(lin)) / np.abs(lin))
    elapsed = time.perf_counter() - t0
    ok = amp_err < 1e-14 and rate_err < 1e-14 and drive_err < 1e-14 and mb_dev < 0.01 and elapsed < 1.0
    detail = f"amplitude {amp_err:.0e}, rates {rate_err:.0e}, drives {drive_err:.0e}, MB vs linear {mb_dev:.2%}"
    assert acceptance(7, ok, detail, elapsed)


# ---- criterion 8 ----------------------------------------------------------

SWEEP_RATIOS = np.array([0.25, 0.5, 1, 2, 4, 8])


def refined_minima(x, y):
    """Interior local minima of ``y`` refined by a parabola through three points."""
    out = []
    for i in range(1, len(y) - 1):
        if y[i] < y[i - 1] and y[i] < y[i + 1]:
            denom = y[i - 1] - 2 * y[i] + y[i + 1]
            shift = 0.5 * (y[i - 1] - y[i + 1]) / denom
            out.append(x[i] + shift * (x[1] - x[0]))
    return np.array(out)


@pytest.fixture(scope="module")
def blockade_sweep():
    p = fitted_chain(omega_d=3.9 * GHZ)
    basis = build_basis(5, 3, 4)
    Gamma = FIT_GAMMA[0]
    grid = SweepGrid(p.omega_d + np.linspace(-2.5, 2.5, 61) * FIT_J, Gamma * SWEEP_RATIOS)
    t0 = time.perf_counter()
    table = sweep(p, basis, grid)
    elapsed = time.perf_counter() - t0
    lines = multiphoton_lines(sector_eigensolve(p, basis), 4)
    return p, basis, grid, table, lines, elapsed


@pytest.mark.slow
def test_criterion_8_blockade(acceptance, blockade_sweep):
    p, basis, grid, table, lines, elapsed = blockade_sweep
    Gamma = FIT_GAMMA[0]
    mag = table.magnitude_map(grid)
    x = grid.omega_d
    central = np.abs(x - p.omega_d) <= FIT_J / 2
    peak = mag[:, central].max(axis=1)
    strong = SWEEP_RATIOS >= 1
    decreasing = bool(np.all(np.diff(peak[strong]) < 0))

    weak_dips = refined_minima(x, mag[0])
    multi = np.array([w for n, w in lines if n >= 2])
    aligned = set()
    for row in np.flatnonzero(SWEEP_RATIOS > 1):
        for m in refined_minima(x, mag[row]):
            new = weak_dips.size == 0 or np.min(np.abs(weak_dips - m)) > Gamma
            if new and np.min(np.abs(multi - m)) <= Gamma:
                aligned.add(round(float(m) / Gamma))
    finite = bool(np.all(np.isfinite(table.s21))) and np.nanmax(table.residual) <= 1e-8
    ok = basis.dim == 121 and decreasing and len(aligned) >= 3 and finite and elapsed < 3600
    detail = (f"{basis.dim} states, central peak {np.round(peak, 3).tolist()}, "
              f"{len(aligned)} new dips on multiphoton lines")
    assert acceptance(8, ok, detail, elapsed)


def test_criterion_9_level_statistics(acceptance):
    t0 = time.perf_counter()
    basis = build_basis(5, 3, 4)
    cases = {
        "fitted": fitted_chain(omega_d=3.9 * GHZ).replace(gamma=0.0),
        "ideal": ChainParams(5, omega=3.9 * GHZ, alpha=-182 * MHZ, J=FIT_J, omega_d=3.9 * GHZ),
    }
    stats = {}
    for name, p in cases.items():
        n, pattern, E = densest_band(sector_eigensolve(p, basis))
        s = spacing_statistics(E)
        stats[name] = (n, pattern, len(E), s.ks_wigner_dyson, s.ks_poisson)
    fit, ideal = stats["fitted"], stats["ideal"]
    elapsed = time.perf_counter() - t0
    ok = fit[3] < fit[4] and ideal[3] - ideal[4] > fit[3] - fit[4] and elapsed < 60
    detail = (f"fitted band n={fit[0]} {fit[1]} ({fit[2]} levels) KS WD {fit[3]:.3f} vs P {fit[4]:.3f}; "
              f"ideal KS WD {ideal[3]:.3f} vs P {ideal[4]:.3f}")
    assert acceptance(9, ok, detail, elapsed)


# ORACLE: 1000-realization run (seed 1, same grid) of the averaged-|S21| maxima
# at sigma = 0.1J, 0.5J, J, 2J, computed once with an independent script.
ORACLE_PEAKS_1000 = np.array([0.346, 0.0916, 0.031, 0.0074])


def test_criterion_10_disorder(acceptance):
    t0 = time.perf_counter()
    p = fitted_chain(omega_d=3.9 * GHZ)
    d = np.linspace(-3 * FIT_J, 3 * FIT_J, 601)
    fractions = [0.1, 0.5, 1.0, 2.0]
    specs = [DisorderSpec(f * FIT_J / (2 * np.pi), 100, seed=1) for f in fractions]
    out = prominence_distribution(specs, p, d)
    peaks = np.array([np.abs(out[s.sigma]["result"].averaged).max() for s in specs])
    medians = np.array([np.median(out[s.sigma]["samples"]) for s in specs])
    ratio = peaks[-1] / peaks[0]
    # the oracle ladder falls by this factor one step before sigma = 2J
    trend = ORACLE_PEAKS_1000[2] / ORACLE_PEAKS_1000[0]
    elapsed = time.perf_counter() - t0
    ok = (np.all(np.diff(peaks) < 0) and ratio < trend and np.all(np.diff(medians) < 0)
          and elapsed < 300)
    detail = (f"peaks {np.round(peaks, 4).tolist()}, ratio 2J/0.1J {ratio:.3f} vs oracle trend {trend:.3f}, "
              f"medians {np.round(medians, 3).tolist()}")
    assert acceptance(10, ok, detail, elapsed)


def test_criterion_11_invariants(acceptance, small_params):
    t0 = time.perf_counter()
    failures = []
    # basis bijectivity
    for shape in [(5, 3, 4), (3, 2, 4), (4, 1, 2)]:
        b = build_basis(*shape)
        if sorted(b.index.values()) != list(range(b.dim)) or any(b.index[s] != i for i, s in enumerate(b.states)):
            failures.append(f"basis {shape}")
    basis = build_basis(3, 2, 4)
    H = build_hamiltonian(small_params, basis)
    L = build_liouvillian(H, collapse_ops(small_params, basis))
    trace_row = np.eye(basis.dim).reshape(-1, order="F")
    if np.max(np.abs(L.T @ trace_row)) > 1e-12 * abs(L).max():
        failures.append("trace annihilation")
    rho, info = steady_state(L, return_info=True)
    if info.residual > 1e-8 * info.scale:
        failures.append("residual")
    try:
        check_density_matrix(rho)
    except ValueError as exc:
        failures.append(str(exc))
    if not np.allclose(unvec(L @ rho.reshape(-1, order="F")), 0, atol=1e-8 * info.scale):
        failures.append("null vector")
    edge = ChainParams(5, omega=0.0, alpha=-90.0, J=20.0, gamma=[1.0, 0, 0, 0, 1.0])
    grid = SweepGrid(np.linspace(-20, 20, 4), [0.5, 2.0])
    one = sweep(edge, build_basis(5, 3, 2), grid, workers=1)
    two = sweep(edge, build_basis(5, 3, 2), grid, workers=2)
    if not (np.array_equal(one.s21, two.s21) and np.array_equal(one.residual, two.residual)):
        failures.append("worker independence")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 300
    assert acceptance(11, ok, "all invariants hold" if ok else f"failed: {failures}", elapsed)
