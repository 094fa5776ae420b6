import numpy as np
import pytest

from bh_transport.lattice_model import ChainParams, build_basis
from bh_transport.liouvillian import SingularSystem
from bh_transport.linear_analytics import linear_s21
from bh_transport.spectroscopy import SweepGrid, TransmissionSolver, s21_point, sweep

G = 1.0
J = 20.0


@pytest.fixture(scope="module")
def edge():
    return ChainParams(5, omega=0.0, alpha=-90.0, J=J, gamma=[G, 0, 0, 0, G])


@pytest.fixture(scope="module")
def basis21():
    return build_basis(5, 3, 2)


def test_unit_transmission_weak_drive(edge, basis21):
    assert abs(s21_point(edge.replace(Omega=G / 100), basis21)) == pytest.approx(1.0, abs=0.01)


def test_weak_drive_matches_linear_model(edge, basis21):
    solver = TransmissionSolver(edge, basis21)
    d = np.linspace(-2.5 * J, 2.5 * J, 21)
    got = np.array([solver.s21(x, G / 50) for x in d])
    ref = linear_s21(edge, d)
    assert np.max(np.abs(np.abs(got) - np.abs(ref)) / np.abs(ref)) < 0.02


def test_blockade_below_weak_value(edge, basis21):
    solver = TransmissionSolver(edge, basis21)
    assert abs(solver.s21(0.0, G)) < abs(solver.s21(0.0, G / 100))


def test_doubling_weak_drive(edge, basis21):
    solver = TransmissionSolver(edge, basis21)
    for d in (0.0, 0.4 * J, J):
        a, b = solver.s21(d, G / 200), solver.s21(d, G / 100)
        assert abs(b / a - 1) < 0.01


def test_passivity(edge):
    solver = TransmissionSolver(edge, build_basis(5, 2, 3))
    for Om in (0.1 * G, G, 5 * G):
        for d in np.linspace(-2 * J, 2 * J, 9):
            assert abs(solver.s21(d, Om)) <= 1 + 1e-6


def test_zero_drive_rejected(edge, basis21):
    with pytest.raises(ValueError):
        s21_point(edge, basis21)
    with pytest.raises(ValueError):
        TransmissionSolver(edge.replace(gamma=[0, 0, 0, 0, G]), basis21)


def test_one_cell_grid_equals_point(edge, basis21):
    grid = SweepGrid([0.3 * J], [0.5 * G])
    table = sweep(edge, basis21, grid)
    assert len(table) == 1
    assert table.s21[0] == s21_point(edge.replace(omega_d=0.3 * J, Omega=0.5 * G), basis21)
    assert table.residual[0] <= 1e-8 and table.errors == [""]


def test_table_order_and_workers(edge, basis21):
    grid = SweepGrid(np.linspace(-J, J, 5), [0.1 * G, G, 3 * G])
    serial = sweep(edge, basis21, grid, workers=1)
    parallel = sweep(edge, basis21, grid, workers=3)
    np.testing.assert_array_equal(serial.s21, parallel.s21)
    np.testing.assert_array_equal(serial.residual, parallel.residual)
    assert [(a, b) for a, b in zip(serial.omega_d, serial.Omega)] == grid.cells()
    assert serial.magnitude_map(grid).shape == (3, 5)
    np.testing.assert_array_equal(serial.magnitude_map(grid)[1], np.abs(serial.s21[5:10]))


def test_failing_cell_recorded(edge, basis21, monkeypatch):
    original = TransmissionSolver.s21

    def flaky(self, omega_d, Omega, return_info=False):
        if Omega > 2 * G:
            raise SingularSystem("forced")
        return original(self, omega_d, Omega, return_info)

    monkeypatch.setattr(TransmissionSolver, "s21", flaky)
    table = sweep(edge, basis21, SweepGrid([0.0, J], [G, 3 * G]))
    assert np.all(np.isfinite(table.s21[:2])) and np.all(np.isnan(table.s21[2:]))
    assert table.errors[2].startswith("SingularSystem")


@pytest.mark.parametrize("wd,Om", [([], [1.0]), ([1.0, 0.5], [1.0]), ([1.0], [2.0, 2.0])])
def test_grid_validation(wd, Om):
    with pytest.raises(ValueError):
        SweepGrid(wd, Om)


def test_progress_callback(edge, basis21):
    seen = []
    sweep(edge, basis21, SweepGrid([0.0, 1.0], [G]), progress=lambda k, n: seen.append((k, n)))
    assert seen == [(1, 2), (2, 2)]
