import numpy as np
import pytest

from varjacobi.battery import random_band_problem
from varjacobi.frame import (
    default_step, integrate_frame, symplectic_drift, vertical_frame, vertical_frame_at,
    write_frame_csv,
)
from varjacobi.hamiltonian import HamiltonianSystem
from varjacobi.problem import VariationalProblem

from conftest import const


def test_initial_frame_is_minus_j(harmonic):
    tr = integrate_frame(HamiltonianSystem(harmonic(1.0)))
    np.testing.assert_array_equal(tr.frames[0], -tr.sys.J)
    Y, Z = vertical_frame(tr, 0)
    assert Y.tolist() == [[0.0]] and Z.tolist() == [[1.0]]


def test_harmonic_quarter_turn(unit_harmonic):
    # exact frame: [[sin t, -cos t], [cos t, sin t]]
    tr = integrate_frame(HamiltonianSystem(unit_harmonic(2.0)), 1e-3)
    P = tr.state_at(np.pi / 2)
    np.testing.assert_allclose(P, [[1.0, 0.0], [0.0, 1.0]], atol=1e-8)
    t = tr.grid
    np.testing.assert_allclose(tr.frames[:, 0, 0], np.sin(t), atol=1e-10)
    np.testing.assert_allclose(tr.frames[:, 1, 0], np.cos(t), atol=1e-10)


def test_nilpotent_system_is_exact():
    z = const(0.0)
    sys = HamiltonianSystem(VariationalProblem(1, 1, (0, 1), (z, const(1.0)), (z,)))
    tr = integrate_frame(sys, 1 / 64)
    for t, P in zip(tr.grid, tr.frames):
        np.testing.assert_allclose(P, np.array([[1.0, t], [0.0, 1.0]]) @ (-sys.J), atol=1e-14)


def test_fourth_order_vertical_frame():
    z = const(0.0)
    sys = HamiltonianSystem(VariationalProblem(2, 1, (0, 1), (z, z, const(1.0)), (z, z)))
    tr = integrate_frame(sys)
    t = np.array([0.1, 0.37, 1.0])
    Y, Z = vertical_frame_at(tr, t)
    exact = np.stack([[[-s ** 3 / 6, s ** 2 / 2], [-s ** 2 / 2, s]] for s in t])
    np.testing.assert_allclose(Y, exact, atol=1e-14)


def test_drift_examples(harmonic):
    tr = integrate_frame(HamiltonianSystem(harmonic(2 * np.pi)), 1e-3)
    assert symplectic_drift(tr) <= 1e-10


def test_drift_scales_with_fifth_power():
    # RK4 maps R(hH) satisfy R^T J R - J = O(h^6) per step for Hamiltonian H
    prob = random_band_problem(np.random.default_rng(8), 2, 2, (0.0, 1.0))
    sys = HamiltonianSystem(prob)
    d1 = symplectic_drift(integrate_frame(sys, 1 / 32))
    d2 = symplectic_drift(integrate_frame(sys, 1 / 64))
    assert 1 / 40 <= d2 / d1 <= 1 / 8


def test_dense_output_is_consistent_on_grid(unit_harmonic):
    tr = integrate_frame(HamiltonianSystem(unit_harmonic(3.0)))
    np.testing.assert_array_equal(tr.states_at(tr.grid[[5, 100]]), tr.frames[[5, 100]])
    mid = 0.5 * (tr.grid[10] + tr.grid[11])
    np.testing.assert_allclose(tr.state_at(mid)[0, 0], np.sin(mid), atol=1e-13)


def test_step_rules(harmonic):
    sys = HamiltonianSystem(harmonic(1.0))
    with pytest.raises(ValueError):
        integrate_frame(sys, 0.1)
    with pytest.raises(ValueError):
        integrate_frame(sys, -1e-3)
    assert default_step(harmonic(2.0)) == 2.0 / 4096
    tr = integrate_frame(sys, 0.3 / 16 / 7)
    assert tr.b == 1.0 and tr.step <= 0.3 / 16 / 7


def test_custom_initial_frame(harmonic):
    sys = HamiltonianSystem(harmonic(1.0))
    init = np.array([[0.0, -1.0], [2.0, 0.0]])
    tr = integrate_frame(sys, init=init)
    np.testing.assert_allclose(tr.frames[-1], integrate_frame(sys).frames[-1] @ np.diag([2.0, 1.0]), atol=1e-12)
    with pytest.raises(ValueError):
        integrate_frame(sys, init=np.eye(3))


def test_frame_csv(tmp_path, harmonic):
    tr = integrate_frame(HamiltonianSystem(harmonic(1.0)), 1 / 32)
    path = tmp_path / "frame.csv"
    write_frame_csv(tr, path)
    rows = path.read_text().splitlines()
    assert rows[0] == "t,psi_0_0,psi_0_1,psi_1_0,psi_1_1"
    assert len(rows) == 34
    assert float(rows[-1].split(",")[1]) == tr.frames[-1, 0, 0]
