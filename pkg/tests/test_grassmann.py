import numpy as np
import pytest

from varjacobi.battery import random_band_problem
from varjacobi.frame import integrate_frame
from varjacobi.grassmann import (
    COISOTROPIC, FULL, ISOTROPIC, LAGRANGIAN, LOCAL, NONE, TRAJECTORY, FrameJetStack,
    classify_subspace, curve_rank, expected_flags, fanning_check, flag_profile, frame_jet,
    rank_rows, vertical_intersection_dim, write_rank_csv,
)
from varjacobi.hamiltonian import HamiltonianSystem, symplectic_form


def traj_of(prob, step=None):
    return integrate_frame(HamiltonianSystem(prob), step)


def test_expected_flags():
    assert expected_flags(1) == [LAGRANGIAN, FULL]
    assert expected_flags(3) == [ISOTROPIC, ISOTROPIC, LAGRANGIAN, COISOTROPIC, COISOTROPIC, FULL]


def test_harmonic_jets_are_the_analytic_solutions(unit_harmonic):
    tr = traj_of(unit_harmonic(3.0))
    for t in (0.4, 1.7, 2.9):
        st = frame_jet(tr, t=t, basis=TRAJECTORY)
        # rows of Psi^T are the solutions sin t and -cos t
        np.testing.assert_allclose(st.jets[0][:, 0], [np.sin(t), -np.cos(t)], atol=1e-8)
        np.testing.assert_allclose(st.jets[1][:, 0], [np.cos(t), np.sin(t)], atol=1e-8)


def test_low_jets_equal_frame_columns():
    prob = random_band_problem(np.random.default_rng(6), 3, 2, (0.0, 1.0))
    tr = traj_of(prob)
    n = prob.dim_n
    idx = 1500
    st = frame_jet(tr, idx, basis=TRAJECTORY)
    M = tr.frames[idx].T
    for j in range(prob.order_k):
        np.testing.assert_allclose(st.jets[j], M[:, j * n:(j + 1) * n], rtol=1e-9, atol=1e-9)


def test_local_and_trajectory_bases_agree():
    prob = random_band_problem(np.random.default_rng(7), 2, 2, (0.0, 1.0))
    tr = traj_of(prob)
    for idx in (300, 2000, 4096):
        loc = frame_jet(tr, idx, basis=LOCAL)
        raw = frame_jet(tr, idx, basis=TRAJECTORY)
        for a, b in zip(loc.raw_jets, raw.jets):
            np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-9 * np.abs(b).max())
        assert curve_rank(loc) == curve_rank(raw)
        assert flag_profile(loc) == flag_profile(raw)
    with pytest.raises(ValueError):
        frame_jet(tr, 0, basis="other")
    with pytest.raises(ValueError):
        frame_jet(tr, 0, max_order=4)
    with pytest.raises(ValueError):
        frame_jet(tr)


def test_vertical_columns_vanish_at_a(bilaplacian):
    st = frame_jet(traj_of(bilaplacian), 0, basis=TRAJECTORY)
    # first n columns of Psi(a)^T: y-parts of the vertical columns are zero
    np.testing.assert_array_equal(st.jets[0][:2], 0.0)


def test_rank_examples(bilaplacian, harmonic):
    tr = traj_of(bilaplacian)
    for idx in np.linspace(1, 4096, 25).astype(int):
        assert curve_rank(frame_jet(tr, idx)) == 1
    tr = traj_of(harmonic(3.0))
    assert all(curve_rank(frame_jet(tr, i)) == 1 for i in (0, 1000, 4096))


def test_rank_random_k2_n2():
    prob = random_band_problem(np.random.default_rng(9), 2, 2, (0.0, 1.0))
    tr = traj_of(prob)
    for idx in np.linspace(1, 4096, 100).astype(int):
        assert curve_rank(frame_jet(tr, idx)) == 2


def test_fanning(bilaplacian, harmonic):
    for tr in (traj_of(bilaplacian), traj_of(harmonic(3.0))):
        for idx in (0, 2000, 4096):
            out = fanning_check(frame_jet(tr, idx))
            assert out["is_fanning"] and out["condition_number"] < 1e10
    col = np.array([[1.0], [0.0], [2.0], [0.0]])
    bad = FrameJetStack(0.0, (col, col, col, col), np.eye(4), 2, 1)
    out = fanning_check(bad)
    assert not out["is_fanning"]


def test_flag_examples(bilaplacian, harmonic):
    st = frame_jet(traj_of(bilaplacian), 2048)
    assert flag_profile(st) == [ISOTROPIC, LAGRANGIAN, COISOTROPIC, FULL]
    st = frame_jet(traj_of(harmonic(2.0)), 100)
    assert flag_profile(st)[0] == LAGRANGIAN


def test_flag_random_k3_n2():
    prob = random_band_problem(np.random.default_rng(10), 3, 2, (0.0, 1.0))
    tr = traj_of(prob)
    for idx in np.linspace(1, 4096, 20).astype(int):
        assert flag_profile(frame_jet(tr, idx)) == expected_flags(3)


def test_classify_subspace_hand_cases():
    J = symplectic_form(2)
    e = np.eye(4)
    assert classify_subspace(e[:, [0]], J) == ISOTROPIC
    assert classify_subspace(e[:, [0, 1]], J) == LAGRANGIAN
    assert classify_subspace(e[:, [0, 1, 2]], J) == COISOTROPIC
    assert classify_subspace(e, J) == FULL
    # span{e0, e2} is symplectic: neither isotropic nor coisotropic
    assert classify_subspace(e[:, [0, 2]], J) == NONE


def test_vertical_intersection(bilaplacian, unit_harmonic):
    tr = traj_of(bilaplacian)
    assert vertical_intersection_dim(frame_jet(tr, 0)) == 2
    assert all(vertical_intersection_dim(frame_jet(tr, i)) == 0 for i in (100, 2000, 4096))
    tr = traj_of(unit_harmonic(4.0), 1e-3)
    assert vertical_intersection_dim(frame_jet(tr, t=np.pi)) == 1
    assert vertical_intersection_dim(frame_jet(tr, t=3.0)) == 0


def test_rank_rows_and_csv(tmp_path, bilaplacian):
    tr = traj_of(bilaplacian)
    rows = rank_rows(tr, [0, 1024, 4096])
    assert [r["rank"] for r in rows] == [1, 1, 1]
    assert rows[0]["vertical_dim"] == 2 and rows[1]["vertical_dim"] == 0
    path = tmp_path / "rank.csv"
    write_rank_csv(rows, 2, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,rank,flag_0,flag_1,flag_2,flag_3,vertical_dim"
    assert lines[2].split(",")[1:] == ["1", ISOTROPIC, LAGRANGIAN, COISOTROPIC, FULL, "0"]
