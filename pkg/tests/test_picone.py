import numpy as np
import pytest

from varjacobi.battery import random_band_problem
from varjacobi.frame import integrate_frame
from varjacobi.hamiltonian import HamiltonianSystem
from varjacobi.picone import (
    ConjugatePointError, TestField, discrete_hessian_min_eig, frame_symmetry_residuals,
    functional_value, functional_via_picone, hessian_matrices, picone_integral, picone_lhs_rhs,
)
from varjacobi.problem import VariationalProblem

from conftest import const


def free_particle():
    return VariationalProblem(1, 1, (0.0, 1.0), (const(0.0), const(2.0)), (const(0.0),))


def parabola():
    return TestField([[1.0]], (0.0, 1.0), 1)  # t (1 - t)


def quartic():
    return TestField([[1.0]], (0.0, 1.0), 2)  # t^2 (1 - t)^2


def test_field_jets_match_expanded_polynomial():
    f = TestField([[0.5, -1.0], [2.0, 0.3]], (-0.5, 1.5), 2)
    t = np.linspace(-0.5, 1.5, 7)
    jets = f.jets(t, 3)
    for c, p in enumerate(f.components):
        for j in range(4):
            np.testing.assert_allclose(jets[j, :, c], p.deriv(j)(t) if j else p(t), atol=1e-12)
    # flat to order k - 1 at both ends
    np.testing.assert_array_equal(f.jets(np.array([-0.5, 1.5]), 1), 0.0)


def test_functional_hand_values(bilaplacian):
    assert functional_value(free_particle(), parabola()) == pytest.approx(1 / 3, abs=1e-14)
    assert functional_value(bilaplacian, quartic()) == pytest.approx(4 / 5, abs=1e-14)
    assert functional_value(bilaplacian, TestField([[0.0]], (0, 1), 2)) == 0.0


def test_functional_harmonic_hand_value(harmonic):
    # int (1 - 2t)^2 - t^2 (1 - t)^2 = 1/3 - 1/30
    assert functional_value(harmonic(1.0), parabola()) == pytest.approx(3 / 10, abs=1e-14)


def test_picone_zero_field(harmonic):
    tr = integrate_frame(HamiltonianSystem(harmonic(1.0)))
    zero = TestField([[0.0]], (0, 1), 1)
    assert picone_lhs_rhs(harmonic(1.0), tr, zero, 100) == (0.0, 0.0)
    assert functional_via_picone(harmonic(1.0), tr, zero) == 0.0


def test_picone_pointwise_harmonic(harmonic):
    prob = harmonic(1.0)
    tr = integrate_frame(HamiltonianSystem(prob))
    lhs, rhs = picone_lhs_rhs(prob, tr, parabola(), t=0.5)
    assert lhs == pytest.approx(rhs, abs=1e-9)
    # Y = sin t / 2, Z = cos t, y = h, z = 2 h', so lhs = d/dt (2 h^2 cot t)
    h, dh = 0.25, 0.0
    exact = 2 * (2 * h * dh / np.tan(0.5) - h ** 2 / np.sin(0.5) ** 2)
    assert lhs == pytest.approx(exact, abs=1e-10)


def test_picone_pointwise_bilaplacian(bilaplacian):
    tr = integrate_frame(HamiltonianSystem(bilaplacian))
    t = np.linspace(0.01, 1.0, 40)
    lhs, rhs = picone_lhs_rhs(bilaplacian, tr, quartic(), t=t)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(lhs).max()))


def test_picone_refuses_at_a(harmonic):
    tr = integrate_frame(HamiltonianSystem(harmonic(1.0)))
    with pytest.raises(ValueError):
        picone_lhs_rhs(harmonic(1.0), tr, parabola(), 0)


def test_two_way_functional_hand_cases(harmonic, bilaplacian):
    tr = integrate_frame(HamiltonianSystem(bilaplacian))
    assert functional_via_picone(bilaplacian, tr, quartic()) == pytest.approx(4 / 5, abs=1e-7)
    prob = free_particle()
    tr = integrate_frame(HamiltonianSystem(prob))
    assert functional_via_picone(prob, tr, parabola()) == pytest.approx(1 / 3, abs=1e-7)
    prob = harmonic(1.0)
    tr = integrate_frame(HamiltonianSystem(prob))
    assert functional_via_picone(prob, tr, parabola()) == pytest.approx(functional_value(prob, parabola()), abs=1e-7)


def test_two_way_functional_random_k2_n2():
    rng = np.random.default_rng(3)
    prob = random_band_problem(rng, 2, 2, (0.0, 1.0))
    tr = integrate_frame(HamiltonianSystem(prob))
    for _ in range(3):
        f = TestField.random(rng, prob.interval, 2, 2)
        res = picone_integral(prob, tr, f)
        q = functional_value(prob, f)
        assert res.value == pytest.approx(q, rel=1e-6, abs=1e-6)
        assert res.capped_nodes == 0 and res.min_integrand >= -1e-10


def test_picone_refuses_past_conjugate_point(harmonic):
    prob = harmonic(4.0)
    tr = integrate_frame(HamiltonianSystem(prob))
    with pytest.raises(ConjugatePointError, match="conjugate point"):
        functional_via_picone(prob, tr, TestField([[1.0]], prob.interval, 1))


def test_small_picone_integral_means_small_field(bilaplacian):
    tr = integrate_frame(HamiltonianSystem(bilaplacian))
    f = TestField([[1e-7]], (0, 1), 2)
    assert functional_via_picone(bilaplacian, tr, f) <= 1e-10
    t = np.linspace(0, 1, 101)
    assert np.abs(f.jets(t, 0)).max() <= 1e-8


def test_frame_symmetry(unit_harmonic):
    prob = unit_harmonic(3.0)
    tr = integrate_frame(HamiltonianSystem(prob))
    lag, sym = frame_symmetry_residuals(tr)
    assert lag <= 1e-9 and sym == 0.0
    # 1 x 1 case: Z Y^-1 = cot t
    Y, Z = tr.frames[1:, 0, 0], tr.frames[1:, 1, 0]
    np.testing.assert_allclose(Z / Y, 1 / np.tan(tr.grid[1:]), rtol=1e-9)


def test_frame_symmetry_random_k2_n2():
    prob = random_band_problem(np.random.default_rng(4), 2, 2, (0.0, 1.0))
    lag, sym = frame_symmetry_residuals(integrate_frame(HamiltonianSystem(prob)))
    assert lag <= 1e-9 and sym <= 1e-8


def test_oracle_signs(harmonic, bilaplacian):
    assert discrete_hessian_min_eig(harmonic(1.0)) > 0
    assert discrete_hessian_min_eig(harmonic(4.0)) < 0
    assert discrete_hessian_min_eig(bilaplacian) > 0
    with pytest.raises(ValueError):
        discrete_hessian_min_eig(harmonic(1.0), 3)


def test_oracle_eigenvalue_approximates_dirichlet_spectrum(harmonic):
    # Rayleigh quotient of int h'^2 - h^2 against int h^2 on [0, L]: (pi / L)^2 - 1
    L = 2.0
    val = discrete_hessian_min_eig(harmonic(L))
    assert val == pytest.approx((np.pi / L) ** 2 - 1, rel=1e-8)


def test_galerkin_matrices_reproduce_functional(bilaplacian):
    Q, G = hessian_matrices(bilaplacian, 6)
    np.testing.assert_allclose(Q, Q.T)
    assert np.all(np.linalg.eigvalsh(G) > 0)
    # first basis function is t^2 (1 - t)^2 times the constant Legendre polynomial
    assert Q[0, 0] == pytest.approx(4 / 5, rel=1e-12)
