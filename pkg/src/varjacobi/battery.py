"""Seeded random problems and fields for the identity and flag checks."""

from __future__ import annotations

import numpy as np
from numpy.polynomial import Polynomial

from .picone import TestField
from .polynomial import MatrixPolynomial
from .problem import ScalarProblem1D, VariationalProblem

DEFAULT_SEED = 20240611


def _shifted(mats: np.ndarray, a: float) -> np.ndarray:
    """Power-basis coefficients of ``sum_d mats[d] (t - a)^d``."""
    deg = mats.shape[0] - 1
    out = np.zeros_like(mats)
    for d in range(deg + 1):
        c = (Polynomial([-a, 1.0]) ** d).coef
        for p, cp in enumerate(c):
            out[p] += cp * mats[d]
    return out


def random_spd_poly(rng, n: int, degree: int, a: float, floor: float = 0.5) -> MatrixPolynomial:
    """``floor I + sum_d R_d R_d^T (t - a)^d``: positive definite for ``t >= a``."""
    mats = np.empty((degree + 1, n, n))
    for d in range(degree + 1):
        R = rng.standard_normal((n, n)) * (0.7 / (1 + d))
        mats[d] = R @ R.T
    mats[0] += floor * np.eye(n)
    return MatrixPolynomial(_shifted(mats, a))


def random_poly(rng, n: int, degree: int, a: float, scale: float, symmetric: bool) -> MatrixPolynomial:
    mats = rng.standard_normal((degree + 1, n, n)) * scale
    if symmetric:
        mats = 0.5 * (mats + np.swapaxes(mats, 1, 2))
    return MatrixPolynomial(_shifted(mats, a))


def random_band_problem(rng, k: int, n: int, interval=(0.0, 1.0), max_degree: int = 4,
                        scale: float = 1.0, shift: float = 0.0) -> VariationalProblem:
    """Band problem with SPD top block; lower blocks scaled by ``scale``.

    ``shift`` subtracts ``shift * |h|^2`` from the Lagrangian.
    """
    a = float(interval[0])
    deg = lambda: int(rng.integers(1, max_degree + 1))
    diag = [random_poly(rng, n, deg(), a, scale, True) for _ in range(k)]
    diag.append(random_spd_poly(rng, n, deg(), a))
    diag[0] = diag[0] - MatrixPolynomial.constant(2.0 * shift * np.eye(n))
    sup = [random_poly(rng, n, deg(), a, 0.5 * scale, False) for _ in range(k)]
    return VariationalProblem(k, n, interval, tuple(diag), tuple(sup))


def random_scalar_problem(rng, k: int, interval=(0.0, 1.0), max_degree: int = 4,
                          scale: float = 1.0, shift: float = 0.0) -> ScalarProblem1D:
    a = float(interval[0])
    deg = lambda: int(rng.integers(1, max_degree + 1))
    P = [random_poly(rng, 1, deg(), a, scale, True) for _ in range(k)]
    P.append(0.5 * random_spd_poly(rng, 1, deg(), a))
    P[0] = P[0] - MatrixPolynomial.constant(np.array([[shift]]))
    return ScalarProblem1D(k, interval, tuple(P))


# first clamped eigenvalue of (-1)^k D^(2k) on [0, 1] is CLAMPED[k]^(2k)
CLAMPED = {1: np.pi, 2: 4.730040744862704, 3: 7.853204624095838}
_SHAPES = [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3), (2, 2)]


def _critical_shift(k: int, length: float, floor: float = 0.5) -> float:
    """Shift at which ``int floor/2 |h^(k)|^2 - shift |h|^2`` stops being positive."""
    return 0.5 * floor * (CLAMPED[k] / length) ** (2 * k)


def band_battery(seed: int = DEFAULT_SEED, size: int = 20) -> list[VariationalProblem]:
    """``size`` problems cycling through ``k, n <= 3``.

    Every other problem carries a zero-order shift drawn around the clamped
    threshold of its top-order part, so the battery mixes positive problems
    with problems that have conjugate points.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(size):
        k, n = _SHAPES[i % len(_SHAPES)]
        a = float(rng.uniform(-1.0, 1.0))
        L = float(rng.uniform(0.8, 2.0))
        shift = float(rng.uniform(0.6, 2.0)) * _critical_shift(k, L) if i % 2 else 0.0
        out.append(random_band_problem(rng, k, n, (a, a + L), shift=shift))
    return out


def scalar_battery(seed: int = DEFAULT_SEED + 1, size: int = 20, mixed: bool = True) -> list[ScalarProblem1D]:
    """Scalar problems with ``k`` cycling through 1, 2, 3.

    With ``mixed`` every other triple is shifted around the clamped threshold;
    without it no shift is applied, which suits checks that need a
    conjugate-point free interval.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(size):
        k = 1 + i % 3
        a = float(rng.uniform(-1.0, 1.0))
        L = float(rng.uniform(0.8, 2.0))
        shift = float(rng.uniform(0.6, 2.0)) * _critical_shift(k, L) if mixed and (i // 3) % 2 else 0.0
        out.append(random_scalar_problem(rng, k, (a, a + L), shift=shift))
    return out


def random_fields(rng, prob, count: int = 5, degree: int = 3) -> list[TestField]:
    n = getattr(prob, "dim_n", 1)
    return [TestField.random(rng, prob.interval, prob.order_k, n, degree) for _ in range(count)]
