"""One-dimensional route: scalar Jacobi equation and the integrated Eswaran identity.

The Jacobi equation ``sum_l (-1)^l (P_l h^(l))^(l) = 0`` is integrated as a
first-order system in the jet ``(h, ..., h^(2k-1))``. The vertical solutions
``sigma_1..sigma_k`` start from a zero ``(k-1)``-jet; their higher jets at
``a`` are the rows of an invertible seed (identity by default).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from numpy.polynomial.legendre import leggauss

from .conjugacy import (
    CERTIFIED, FOUND, INCONCLUSIVE, SUFFICIENCY_NOTE, ConjugacyResult,
    DEFAULT_REFINE_TOL, DEFAULT_TANGENTIAL_THRESHOLD, default_delta, scan_zeros,
)
from .frame import DEFAULT_STEPS
from .picone import ConjugatePointError, TestField, functional_value
from .problem import ScalarProblem1D


def companion_matrix(sp: ScalarProblem1D, t) -> np.ndarray:
    """``u' = F(t) u`` for ``u = (h, ..., h^(2k-1))``.

    The top derivative is solved from the Leibniz expansion
    ``sum_l (-1)^l sum_r C(l, r) P_l^(r) h^(2l - r) = 0``.
    """
    k = sp.order_k
    t = np.asarray(t, dtype=float)
    m = 2 * k
    F = np.zeros(t.shape + (m, m))
    for i in range(m - 1):
        F[..., i, i + 1] = 1.0
    Pk = sp.p_coeffs[k](t)[..., 0, 0]
    if np.any(Pk == 0.0):
        raise ZeroDivisionError("P_k vanishes at an evaluation node")
    lead = (-1.0) ** k * Pk
    for l, P in enumerate(sp.p_coeffs):
        for r in range(l + 1):
            if l == k and r == 0:
                continue
            dP = P.derivative(r)
            if dP.is_zero():
                break
            F[..., m - 1, 2 * l - r] -= (-1.0) ** l * comb(l, r) * dP(t)[..., 0, 0] / lead
    return F


@dataclass(frozen=True, eq=False)
class ScalarSolutionSet:
    """Vertical solutions on a uniform grid.

    ``states[j]`` is the ``2k x k`` matrix whose column ``i`` is the jet
    ``(sigma_i, ..., sigma_i^(2k-1))`` at ``grid[j]``.
    """

    problem: ScalarProblem1D
    grid: np.ndarray
    states: np.ndarray

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def sigma(self) -> np.ndarray:
        """Jets up to order ``k``: shape ``(len(grid), k + 1, k)``."""
        return self.states[:, : self.problem.order_k + 1, :]

    def states_at(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        N = len(self.grid) - 1
        j = np.clip(np.floor((t - self.grid[0]) / self.step).astype(int), 0, N)
        s = (t - self.grid[j])[:, None, None]
        u = self.states[j]
        t0 = self.grid[j]
        sp = self.problem
        F0 = companion_matrix(sp, t0)
        Fm = companion_matrix(sp, t0 + 0.5 * s[:, 0, 0])
        F1 = companion_matrix(sp, t0 + s[:, 0, 0])
        k1 = F0 @ u
        k2 = Fm @ (u + 0.5 * s * k1)
        k3 = Fm @ (u + 0.5 * s * k2)
        k4 = F1 @ (u + s * k3)
        return u + s / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    def wronskian(self) -> np.ndarray:
        k = self.problem.order_k
        return np.linalg.det(self.states[:, :k, :])

    def wronskian_at(self, t) -> np.ndarray:
        k = self.problem.order_k
        return np.linalg.det(self.states_at(t)[:, :k, :])


def scalar_vertical_solutions(sp: ScalarProblem1D, step: float | None = None, seed=None) -> ScalarSolutionSet:
    """Integrate the ``k`` vertical solutions with fixed-step RK4."""
    k = sp.order_k
    a, b = sp.interval
    if step is None:
        step = (b - a) / DEFAULT_STEPS
    if step > (b - a) / 16 * (1 + 1e-12):
        raise ValueError("step must be at most (b - a) / 16")
    N = int(np.ceil((b - a) / step - 1e-9))
    grid = np.linspace(a, b, N + 1)
    h = (b - a) / N
    seed = np.eye(k) if seed is None else np.asarray(seed, dtype=float)
    if seed.shape != (k, k) or abs(np.linalg.det(seed)) == 0.0:
        raise ValueError("seed must be an invertible k x k matrix")
    u = np.zeros((2 * k, k))
    u[k:, :] = seed.T  # row i of the seed is the terminal jet of sigma_i
    Fg = companion_matrix(sp, grid)
    Fm = companion_matrix(sp, grid[:-1] + 0.5 * h)
    states = np.empty((N + 1, 2 * k, k))
    states[0] = u
    for j in range(N):
        k1 = Fg[j] @ u
        k2 = Fm[j] @ (u + 0.5 * h * k1)
        k3 = Fm[j] @ (u + 0.5 * h * k2)
        k4 = Fg[j + 1] @ (u + h * k3)
        u = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        states[j + 1] = u
    return ScalarSolutionSet(sp, grid, states)


def eswaran_ratio(h_jet, sigma_jet) -> np.ndarray:
    """``W[h, sigma_1..sigma_k] / W[sigma_1..sigma_k]``.

    ``h_jet`` has shape ``(..., k + 1)`` and ``sigma_jet`` shape
    ``(..., k + 1, k)`` (jets down the rows, solutions across the columns).
    """
    h_jet = np.asarray(h_jet, dtype=float)
    sigma_jet = np.asarray(sigma_jet, dtype=float)
    k = sigma_jet.shape[-1]
    den = np.linalg.det(sigma_jet[..., :k, :])
    if np.any(den == 0.0):
        raise ZeroDivisionError("sub-Wronskian vanishes: conjugate point")
    big = np.concatenate([h_jet[..., :, None], sigma_jet], axis=-1)
    return np.linalg.det(big) / den


def scalar_conjugate_points(sols: ScalarSolutionSet, delta: float | None = None,
                            refine_tol: float = DEFAULT_REFINE_TOL,
                            tangential_threshold: float = DEFAULT_TANGENTIAL_THRESHOLD) -> ConjugacyResult:
    a, b = sols.problem.interval
    if delta is None:
        delta = default_delta(sols.step, a, b)
    ws = sols.wronskian()
    points, unresolved = scan_zeros(sols.grid, ws, lambda t: float(sols.wronskian_at(t)[0]),
                                    delta, refine_tol, tangential_threshold)
    verdict = FOUND if points else (INCONCLUSIVE if unresolved else CERTIFIED)
    return ConjugacyResult(np.column_stack([sols.grid, ws]), points, float(delta), verdict, [SUFFICIENCY_NOTE])


def eswaran_integrated_check(sp: ScalarProblem1D, field: TestField, step: float | None = None,
                             sols: ScalarSolutionSet | None = None, delta: float | None = None,
                             nodes_per_step: int = 8) -> tuple[float, float]:
    """``(int sum_l P_l (h^(l))^2, int P_k ratio^2)`` for an admissible field.

    The remainder of the pointwise identity is a total derivative vanishing at
    both endpoints, so the two integrals agree when no conjugate point exists.
    """
    if field.n != 1:
        raise ValueError("the scalar identity needs a one-dimensional field")
    k = sp.order_k
    if sols is None:
        sols = scalar_vertical_solutions(sp, step)
    res = scalar_conjugate_points(sols, delta)
    if res.conjugate_points:
        raise ConjugatePointError(f"conjugate point at t={res.conjugate_points[0].t:.9g}")
    lhs = functional_value(sp, field)
    if field.is_zero():
        return lhs, 0.0
    x, w = leggauss(nodes_per_step)
    h = sols.step
    left = sols.grid[:-1]
    ts = (left[:, None] + 0.5 * h * (x + 1.0)[None, :]).ravel()
    ws = np.tile(0.5 * h * w, len(left))
    sig = sols.states_at(ts)[:, : k + 1, :]
    hj = field.jets(ts, k)[..., 0].T
    with np.errstate(all="ignore"):
        ratio = np.linalg.det(np.concatenate([hj[..., None], sig], axis=-1)) / np.linalg.det(sig[:, :k, :])
    ratio = np.nan_to_num(ratio, nan=0.0, posinf=0.0, neginf=0.0)
    rhs = float(ws @ (sp.p_coeffs[k](ts)[:, 0, 0] * ratio ** 2))
    return lhs, rhs


def write_eswaran_csv(sols: ScalarSolutionSet, field: TestField | None, path) -> None:
    k = sols.problem.order_k
    ws = sols.wronskian()
    with open(path, "w") as fh:
        fh.write("t,W,ratio\n")
        for j, t in enumerate(sols.grid):
            r = ""
            if field is not None and ws[j] != 0.0:
                r = repr(float(eswaran_ratio(field.jets(t, k)[:, 0], sols.sigma[j])))
            fh.write(f"{float(t)!r},{float(ws[j])!r},{r}\n")
