"""Picone identity checks, two routes to the functional, and a Galerkin oracle."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.legendre import Legendre, leggauss
from scipy.linalg import eigh

from .conjugacy import find_conjugate_points
from .frame import FrameTrajectory
from .hamiltonian import HamiltonianSystem, zeroing_transform
from .problem import VariationalProblem

MAX_COND = 1e8
DEFAULT_NODES_PER_STEP = 8
# |Z Y^-1 y| may not exceed this multiple of (1 + |z| + |y|)
_CAP = 1e8


class ConjugatePointError(ValueError):
    """The requested computation needs a conjugate-point free interval."""


class TestField:
    """Admissible field ``h(t) = (t - a)^k (b - t)^k q(t)`` with ``q`` in ``R^n``.

    ``q`` is given by its power-basis coefficients, shape ``(degree + 1, n)``.
    """

    __test__ = False  # not a pytest class

    def __init__(self, q, interval, k: int):
        q = np.atleast_2d(np.asarray(q, dtype=float))
        self.q = q
        self.a, self.b = (float(x) for x in interval)
        self.k = int(k)
        self.n = q.shape[1]
        bump = Polynomial([-self.a, 1.0]) ** self.k * Polynomial([self.b, -1.0]) ** self.k
        self.components = [bump * Polynomial(q[:, c]) for c in range(self.n)]

    @classmethod
    def random(cls, rng, interval, k: int, n: int, degree: int = 3, scale: float = 1.0) -> "TestField":
        return cls(scale * rng.standard_normal((degree + 1, n)), interval, k)

    @property
    def degree(self) -> int:
        return max(p.degree() for p in self.components)

    def jets(self, t, order: int) -> np.ndarray:
        """``h^(j)(t)`` for ``j = 0..order``, shape ``(order + 1,) + t.shape + (n,)``.

        Evaluated in factored form by the Leibniz rule; expanding the bump in
        powers of ``t`` would lose all relative accuracy near the endpoints.
        """
        t = np.asarray(t, dtype=float)
        k = self.k
        u, v = t - self.a, self.b - t
        fu = np.zeros((order + 1,) + t.shape)
        fv = np.zeros((order + 1,) + t.shape)
        for j in range(min(order, k) + 1):
            c = factorial(k) / factorial(k - j)
            fu[j] = c * u ** (k - j)
            fv[j] = (-1) ** j * c * v ** (k - j)
        bump = np.zeros_like(fu)
        for j in range(order + 1):
            bump[j] = sum(comb(j, r) * fu[r] * fv[j - r] for r in range(j + 1))
        out = np.zeros((order + 1,) + t.shape + (self.n,))
        for c in range(self.n):
            q = Polynomial(self.q[:, c])
            qd = [q.deriv(j)(t) if j else q(t) for j in range(order + 1)]
            for j in range(order + 1):
                out[j, ..., c] = sum(comb(j, r) * bump[r] * qd[j - r] for r in range(j + 1))
        return out

    def is_zero(self) -> bool:
        return not np.any(self.q)


def _gauss(a: float, b: float, nodes: int):
    x, w = leggauss(nodes)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def _degree_of(prob) -> int:
    if hasattr(prob, "p_coeffs"):
        return max(p.degree for p in prob.p_coeffs)
    blocks = prob.blocks() if callable(prob.blocks) else prob.blocks
    return max(p.degree for p in blocks.values())


def functional_value(prob, field: TestField) -> float:
    """``Q[h] = int_a^b L`` by Gauss-Legendre, exact for the polynomial integrand.

    ``prob`` may be a band problem or raw coefficients.
    """
    if field.is_zero():
        return 0.0
    k = prob.order_k
    nodes = (2 * field.degree + _degree_of(prob)) // 2 + 2
    t, w = _gauss(prob.interval[0], prob.interval[1], nodes)
    return float(w @ prob.lagrangian(t, field.jets(t, k)))


def _vertical(states, kn):
    return states[:, :kn, :kn], states[:, kn:, :kn]


def picone_terms(prob: VariationalProblem, states, field: TestField, t):
    """Both sides of the generalized Picone identity at times ``t``.

    ``states`` are the frames at ``t``. Returns ``(lhs, rhs, cond)`` where
    ``lhs = d/dt(y^T Z Y^-1 y)`` is expanded with ``Y' = AY + BZ`` and
    ``Z' = CY - A^T Z`` and ``rhs = z^T B z + y^T C y - w^T B w`` with
    ``w = z - Z Y^-1 y``.
    """
    k, kn = prob.order_k, prob.order_k * prob.dim_n
    sys = HamiltonianSystem(prob)
    t = np.asarray(t, dtype=float)
    jets = field.jets(t, k)
    y, z = zeroing_transform(prob, jets, t)
    dy = np.concatenate([jets[i] for i in range(1, k + 1)], axis=-1)
    A, B, C = sys.blocks(t)
    Y, Z = _vertical(states, kn)
    cond = np.linalg.cond(Y)
    Yi = np.linalg.inv(Y)
    dY = A @ Y + B @ Z
    dZ = C @ Y - np.swapaxes(A, 1, 2) @ Z
    S = Z @ Yi
    dS = dZ @ Yi - S @ dY @ Yi
    mv = lambda M, v: np.einsum("nab,nb->na", M, v)
    dot = lambda u, v: np.einsum("na,na->n", u, v)
    lhs = 2.0 * dot(dy, mv(0.5 * (S + np.swapaxes(S, 1, 2)), y)) + dot(y, mv(dS, y))
    w = z - mv(S, y)
    rhs = dot(z, mv(B, z)) + dot(y, mv(C, y)) - dot(w, mv(B, w))
    return lhs, rhs, cond


def picone_lhs_rhs(prob: VariationalProblem, traj: FrameTrajectory, field: TestField, t_index=None, *, t=None):
    """Both sides of the identity at grid indices (or explicit times ``t``)."""
    scalar = np.ndim(t_index if t is None else t) == 0
    if t is None:
        times = np.atleast_1d(traj.grid[t_index])
        states = traj.frames[np.atleast_1d(t_index)]
    else:
        times = np.atleast_1d(np.asarray(t, dtype=float))
        states = traj.states_at(times)
    if np.any(times <= traj.a):
        raise ValueError("the identity needs t > a")
    lhs, rhs, cond = picone_terms(prob, states, field, times)
    if np.any(cond >= MAX_COND):
        raise ValueError("Y(t) is numerically singular here; stay away from conjugate points")
    if scalar:
        return float(lhs[0]), float(rhs[0])
    return lhs, rhs


@dataclass
class PiconeIntegral:
    value: float
    capped_nodes: int
    min_integrand: float


def picone_integral(prob: VariationalProblem, traj: FrameTrajectory, field: TestField,
                    delta: float | None = None, nodes_per_step: int = DEFAULT_NODES_PER_STEP,
                    check_conjugate: bool = True, chunk: int = 4096) -> PiconeIntegral:
    """``(1/2) int (z - Z Y^-1 y)^T B (z - Z Y^-1 y)`` over the trajectory grid.

    Composite Gauss-Legendre with ``nodes_per_step`` nodes per grid step. Near
    ``a`` the integrand keeps its form; ``|Z Y^-1 y|`` is capped and capped
    nodes are counted.
    """
    if check_conjugate:
        res = find_conjugate_points(traj, delta)
        if res.conjugate_points:
            raise ConjugatePointError(
                f"conjugate point at t={res.conjugate_points[0].t:.9g}; "
                "the Picone form of the functional does not apply"
            )
    if field.is_zero():
        return PiconeIntegral(0.0, 0, 0.0)
    sys = HamiltonianSystem(prob)
    k, kn = prob.order_k, sys.kn
    x, w = leggauss(nodes_per_step)
    h = traj.step
    left = traj.grid[:-1]
    ts = (left[:, None] + 0.5 * h * (x + 1.0)[None, :]).ravel()
    ws = np.tile(0.5 * h * w, len(left))
    total, capped, lo = 0.0, 0, np.inf
    for s in range(0, len(ts), chunk):
        tt = ts[s:s + chunk]
        states = traj.states_at(tt)
        jets = field.jets(tt, k)
        y, z = zeroing_transform(prob, jets, tt)
        _, B, _ = sys.blocks(tt)
        Y, Z = _vertical(states, kn)
        with np.errstate(all="ignore"):
            # rows and columns of Y scale like different powers of t - a
            tiny = np.finfo(float).tiny
            r = 1.0 / np.maximum(np.max(np.abs(Y), axis=2), tiny)
            Y = r[..., None] * Y
            c = 1.0 / np.maximum(np.max(np.abs(Y), axis=1), tiny)
            Y, y, Zc = Y * c[:, None, :], r * y, Z * c[:, None, :]
            try:
                v = np.linalg.solve(Y, y[..., None])[..., 0]
            except np.linalg.LinAlgError:
                v = np.stack([np.linalg.lstsq(Yj, yj, rcond=None)[0] for Yj, yj in zip(Y, y)])
            Sy = np.einsum("nab,nb->na", Zc, v)
        bound = _CAP * (1.0 + np.linalg.norm(z, axis=1) + np.linalg.norm(y, axis=1))
        norm = np.linalg.norm(Sy, axis=1)
        bad = ~np.isfinite(norm) | (norm > bound)
        if bad.any():
            capped += int(bad.sum())
            fix = np.where(np.isfinite(norm[bad]) & (norm[bad] > 0), bound[bad] / norm[bad], 0.0)
            Sy[bad] = np.nan_to_num(Sy[bad]) * fix[:, None]
        r = z - Sy
        f = np.einsum("na,nab,nb->n", r, B, r)
        lo = min(lo, float(f.min()))
        total += float(ws[s:s + chunk] @ f)
    return PiconeIntegral(0.5 * total, capped, lo)


def functional_via_picone(prob: VariationalProblem, traj: FrameTrajectory, field: TestField,
                          delta: float | None = None, nodes_per_step: int = DEFAULT_NODES_PER_STEP) -> float:
    """The functional as half the integrated Picone square; refuses at conjugate points."""
    return picone_integral(prob, traj, field, delta, nodes_per_step).value


def frame_symmetry_residuals(traj: FrameTrajectory, max_cond: float = MAX_COND) -> tuple[float, float]:
    """Scaled residuals of ``Y^T Z = Z^T Y`` and of the symmetry of ``Z Y^-1``.

    The first is ``max ||Y^T Z - Z^T Y|| / (1 + ||Y|| ||Z||)`` over the grid,
    the second ``max ||S - S^T|| / (1 + ||S||)`` with ``S = Z Y^-1`` over grid
    points where ``cond(Y) < max_cond``.
    """
    kn = traj.sys.kn
    Y, Z = _vertical(traj.frames, kn)
    nrm = lambda M: np.linalg.norm(M, axis=(1, 2))
    lag = nrm(np.swapaxes(Y, 1, 2) @ Z - np.swapaxes(Z, 1, 2) @ Y) / (1.0 + nrm(Y) * nrm(Z))
    ok = np.linalg.cond(Y) < max_cond
    if not ok.any():
        return float(lag.max()), 0.0
    S = Z[ok] @ np.linalg.inv(Y[ok])
    sym = nrm(S - np.swapaxes(S, 1, 2)) / (1.0 + nrm(S))
    return float(lag.max()), float(sym.max())


def hessian_matrices(prob: VariationalProblem, basis_size: int = 12):
    """Galerkin matrices of ``Q`` and of the L2 product on an admissible basis.

    Basis: ``(t - a)^k (b - t)^k P_i(tau) e_c`` with Legendre polynomials
    ``P_i`` on the mapped variable ``tau`` in ``[-1, 1]``.
    """
    if basis_size < 4:
        raise ValueError("basis_size must be at least 4")
    k, n = prob.order_k, prob.dim_n
    a, b = prob.interval
    bump = Polynomial([-a, 1.0]) ** k * Polynomial([b, -1.0]) ** k
    polys = [bump * Legendre.basis(i, domain=[a, b]).convert(kind=Polynomial) for i in range(basis_size)]
    deg = 2 * (2 * k + basis_size - 1) + _degree_of(prob)
    t, w = _gauss(a, b, deg // 2 + 2)
    vals = np.stack([[p.deriv(j)(t) if j else p(t) for j in range(k + 1)] for p in polys])  # (m, k+1, T)
    m = basis_size * n
    # basis function (i, c): scalar poly i in component c
    phi = np.zeros((m, k + 1, len(t), n))
    for i in range(basis_size):
        for c in range(n):
            phi[i * n + c, :, :, c] = vals[i]
    Q = np.zeros((m, m))
    for (i, j), P in prob.blocks().items():
        Pt = P(t)
        # bilinear form of the (i, j) term
        Mv = np.einsum("tab,qtb->qta", Pt, phi[:, j])
        G = np.einsum("t,pta,qta->pq", w, phi[:, i], Mv)
        Q += 0.5 * G if i == j else 0.5 * (G + G.T)
    Q = 0.5 * (Q + Q.T)
    G = np.einsum("t,pta,qta->pq", w, phi[:, 0], phi[:, 0])
    return Q, G


def discrete_hessian_min_eig(prob: VariationalProblem, basis_size: int = 12) -> float:
    """Smallest generalized eigenvalue of the Galerkin pair from :func:`hessian_matrices`."""
    Q, G = hessian_matrices(prob, basis_size)
    return float(eigh(Q, G, eigvals_only=True)[0])
