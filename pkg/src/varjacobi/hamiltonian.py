"""Linear Hamiltonian form of the Jacobi equation.

Phase coordinates are ``(y, z)`` with ``y = (h, h', ..., h^(k-1))``. The
system matrix is ``H = [[A, B], [C, -A^T]]``; blocks that involve
``M_kk^{-1}`` are evaluated pointwise (or as exact power series), never as
rational functions.
"""

from __future__ import annotations

from math import comb

import numpy as np

from .polynomial import MatrixPolynomial, series_inv, series_mul
from .problem import VariationalProblem


def symplectic_form(m: int) -> np.ndarray:
    """``J = [[0, I], [-I, 0]]`` of size ``2m``."""
    eye = np.eye(m)
    zero = np.zeros((m, m))
    return np.block([[zero, eye], [-eye, zero]])


class HamiltonianSystem:
    """Blocks ``A``, ``B``, ``C`` of a band problem and the assembled ``H``.

    Every method that takes ``t`` accepts a scalar or an array of times and
    returns stacked matrices for arrays.
    """

    def __init__(self, prob: VariationalProblem):
        self.prob = prob
        self.k = prob.order_k
        self.n = prob.dim_n
        self.kn = self.k * self.n
        self.dim = 2 * self.kn
        self.J = symplectic_form(self.kn)

    # -- pointwise evaluation ------------------------------------------------
    def _top_inverse(self, t):
        Mkk = self.prob.top(t)
        if np.any(np.linalg.cond(Mkk) > 1e14):
            raise np.linalg.LinAlgError("M_kk is singular at an evaluation point")
        return np.linalg.inv(Mkk)

    def blocks(self, t):
        """Return ``(A, B, C)`` at ``t``."""
        k, n, kn = self.k, self.n, self.kn
        t = np.asarray(t, dtype=float)
        S = t.shape
        inv = self._top_inverse(t)
        coup = self.prob.super_blocks[k - 1](t)  # M_(k-1)k
        A = np.zeros(S + (kn, kn))
        B = np.zeros(S + (kn, kn))
        C = np.zeros(S + (kn, kn))
        for i in range(k - 1):
            A[..., i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] = np.eye(n)
        last = slice((k - 1) * n, kn)
        A[..., last, last] = -inv @ np.swapaxes(coup, -1, -2)
        B[..., last, last] = inv
        for i in range(k):
            blk = slice(i * n, (i + 1) * n)
            C[..., blk, blk] = self.prob.diag_blocks[i](t)
            if i + 1 < k:
                nxt = slice((i + 1) * n, (i + 2) * n)
                m = self.prob.super_blocks[i](t)
                C[..., blk, nxt] = m
                C[..., nxt, blk] = np.swapaxes(m, -1, -2)
        C[..., last, last] -= coup @ inv @ np.swapaxes(coup, -1, -2)
        # remove roundoff asymmetry of the Schur complement
        C[..., last, last] = 0.5 * (C[..., last, last] + np.swapaxes(C[..., last, last], -1, -2))
        return A, B, C

    def matrix(self, t):
        A, B, C = self.blocks(t)
        top = np.concatenate([A, B], axis=-1)
        bottom = np.concatenate([C, -np.swapaxes(A, -1, -2)], axis=-1)
        return np.concatenate([top, bottom], axis=-2)

    # -- exact Taylor expansion ----------------------------------------------
    def taylor(self, t0: float, order: int) -> np.ndarray:
        """Taylor coefficients ``H_l`` of ``H(t0 + s) = sum_l H_l s^l``."""
        k, n, kn = self.k, self.n, self.kn
        m = order + 1
        inv = series_inv(self.prob.top.taylor(t0, order))
        coup = self.prob.super_blocks[k - 1].taylor(t0, order)
        coupT = np.swapaxes(coup, 1, 2)
        A = np.zeros((m, kn, kn))
        B = np.zeros((m, kn, kn))
        C = np.zeros((m, kn, kn))
        for i in range(k - 1):
            A[0, i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] = np.eye(n)
        last = slice((k - 1) * n, kn)
        A[:, last, last] = -series_mul(inv, coupT)
        B[:, last, last] = inv
        for i in range(k):
            blk = slice(i * n, (i + 1) * n)
            C[:, blk, blk] = self.prob.diag_blocks[i].taylor(t0, order)
            if i + 1 < k:
                nxt = slice((i + 1) * n, (i + 2) * n)
                s = self.prob.super_blocks[i].taylor(t0, order)
                C[:, blk, nxt] = s
                C[:, nxt, blk] = np.swapaxes(s, 1, 2)
        C[:, last, last] -= series_mul(coup, series_mul(inv, coupT))
        top = np.concatenate([A, B], axis=-1)
        bottom = np.concatenate([C, -np.swapaxes(A, 1, 2)], axis=-1)
        return np.concatenate([top, bottom], axis=-2)


def build_blocks(prob: VariationalProblem) -> HamiltonianSystem:
    return HamiltonianSystem(prob)


def hamiltonian_matrix(sys: HamiltonianSystem, t):
    return sys.matrix(t)


def check_infinitesimally_symplectic(sys, grid_points: int = 257, interval=None) -> float:
    """Largest Frobenius norm of ``H^T J + J H`` over a uniform grid.

    ``sys`` is a :class:`HamiltonianSystem` or any callable ``t -> H(t)``.
    """
    if isinstance(sys, HamiltonianSystem):
        a, b = sys.prob.interval if interval is None else interval
        H = sys.matrix(np.linspace(a, b, grid_points))
    else:
        a, b = (0.0, 1.0) if interval is None else interval
        H = np.stack([np.asarray(sys(t), dtype=float) for t in np.linspace(a, b, grid_points)])
    J = symplectic_form(H.shape[-1] // 2)
    R = np.swapaxes(H, -1, -2) @ J + J @ H
    return float(np.max(np.linalg.norm(R, axis=(-2, -1))))


def _jet(jet, count: int, n: int) -> np.ndarray:
    jet = np.asarray(jet, dtype=float)
    if jet.shape[0] != count or jet.shape[-1] != n:
        raise ValueError(f"expected a jet with {count} entries of length {n}, got shape {jet.shape}")
    return jet


def _mv(P: MatrixPolynomial, t, v, transpose: bool = False):
    m = P(t)
    if transpose:
        m = np.swapaxes(m, -1, -2)
    return np.einsum("...ab,...b->...a", m, v)


def zeroing_transform(prob: VariationalProblem, jet, t):
    """Map the ``k``-jet of ``h`` to ``(y_hat, z_hat)``.

    ``jet`` has shape ``(k + 1, ..., n)``; the outputs have shape ``(..., kn)``.
    Only the last block of ``z_hat`` is nonzero:
    ``M_kk h^(k) + M_(k-1)k^T h^(k-1)``.
    """
    k, n = prob.order_k, prob.dim_n
    jet = _jet(jet, k + 1, n)
    y = np.concatenate([jet[i] for i in range(k)], axis=-1)
    z = np.zeros_like(y)
    z[..., (k - 1) * n:] = _mv(prob.top, t, jet[k]) + _mv(prob.super_blocks[k - 1], t, jet[k - 1], True)
    return y, z


def _momentum_terms(prob: VariationalProblem, j: int):
    """``dL/dq_j`` as a list of ``(poly, jet_index, transposed)`` terms."""
    k = prob.order_k
    terms = [(prob.diag_blocks[j], j, False)]
    if j >= 1:
        terms.append((prob.super_blocks[j - 1], j - 1, True))
    if j < k:
        terms.append((prob.super_blocks[j], j + 1, False))
    return terms


def legendre_transform(prob: VariationalProblem, jet, t):
    """Map the ``(2k-1)``-jet of ``h`` to ``(y, z)``.

    ``z_i = sum_{j>=i} (-1)^(j-i) (d/dt)^(j-i) dL/dq_j``, with the total
    derivatives expanded by Leibniz on the polynomial blocks.
    """
    k, n = prob.order_k, prob.dim_n
    jet = _jet(jet, 2 * k, n)
    y = np.concatenate([jet[i] for i in range(k)], axis=-1)
    zs = []
    for i in range(1, k + 1):
        zi = np.zeros_like(jet[0])
        for j in range(i, k + 1):
            m = j - i
            sign = -1.0 if m % 2 else 1.0
            for P, p, tr in _momentum_terms(prob, j):
                for r in range(m + 1):
                    dP = P.derivative(r)
                    if dP.is_zero():
                        break
                    zi = zi + sign * comb(m, r) * _mv(dP, t, jet[p + m - r], tr)
        zs.append(zi)
    return y, np.concatenate(zs, axis=-1)
