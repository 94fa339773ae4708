"""Jets of the solution frame, rank of the Jacobi curve and the symplectic flag.

Row ``i`` of ``M(t) = Psi(t)^T`` is the Legendre image of the ``i``-th
solution, so the first ``n`` columns of ``M`` form the frame ``A(t)`` whose
rows are the solutions themselves. Derivatives come from the exact Taylor
recursion ``Psi_(l+1) = sum_m H_m Psi_(l-m) / (l + 1)`` about ``t``; no finite
differences of the trajectory are taken.

Rank and symplectic type are unchanged when the solution basis is changed by a
symplectic matrix. Growing frames make the integrated basis badly conditioned,
so by default jets are taken in the basis normalized at ``t`` (``Psi(t) = I``)
and mapped back with ``Psi(t)^T`` only where the fixed coordinates matter.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .frame import FrameTrajectory

ISOTROPIC = "isotropic"
LAGRANGIAN = "lagrangian"
LOCAL = "local"
TRAJECTORY = "trajectory"
COISOTROPIC = "coisotropic"
FULL = "full"
NONE = "none"

DEFAULT_RANK_TOL = 1e-8
FANNING_MAX_COND = 1e10


@dataclass(frozen=True, eq=False)
class FrameJetStack:
    """Jets of the solution frame at one time.

    ``jets`` are expressed in ``basis``; ``psi`` is the integrated frame at
    ``t`` and ``raw_jets`` gives the jets in the integrated basis.
    """

    t: float
    jets: tuple[np.ndarray, ...]
    psi: np.ndarray
    k: int
    n: int
    basis: str = TRAJECTORY

    @property
    def raw_jets(self) -> tuple[np.ndarray, ...]:
        if self.basis == TRAJECTORY:
            return self.jets
        return tuple(self.psi.T @ j for j in self.jets)

    @property
    def order(self) -> int:
        return len(self.jets) - 1

    def juxtaposed(self, upto: int) -> np.ndarray:
        if upto > self.order:
            raise ValueError(f"stack only holds jets up to order {self.order}")
        return np.concatenate(self.jets[: upto + 1], axis=1)


def frame_derivatives(sys, t: float, psi: np.ndarray, order: int) -> np.ndarray:
    """``Psi^(j)(t)`` for ``j = 0..order`` from the Taylor recursion."""
    Hs = sys.taylor(t, max(order - 1, 0))
    coef = [psi]
    for l in range(order):
        acc = sum(Hs[m] @ coef[l - m] for m in range(l + 1))
        coef.append(acc / (l + 1))
    return np.stack([factorial(j) * c for j, c in enumerate(coef)])


def frame_jet(traj: FrameTrajectory, t_index: int | None = None, max_order: int | None = None,
              *, t: float | None = None, basis: str = LOCAL) -> FrameJetStack:
    """Jets ``A, A', ..., A^(m)`` of the solution frame at a grid index or time.

    ``basis="trajectory"`` differentiates the integrated frame itself;
    ``basis="local"`` uses the solutions normalized at ``t``.
    """
    if basis not in (LOCAL, TRAJECTORY):
        raise ValueError(f"unknown basis {basis!r}")
    sys = traj.sys
    k, n = sys.k, sys.n
    if max_order is None:
        max_order = 2 * k - 1
    if max_order > 2 * k - 1:
        raise ValueError("jets beyond order 2k-1 are not needed")
    if t is None:
        if t_index is None:
            raise ValueError("give a grid index or a time")
        t, psi = float(traj.grid[t_index]), traj.frames[t_index]
    else:
        psi = traj.state_at(t)
    seed = psi if basis == TRAJECTORY else np.eye(sys.dim)
    D = frame_derivatives(sys, t, seed, max_order)
    jets = tuple(np.ascontiguousarray(D[j, :n, :].T) for j in range(max_order + 1))
    return FrameJetStack(float(t), jets, psi, k, n, basis)


def _normalize_columns(F: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(F, axis=0)
    norms[norms == 0.0] = 1.0
    return F / norms


def numerical_rank(F: np.ndarray, rtol: float = DEFAULT_RANK_TOL) -> int:
    s = np.linalg.svd(F, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def curve_rank(stack: FrameJetStack, rtol: float = DEFAULT_RANK_TOL) -> int:
    """Rank of the Jacobi curve: ``rank(A | A' | ... | A^(k)) - kn``."""
    k, n = stack.k, stack.n
    F = _normalize_columns(stack.juxtaposed(k))
    return numerical_rank(F, rtol) - k * n


def fanning_check(stack: FrameJetStack, max_cond: float = FANNING_MAX_COND) -> dict:
    """Invertibility of the ``2kn x 2kn`` juxtaposed jet matrix."""
    F = _normalize_columns(stack.juxtaposed(2 * stack.k - 1))
    cond = float(np.linalg.cond(F))
    return {"is_fanning": bool(np.isfinite(cond) and cond < max_cond), "condition_number": cond}


def classify_symplectic(stack: FrameJetStack, i: int, tol: float = DEFAULT_RANK_TOL) -> str:
    """Classify the ``i``-th prolongation ``span(A | ... | A^(i))``."""
    k, n = stack.k, stack.n
    if not 0 <= i <= 2 * k - 1:
        raise ValueError(f"prolongation order must lie in 0..{2 * k - 1}")
    kn = k * n
    F = _normalize_columns(stack.juxtaposed(i))
    J = _symplectic(kn)
    return classify_subspace(F, J, tol)


def _symplectic(kn: int) -> np.ndarray:
    eye, zero = np.eye(kn), np.zeros((kn, kn))
    return np.block([[zero, eye], [-eye, zero]])


def classify_subspace(F: np.ndarray, J: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> str:
    dim = J.shape[0]
    U, s, _ = np.linalg.svd(F, full_matrices=False)
    d = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    if d == dim:
        return FULL
    Q = U[:, :d]
    if np.linalg.norm(Q.T @ J @ Q, 2) <= tol:
        return LAGRANGIAN if 2 * d == dim else ISOTROPIC
    # symplectic complement = kernel of Q^T J; coisotropic iff it lies in span(Q)
    _, s2, Vh = np.linalg.svd(Q.T @ J)
    r = int(np.sum(s2 > tol * s2[0]))
    K = Vh[r:].T
    if K.size == 0 or np.max(np.linalg.norm(K - Q @ (Q.T @ K), axis=0)) <= tol:
        return COISOTROPIC
    return NONE


def flag_profile(stack: FrameJetStack, tol: float = DEFAULT_RANK_TOL) -> list[str]:
    return [classify_symplectic(stack, i, tol) for i in range(2 * stack.k)]


def expected_flags(k: int) -> list[str]:
    return [ISOTROPIC] * (k - 1) + [LAGRANGIAN] + [COISOTROPIC] * (k - 1) + [FULL]


def vertical_intersection_dim(stack: FrameJetStack, rtol: float = DEFAULT_RANK_TOL) -> int:
    """``dim(l(t) & V)`` for the Jacobi curve ``l`` and the vertical space ``V``.

    Counts principal angles between ``l(t)`` and ``V`` whose sines (singular
    values of the top block of an orthonormal frame of ``l``) fall below
    ``rtol``.
    """
    kn = stack.k * stack.n
    L = np.concatenate(stack.raw_jets[: stack.k], axis=1)
    Q, _ = np.linalg.qr(L)
    s = np.linalg.svd(Q[:kn], compute_uv=False)
    return int(np.sum(s <= rtol))


def rank_rows(traj: FrameTrajectory, indices=None, tol: float = DEFAULT_RANK_TOL) -> list[dict]:
    """Per-sample rank, flag sequence and vertical intersection dimension."""
    if indices is None:
        indices = range(len(traj.grid))
    rows = []
    for idx in indices:
        st = frame_jet(traj, int(idx))
        rows.append({
            "t": st.t,
            "rank": curve_rank(st, tol),
            "flags": flag_profile(st, tol),
            "vertical_dim": vertical_intersection_dim(st, tol),
        })
    return rows


def write_rank_csv(rows: list[dict], k: int, path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(["t", "rank"] + [f"flag_{i}" for i in range(2 * k)] + ["vertical_dim"]) + "\n")
        for r in rows:
            fh.write(",".join([repr(float(r["t"])), str(r["rank"])] + r["flags"] + [str(r["vertical_dim"])]) + "\n")
