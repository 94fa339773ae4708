"""Fundamental frame of the Hamiltonian system.

``Psi' = H(t) Psi`` is integrated from ``Psi(a) = -J`` with classical fixed
step RK4. The first ``kn`` columns are the vertical solutions: their ``y``
part vanishes at ``a`` and their ``z`` part starts at the identity.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .hamiltonian import HamiltonianSystem

DEFAULT_STEPS = 4096


@dataclass(frozen=True, eq=False)
class FrameTrajectory:
    sys: HamiltonianSystem
    grid: np.ndarray
    frames: np.ndarray
    init: np.ndarray

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def a(self) -> float:
        return float(self.grid[0])

    @property
    def b(self) -> float:
        return float(self.grid[-1])

    def __len__(self):
        return len(self.grid)

    def states_at(self, t) -> np.ndarray:
        """Frame at arbitrary times in ``[a, b]``.

        Off-grid times take one RK4 sub-step from the grid sample to their
        left, so dense values carry the same order as the grid values.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        N = len(self.grid) - 1
        j = np.clip(np.floor((t - self.a) / self.step).astype(int), 0, N)
        s = t - self.grid[j]
        out = self.frames[j].copy()
        off = np.abs(s) > 1e-14 * max(1.0, abs(self.b))
        if off.any():
            out[off] = _rk4_substep(self.sys, self.grid[j[off]], s[off], self.frames[j[off]])
        return out

    def state_at(self, t: float) -> np.ndarray:
        return self.states_at([t])[0]


def _rk4_substep(sys, t0, s, Psi):
    s3 = s[:, None, None]
    H0 = sys.matrix(t0)
    Hm = sys.matrix(t0 + 0.5 * s)
    H1 = sys.matrix(t0 + s)
    k1 = H0 @ Psi
    k2 = Hm @ (Psi + 0.5 * s3 * k1)
    k3 = Hm @ (Psi + 0.5 * s3 * k2)
    k4 = H1 @ (Psi + s3 * k3)
    return Psi + s3 / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def default_step(prob) -> float:
    return (prob.b - prob.a) / DEFAULT_STEPS


def integrate_frame(sys: HamiltonianSystem, step: float | None = None, init=None) -> FrameTrajectory:
    """Integrate the fundamental frame on ``[a, b]`` with fixed-step RK4.

    ``step`` is rounded down so that it divides ``b - a``; it must not exceed
    ``(b - a) / 16``. ``init`` overrides the initial frame ``-J``.
    """
    a, b = sys.prob.interval
    if step is None:
        step = (b - a) / DEFAULT_STEPS
    if not step > 0:
        raise ValueError("step must be positive")
    if step > (b - a) / 16 * (1 + 1e-12):
        raise ValueError("step must be at most (b - a) / 16")
    N = int(np.ceil((b - a) / step - 1e-9))
    grid = np.linspace(a, b, N + 1)
    h = (b - a) / N
    Psi0 = -sys.J if init is None else np.array(init, dtype=float)
    if Psi0.shape != (sys.dim, sys.dim):
        raise ValueError(f"initial frame must be {sys.dim}x{sys.dim}")
    Hg = sys.matrix(grid)
    Hm = sys.matrix(grid[:-1] + 0.5 * h)
    frames = np.empty((N + 1, sys.dim, sys.dim))
    frames[0] = Psi = Psi0
    half = 0.5 * h
    # compensated summation of the increments; growing frames otherwise lose
    # the symplectic relation to accumulated rounding of Psi + increment
    comp = np.zeros_like(Psi)
    for j in range(N):
        k1 = Hg[j] @ Psi
        k2 = Hm[j] @ (Psi + half * k1)
        k3 = Hm[j] @ (Psi + half * k2)
        k4 = Hg[j + 1] @ (Psi + h * k3)
        inc = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4) - comp
        new = Psi + inc
        comp = (new - Psi) - inc
        Psi = new
        frames[j + 1] = Psi
    frames.setflags(write=False)
    grid.setflags(write=False)
    return FrameTrajectory(sys, grid, frames, Psi0)


def symplectic_drift(traj: FrameTrajectory) -> float:
    """``max_t ||Psi^T J Psi - J||_F`` over the grid."""
    J = traj.sys.J
    R = np.swapaxes(traj.frames, 1, 2) @ J @ traj.frames - J
    return float(np.max(np.linalg.norm(R, axis=(1, 2))))


def vertical_frame(traj: FrameTrajectory, t_index: int):
    """``(Y, Z)``: the ``y`` and ``z`` parts of the first ``kn`` columns."""
    kn = traj.sys.kn
    Psi = traj.frames[t_index]
    return Psi[:kn, :kn], Psi[kn:, :kn]


def vertical_frame_at(traj: FrameTrajectory, t):
    kn = traj.sys.kn
    Psi = traj.states_at(t)
    return Psi[:, :kn, :kn], Psi[:, kn:, :kn]


def write_frame_csv(traj: FrameTrajectory, path) -> None:
    m = traj.sys.dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"psi_{i}_{j}" for i in range(m) for j in range(m)])
        for t, P in zip(traj.grid, traj.frames):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in P.ravel()])
