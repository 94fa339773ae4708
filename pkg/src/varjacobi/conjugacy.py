"""Conjugate points from the zeros of the sub-Wronskian ``W(t) = det Y(t)``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .frame import FrameTrajectory, integrate_frame, vertical_frame_at
from .hamiltonian import HamiltonianSystem, legendre_transform

CERTIFIED = "positive-definite-certified"
FOUND = "conjugate-point-found"
INCONCLUSIVE = "inconclusive"

SIGN_CHANGE = "sign-change"
TANGENTIAL = "tangential"

DEFAULT_REFINE_TOL = 1e-10
DEFAULT_TANGENTIAL_THRESHOLD = 1e-8
# local minima of |W| this many thresholds above the cut are refined but
# can leave the scan inconclusive
_CANDIDATE_BAND = 1e3

SUFFICIENCY_NOTE = (
    "no conjugate point in (a, b] certifies positive definiteness; a conjugate "
    "point alone does not certify that the functional fails to be positive"
)


@dataclass(frozen=True)
class ConjugatePoint:
    t: float
    kind: str


@dataclass
class ConjugacyResult:
    samples: np.ndarray
    conjugate_points: list[ConjugatePoint]
    exclusion_window: float
    verdict: str
    notes: list[str] = field(default_factory=list)

    @property
    def times(self) -> list[float]:
        return [p.t for p in self.conjugate_points]

    def to_dict(self) -> dict:
        return {
            "conjugate_points": [{"t": p.t, "type": p.kind} for p in self.conjugate_points],
            "verdict": self.verdict,
            "delta": self.exclusion_window,
            "notes": list(self.notes),
        }


def default_delta(step: float, a: float, b: float) -> float:
    return max(10.0 * step, 1e-3 * (b - a))


def subwronskian(traj: FrameTrajectory, t_index: int) -> float:
    kn = traj.sys.kn
    return float(np.linalg.det(traj.frames[t_index][:kn, :kn]))


def subwronskian_samples(traj: FrameTrajectory) -> np.ndarray:
    kn = traj.sys.kn
    return np.linalg.det(traj.frames[:, :kn, :kn])


def subwronskian_at(traj: FrameTrajectory, t) -> np.ndarray:
    Y, _ = vertical_frame_at(traj, t)
    return np.linalg.det(Y)


def jet_seed_matrix(prob) -> np.ndarray:
    """``K`` with ``z(a) = K c`` for the vertical solution whose terminal jet
    ``(h^(k)(a), ..., h^(2k-1)(a))`` is ``c``.

    Solutions seeded by unit terminal jets are ``Y K`` in terms of the frame
    columns, so their sub-Wronskian is ``det Y * det K``.
    """
    k, n = prob.order_k, prob.dim_n
    kn = k * n
    jet = np.zeros((2 * k, kn, n))
    for m in range(kn):
        jet[k + m // n, m, m % n] = 1.0
    _, z = legendre_transform(prob, jet, np.full(kn, prob.a))
    return z.T


def jet_normalized_subwronskian(traj: FrameTrajectory, t=None) -> np.ndarray:
    """Sub-Wronskian of the vertical solutions normalized by their terminal jets at ``a``.

    For ``int |h''|^2`` on ``[0, 1]`` these are ``t^2/2`` and ``t^3/6`` and the
    value is ``t^4/12`` whatever the constant top coefficient. Grid samples by
    default, otherwise dense values at ``t``.
    """
    prob = traj.sys.prob
    scale = np.linalg.det(jet_seed_matrix(prob))
    w = subwronskian_samples(traj) if t is None else subwronskian_at(traj, t)
    return w * scale


def _bisect(W: Callable, lo: float, hi: float, w_lo: float, tol: float) -> float:
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        w_mid = W(mid)
        if w_mid == 0.0:
            return mid
        if np.sign(w_mid) == np.sign(w_lo):
            lo, w_lo = mid, w_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scan_zeros(ts, ws, W: Callable, delta: float, refine_tol: float = DEFAULT_REFINE_TOL,
               tangential_threshold: float = DEFAULT_TANGENTIAL_THRESHOLD):
    """Locate zeros of a sampled function on ``(ts[0] + delta, ts[-1]]``.

    ``W`` evaluates the function at any time in range and is used for
    refinement. Returns ``(points, unresolved)`` where ``unresolved`` counts
    near-zero minima that could be neither confirmed nor dismissed.
    """
    ts = np.asarray(ts, dtype=float)
    ws = np.asarray(ws, dtype=float)
    a, b = ts[0], ts[-1]
    start = a + delta
    keep = ts > start
    st, sw = ts[keep], ws[keep]
    if st.size == 0:
        return [], 0
    w0 = float(W(start))
    st = np.concatenate([[start], st])
    sw = np.concatenate([[w0], sw])
    scale = float(np.max(np.abs(sw)))
    if scale == 0.0:
        return [ConjugatePoint(float(st[1]), TANGENTIAL)], 0
    cut = tangential_threshold * scale
    points: list[ConjugatePoint] = []
    unresolved = 0
    sgn = np.sign(sw)
    for i in range(1, len(st)):
        if sw[i] == 0.0 and i < len(st) - 1:
            points.append(ConjugatePoint(float(st[i]), SIGN_CHANGE if sgn[i - 1] != sgn[i + 1] else TANGENTIAL))
        elif sgn[i - 1] != 0 and sgn[i] != 0 and sgn[i - 1] != sgn[i]:
            points.append(ConjugatePoint(_bisect(W, st[i - 1], st[i], sw[i - 1], refine_tol), SIGN_CHANGE))
    aw = np.abs(sw)
    for i in range(1, len(st) - 1):
        if not (aw[i] < aw[i - 1] and aw[i] <= aw[i + 1]):
            continue
        if sgn[i - 1] != sgn[i] or sgn[i] != sgn[i + 1] or sw[i] == 0.0:
            continue
        if aw[i] > _CANDIDATE_BAND * cut:
            continue
        res = minimize_scalar(lambda t: abs(W(t)), bounds=(st[i - 1], st[i + 1]),
                              method="bounded", options={"xatol": refine_tol})
        t_min, w_min = float(res.x), float(W(res.x))
        if np.sign(w_min) != sgn[i] and w_min != 0.0:
            points.append(ConjugatePoint(_bisect(W, st[i - 1], t_min, sw[i - 1], refine_tol), SIGN_CHANGE))
            points.append(ConjugatePoint(_bisect(W, t_min, st[i + 1], w_min, refine_tol), SIGN_CHANGE))
        elif abs(w_min) <= cut:
            points.append(ConjugatePoint(t_min, TANGENTIAL))
        else:
            unresolved += 1
    if abs(sw[-1]) <= cut and not any(abs(p.t - b) <= 2 * refine_tol for p in points):
        points.append(ConjugatePoint(float(b), TANGENTIAL))
    points.sort(key=lambda p: p.t)
    return points, unresolved


def find_conjugate_points(traj: FrameTrajectory, delta: float | None = None,
                          refine_tol: float = DEFAULT_REFINE_TOL,
                          tangential_threshold: float = DEFAULT_TANGENTIAL_THRESHOLD) -> ConjugacyResult:
    """Scan ``det Y`` on the grid after the exclusion window near ``a``.

    Sign changes are refined by bisection; small local minima of ``|W|`` are
    refined and reported as tangential zeros. Unresolvable candidates make
    the verdict inconclusive.
    """
    if delta is None:
        delta = default_delta(traj.step, traj.a, traj.b)
    if not delta > 0:
        raise ValueError("exclusion window must be positive")
    ws = subwronskian_samples(traj)

    def W(t):
        return float(subwronskian_at(traj, t)[0])

    points, unresolved = scan_zeros(traj.grid, ws, W, delta, refine_tol, tangential_threshold)
    notes = []
    if points:
        verdict = FOUND
    elif unresolved:
        verdict = INCONCLUSIVE
        notes.append(f"{unresolved} near-zero minima of the sub-Wronskian could not be resolved at this step")
    else:
        verdict = CERTIFIED
    notes.append(SUFFICIENCY_NOTE)
    return ConjugacyResult(np.column_stack([traj.grid, ws]), points, float(delta), verdict, notes)


def positivity_verdict(prob, step: float | None = None, delta: float | None = None,
                       refine_tol: float = DEFAULT_REFINE_TOL,
                       tangential_threshold: float = DEFAULT_TANGENTIAL_THRESHOLD,
                       trajectory: FrameTrajectory | None = None) -> ConjugacyResult:
    """Assemble, integrate and scan; see :func:`find_conjugate_points`."""
    traj = trajectory if trajectory is not None else integrate_frame(HamiltonianSystem(prob), step)
    return find_conjugate_points(traj, delta, refine_tol, tangential_threshold)


def write_wronskian_csv(result: ConjugacyResult, path) -> None:
    with open(path, "w") as fh:
        fh.write("t,W\n")
        for t, w in result.samples:
            fh.write(f"{float(t)!r},{float(w)!r}\n")
