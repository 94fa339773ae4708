"""Pipelines behind the command line: analysis report, residual suite, rank table."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import battery
from .conjugacy import CERTIFIED, FOUND, INCONCLUSIVE, default_delta, find_conjugate_points
from .frame import FrameTrajectory, integrate_frame, symplectic_drift
from .grassmann import DEFAULT_RANK_TOL, curve_rank, expected_flags, flag_profile, frame_jet, rank_rows
from .hamiltonian import HamiltonianSystem
from .picone import MAX_COND, discrete_hessian_min_eig, frame_symmetry_residuals, picone_lhs_rhs
from .problem import VariationalProblem, validate_problem

PICONE_TOL = 1e-7
FRAME_TOL = 1e-9
PROFILE_SAMPLES = 65
RESIDUAL_SAMPLES = 50
RESIDUAL_FIELDS = 5


@dataclass
class Options:
    step: float | None = None
    delta: float | None = None
    seed: int = battery.DEFAULT_SEED
    rank_tol: float = DEFAULT_RANK_TOL
    basis: int = 12
    samples: int = 257


def _sample_indices(traj: FrameTrajectory, count: int, skip_a: bool = False) -> np.ndarray:
    N = len(traj.grid) - 1
    idx = np.unique(np.linspace(0, N, count).round().astype(int))
    return idx[idx > 0] if skip_a else idx


def residual_suite(prob: VariationalProblem, traj: FrameTrajectory, opts: Options,
                   delta: float) -> dict:
    """Picone, frame symmetry, drift, rank and flag checks for one problem.

    Picone samples avoid the exclusion window and times where ``Y`` is
    numerically singular. Drift is judged relative to ``max ||Psi||^2``, the
    size of the roundoff in ``Psi^T J Psi`` itself.
    """
    rng = np.random.default_rng(opts.seed)
    fields = battery.random_fields(rng, prob, RESIDUAL_FIELDS)
    kn = traj.sys.kn
    idx = _sample_indices(traj, RESIDUAL_SAMPLES + 2, skip_a=True)
    idx = idx[traj.grid[idx] > traj.a + delta]
    if idx.size:
        idx = idx[np.linalg.cond(traj.frames[idx, :kn, :kn]) < MAX_COND]
    picone = 0.0
    for f in fields:
        if idx.size:
            lhs, rhs = picone_lhs_rhs(prob, traj, f, idx)
            picone = max(picone, float(np.max(np.abs(lhs - rhs) / (1.0 + np.abs(lhs)))))
    lag, ric = frame_symmetry_residuals(traj)
    drift = symplectic_drift(traj)
    scale = max(1.0, float(np.max(np.linalg.norm(traj.frames, axis=(1, 2)))) ** 2)
    L = traj.b - traj.a
    coarse = symplectic_drift(integrate_frame(traj.sys, L / 64))
    fine = symplectic_drift(integrate_frame(traj.sys, L / 128))
    want = expected_flags(prob.order_k)
    rank_bad = flag_bad = 0
    for j in _sample_indices(traj, 100, skip_a=True):
        st = frame_jet(traj, int(j))
        rank_bad += curve_rank(st, opts.rank_tol) != prob.dim_n
        flag_bad += flag_profile(st, opts.rank_tol) != want
    checks = {
        "picone": picone <= PICONE_TOL,
        "frame_symmetry": lag <= FRAME_TOL,
        "riccati_symmetry": ric <= FRAME_TOL,
        "symplectic_drift": drift <= FRAME_TOL * scale,
        "rank": rank_bad == 0,
        "flags": flag_bad == 0,
    }
    return {
        "picone_max_residual": picone,
        "picone_samples": int(idx.size) * len(fields),
        "frame_symmetry_residual": lag,
        "riccati_symmetry_residual": ric,
        "symplectic_drift": drift,
        "drift_scale": scale,
        "drift_halving_ratio": fine / coarse if coarse > 0 else math.nan,
        "rank_failures": int(rank_bad),
        "flag_failures": int(flag_bad),
        "checks": checks,
        "passed": all(checks.values()),
    }


def analyze(prob: VariationalProblem, notes: list[str], opts: Options,
            hook: Callable[[FrameTrajectory], FrameTrajectory] | None = None) -> dict:
    """Full pipeline; the report verdict is certified only if every residual check passes."""
    val = validate_problem(prob)
    report = {
        "problem": {
            "k": prob.order_k,
            "n": prob.dim_n,
            "interval": [prob.a, prob.b],
            "validation": {
                "passed": val.passed,
                "first_failure": val.first_failure,
                "min_eigenvalue": val.min_eigenvalue,
                "symmetric": val.symmetric,
                "message": val.message,
            },
            "notes": list(notes),
        },
        "seed": opts.seed,
    }
    if not val.passed:
        report["verdict"] = "invalid-input"
        return report
    traj = integrate_frame(HamiltonianSystem(prob), opts.step)
    if hook is not None:
        traj = hook(traj)
    delta = opts.delta if opts.delta is not None else default_delta(traj.step, traj.a, traj.b)
    conj = find_conjugate_points(traj, delta)
    prof = []
    for j in _sample_indices(traj, PROFILE_SAMPLES):
        st = frame_jet(traj, int(j))
        prof.append((st.t, curve_rank(st, opts.rank_tol), flag_profile(st, opts.rank_tol)))
    res = residual_suite(prob, traj, opts, delta)
    if conj.verdict == CERTIFIED and not res["passed"]:
        verdict = INCONCLUSIVE
    else:
        verdict = conj.verdict
    report.update({
        "step": traj.step,
        "conjugacy": conj.to_dict(),
        "rank_profile": [[t, r] for t, r, _ in prof],
        "flag_profile": [[t, f] for t, _, f in prof],
        "residuals": res,
        "oracle": {"basis": opts.basis, "discrete_hessian_min_eig": discrete_hessian_min_eig(prob, opts.basis)},
        "verdict": verdict,
    })
    report["_trajectory"] = traj
    report["_conjugacy"] = conj
    return report


def verify(prob: VariationalProblem, opts: Options,
           hook: Callable[[FrameTrajectory], FrameTrajectory] | None = None) -> dict:
    traj = integrate_frame(HamiltonianSystem(prob), opts.step)
    if hook is not None:
        traj = hook(traj)
    delta = opts.delta if opts.delta is not None else default_delta(traj.step, traj.a, traj.b)
    out = residual_suite(prob, traj, opts, delta)
    out["seed"] = opts.seed
    return out


def rank_table(prob: VariationalProblem, opts: Options) -> list[dict]:
    traj = integrate_frame(HamiltonianSystem(prob), opts.step)
    return rank_rows(traj, _sample_indices(traj, opts.samples), opts.rank_tol)


def exit_code(verdict: str) -> int:
    return {CERTIFIED: 0, FOUND: 1, INCONCLUSIVE: 2}.get(verdict, 3)


def _format(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        s = format(x, ".17g")
        return s if any(c in s for c in ".en") else s + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{_format(str(k))}: {_format(v)}" for k, v in obj.items()
                               if not str(k).startswith("_")) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_format(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(report: dict) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _format(report)
