"""``varjacobi analyze|verify|rank <problem.json>``.

Exit codes: 0 certified (or all residuals in tolerance for ``verify``),
1 conjugate point found (``verify``: a residual out of tolerance),
2 inconclusive, 3 invalid input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import report
from .conjugacy import write_wronskian_csv
from .eswaran import scalar_vertical_solutions, write_eswaran_csv
from .frame import FrameTrajectory, write_frame_csv
from .grassmann import write_rank_csv
from .picone import TestField
from .problem import ProblemFormatError, diagonalize_1d, load_problem

EXIT_INVALID = 3


def _positive(kind):
    def parse(text):
        value = kind(text)
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varjacobi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [("analyze", "conjugate points, rank and flag profiles, residuals and oracle"),
                       ("verify", "identity, symmetry, drift and flag residual suite"),
                       ("rank", "CSV of t, rank, flags and vertical intersection")]:
        p = sub.add_parser(name, help=text)
        p.add_argument("problem", type=Path)
        p.add_argument("--out", type=Path, help="write the report here instead of stdout")
        p.add_argument("--csv", metavar="PREFIX", help="also write plot-ready CSV files")
        p.add_argument("--step", type=_positive(float))
        p.add_argument("--delta", type=_positive(float))
        p.add_argument("--seed", type=int, default=report.battery.DEFAULT_SEED)
        p.add_argument("--rank-tol", type=_positive(float), default=report.DEFAULT_RANK_TOL)
        p.add_argument("--basis", type=int, default=12)
        p.add_argument("--samples", type=int, default=257, help="rows in the rank table")
        # test hook: perturb the integrated frame on the second half of the grid
        p.add_argument("--corrupt", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def _corruptor(eps: float):
    if eps == 0.0:
        return None

    def hook(traj: FrameTrajectory) -> FrameTrajectory:
        frames = traj.frames.copy()
        half = len(frames) // 2
        frames[half:] += eps * np.random.default_rng(0).standard_normal(frames[half:].shape)
        return FrameTrajectory(traj.sys, traj.grid, frames, traj.init)
    return hook


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text + "\n")
    else:
        out.write_text(text + "\n")


def _write_csvs(prefix: str, prob, rep: dict, opts: report.Options) -> None:
    traj = rep["_trajectory"]
    write_wronskian_csv(rep["_conjugacy"], f"{prefix}_wronskian.csv")
    write_frame_csv(traj, f"{prefix}_frame.csv")
    rows = report.rank_table(prob, opts)
    write_rank_csv(rows, prob.order_k, f"{prefix}_rank.csv")
    if prob.dim_n == 1:
        sp = diagonalize_1d(prob)
        field = TestField.random(np.random.default_rng(opts.seed), prob.interval, prob.order_k, 1)
        write_eswaran_csv(scalar_vertical_solutions(sp, opts.step), field, f"{prefix}_eswaran.csv")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.basis < 4 or args.samples < 2:
        print("error: --basis must be >= 4 and --samples >= 2", file=sys.stderr)
        return EXIT_INVALID
    try:
        prob, notes = load_problem(args.problem)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ProblemFormatError as exc:
        print(f"error: {args.problem}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    opts = report.Options(args.step, args.delta, args.seed, args.rank_tol, args.basis, args.samples)
    hook = _corruptor(args.corrupt)
    try:
        if args.command == "analyze":
            rep = report.analyze(prob, notes, opts, hook)
            _emit(report.dumps(rep), args.out)
            if args.csv and "_trajectory" in rep:
                _write_csvs(args.csv, prob, rep, opts)
            return report.exit_code(rep["verdict"])
        if args.command == "verify":
            res = report.verify(prob, opts, hook)
            _emit(report.dumps(res), args.out)
            return 0 if res["passed"] else 1
        rows = report.rank_table(prob, opts)
        path = args.out or (Path(f"{args.csv}_rank.csv") if args.csv else None)
        if path is None:
            path = Path("/dev/stdout")
        write_rank_csv(rows, prob.order_k, path)
        return 0
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
