"""Quadratic higher-order functionals with polynomial coefficients.

The Lagrangian convention used throughout the package is

    L = 1/2 sum_i h^(i)T M_ii h^(i) + sum_i h^(i)T M_i(i+1) h^(i+1)

for band problems. Raw (unreduced) coefficient maps use the same convention:
diagonal blocks carry the factor 1/2, every off-diagonal block ``(i, j)`` with
``i < j`` contributes ``h^(i)T R_ij h^(j)``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .polynomial import MatrixPolynomial

SPD_RTOL = 1e-12
DEFAULT_GRID = 257


class ProblemFormatError(ValueError):
    """Raised when a problem description cannot be turned into a problem."""


def _as_poly(p, n: int) -> MatrixPolynomial:
    if not isinstance(p, MatrixPolynomial):
        p = MatrixPolynomial(p)
    if p.shape != (n, n):
        raise ValueError(f"expected an {n}x{n} block, got {p.shape}")
    return p


def _check_interval(interval) -> tuple[float, float]:
    a, b = (float(x) for x in interval)
    if not (np.isfinite(a) and np.isfinite(b) and a < b):
        raise ValueError(f"interval must satisfy a < b, got {interval!r}")
    return a, b


@dataclass(frozen=True, eq=False)
class VariationalProblem:
    """Band-form problem with blocks ``M_00..M_kk`` and ``M_01..M_(k-1)k``.

    Diagonal blocks are symmetrized on construction; ``symmetrized`` lists the
    indices whose input was not symmetric.
    """

    order_k: int
    dim_n: int
    interval: tuple[float, float]
    diag_blocks: tuple[MatrixPolynomial, ...]
    super_blocks: tuple[MatrixPolynomial, ...]
    symmetrized: tuple[int, ...] = field(default=())

    def __post_init__(self):
        k, n = int(self.order_k), int(self.dim_n)
        if k < 1 or n < 1:
            raise ValueError("order and dimension must be positive")
        if len(self.diag_blocks) != k + 1 or len(self.super_blocks) != k:
            raise ValueError(f"order {k} needs {k + 1} diagonal and {k} super-diagonal blocks")
        diag = [_as_poly(p, n) for p in self.diag_blocks]
        fixed = list(self.symmetrized)
        for i, p in enumerate(diag):
            if not p.is_symmetric():
                diag[i] = p.symmetrized()
                fixed.append(i)
        object.__setattr__(self, "order_k", k)
        object.__setattr__(self, "dim_n", n)
        object.__setattr__(self, "interval", _check_interval(self.interval))
        object.__setattr__(self, "diag_blocks", tuple(diag))
        object.__setattr__(self, "super_blocks", tuple(_as_poly(p, n) for p in self.super_blocks))
        object.__setattr__(self, "symmetrized", tuple(sorted(set(fixed))))

    @classmethod
    def from_blocks(cls, order_k, dim_n, interval, blocks: Mapping) -> "VariationalProblem":
        """Build from a sparse ``{(i, j): block}`` map restricted to the band."""
        zero = MatrixPolynomial.zeros(dim_n)
        diag, sup = [zero] * (order_k + 1), [zero] * order_k
        for (i, j), p in blocks.items():
            if i == j:
                diag[i] = p
            elif j == i + 1:
                sup[i] = p
            else:
                raise ValueError(f"block ({i},{j}) is outside the band; use reduce_to_band")
        return cls(order_k, dim_n, interval, tuple(diag), tuple(sup))

    @property
    def a(self) -> float:
        return self.interval[0]

    @property
    def b(self) -> float:
        return self.interval[1]

    @property
    def top(self) -> MatrixPolynomial:
        return self.diag_blocks[-1]

    def blocks(self) -> dict:
        out = {(i, i): p for i, p in enumerate(self.diag_blocks)}
        out.update({(i, i + 1): p for i, p in enumerate(self.super_blocks)})
        return out

    def lagrangian(self, t, jets) -> np.ndarray:
        return lagrangian_density(self.blocks(), t, jets)


@dataclass(frozen=True, eq=False)
class RawCoefficients:
    """Unreduced coefficient map ``(i, j) -> R_ij`` for ``0 <= i <= j <= k``."""

    order_k: int
    dim_n: int
    interval: tuple[float, float]
    blocks: Mapping

    def __post_init__(self):
        k, n = int(self.order_k), int(self.dim_n)
        clean = {}
        for (i, j), p in self.blocks.items():
            if not 0 <= i <= j <= k:
                raise ValueError(f"block ({i},{j}) must satisfy 0 <= i <= j <= {k}")
            clean[(int(i), int(j))] = _as_poly(p, n)
        object.__setattr__(self, "order_k", k)
        object.__setattr__(self, "dim_n", n)
        object.__setattr__(self, "interval", _check_interval(self.interval))
        object.__setattr__(self, "blocks", clean)

    def lagrangian(self, t, jets) -> np.ndarray:
        return lagrangian_density(self.blocks, t, jets)


@dataclass(frozen=True, eq=False)
class ScalarProblem1D:
    """One-dimensional problem ``Q[h] = int sum_l P_l (h^(l))^2``."""

    order_k: int
    interval: tuple[float, float]
    p_coeffs: tuple[MatrixPolynomial, ...]

    def __post_init__(self):
        k = int(self.order_k)
        if len(self.p_coeffs) != k + 1:
            raise ValueError(f"order {k} needs {k + 1} coefficients P_0..P_k")
        object.__setattr__(self, "order_k", k)
        object.__setattr__(self, "interval", _check_interval(self.interval))
        object.__setattr__(self, "p_coeffs", tuple(_as_poly(p, 1) for p in self.p_coeffs))

    def to_band(self) -> VariationalProblem:
        """The same functional written with ``M_ll = 2 P_l`` and no couplings."""
        zero = MatrixPolynomial.zeros(1)
        return VariationalProblem(
            self.order_k, 1, self.interval,
            tuple(2.0 * p for p in self.p_coeffs), (zero,) * self.order_k,
        )

    def lagrangian(self, t, jets) -> np.ndarray:
        jets = np.asarray(jets, dtype=float)
        out = 0.0
        for l, p in enumerate(self.p_coeffs):
            out = out + p(t)[..., 0, 0] * jets[l][..., 0] ** 2
        return out


def lagrangian_density(blocks: Mapping, t, jets) -> np.ndarray:
    """Evaluate ``L`` for a block map at times ``t``.

    ``jets[i]`` holds ``h^(i)(t)`` with shape ``t.shape + (n,)``.
    """
    jets = np.asarray(jets, dtype=float)
    out = np.zeros(np.shape(t))
    for (i, j), p in blocks.items():
        mv = np.einsum("...ab,...b->...a", p(t), jets[j])
        term = np.einsum("...a,...a->...", jets[i], mv)
        out = out + (0.5 * term if i == j else term)
    return out


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    first_failure: float | None
    min_eigenvalue: float
    symmetric: bool
    message: str = ""


def validate_problem(prob: VariationalProblem, grid_points: int = DEFAULT_GRID) -> ValidationReport:
    """Check the strong Legendre condition on a uniform grid.

    ``M_kk(t)`` must be symmetric positive definite, with smallest eigenvalue
    above ``1e-12 * (1 + largest)``, at every grid point. Never raises on a
    failing problem; the report carries the first failing time.
    """
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    symmetric = all(p.is_symmetric() for p in prob.diag_blocks)
    ts = np.linspace(prob.a, prob.b, grid_points)
    eig = np.linalg.eigvalsh(prob.top(ts))
    lo, hi = eig[:, 0], eig[:, -1]
    bad = lo <= SPD_RTOL * (1.0 + np.abs(hi))
    min_eig = float(lo.min())
    if not symmetric:
        return ValidationReport(False, float(ts[0]), min_eig, False, "diagonal block not symmetric")
    if bad.any():
        t_fail = float(ts[np.argmax(bad)])
        return ValidationReport(
            False, t_fail, min_eig, True,
            f"strong Legendre condition fails at t={t_fail:.6g} (min eigenvalue {min_eig:.3g})",
        )
    return ValidationReport(True, None, min_eig, True, "ok")


def reduce_to_band(raw: RawCoefficients) -> VariationalProblem:
    """Integrate by parts until only ``(i, i)`` and ``(i, i+1)`` blocks remain.

    A coupling ``h^(i)T R h^(j)`` with ``j > i + 1`` is rewritten as
    ``-h^(i+1)T R h^(j-1) - h^(i)T R' h^(j-1)``; the boundary term vanishes for
    fields flat to order ``k-1`` at both endpoints.
    """
    k, n = raw.order_k, raw.dim_n
    acc = {key: p for key, p in raw.blocks.items()}

    def add(key, p):
        acc[key] = acc[key] + p if key in acc else p

    # widest couplings first: each rewrite only produces narrower ones
    for gap in range(k, 1, -1):
        for i in range(0, k - gap + 1):
            j = i + gap
            R = acc.pop((i, j), None)
            if R is None:
                continue
            if i + 1 == j - 1:
                add((i + 1, i + 1), -(R + R.T))
            else:
                add((i + 1, j - 1), -R)
            dR = R.derivative()
            if not dR.is_zero():
                add((i, j - 1), -dR)
    zero = MatrixPolynomial.zeros(n)
    diag = tuple(acc.get((i, i), zero).symmetrized() for i in range(k + 1))
    sup = tuple(acc.get((i, i + 1), zero) for i in range(k))
    return VariationalProblem(k, n, raw.interval, diag, sup)


def diagonalize_1d(prob: VariationalProblem) -> ScalarProblem1D:
    """Rewrite an ``n = 1`` band problem as ``int sum_l P_l (h^(l))^2``.

    Uses ``h^(l) h^(l+1) = (1/2) d/dt (h^(l))^2``, so the coupling ``M_l(l+1)``
    moves into ``P_l`` as ``-M_l(l+1)' / 2``.
    """
    if prob.dim_n != 1:
        raise ValueError("diagonalize_1d needs a one-dimensional problem")
    P = [0.5 * m for m in prob.diag_blocks]
    for l, m in enumerate(prob.super_blocks):
        P[l] = P[l] - 0.5 * m.derivative()
    return ScalarProblem1D(prob.order_k, prob.interval, tuple(P))


# -- problem files -----------------------------------------------------------

_BLOCK_KEY = re.compile(r"^M(?:(\d)(\d)|_(\d+)_(\d+))$")
_TOP_KEYS = {"order", "dim", "interval", "blocks"}


def _parse_matrix(obj, n: int, where: str) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.shape == (n, n):
        return arr
    if arr.shape == (n * n,):
        return arr.reshape(n, n)
    raise ProblemFormatError(f"{where}: expected an {n}x{n} matrix, got shape {arr.shape}")


def problem_from_dict(doc: Mapping) -> tuple[VariationalProblem, list[str]]:
    """Parse the JSON problem schema; returns the band problem and notes.

    Blocks outside the band are reduced by integration by parts and noted.
    """
    if not isinstance(doc, Mapping):
        raise ProblemFormatError("top level must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ProblemFormatError(f"unknown keys: {sorted(unknown)}")
    missing = _TOP_KEYS - set(doc)
    if missing:
        raise ProblemFormatError(f"missing keys: {sorted(missing)}")
    k, n = doc["order"], doc["dim"]
    if not (isinstance(k, int) and isinstance(n, int)) or k < 1 or n < 1:
        raise ProblemFormatError("order and dim must be positive integers")
    try:
        interval = _check_interval(doc["interval"])
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"interval: {exc}") from None
    if not isinstance(doc["blocks"], Mapping):
        raise ProblemFormatError("blocks must be an object mapping 'Mij' to coefficient lists")
    blocks = {}
    for key, coeffs in doc["blocks"].items():
        m = _BLOCK_KEY.match(key)
        if m is None:
            raise ProblemFormatError(f"blocks: unknown key {key!r} (expected 'Mij' or 'M_i_j')")
        i, j = (int(g) for g in (m.group(1, 2) if m.group(1) else m.group(3, 4)))
        if not 0 <= i <= j <= k:
            raise ProblemFormatError(f"blocks.{key}: indices must satisfy 0 <= i <= j <= {k}")
        if not isinstance(coeffs, list) or not coeffs:
            raise ProblemFormatError(f"blocks.{key}: expected a non-empty list of matrices")
        mats = [_parse_matrix(c, n, f"blocks.{key}[{d}]") for d, c in enumerate(coeffs)]
        blocks[(i, j)] = MatrixPolynomial(np.stack(mats))
    if (k, k) not in blocks:
        raise ProblemFormatError(f"blocks: the top block M{k}{k} is required")
    notes = []
    if any(j > i + 1 for i, j in blocks):
        notes.append("couplings outside the band were reduced by integration by parts")
    raw = RawCoefficients(k, n, interval, blocks)
    asym = [i for (i, j), p in blocks.items() if i == j and not p.is_symmetric()]
    prob = reduce_to_band(raw)
    if asym:
        notes.append("diagonal blocks auto-symmetrized: " + ", ".join(f"M{i}{i}" for i in sorted(asym)))
        object.__setattr__(prob, "symmetrized", tuple(sorted(asym)))
    return prob, notes


def load_problem(path) -> tuple[VariationalProblem, list[str]]:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return problem_from_dict(doc)


def problem_to_dict(prob: VariationalProblem) -> dict:
    blocks = {}
    for (i, j), p in prob.blocks().items():
        if not p.is_zero() or i == j == prob.order_k:
            blocks[f"M{i}{j}" if prob.order_k < 10 else f"M_{i}_{j}"] = p.to_lists()
    return {"order": prob.order_k, "dim": prob.dim_n, "interval": list(prob.interval), "blocks": blocks}
