"""Matrix-valued polynomials in one real variable.

All time dependence of the coefficient blocks lives here. Polynomials make
evaluation, differentiation and Taylor expansion exact, which the Hamiltonian
and frame-jet code relies on.
"""

from __future__ import annotations

from math import comb, factorial

import numpy as np


class MatrixPolynomial:
    """A ``rows x cols`` matrix whose entries are polynomials in ``t``.

    ``coeffs[d]`` is the constant matrix multiplying ``t**d``. Trailing zero
    coefficient matrices are dropped on construction, so ``degree`` is minimal
    (the zero polynomial has degree 0 and a single zero coefficient).
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=float)
        if c.ndim == 2:
            c = c[np.newaxis]
        if c.ndim != 3 or c.shape[0] == 0:
            raise ValueError(
                "coefficients must be a non-empty list of equally shaped matrices"
            )
        nz = np.flatnonzero(np.any(c.reshape(c.shape[0], -1) != 0.0, axis=1))
        last = int(nz[-1]) + 1 if nz.size else 1
        c = c[:last].copy()
        c.setflags(write=False)
        self._coeffs = c

    @classmethod
    def constant(cls, matrix) -> "MatrixPolynomial":
        return cls(np.atleast_2d(np.asarray(matrix, dtype=float))[np.newaxis])

    @classmethod
    def zeros(cls, rows: int, cols: int | None = None) -> "MatrixPolynomial":
        return cls(np.zeros((1, rows, rows if cols is None else cols)))

    @classmethod
    def identity(cls, n: int) -> "MatrixPolynomial":
        return cls(np.eye(n)[np.newaxis])

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def shape(self) -> tuple[int, int]:
        return self._coeffs.shape[1], self._coeffs.shape[2]

    @property
    def rows(self) -> int:
        return self._coeffs.shape[1]

    @property
    def cols(self) -> int:
        return self._coeffs.shape[2]

    @property
    def degree(self) -> int:
        return self._coeffs.shape[0] - 1

    def is_zero(self) -> bool:
        return self.degree == 0 and not np.any(self._coeffs[0])

    def __call__(self, t):
        return poly_eval(self, t)

    def derivative(self, order: int = 1) -> "MatrixPolynomial":
        return poly_derivative(self, order)

    @property
    def T(self) -> "MatrixPolynomial":
        return MatrixPolynomial(np.swapaxes(self._coeffs, 1, 2))

    def is_symmetric(self, atol: float = 0.0) -> bool:
        if self.rows != self.cols:
            return False
        return bool(np.all(np.abs(self._coeffs - np.swapaxes(self._coeffs, 1, 2)) <= atol))

    def symmetrized(self) -> "MatrixPolynomial":
        return MatrixPolynomial(0.5 * (self._coeffs + np.swapaxes(self._coeffs, 1, 2)))

    def _padded(self, degree: int) -> np.ndarray:
        out = np.zeros((degree + 1,) + self.shape)
        out[: self._coeffs.shape[0]] = self._coeffs
        return out

    def __add__(self, other):
        if not isinstance(other, MatrixPolynomial):
            return NotImplemented
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        d = max(self.degree, other.degree)
        return MatrixPolynomial(self._padded(d) + other._padded(d))

    def __neg__(self):
        return MatrixPolynomial(-self._coeffs)

    def __sub__(self, other):
        if not isinstance(other, MatrixPolynomial):
            return NotImplemented
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, MatrixPolynomial):
            return NotImplemented
        return MatrixPolynomial(self._coeffs * float(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other):
        if not isinstance(other, MatrixPolynomial):
            return NotImplemented
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        out = np.zeros((self.degree + other.degree + 1, self.rows, other.cols))
        for i, a in enumerate(self._coeffs):
            for j, b in enumerate(other._coeffs):
                out[i + j] += a @ b
        return MatrixPolynomial(out)

    def __eq__(self, other):
        if not isinstance(other, MatrixPolynomial):
            return NotImplemented
        return self._coeffs.shape == other._coeffs.shape and bool(
            np.array_equal(self._coeffs, other._coeffs)
        )

    def __hash__(self):
        return hash((self._coeffs.shape, self._coeffs.tobytes()))

    def allclose(self, other: "MatrixPolynomial", atol: float = 1e-12) -> bool:
        d = max(self.degree, other.degree)
        return bool(np.allclose(self._padded(d), other._padded(d), rtol=0.0, atol=atol))

    def taylor(self, t0: float, order: int) -> np.ndarray:
        """Taylor coefficients about ``t0``: entry ``i`` is ``P^(i)(t0) / i!``.

        Returns an array of shape ``(order + 1, rows, cols)``; orders beyond
        the degree are zero.
        """
        out = np.zeros((order + 1,) + self.shape)
        c = self._coeffs
        for i in range(min(order, self.degree) + 1):
            acc = np.zeros(self.shape)
            for d in range(self.degree, i - 1, -1):
                acc = acc * t0 + comb(d, i) * c[d]
            out[i] = acc
        return out

    def to_lists(self) -> list:
        return self._coeffs.tolist()

    def __repr__(self):
        return f"MatrixPolynomial(shape={self.shape}, degree={self.degree})"


def poly_eval(P: MatrixPolynomial, t):
    """Horner evaluation; ``t`` may be a scalar or an array of times.

    For an array of shape ``S`` the result has shape ``S + (rows, cols)``.
    """
    c = P.coeffs
    t = np.asarray(t, dtype=float)
    tt = t[..., np.newaxis, np.newaxis]
    acc = np.broadcast_to(c[-1], t.shape + P.shape).copy()
    for d in range(P.degree - 1, -1, -1):
        acc = acc * tt + c[d]
    return acc


def poly_derivative(P: MatrixPolynomial, order: int = 1) -> MatrixPolynomial:
    c = P.coeffs
    for _ in range(order):
        if c.shape[0] == 1:
            return MatrixPolynomial.zeros(*P.shape)
        c = c[1:] * np.arange(1, c.shape[0])[:, np.newaxis, np.newaxis]
    return MatrixPolynomial(c)


def series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated Cauchy product of two matrix power series of equal length."""
    m = a.shape[0]
    out = np.zeros((m, a.shape[1], b.shape[2]))
    for i in range(m):
        for j in range(m - i):
            out[i + j] += a[i] @ b[j]
    return out


def series_inv(a: np.ndarray) -> np.ndarray:
    """Inverse of a matrix power series with invertible constant term."""
    m = a.shape[0]
    v0 = np.linalg.inv(a[0])
    out = np.zeros_like(a)
    out[0] = v0
    for i in range(1, m):
        acc = np.zeros_like(v0)
        for j in range(1, i + 1):
            acc += a[j] @ out[i - j]
        out[i] = -v0 @ acc
    return out


def series_derivative_values(series: np.ndarray) -> np.ndarray:
    """Convert Taylor coefficients ``c_i`` into derivative values ``i! c_i``."""
    f = np.array([factorial(i) for i in range(series.shape[0])], dtype=float)
    return series * f.reshape((-1,) + (1,) * (series.ndim - 1))
