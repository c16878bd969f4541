"""Information gain of a dataset about the objective under a GP model.

For a GP with kernel K over the embedded rows, the gain of revealing the
set S is 0.5 * log det(I + noise^-1 K(S, S)).  Rows are embedded as their
observation-set value vectors.  The accumulator keeps a growing Cholesky
factor of (I + noise^-1 K) so appending a row costs O(n^2) and a
peek-without-commit costs the same.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_triangular

from .gp import GpHyper, rbf_kernel

__all__ = ["information_gain", "InfoGainAccumulator"]


class InfoGainAccumulator:
    """Incrementally tracks 0.5 log det(I + noise^-1 K(S,S))."""

    def __init__(self, hyper: GpHyper, dim: int):
        self.hyper = hyper
        self.dim = dim
        self._rows = np.empty((0, dim))
        self._chol = np.empty((0, 0))
        self._gain = 0.0

    @property
    def n_rows(self) -> int:
        return self._rows.shape[0]

    @property
    def gain(self) -> float:
        return self._gain

    def _column(self, row: np.ndarray) -> tuple[np.ndarray, float]:
        scale = 1.0 / self.hyper.noise_variance
        if self.n_rows:
            col = scale * rbf_kernel(self._rows, row[None, :], self.hyper)[:, 0]
        else:
            col = np.empty(0)
        diag = 1.0 + scale * self.hyper.signal_variance
        return col, diag

    def peek(self, row: np.ndarray | list | tuple) -> float:
        """Gain after hypothetically adding ``row`` (state unchanged)."""

        row = np.asarray(row, dtype=float).reshape(self.dim)
        col, diag = self._column(row)
        if self.n_rows:
            z = solve_triangular(self._chol, col[:, None], lower=True, check_finite=False)[:, 0]
            corner_sq = diag - float(z @ z)
        else:
            corner_sq = diag
        corner_sq = max(corner_sq, 1e-300)
        return self._gain + 0.5 * math.log(corner_sq)

    def peek_batch(self, rows: np.ndarray) -> np.ndarray:
        """Vector of hypothetical gains, one per candidate row."""

        rows = np.asarray(rows, dtype=float).reshape(-1, self.dim)
        scale = 1.0 / self.hyper.noise_variance
        diag = 1.0 + scale * self.hyper.signal_variance
        if self.n_rows:
            cols = scale * rbf_kernel(self._rows, rows, self.hyper)
            z = solve_triangular(self._chol, cols, lower=True, check_finite=False)
            corners = diag - np.sum(z * z, axis=0)
        else:
            corners = np.full(rows.shape[0], diag)
        corners = np.maximum(corners, 1e-300)
        return self._gain + 0.5 * np.log(corners)

    def add(self, row: np.ndarray | list | tuple) -> float:
        """Add ``row`` and return the updated gain."""

        row = np.asarray(row, dtype=float).reshape(self.dim)
        col, diag = self._column(row)
        n = self.n_rows
        chol = np.zeros((n + 1, n + 1))
        if n:
            chol[:n, :n] = self._chol
            z = solve_triangular(self._chol, col[:, None], lower=True, check_finite=False)[:, 0]
            chol[n, :n] = z
            corner_sq = diag - float(z @ z)
        else:
            corner_sq = diag
        corner_sq = max(corner_sq, 1e-300)
        chol[n, n] = math.sqrt(corner_sq)
        self._chol = chol
        self._rows = np.vstack([self._rows, row[None, :]])
        self._gain += 0.5 * math.log(corner_sq)
        return self._gain


def information_gain(
    rows: np.ndarray | list,
    hyper: GpHyper | None = None,
) -> float:
    """Gain of the row set from scratch; 0 for an empty set."""

    hyper = hyper or GpHyper()
    rows = np.asarray(rows, dtype=float)
    if rows.size == 0:
        return 0.0
    if rows.ndim == 1:
        rows = rows[:, None]
    scale = 1.0 / hyper.noise_variance
    mat = np.eye(rows.shape[0]) + scale * rbf_kernel(rows, rows, hyper)
    sign, logdet = np.linalg.slogdet(mat)
    if sign <= 0:
        raise ValueError("information matrix is not positive definite")
    return 0.5 * float(logdet)
