"""Exact Gaussian-process regression with an optional causal prior.

The kernel is an RBF plus a rank-one term built from a prior std-scale
function, k(x,x') = s_f^2 exp(-|x-x'|^2 / 2l^2) + sigma(x) sigma(x'), and
the posterior conditions on outputs minus a prior mean function.  The
Cholesky factor of the regularised kernel matrix is cached; single-row
extensions reuse it (O(n^2)) instead of refitting, which is what keeps the
lookahead simulations cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

__all__ = ["GpHyper", "GpModel", "GpFitError", "fit_gp", "rbf_kernel"]

MeanFn = Callable[[np.ndarray], np.ndarray]


class GpFitError(RuntimeError):
    """Raised when the kernel matrix cannot be factorised even with jitter."""


@dataclass(frozen=True)
class GpHyper:
    lengthscale: float = 1.0
    signal_variance: float = 1.0
    noise_variance: float = math.exp(-5.0)


def _as_matrix(x: np.ndarray | list | tuple) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim == 0:
        arr = arr[None, None]
    return arr


def rbf_kernel(a: np.ndarray, b: np.ndarray, hyper: GpHyper) -> np.ndarray:
    a = _as_matrix(a)
    b = _as_matrix(b)
    if a.shape[1] == 0:
        sq = np.zeros((a.shape[0], b.shape[0]))
    else:
        sq = (
            np.sum(a**2, axis=1)[:, None]
            + np.sum(b**2, axis=1)[None, :]
            - 2.0 * a @ b.T
        )
        np.maximum(sq, 0.0, out=sq)
    return hyper.signal_variance * np.exp(-0.5 * sq / hyper.lengthscale**2)


def _chol_with_jitter(mat: np.ndarray) -> tuple[np.ndarray, float]:
    try:
        return np.linalg.cholesky(mat), 0.0
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-8
    eye = np.eye(mat.shape[0])
    while jitter <= 1e-4:
        try:
            return np.linalg.cholesky(mat + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise GpFitError("kernel matrix is not positive definite even with jitter 1e-4")


@dataclass(frozen=True)
class GpModel:
    """Fitted GP.  Immutable; ``extended`` returns a cheap one-row update."""

    x_train: np.ndarray  # (n, d)
    y_train: np.ndarray  # (n,)
    hyper: GpHyper
    prior_mean: MeanFn | None = None
    prior_std_scale: MeanFn | None = None
    chol: np.ndarray | None = None  # L with L L^T = K + noise I
    white: np.ndarray | None = None  # L^{-1} (y - prior_mean(X))
    jitter: float = 0.0

    @property
    def n_train(self) -> int:
        return int(self.x_train.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.x_train.shape[1])

    # -- kernel pieces -----------------------------------------------------
    def _prior_mean_at(self, x: np.ndarray) -> np.ndarray:
        if self.prior_mean is None:
            return np.zeros(x.shape[0])
        return np.asarray(self.prior_mean(x), dtype=float).reshape(x.shape[0])

    def _std_scale_at(self, x: np.ndarray) -> np.ndarray:
        if self.prior_std_scale is None:
            return np.zeros(x.shape[0])
        return np.asarray(self.prior_std_scale(x), dtype=float).reshape(x.shape[0])

    def kernel(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = _as_matrix(a)
        b = _as_matrix(b)
        cov = rbf_kernel(a, b, self.hyper)
        if self.prior_std_scale is not None:
            cov = cov + np.outer(self._std_scale_at(a), self._std_scale_at(b))
        return cov

    def kernel_diag(self, x: np.ndarray) -> np.ndarray:
        x = _as_matrix(x)
        diag = np.full(x.shape[0], self.hyper.signal_variance)
        if self.prior_std_scale is not None:
            diag = diag + self._std_scale_at(x) ** 2
        return diag

    # -- posterior ---------------------------------------------------------
    def posterior(self, x_query: np.ndarray | list | tuple) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and std at the query points."""

        xq = _as_matrix(x_query)
        mean = self._prior_mean_at(xq)
        var = self.kernel_diag(xq).copy()
        if self.n_train > 0:
            assert self.chol is not None and self.white is not None
            k_cross = self.kernel(self.x_train, xq)  # (n, m)
            v = _tri_solve(self.chol, k_cross)
            mean = mean + v.T @ self.white
            var = var - np.sum(v * v, axis=0)
        var = np.maximum(var, 0.0)
        return mean, np.sqrt(var)

    def posterior_mean_gradient(self, x_query: np.ndarray | list | tuple) -> np.ndarray:
        """Analytic gradient of the posterior mean (RBF part; requires no
        prior mean/std-scale functions, which are data-defined)."""

        if self.prior_mean is not None or self.prior_std_scale is not None:
            raise GpFitError("analytic gradient available for plain-RBF models only")
        xq = _as_matrix(x_query)
        if self.n_train == 0:
            return np.zeros_like(xq)
        assert self.chol is not None and self.white is not None
        alpha = _tri_solve(self.chol.T, self.white, lower=False)  # K^{-1}(y - m)
        k_cross = rbf_kernel(self.x_train, xq, self.hyper)  # (n, m)
        grads = np.empty_like(xq)
        inv_l2 = 1.0 / self.hyper.lengthscale**2
        for j in range(xq.shape[0]):
            diff = self.x_train - xq[j]  # (n, d)
            grads[j] = inv_l2 * (diff * k_cross[:, j : j + 1]).T @ alpha
        return grads

    def posterior_mean_with_prior(
        self,
        x_query: np.ndarray | list | tuple,
        prior_at_train: np.ndarray,
        prior_at_query: np.ndarray,
    ) -> np.ndarray:
        """Posterior mean under a replacement prior-mean function, reusing
        the cached kernel factorisation (the covariance is held fixed)."""

        xq = _as_matrix(x_query)
        if self.n_train == 0:
            return np.asarray(prior_at_query, dtype=float).reshape(xq.shape[0])
        assert self.chol is not None
        resid = self.y_train - np.asarray(prior_at_train, dtype=float).reshape(self.n_train)
        white = _tri_solve(self.chol, resid[:, None])[:, 0]
        k_cross = self.kernel(self.x_train, xq)
        v = _tri_solve(self.chol, k_cross)
        return np.asarray(prior_at_query, dtype=float).reshape(xq.shape[0]) + v.T @ white

    def extended(self, x_new: np.ndarray | list | tuple | float, y_new: float) -> "GpModel":
        """Model conditioned on one extra observation, via a rank-one
        Cholesky extension of the cached factorisation."""

        x_new = _as_matrix(x_new)
        if self.n_train == 0:
            return fit_gp(
                x_new,
                np.asarray([y_new], dtype=float),
                prior_mean=self.prior_mean,
                prior_std_scale=self.prior_std_scale,
                hyper=self.hyper,
            )
        assert self.chol is not None and self.white is not None
        k_col = self.kernel(self.x_train, x_new)[:, 0]
        k_nn = float(self.kernel_diag(x_new)[0]) + self.hyper.noise_variance + self.jitter
        z = _tri_solve(self.chol, k_col[:, None])[:, 0]
        corner_sq = k_nn - float(z @ z)
        if corner_sq <= 1e-12:
            corner_sq = 1e-12
        corner = math.sqrt(corner_sq)
        n = self.n_train
        chol = np.zeros((n + 1, n + 1))
        chol[:n, :n] = self.chol
        chol[n, :n] = z
        chol[n, n] = corner
        resid = float(y_new) - float(self._prior_mean_at(x_new)[0])
        white_new = (resid - float(z @ self.white)) / corner
        return replace(
            self,
            x_train=np.vstack([self.x_train, x_new]),
            y_train=np.append(self.y_train, float(y_new)),
            chol=chol,
            white=np.append(self.white, white_new),
        )


def _tri_solve(chol: np.ndarray, rhs: np.ndarray, lower: bool = True) -> np.ndarray:
    from scipy.linalg import solve_triangular

    return solve_triangular(chol, rhs, lower=lower, check_finite=False)


def fit_gp(
    inputs: np.ndarray | list | tuple,
    outputs: np.ndarray | list | tuple,
    prior_mean: MeanFn | None = None,
    prior_std_scale: MeanFn | None = None,
    hyper: GpHyper | None = None,
) -> GpModel:
    """Condition a GP on (inputs, outputs - prior_mean(inputs)).

    With no observations the posterior equals the prior.  Cholesky failures
    escalate jitter from 1e-8 to 1e-4 before raising :class:`GpFitError`.
    """

    hyper = hyper or GpHyper()
    x = _as_matrix(inputs)
    y = np.asarray(outputs, dtype=float).reshape(-1)
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"{x.shape[0]} inputs vs {y.shape[0]} outputs")
    model = GpModel(
        x_train=x,
        y_train=y,
        hyper=hyper,
        prior_mean=prior_mean,
        prior_std_scale=prior_std_scale,
    )
    if x.shape[0] == 0:
        return model
    cov = model.kernel(x, x)
    cov[np.diag_indices_from(cov)] += hyper.noise_variance
    chol, jitter = _chol_with_jitter(cov)
    resid = y - model._prior_mean_at(x)
    white = _tri_solve(chol, resid[:, None])[:, 0]
    return replace(model, chol=chol, white=white, jitter=jitter)
