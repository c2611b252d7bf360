"""Multinomial logistic regression with L1 or L2 penalty."""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from scipy.special import log_softmax, softmax


def _loss_grad(theta: np.ndarray, X: np.ndarray, Y: np.ndarray, l2: float):
    """Mean cross-entropy (+ optional L2 on weights) and its gradient."""
    n, d = X.shape
    K = Y.shape[1]
    W = theta[: d * K].reshape(d, K)
    b = theta[d * K :]
    Z = X @ W + b
    logp = log_softmax(Z, axis=1)
    loss = -np.sum(Y * logp) / n + 0.5 * l2 * np.sum(W * W)
    R = (np.exp(logp) - Y) / n
    gW = X.T @ R + l2 * W
    gb = R.sum(axis=0)
    return loss, np.concatenate([gW.ravel(), gb])


class LogisticRegression:
    """Softmax regression minimising ``C * sum(CE) + penalty(W)``.

    The intercept is never penalised. L2 uses L-BFGS; L1 uses accelerated
    proximal gradient (FISTA) with soft-thresholding.
    """

    def __init__(self, c: float = 1.0, penalty: str = "l2", solver: str = "lbfgs",
                 max_iter: int = 2000, tol: float = 1e-9, seed: int = 0):
        if c <= 0:
            raise ValueError("c must be positive")
        if penalty not in ("l1", "l2"):
            raise ValueError(f"unknown penalty {penalty!r}")
        self.c = float(c)
        self.penalty = penalty
        self.solver = solver  # accepted for grid compatibility; one optimiser serves both
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "LogisticRegression":
        n, d = X.shape
        Y = np.eye(n_classes)[y]
        strength = 1.0 / (self.c * n)
        theta0 = np.zeros(d * n_classes + n_classes)
        if self.penalty == "l2":
            res = minimize(
                _loss_grad, theta0, args=(X, Y, strength), jac=True, method="L-BFGS-B",
                options={"maxiter": self.max_iter, "gtol": self.tol, "ftol": 1e-15},
            )
            theta = res.x
        else:
            theta = self._fista(X, Y, strength, theta0)
        self.coef_ = theta[: d * n_classes].reshape(d, n_classes)
        self.intercept_ = theta[d * n_classes :]
        return self

    def _fista(self, X, Y, strength, theta0):
        n, d = X.shape
        K = Y.shape[1]
        Xa = np.hstack([X, np.ones((n, 1))])
        lipschitz = 0.5 * np.linalg.norm(Xa, 2) ** 2 / n
        step = 1.0 / max(lipschitz, 1e-12)
        nw = d * K
        theta = theta0.copy()
        z = theta.copy()
        t = 1.0
        for _ in range(self.max_iter * 5):
            _, g = _loss_grad(z, X, Y, 0.0)
            nxt = z - step * g
            w = nxt[:nw]
            nxt[:nw] = np.sign(w) * np.maximum(np.abs(w) - step * strength, 0.0)
            delta = nxt - theta
            if np.dot(z - nxt, delta) > 0:
                t = 1.0  # momentum points uphill: restart
            t_next = (1 + np.sqrt(1 + 4 * t * t)) / 2
            z = nxt + ((t - 1) / t_next) * delta
            theta, t = nxt, t_next
            if np.max(np.abs(delta)) < self.tol * max(1.0, np.max(np.abs(theta))):
                break
        return theta

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(X @ self.coef_ + self.intercept_, axis=1)
