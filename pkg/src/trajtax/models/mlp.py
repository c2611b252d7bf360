"""Feed-forward ReLU network with softmax output, trained by Adam."""

from __future__ import annotations

import numpy as np
from scipy.special import log_softmax, softmax


def init_params(layer_sizes, rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray]]:
    params = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        W = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        b = rng.uniform(-bound, bound, size=fan_out)
        params.append((W, b))
    return params


def forward(params, X: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    acts = [X]
    h = X
    for W, b in params[:-1]:
        h = np.maximum(h @ W + b, 0.0)
        acts.append(h)
    W, b = params[-1]
    return acts, h @ W + b


def loss_and_grad(params, X: np.ndarray, Y: np.ndarray, alpha: float):
    """Mean cross-entropy plus ``alpha / (2n) * sum(W**2)``, with gradients.

    Returns ``(loss, [(dW, db), ...])`` aligned with ``params``.
    """
    n = X.shape[0]
    acts, logits = forward(params, X)
    logp = log_softmax(logits, axis=1)
    loss = -np.sum(Y * logp) / n + 0.5 * alpha / n * sum(np.sum(W * W) for W, _ in params)
    delta = (np.exp(logp) - Y) / n
    grads = []
    for layer in range(len(params) - 1, -1, -1):
        W, _ = params[layer]
        a = acts[layer]
        grads.append((a.T @ delta + alpha / n * W, delta.sum(axis=0)))
        if layer > 0:
            delta = (delta @ W.T) * (a > 0)
    grads.reverse()
    return loss, grads


class MLP:
    """Multilayer perceptron classifier.

    Mini-batches of ``min(200, n)`` rows reshuffled every epoch; at most
    ``max_epochs`` epochs, stopping early once the epoch loss has failed to
    improve by a relative 1e-6 for 10 consecutive epochs.
    """

    beta1, beta2, eps = 0.9, 0.999, 1e-8

    def __init__(self, hidden_layer_sizes=(100,), alpha: float = 1e-4, learning_rate_init: float = 1e-3,
                 max_epochs: int = 300, batch_size: int = 200, patience: int = 10, rel_tol: float = 1e-6,
                 seed: int = 0):
        if isinstance(hidden_layer_sizes, int):
            hidden_layer_sizes = (hidden_layer_sizes,)
        self.hidden_layer_sizes = tuple(int(h) for h in hidden_layer_sizes)
        self.alpha = float(alpha)
        self.learning_rate_init = float(learning_rate_init)
        self.max_epochs = max_epochs
        self.batch_size = batch_size
        self.patience = patience
        self.rel_tol = rel_tol
        self.seed = seed

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "MLP":
        X = np.asarray(X, dtype=float)
        n, d = X.shape
        Y = np.eye(n_classes)[y]
        rng = np.random.default_rng(self.seed)
        params = init_params((d, *self.hidden_layer_sizes, n_classes), rng)
        m = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
        v = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
        batch = min(self.batch_size, n)
        step = 0
        best = np.inf
        stale = 0
        self.loss_curve_ = []
        for _ in range(self.max_epochs):
            order = rng.permutation(n)
            epoch_loss = 0.0
            for start in range(0, n, batch):
                rows = order[start : start + batch]
                loss, grads = loss_and_grad(params, X[rows], Y[rows], self.alpha)
                epoch_loss += loss * len(rows)
                step += 1
                lr = self.learning_rate_init * np.sqrt(1 - self.beta2**step) / (1 - self.beta1**step)
                new_params = []
                for i, ((W, b), (gW, gb)) in enumerate(zip(params, grads)):
                    mW = self.beta1 * m[i][0] + (1 - self.beta1) * gW
                    mb = self.beta1 * m[i][1] + (1 - self.beta1) * gb
                    vW = self.beta2 * v[i][0] + (1 - self.beta2) * gW * gW
                    vb = self.beta2 * v[i][1] + (1 - self.beta2) * gb * gb
                    m[i], v[i] = (mW, mb), (vW, vb)
                    new_params.append((W - lr * mW / (np.sqrt(vW) + self.eps), b - lr * mb / (np.sqrt(vb) + self.eps)))
                params = new_params
            epoch_loss /= n
            self.loss_curve_.append(epoch_loss)
            if not np.isfinite(best) or epoch_loss < best - self.rel_tol * abs(best):
                best = epoch_loss
                stale = 0
            else:
                stale += 1
                if stale >= self.patience:
                    break
        self.params_ = params
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        _, logits = forward(self.params_, np.asarray(X, dtype=float))
        return softmax(logits, axis=1)
