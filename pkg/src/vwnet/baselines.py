"""Naive Bayes and logistic regression reference classifiers.

Both work on the encoded 16-column feature matrix. Naive Bayes decodes the
first column back to its age band and treats every other column as a
Bernoulli variable; logistic regression uses the columns as they are.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Activation, apply_activation
from .data import N_AGE_BINS, NEGATIVE, POSITIVE


def _xy(data):
    if hasattr(data, "features"):
        return np.asarray(data.features, dtype=np.float64), np.asarray(data.labels)
    X, y = data
    return np.asarray(X, dtype=np.float64), np.asarray(y)


def age_categories(column):
    """Map scaled age features ``bin / 5`` back to integer bands 1..5."""
    return np.clip(np.rint(np.asarray(column) * N_AGE_BINS), 1, N_AGE_BINS).astype(np.int64)


@dataclass
class NaiveBayesModel:
    priors: np.ndarray        # [label]
    age_table: np.ndarray     # [label, band - 1]
    binary_table: np.ndarray  # [label, feature, value]
    alpha: float = 1.0

    def log_joint(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        bands = age_categories(X[:, 0]) - 1
        bits = (X[:, 1:] >= 0.5).astype(np.int64)
        out = np.empty((len(X), 2))
        cols = np.arange(bits.shape[1])
        for c in (0, 1):
            out[:, c] = (np.log(self.priors[c])
                         + np.log(self.age_table[c, bands])
                         + np.log(self.binary_table[c, cols, bits]).sum(axis=1))
        return out


def nb_train(data, alpha=1.0):
    """Categorical naive Bayes with additive (Laplace) smoothing ``alpha``."""
    X, y = _xy(data)
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not (np.any(y == 0) and np.any(y == 1)):
        raise ValueError("naive Bayes needs examples of both labels")
    bands = age_categories(X[:, 0]) - 1
    bits = X[:, 1:] >= 0.5
    n_bin = bits.shape[1]
    priors = np.empty(2)
    age_table = np.empty((2, N_AGE_BINS))
    binary_table = np.empty((2, n_bin, 2))
    for c in (0, 1):
        mask = y == c
        n_c = int(mask.sum())
        priors[c] = n_c / len(y)
        age_table[c] = (np.bincount(bands[mask], minlength=N_AGE_BINS) + alpha) / (n_c + N_AGE_BINS * alpha)
        ones = bits[mask].sum(axis=0)
        binary_table[c, :, 1] = (ones + alpha) / (n_c + 2 * alpha)
        binary_table[c, :, 0] = (n_c - ones + alpha) / (n_c + 2 * alpha)
    return NaiveBayesModel(priors, age_table, binary_table, alpha)


def nb_posterior(model, X):
    """P(Positive | x) for each row, computed in log space."""
    lj = model.log_joint(X)
    # sigmoid of the log-odds: exact 0.5 on ties, no underflow
    return apply_activation(Activation.SIGMOID, lj[:, 1] - lj[:, 0])


def nb_predict(model, features):
    """``(label, posterior)`` for one encoded feature vector; ties -> Positive."""
    post = float(nb_posterior(model, np.asarray(features, dtype=np.float64)[None, :])[0])
    return (POSITIVE if post >= 0.5 else NEGATIVE), post


@dataclass
class LogisticModel:
    weights: np.ndarray
    intercept: float = 0.0
    loss_history: list = field(default_factory=list, repr=False)

    def decision_function(self, X):
        return np.atleast_2d(np.asarray(X, dtype=np.float64)) @ self.weights + self.intercept

    def probability(self, X):
        z = self.decision_function(X)
        return np.exp(-np.logaddexp(0.0, -z))


def lr_loss_and_grad(model, X, y):
    """Mean cross-entropy and its gradient ``(d_weights, d_intercept)``."""
    z = model.decision_function(X)
    # log(1 + exp(-z)) for y=1, log(1 + exp(z)) for y=0
    loss = float(np.mean(np.logaddexp(0.0, np.where(y == 1, -z, z))))
    resid = model.probability(X) - y
    return loss, X.T @ resid / len(y), float(resid.mean())


def lr_train(data, lr=0.1, epochs=500):
    """Full-batch gradient descent on the mean cross-entropy from zero weights."""
    X, y = _xy(data)
    if len(X) == 0:
        raise ValueError("cannot train on an empty dataset")
    y = y.astype(np.float64)
    model = LogisticModel(np.zeros(X.shape[1]), 0.0)
    for _ in range(epochs):
        loss, dw, db = lr_loss_and_grad(model, X, y)
        model.loss_history.append(loss)
        model.weights -= lr * dw
        model.intercept -= lr * db
    model.loss_history.append(lr_loss_and_grad(model, X, y)[0])
    return model


def lr_predict(model, features):
    """``(label, probability)``; ties at 0.5 go to Positive."""
    prob = float(model.probability(np.asarray(features, dtype=np.float64)[None, :])[0])
    return (POSITIVE if prob >= 0.5 else NEGATIVE), prob
