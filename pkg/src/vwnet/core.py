"""Small dense linear-algebra kernels, activations and labelled random streams.

Arrays are plain ``numpy.ndarray`` objects of dtype float64. The helpers here
check shapes up front so that a mismatch surfaces as a :class:`DimensionError`
naming both operands instead of a broadcasting surprise further down.
"""

from __future__ import annotations

import enum
import hashlib

import numpy as np

from .exceptions import DimensionError

__all__ = [
    "Activation",
    "RngStream",
    "activation_grad",
    "apply_activation",
    "as_tensor",
    "contract3",
    "matvec",
    "rng_uniform",
]


def as_tensor(values, ndim=None, name="tensor"):
    """Return ``values`` as a float64 array, optionally enforcing its rank."""
    arr = np.asarray(values, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if arr.ndim > 3:
        raise DimensionError(f"{name} has rank {arr.ndim}; at most 3 is supported")
    return arr


def matvec(M, v):
    """``out[i] = sum_j M[i, j] * v[j]``."""
    M = as_tensor(M, 2, "matrix")
    v = as_tensor(v, 1, "vector")
    if M.shape[1] != v.shape[0]:
        raise DimensionError(f"cannot multiply matrix of shape {M.shape} by vector of shape {v.shape}")
    return M @ v


def contract3(T, p):
    """Contract the last axis of a rank-3 tensor with a vector.

    ``out[a, b] = sum_m T[a, b, m] * p[m]``
    """
    T = as_tensor(T, 3, "tensor")
    p = as_tensor(p, 1, "vector")
    if T.shape[2] != p.shape[0]:
        raise DimensionError(f"cannot contract tensor of shape {T.shape} with vector of shape {p.shape}")
    return T @ p


class Activation(enum.IntEnum):
    """Elementwise nonlinearities. The integer values are the on-disk tags."""

    LINEAR = 0
    RELU = 1
    TANH = 2
    SIGMOID = 3

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ValueError(f"unknown activation {value!r}; expected one of "
                                 f"{[a.name.lower() for a in cls]}") from None
        return cls(value)


def _sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def apply_activation(kind, v):
    kind = Activation.parse(kind)
    v = np.asarray(v, dtype=np.float64)
    if kind is Activation.LINEAR:
        return v.copy()
    if kind is Activation.RELU:
        return np.maximum(v, 0.0)
    if kind is Activation.TANH:
        return np.tanh(v)
    return _sigmoid(np.atleast_1d(v)).reshape(v.shape)


def activation_grad(kind, pre, out=None):
    """Derivative of ``kind`` evaluated at ``pre``.

    ``out`` may carry ``apply_activation(kind, pre)`` when the caller already
    has it. The ReLU derivative at exactly zero is taken to be zero.
    """
    kind = Activation.parse(kind)
    pre = np.asarray(pre, dtype=np.float64)
    if kind is Activation.LINEAR:
        return np.ones_like(pre)
    if kind is Activation.RELU:
        return (pre > 0).astype(np.float64)
    if out is None:
        out = apply_activation(kind, pre)
    if kind is Activation.TANH:
        return 1.0 - out * out
    return out * (1.0 - out)


def _label_key(label):
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))


class RngStream:
    """A deterministic random stream keyed by ``(seed, label)``.

    Streams with different labels are seeded through independent
    ``SeedSequence`` spawn keys, so deriving one never perturbs another and the
    order in which children are created does not matter.
    """

    def __init__(self, seed, label=""):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.label = str(label)
        seq = np.random.SeedSequence(entropy=seed, spawn_key=_label_key(self.label))
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, label={self.label!r})"

    def child(self, label):
        """A fresh stream whose label extends this one's."""
        return RngStream(self.seed, f"{self.label}/{label}" if self.label else str(label))

    def uniform(self, lo, hi, size):
        if not lo < hi:
            raise ValueError(f"uniform range requires lo < hi, got lo={lo}, hi={hi}")
        return self._gen.uniform(lo, hi, size)

    def normal(self, size, scale=1.0):
        return self._gen.normal(0.0, scale, size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def integer_seed(self):
        """Draw a 63-bit seed, convenient for handing to a nested component."""
        return int(self._gen.integers(0, 2**63 - 1))


def rng_uniform(stream, lo, hi, n):
    """Draw ``n`` values in ``[lo, hi)`` from ``stream``, advancing it."""
    return stream.uniform(lo, hi, int(n))
