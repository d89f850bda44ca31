"""Layer stacks, the three preset architectures and mini-batch Adam training."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Activation, RngStream
from .data import NEGATIVE, POSITIVE
from .exceptions import DimensionError
from .layers import (
    DENSE,
    VAR_BIAS,
    VAR_WEIGHT,
    LayerSpec,
    init_params,
    layer_backward_pre,
    layer_backward,
    layer_forward,
    param_count,
)

logger = logging.getLogger(__name__)

ARCHITECTURES = ("nn", "vw", "vb")
N_FEATURES = 16
PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class NetworkSpec:
    """An ordered stack of layers ending in a single sigmoid unit."""

    layers: tuple
    input_dim: int = N_FEATURES
    name: str = "custom"

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise ValueError("a network needs at least one layer")
        width = self.input_dim
        for i, layer in enumerate(layers):
            if layer.n_in != width:
                raise DimensionError(f"layer {i} ({layer.describe()}) expects {layer.n_in} inputs "
                                     f"but receives {width}")
            width = layer.n_out
        last = layers[-1]
        if last.kind != DENSE or last.n_out != 1 or last.activation is not Activation.SIGMOID:
            raise ValueError("the final layer must be a dense layer with one sigmoid output")

    @property
    def param_count(self):
        return sum(param_count(layer) for layer in self.layers)


def build_arch(name, n_features=N_FEATURES):
    """Return the layer stack of a preset architecture.

    ``nn`` is a plain two-hidden-layer perceptron, ``vw`` swaps its second
    hidden layer for a variable-weight layer and ``vb`` uses a narrower stack
    with a variable-bias layer.
    """
    relu, sigmoid = Activation.RELU, Activation.SIGMOID
    if name == "nn":
        layers = (LayerSpec(DENSE, n_features, 16, relu),
                  LayerSpec(DENSE, 16, 16, relu),
                  LayerSpec(DENSE, 16, 1, sigmoid))
    elif name == "vw":
        layers = (LayerSpec(DENSE, n_features, 16, relu),
                  LayerSpec(VAR_WEIGHT, 16, 16),
                  LayerSpec(DENSE, 16, 1, sigmoid))
    elif name == "vb":
        layers = (LayerSpec(DENSE, n_features, 8, relu),
                  LayerSpec(VAR_BIAS, 8, 8),
                  LayerSpec(DENSE, 8, 1, sigmoid))
    else:
        raise ValueError(f"unknown architecture {name!r}; valid names are {', '.join(ARCHITECTURES)}")
    return NetworkSpec(layers, n_features, name)


class Network:
    """A :class:`NetworkSpec` with materialized parameters."""

    def __init__(self, spec, params):
        params = list(params)
        if len(params) != len(spec.layers):
            raise DimensionError(f"spec has {len(spec.layers)} layers but {len(params)} parameter sets given")
        for i, (layer, p) in enumerate(zip(spec.layers, params)):
            if p.spec != layer:
                raise DimensionError(f"layer {i}: parameters describe {p.spec.describe()}, "
                                     f"spec says {layer.describe()}")
        self.spec = spec
        self.params = params

    @classmethod
    def init(cls, spec, seed=0):
        root = RngStream(seed, "init")
        return cls(spec, [init_params(layer, root.child(f"layer-{i}"))
                          for i, layer in enumerate(spec.layers)])

    def __repr__(self):
        stack = " -> ".join(layer.describe() for layer in self.spec.layers)
        return f"Network({self.spec.name!r}: {stack})"

    @property
    def param_count(self):
        return sum(p.size for p in self.params)

    def copy(self):
        return Network(self.spec, [p.copy() for p in self.params])

    def forward(self, x, keep_caches=False):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1:] != (self.spec.input_dim,) or x.ndim > 2:
            raise DimensionError(f"network expects inputs of width {self.spec.input_dim}, got shape {x.shape}")
        caches = []
        h = x
        for p in self.params:
            h, cache = layer_forward(p, h)
            caches.append(cache)
        return (h, caches) if keep_caches else h

    def backward_from_logit(self, caches, dlogit):
        """Gradients of every parameter given d(loss)/d(final pre-activation)."""
        grads = [None] * len(self.params)
        dh, grads[-1] = layer_backward_pre(self.params[-1], caches[-1], dlogit)
        for i in range(len(self.params) - 2, -1, -1):
            dh, grads[i] = layer_backward(self.params[i], caches[i], dh)
        return dh, grads

    def loss_and_grads(self, X, y):
        """Mean clamped cross-entropy over a batch and its parameter gradients."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        out, caches = self.forward(X, keep_caches=True)
        prob = out[:, 0]
        loss = float(np.mean(bce_loss(prob, y)[0]))
        # sigmoid folded into the cross-entropy derivative
        dlogit = ((prob - y) / len(y))[:, None]
        _, grads = self.backward_from_logit(caches, dlogit)
        return loss, grads, prob


def forward(net, x):
    """Probability of the positive class for one input (or a batch)."""
    out = net.forward(x)
    return out[..., 0] if out.ndim == 2 else float(out[0])


def predict(net, x):
    """``(label, probability)``; ties at 0.5 go to Positive."""
    prob = forward(net, x)
    if np.ndim(prob):
        raise DimensionError("predict takes a single input vector; use forward for batches")
    return (POSITIVE if prob >= 0.5 else NEGATIVE), prob


def bce_loss(p, y):
    """Binary cross-entropy and its derivative with respect to ``p``.

    ``p`` is clamped to ``[1e-12, 1 - 1e-12]`` first; the derivative is that
    of the loss evaluated at the clamped probability.
    """
    p = np.clip(np.asarray(p, dtype=np.float64), PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = np.asarray(y, dtype=np.float64)
    loss = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    grad = -y / p + (1.0 - y) / (1.0 - p)
    if loss.ndim == 0:
        return float(loss), float(grad)
    return loss, grad


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 32
    epochs: int = 200
    seed: int = 42
    shuffle: bool = True
    optimizer: str = "adam"

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be at least 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be at least 1, got {self.epochs}")
        if self.optimizer != "adam":
            raise ValueError(f"only the adam optimizer is supported, got {self.optimizer!r}")


@dataclass
class TrainHistory:
    loss: list = field(default_factory=list)
    accuracy: list = field(default_factory=list)

    def __len__(self):
        return len(self.loss)


class Adam:
    """Adam with bias-corrected moments, updating parameter arrays in place."""

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self._m = {}
        self._v = {}

    def step(self, params, grads):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for i, (p, g) in enumerate(zip(params, grads)):
            garrs = g.arrays()
            for name, arr in p.arrays().items():
                grad = garrs[name]
                key = (i, name)
                if key not in self._m:
                    self._m[key] = np.zeros_like(arr)
                    self._v[key] = np.zeros_like(arr)
                m, v = self._m[key], self._v[key]
                m *= self.beta1
                m += (1.0 - self.beta1) * grad
                v *= self.beta2
                v += (1.0 - self.beta2) * (grad * grad)
                arr -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.epsilon)
            p.touch()


def _unpack(data):
    if hasattr(data, "features") and hasattr(data, "labels"):
        return data.features, data.labels
    X, y = data
    return X, y


def train(spec, data, cfg=None):
    """Train a freshly initialized network; returns ``(network, history)``.

    Each epoch visits the data in an order drawn from the stream
    ``(cfg.seed, "shuffle-epoch-<e>")``, so the result depends only on the
    spec, the data and the config.
    """
    cfg = cfg or TrainConfig()
    X, y = _unpack(data)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("cannot train on an empty dataset")
    if X.shape[1] != spec.input_dim:
        raise DimensionError(f"spec expects {spec.input_dim} features, data has {X.shape[1]}")
    if len(y) != len(X):
        raise DimensionError(f"{len(X)} feature rows but {len(y)} labels")

    net = Network.init(spec, cfg.seed)
    opt = Adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)
    history = TrainHistory()
    n = len(X)
    for epoch in range(1, cfg.epochs + 1):
        if cfg.shuffle:
            order = RngStream(cfg.seed, f"shuffle-epoch-{epoch}").permutation(n)
        else:
            order = np.arange(n)
        total_loss = 0.0
        correct = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads, prob = net.loss_and_grads(X[idx], y[idx])
            total_loss += loss * len(idx)
            correct += int(np.sum((prob >= 0.5) == (y[idx] == 1)))
            opt.step(net.params, grads)
        history.loss.append(total_loss / n)
        history.accuracy.append(correct / n)
        if not math.isfinite(history.loss[-1]):
            raise FloatingPointError(f"training diverged at epoch {epoch}")
    logger.debug("trained %s: final loss %.6f", spec.name, history.loss[-1])
    return net, history


def relative_error(analytic, numeric):
    return abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))


def gradcheck(spec, sample, eps=1e-5, seed=0):
    """Largest relative error between analytic and central-difference gradients.

    ``spec`` may be a :class:`NetworkSpec` (initialized from ``seed``) or an
    existing :class:`Network`. Every scalar parameter is perturbed in turn.
    """
    if not 1e-8 < eps < 1e-2:
        raise ValueError(f"eps must lie in (1e-8, 1e-2), got {eps}")
    net = spec.copy() if isinstance(spec, Network) else Network.init(spec, seed)
    x, y = sample
    X = np.asarray(x, dtype=np.float64).reshape(1, -1)
    Y = np.asarray([y], dtype=np.float64)
    _, grads, _ = net.loss_and_grads(X, Y)

    def loss_at():
        return net.loss_and_grads(X, Y)[0]

    worst = 0.0
    for p, g in zip(net.params, grads):
        garrs = g.arrays()
        for name, arr in p.arrays().items():
            flat, gflat = arr.reshape(-1), garrs[name].reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                plus = loss_at()
                flat[i] = orig - eps
                minus = loss_at()
                flat[i] = orig
                worst = max(worst, relative_error(gflat[i], (plus - minus) / (2 * eps)))
    return worst


def is_kink_free(net, x, margin=1e-3):
    """True when no ReLU pre-activation lies within ``margin`` of zero."""
    _, caches = net.forward(np.asarray(x, dtype=np.float64), keep_caches=True)
    for p, cache in zip(net.params, caches):
        relu_out = p.kind != DENSE or p.activation is Activation.RELU
        if relu_out and np.any(np.abs(cache.pre) < margin):
            return False
    return True


def kink_free_samples(net, count, rng, margin=1e-3, max_tries=10_000):
    """Draw ``count`` random ``(x, y)`` pairs that keep clear of ReLU kinks."""
    samples = []
    for _ in range(max_tries):
        if len(samples) == count:
            break
        x = rng.uniform(0.0, 1.0, net.spec.input_dim)
        if is_kink_free(net, x, margin):
            samples.append((x, float(rng.uniform(0.0, 1.0, 1)[0] < 0.5)))
    if len(samples) < count:
        raise RuntimeError(f"found only {len(samples)} kink-free samples in {max_tries} draws")
    return samples
