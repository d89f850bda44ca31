"""Dense, variable-weight and variable-bias layers with exact backward passes.

Every forward function accepts a single input vector of shape ``(n_in,)`` or a
batch of shape ``(B, n_in)`` and returns an output of matching rank together
with a :class:`ForwardCache`. Backward functions consume that cache and an
output cotangent ``dy`` and return ``(dx, grads)`` where ``grads`` is a params
record of the same type whose arrays hold the gradients summed over the batch.

The variable-weight layer predicts its own weight matrix from the input::

    W_v[k, j] = f1(sum_m T[k, j, m] * p[m] + pred_bias[k, j])
    y[j]      = f2(sum_k p[k] * W_v[k, j] + out_bias[j])

and the variable-bias layer predicts only its bias::

    b_v[j] = sum_m p[m] * bias_pred_weights[m, j] + bias_pred_bias[j]
    y[j]   = relu(sum_k p[k] * weights[k, j] + b_v[j])

In both cases the predictor input ``p`` is the layer's own input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, Optional

import numpy as np

from .core import Activation, RngStream, activation_grad, apply_activation, as_tensor
from .exceptions import ContractError, DimensionError

DENSE = "dense"
VAR_WEIGHT = "var_weight"
VAR_BIAS = "var_bias"
LAYER_KINDS = (DENSE, VAR_WEIGHT, VAR_BIAS)


@dataclass(frozen=True)
class LayerSpec:
    """Shape-level description of a layer, enough to allocate its parameters.

    ``activation`` is the output nonlinearity of a dense layer; ``f1`` is the
    weight-prediction squashing of a variable-weight layer. The other kinds
    ignore the field that does not apply to them.
    """

    kind: str
    n_in: int
    n_out: int
    activation: Activation = Activation.RELU
    f1: Activation = Activation.TANH

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}; expected one of {LAYER_KINDS}")
        if self.n_in < 1 or self.n_out < 1:
            raise ValueError(f"layer extents must be positive, got {self.n_in}->{self.n_out}")
        object.__setattr__(self, "activation", Activation.parse(self.activation))
        object.__setattr__(self, "f1", Activation.parse(self.f1))
        if self.kind == VAR_WEIGHT and self.f1 not in (Activation.TANH, Activation.LINEAR):
            raise ValueError(f"f1 must be tanh or linear, got {self.f1.name.lower()}")

    @property
    def n_p(self):
        # predictor tap is the layer input
        return self.n_in if self.kind != DENSE else 0

    def describe(self):
        if self.kind == DENSE:
            return f"Dense({self.n_in}->{self.n_out}, {self.activation.name.lower()})"
        if self.kind == VAR_WEIGHT:
            return f"VarWeight({self.n_in}->{self.n_out}, f1={self.f1.name.lower()})"
        return f"VarBias({self.n_in}->{self.n_out})"


def _check_shape(arr, shape, name):
    if arr.shape != shape:
        raise DimensionError(f"{name} has shape {arr.shape}, expected {shape}")


class _Params:
    kind: ClassVar[str]
    array_names: ClassVar[tuple]

    def arrays(self):
        """Parameter arrays keyed by field name, in storage order."""
        return {name: getattr(self, name) for name in self.array_names}

    def touch(self):
        """Mark the parameters as modified so older caches are rejected."""
        self.version += 1

    def zeros_like(self):
        kwargs = {name: np.zeros_like(arr) for name, arr in self.arrays().items()}
        return self._with_arrays(kwargs)

    def copy(self):
        return self._with_arrays({name: arr.copy() for name, arr in self.arrays().items()})

    def _with_arrays(self, arrays):
        raise NotImplementedError

    @property
    def size(self):
        return sum(arr.size for arr in self.arrays().values())


@dataclass(eq=False)
class DenseParams(_Params):
    weights: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.RELU
    version: int = field(default=0, repr=False)

    kind: ClassVar[str] = DENSE
    array_names: ClassVar[tuple] = ("weights", "bias")

    def __post_init__(self):
        self.weights = as_tensor(self.weights, 2, "weights")
        self.bias = as_tensor(self.bias, 1, "bias")
        self.activation = Activation.parse(self.activation)
        _check_shape(self.bias, (self.n_out,), "bias")

    n_in = property(lambda self: self.weights.shape[0])
    n_out = property(lambda self: self.weights.shape[1])

    @property
    def spec(self):
        return LayerSpec(DENSE, self.n_in, self.n_out, activation=self.activation)

    def _with_arrays(self, a):
        return DenseParams(a["weights"], a["bias"], self.activation)


@dataclass(eq=False)
class VarWeightParams(_Params):
    weight_tensor: np.ndarray  # [input k, output j, predictor m]
    pred_bias: np.ndarray
    out_bias: np.ndarray
    f1: Activation = Activation.TANH
    f2: Activation = Activation.RELU
    version: int = field(default=0, repr=False)

    kind: ClassVar[str] = VAR_WEIGHT
    array_names: ClassVar[tuple] = ("weight_tensor", "pred_bias", "out_bias")

    def __post_init__(self):
        self.weight_tensor = as_tensor(self.weight_tensor, 3, "weight_tensor")
        self.pred_bias = as_tensor(self.pred_bias, 2, "pred_bias")
        self.out_bias = as_tensor(self.out_bias, 1, "out_bias")
        self.f1 = Activation.parse(self.f1)
        self.f2 = Activation.parse(self.f2)
        if self.f1 not in (Activation.TANH, Activation.LINEAR):
            raise ValueError(f"f1 must be tanh or linear, got {self.f1.name.lower()}")
        n_in, n_out, n_p = self.weight_tensor.shape
        if n_p != n_in:
            raise DimensionError(f"weight_tensor has shape {self.weight_tensor.shape}; "
                                 "the predictor width must equal the input width")
        _check_shape(self.pred_bias, (n_in, n_out), "pred_bias")
        _check_shape(self.out_bias, (n_out,), "out_bias")

    n_in = property(lambda self: self.weight_tensor.shape[0])
    n_out = property(lambda self: self.weight_tensor.shape[1])
    n_p = property(lambda self: self.weight_tensor.shape[2])

    @property
    def spec(self):
        return LayerSpec(VAR_WEIGHT, self.n_in, self.n_out, f1=self.f1)

    def _with_arrays(self, a):
        return VarWeightParams(a["weight_tensor"], a["pred_bias"], a["out_bias"], self.f1, self.f2)


@dataclass(eq=False)
class VarBiasParams(_Params):
    weights: np.ndarray
    bias_pred_weights: np.ndarray
    bias_pred_bias: np.ndarray
    version: int = field(default=0, repr=False)

    kind: ClassVar[str] = VAR_BIAS
    array_names: ClassVar[tuple] = ("weights", "bias_pred_weights", "bias_pred_bias")
    g: ClassVar[Activation] = Activation.LINEAR
    out_activation: ClassVar[Activation] = Activation.RELU

    def __post_init__(self):
        self.weights = as_tensor(self.weights, 2, "weights")
        self.bias_pred_weights = as_tensor(self.bias_pred_weights, 2, "bias_pred_weights")
        self.bias_pred_bias = as_tensor(self.bias_pred_bias, 1, "bias_pred_bias")
        _check_shape(self.bias_pred_weights, (self.n_in, self.n_out), "bias_pred_weights")
        _check_shape(self.bias_pred_bias, (self.n_out,), "bias_pred_bias")

    n_in = property(lambda self: self.weights.shape[0])
    n_out = property(lambda self: self.weights.shape[1])
    n_p = property(lambda self: self.bias_pred_weights.shape[0])

    @property
    def spec(self):
        return LayerSpec(VAR_BIAS, self.n_in, self.n_out)

    def _with_arrays(self, a):
        return VarBiasParams(a["weights"], a["bias_pred_weights"], a["bias_pred_bias"])


LayerParams = DenseParams | VarWeightParams | VarBiasParams


@dataclass
class ForwardCache:
    """Everything a backward pass needs, captured during forward."""

    kind: str
    owner: _Params
    version: int
    x: np.ndarray
    pre: np.ndarray
    out: np.ndarray
    squeeze: bool
    w_pre: Optional[np.ndarray] = None
    w_v: Optional[np.ndarray] = None
    b_v: Optional[np.ndarray] = None


def _as_batch(x, n_in):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        batch, squeeze = x[None, :], True
    elif x.ndim == 2:
        batch, squeeze = x, False
    else:
        raise DimensionError(f"layer input must be 1-D or 2-D, got shape {x.shape}")
    if batch.shape[1] != n_in:
        raise DimensionError(f"layer expects {n_in} inputs, got input of shape {x.shape}")
    return batch, squeeze


def _unbatch(arr, squeeze):
    return arr[0] if squeeze else arr


def _check_owner(params, cache):
    if cache.kind != params.kind or cache.owner is not params:
        raise ContractError("forward cache was produced by a different layer")
    if cache.version != params.version:
        raise ContractError("forward cache is stale: parameters changed after the forward pass")


def _check_cache(params, cache, dy):
    _check_owner(params, cache)
    dy = np.asarray(dy, dtype=np.float64)
    expected = cache.out[0].shape if cache.squeeze else cache.out.shape
    if dy.shape != expected:
        raise DimensionError(f"cotangent has shape {dy.shape}, expected {expected}")
    return dy.reshape(cache.out.shape)


def dense_forward(params, x):
    xb, squeeze = _as_batch(x, params.n_in)
    pre = xb @ params.weights + params.bias
    out = apply_activation(params.activation, pre)
    cache = ForwardCache(DENSE, params, params.version, xb, pre, out, squeeze)
    return _unbatch(out, squeeze), cache


def _dense_backward_pre(params, cache, dpre):
    grads = DenseParams(cache.x.T @ dpre, dpre.sum(axis=0), params.activation)
    return dpre @ params.weights.T, grads


def dense_backward(params, cache, dy):
    dy = _check_cache(params, cache, dy)
    dpre = dy * activation_grad(params.activation, cache.pre, cache.out)
    dx, grads = _dense_backward_pre(params, cache, dpre)
    return _unbatch(dx, cache.squeeze), grads


def _vw_predict(params, xb):
    n_in, n_out, n_p = params.weight_tensor.shape
    flat = params.weight_tensor.reshape(n_in * n_out, n_p)
    w_pre = (xb @ flat.T).reshape(-1, n_in, n_out) + params.pred_bias
    return w_pre, apply_activation(params.f1, w_pre)


def vw_predict_weights(params, p):
    """Realize the input-conditioned weight matrix for one predictor vector.

    Returns an ``(n_in, n_out)`` matrix, or ``(B, n_in, n_out)`` for a batch.
    """
    pb, squeeze = _as_batch(p, params.n_p)
    _, w_v = _vw_predict(params, pb)
    return _unbatch(w_v, squeeze)


def vw_forward(params, p):
    xb, squeeze = _as_batch(p, params.n_in)
    w_pre, w_v = _vw_predict(params, xb)
    pre = np.matmul(xb[:, None, :], w_v)[:, 0, :] + params.out_bias
    out = apply_activation(params.f2, pre)
    cache = ForwardCache(VAR_WEIGHT, params, params.version, xb, pre, out, squeeze,
                         w_pre=w_pre, w_v=w_v)
    return _unbatch(out, squeeze), cache


def _vw_backward_pre(params, cache, dpre):
    x, w_v = cache.x, cache.w_v
    n_in, n_out, n_p = params.weight_tensor.shape
    # data path: pre[b, j] = sum_k x[b, k] * w_v[b, k, j]
    d_wv = x[:, :, None] * dpre[:, None, :]
    dx = np.matmul(w_v, dpre[:, :, None])[:, :, 0]
    # prediction path back through f1 and the rank-3 tensor
    d_wpre = d_wv * activation_grad(params.f1, cache.w_pre, w_v)
    flat_grad = d_wpre.reshape(-1, n_in * n_out)
    dx = dx + flat_grad @ params.weight_tensor.reshape(n_in * n_out, n_p)
    grads = VarWeightParams(
        (flat_grad.T @ x).reshape(n_in, n_out, n_p),
        d_wpre.sum(axis=0),
        dpre.sum(axis=0),
        params.f1,
        params.f2,
    )
    return dx, grads


def vw_backward(params, cache, dy):
    dy = _check_cache(params, cache, dy)
    dpre = dy * activation_grad(params.f2, cache.pre, cache.out)
    dx, grads = _vw_backward_pre(params, cache, dpre)
    return _unbatch(dx, cache.squeeze), grads


def vb_forward(params, p):
    xb, squeeze = _as_batch(p, params.n_in)
    b_v = xb @ params.bias_pred_weights + params.bias_pred_bias
    pre = xb @ params.weights + b_v
    out = apply_activation(Activation.RELU, pre)
    cache = ForwardCache(VAR_BIAS, params, params.version, xb, pre, out, squeeze, b_v=b_v)
    return _unbatch(out, squeeze), cache


def _vb_backward_pre(params, cache, dpre):
    x = cache.x
    # b_v passes dpre through unchanged (g is linear)
    grads = VarBiasParams(x.T @ dpre, x.T @ dpre, dpre.sum(axis=0))
    dx = dpre @ params.weights.T + dpre @ params.bias_pred_weights.T
    return dx, grads


def vb_backward(params, cache, dy):
    dy = _check_cache(params, cache, dy)
    dpre = dy * activation_grad(Activation.RELU, cache.pre, cache.out)
    dx, grads = _vb_backward_pre(params, cache, dpre)
    return _unbatch(dx, cache.squeeze), grads


_FORWARD = {DENSE: dense_forward, VAR_WEIGHT: vw_forward, VAR_BIAS: vb_forward}
_BACKWARD = {DENSE: dense_backward, VAR_WEIGHT: vw_backward, VAR_BIAS: vb_backward}
_BACKWARD_PRE = {DENSE: _dense_backward_pre, VAR_WEIGHT: _vw_backward_pre, VAR_BIAS: _vb_backward_pre}


def layer_forward(params, x):
    return _FORWARD[params.kind](params, x)


def layer_backward(params, cache, dy):
    return _BACKWARD[params.kind](params, cache, dy)


def layer_backward_pre(params, cache, dpre):
    """Backward pass starting from the gradient of the pre-activation.

    Lets a caller fold the output nonlinearity into its loss gradient. ``dpre``
    must be batched like the cache.
    """
    _check_owner(params, cache)
    dpre = np.asarray(dpre, dtype=np.float64)
    if dpre.size != cache.pre.size:
        raise DimensionError(f"pre-activation gradient has shape {dpre.shape}, expected {cache.pre.shape}")
    dpre = dpre.reshape(cache.pre.shape)
    dx, grads = _BACKWARD_PRE[params.kind](params, cache, dpre)
    return _unbatch(dx, cache.squeeze), grads


def glorot_limit(fan_in, fan_out):
    return math.sqrt(6.0 / (fan_in + fan_out))


def init_params(spec, rng):
    """Allocate parameters for ``spec``, drawing weights from ``rng``.

    Dense weights are uniform in +-sqrt(6 / (n_in + n_out)); the rank-3 tensor
    of a variable-weight layer uses +-0.1 * sqrt(6 / (n_p + n_in * n_out)).
    Every bias-like array starts at zero.
    """
    if not isinstance(rng, RngStream):
        rng = RngStream(rng)
    n_in, n_out = spec.n_in, spec.n_out
    if spec.kind == DENSE:
        lim = glorot_limit(n_in, n_out)
        return DenseParams(rng.uniform(-lim, lim, (n_in, n_out)), np.zeros(n_out), spec.activation)
    if spec.kind == VAR_WEIGHT:
        lim = 0.1 * glorot_limit(spec.n_p, n_in * n_out)
        return VarWeightParams(rng.uniform(-lim, lim, (n_in, n_out, spec.n_p)),
                               np.zeros((n_in, n_out)), np.zeros(n_out), f1=spec.f1)
    lim = glorot_limit(n_in, n_out)
    weights = rng.uniform(-lim, lim, (n_in, n_out))
    lim_p = glorot_limit(spec.n_p, n_out)
    return VarBiasParams(weights, rng.uniform(-lim_p, lim_p, (spec.n_p, n_out)), np.zeros(n_out))


def param_count(spec):
    n_in, n_out, n_p = spec.n_in, spec.n_out, spec.n_p
    if spec.kind == DENSE:
        return n_in * n_out + n_out
    if spec.kind == VAR_WEIGHT:
        return n_in * n_out * n_p + n_in * n_out + n_out
    return n_in * n_out + n_p * n_out + n_out
