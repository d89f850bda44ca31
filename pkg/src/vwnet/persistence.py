"""Binary model files.

Layout, all integers little-endian::

    b"VWNN"  u8 version (=1)  u32 input_dim  u32 layer_count
    per layer:
        u8 kind tag   u32 n_in  u32 n_out  u32 n_p
        u8 activation tag  u8 second activation tag (0xFF when unused)
        float64 parameter arrays, row-major, in field order
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .core import Activation
from .exceptions import ModelFormatError
from .layers import DENSE, VAR_BIAS, VAR_WEIGHT, DenseParams, VarBiasParams, VarWeightParams
from .network import ARCHITECTURES, Network, NetworkSpec, build_arch

MAGIC = b"VWNN"
VERSION = 1
_UNUSED = 0xFF
_KIND_TAGS = {DENSE: 0, VAR_WEIGHT: 1, VAR_BIAS: 2}
_TAG_KINDS = {v: k for k, v in _KIND_TAGS.items()}
_HEADER = struct.Struct("<4sBII")
_LAYER = struct.Struct("<BIIIBB")


def to_bytes(net):
    out = [_HEADER.pack(MAGIC, VERSION, net.spec.input_dim, len(net.params))]
    for p in net.params:
        if p.kind == DENSE:
            tags = (p.activation, _UNUSED)
            n_p = 0
        elif p.kind == VAR_WEIGHT:
            tags = (p.f1, p.f2)
            n_p = p.n_p
        else:
            tags = (p.g, p.out_activation)
            n_p = p.n_p
        out.append(_LAYER.pack(_KIND_TAGS[p.kind], p.n_in, p.n_out, n_p, int(tags[0]), int(tags[1])))
        for arr in p.arrays().values():
            out.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(out)


def save(net, path):
    data = to_bytes(net)
    with open(path, "wb") as fh:
        fh.write(data)


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.buf):
            raise ModelFormatError(f"truncated file while reading {what}: need {n} bytes, "
                                   f"{len(self.buf) - self.pos} left", self.pos)
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, st, what):
        return st.unpack(self.take(st.size, what))

    def floats(self, shape, what):
        count = int(np.prod(shape))
        raw = self.take(8 * count, what)
        return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)


def _activation(tag, offset):
    try:
        return Activation(tag)
    except ValueError:
        raise ModelFormatError(f"unknown activation tag {tag}", offset) from None


def from_bytes(buf):
    r = _Reader(memoryview(bytes(buf)))
    magic, version, input_dim, n_layers = r.unpack(_HEADER, "header")
    if magic != MAGIC:
        raise ModelFormatError(f"bad magic {bytes(magic)!r}, expected {MAGIC!r}", 0)
    if version != VERSION:
        raise ModelFormatError(f"unsupported format version {version}", 4)
    if n_layers < 1:
        raise ModelFormatError("model has no layers", 9)
    params = []
    for i in range(n_layers):
        start = r.pos
        tag, n_in, n_out, n_p, a, b = r.unpack(_LAYER, f"layer {i} header")
        if tag not in _TAG_KINDS:
            raise ModelFormatError(f"layer {i}: unknown kind tag {tag}", start)
        if n_in < 1 or n_out < 1:
            raise ModelFormatError(f"layer {i}: non-positive extents {n_in}x{n_out}", start)
        kind = _TAG_KINDS[tag]
        try:
            if kind == DENSE:
                p = DenseParams(r.floats((n_in, n_out), f"layer {i} weights"),
                                r.floats((n_out,), f"layer {i} bias"),
                                _activation(a, start + 13))
            elif kind == VAR_WEIGHT:
                p = VarWeightParams(r.floats((n_in, n_out, n_p), f"layer {i} weight tensor"),
                                    r.floats((n_in, n_out), f"layer {i} prediction bias"),
                                    r.floats((n_out,), f"layer {i} output bias"),
                                    _activation(a, start + 13), _activation(b, start + 14))
            else:
                p = VarBiasParams(r.floats((n_in, n_out), f"layer {i} weights"),
                                  r.floats((n_p, n_out), f"layer {i} bias predictor weights"),
                                  r.floats((n_out,), f"layer {i} bias predictor bias"))
        except ValueError as exc:
            if isinstance(exc, ModelFormatError):
                raise
            raise ModelFormatError(f"layer {i}: {exc}", start) from None
        params.append(p)
    if r.pos != len(r.buf):
        raise ModelFormatError(f"{len(r.buf) - r.pos} trailing bytes after last layer", r.pos)

    layers = tuple(p.spec for p in params)
    name = "custom"
    for arch in ARCHITECTURES:
        try:
            if build_arch(arch, input_dim).layers == layers:
                name = arch
                break
        except ValueError:
            continue
    try:
        spec = NetworkSpec(layers, input_dim, name)
        return Network(spec, params)
    except ValueError as exc:
        raise ModelFormatError(f"inconsistent layer stack: {exc}", len(r.buf)) from None


def load(path):
    with open(os.fspath(path), "rb") as fh:
        return from_bytes(fh.read())
